#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ponsim/time.hpp"
#include "ponsim/topology.hpp"

namespace ponsim {

enum class ChannelRole { CoControl, CoData, Edge };
enum class OltKind { Co, Edge };

struct ChannelSpec {
  ChannelIndex index = 0;
  ChannelRole role = ChannelRole::Edge;
  std::uint64_t line_rate_bps = 9'953'280'000;     // XGS-PON line rate
  std::uint64_t payload_rate_bps = 9'000'000'000;  // after FEC and framing
  SimTime burst_overhead = t::us(1);               // preamble+delimiter+guard lump
};

// Upstream payload bytes one channel can carry in a cycle holding n_bursts
// bursts, each paying the burst overhead. Pure integer arithmetic so every
// build and every replay agree byte-for-byte.
std::uint64_t capacity_per_cycle_bytes(const ChannelSpec& spec, SimTime cycle_len,
                                       int n_bursts);

// Channel assignments for OLTs plus per-ONU transceiver state. Each ONU has a
// fixed transceiver (control channel, never retuned) and a tunable one used
// for the data path; the tunable one is silent while retuning.
class WavelengthPlan {
 public:
  explicit WavelengthPlan(SimTime tuning_time = t::ms(1), bool allow_shared = false)
      : tuning_time_(tuning_time), allow_shared_(allow_shared) {}

  void add_channel(const ChannelSpec& spec);
  bool has_channel(ChannelIndex ch) const { return channels_.count(ch) > 0; }
  const ChannelSpec& channel(ChannelIndex ch) const;

  void register_olt(const NodeId& olt, OltKind kind);
  OltKind olt_kind(const NodeId& olt) const;
  // Rejects role-incompatible channels, and double assignment of one channel
  // unless sharing was explicitly enabled at construction.
  void assign_channel(const NodeId& olt, ChannelIndex ch);
  ChannelIndex olt_channel(const NodeId& olt) const;
  std::vector<NodeId> channel_holders(ChannelIndex ch) const;

  void register_onu(const NodeId& onu, ChannelIndex fixed, ChannelIndex tunable_initial);
  bool has_onu(const NodeId& onu) const { return onus_.count(onu) > 0; }
  // The fixed transceiver keeps the control path alive even mid-retune.
  ChannelIndex fixed_channel(const NodeId& onu) const;
  ChannelIndex tuned_channel(const NodeId& onu, SimTime now) const;
  bool is_tuning(const NodeId& onu, SimTime now) const;
  bool can_transmit(const NodeId& onu, ChannelIndex ch, SimTime now) const {
    return !is_tuning(onu, now) && tuned_channel(onu, now) == ch;
  }

  // Starts a retune and returns its completion time. A second tune before
  // completion is a controller bug and throws.
  SimTime tune_onu(const NodeId& onu, ChannelIndex target, SimTime t_start);
  SimTime tuning_time() const { return tuning_time_; }

 private:
  struct Tunable {
    ChannelIndex fixed;
    ChannelIndex current;
    ChannelIndex target;
    SimTime tuning_until;  // < 0 when idle
  };
  const Tunable& onu_at(const NodeId& onu) const;

  SimTime tuning_time_;
  bool allow_shared_;
  std::unordered_map<ChannelIndex, ChannelSpec> channels_;
  std::unordered_map<NodeId, OltKind> olt_kinds_;
  std::unordered_map<NodeId, ChannelIndex> olt_channels_;
  std::unordered_map<NodeId, Tunable> onus_;
};

}  // namespace ponsim
