#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ponsim/engine.hpp"
#include "ponsim/metrics.hpp"
#include "ponsim/topology.hpp"
#include "ponsim/wavelength.hpp"

namespace ponsim {

enum class SliceState { Active, Dormant };
enum class PolicyKind { Unbalanced, Balanced };

// One OLT's virtual PON: the wavelength it schedules and the ONUs currently
// answering to it. Membership is controller-owned and changes only through
// reconfiguration plans.
struct VPonSlice {
  std::string olt;
  ChannelIndex channel = 0;
  std::set<std::string> members;
  SliceState state = SliceState::Active;
};

struct OffloadPolicy {
  PolicyKind kind = PolicyKind::Unbalanced;
  double threshold_us = 100.0;
  double trigger_fraction = 0.9;
  SimTime window = t::ms(100);
  SimTime cooldown = t::ms(200);
  SimTime msg_proc = t::us(10);      // PLOAM handling time at the ONU
  SimTime activation_delay = 0;      // dormant OLT bring-up
  double trigger_level_us() const { return threshold_us * trigger_fraction; }
};

struct ReconfigPlan {
  std::vector<std::string> onus;
  std::string from_olt;
  std::string to_olt;
  SimTime issue_time = 0;
  std::vector<SimTime> completions;  // parallel to onus, filled at issue
};

struct ControlEvent {
  SimTime t = 0;
  std::string action;  // activate | offload | moved | deferred
  std::string onus;    // semicolon-joined; empty for activate
  std::string from;
  std::string to;
};

// CO-resident control plane. Owns the slice table, watches each OLT's
// windowed latency, and when one runs close to the threshold moves ONUs to
// another slice, paying the real control-plane delays: a PLOAM message down
// the control wavelength, then a transceiver retune. The slice table, the
// splitter rule sets, and tuning commands have no other writer.
class SliceController {
 public:
  // Dataplane attachment points: the simulation detaches an ONU from its old
  // OLT's scheduler when a move is issued and attaches it to the new one when
  // the retune lands. Queued frames ride along untouched.
  struct Hooks {
    std::function<void(const std::string& onu, const std::string& olt)> on_leave;
    std::function<void(const std::string& onu, const std::string& olt)> on_join;
  };

  SliceController(Engine& engine, MetricsHub& metrics, WavelengthPlan& plan,
                  OdnTopology& topo, OffloadPolicy policy, ChannelIndex ploam_channel);

  void set_hooks(Hooks hooks) { hooks_ = std::move(hooks); }

  // Installs the slice table. Every member must hold registered transceivers,
  // an edge member must be tunable to its slice channel, and a dormant slice
  // must be empty.
  void init_slices(std::vector<VPonSlice> table);

  const VPonSlice& slice(const std::string& olt) const;
  std::vector<std::string> slice_olts() const;  // table order
  const OffloadPolicy& policy() const { return policy_; }

  // Windowed mean latency the controller acts on; an empty window keeps the
  // previous reading (queries must move forward in time).
  double monitor_latency(const std::string& olt, SimTime now);

  // True when the slice runs at or above the trigger level, the cooldown has
  // expired, and some other edge slice can take the load.
  bool should_offload(const std::string& olt, SimTime now);

  // Move victims by policy: the single busiest member (ties to the lowest
  // id), or every other rank of the load-descending order, about half.
  std::vector<std::string> select_onus(const std::string& olt, SimTime now);

  // Least-loaded other edge slice that is dormant or still under the trigger.
  std::optional<std::string> pick_target(const std::string& from_olt, SimTime now);

  ReconfigPlan make_plan(const std::string& from_olt, SimTime now);

  // Runs the plan: activates a dormant target, detaches the ONUs and updates
  // splitter rules at issue, and schedules each ONU's PLOAM + retune chain.
  // An ONU still mid-retune defers the whole plan for one cooldown; returns
  // whether the plan was issued.
  bool execute_reconfiguration(const ReconfigPlan& plan, SimTime now);

  // Brings a dormant OLT up after the activation delay and installs its
  // wavelength at the splitters: reflect at home, cross-pass at the peers.
  void activate_edge_olt(const std::string& olt, SimTime now);

  // Checks every active edge slice once; offloads from at most one.
  void evaluate(SimTime now);
  // Self-rescheduling evaluate every `period` until `until`.
  void start(SimTime period, SimTime until);

  // Every tracked ONU sits in exactly one slice or one in-flight plan.
  void check_partition() const;

  const std::vector<ControlEvent>& control_events() const { return events_; }
  std::string control_events_csv() const;
  std::uint64_t reconfig_count() const { return reconfig_count_; }
  std::size_t in_flight_plans() const { return in_flight_.size(); }

 private:
  struct InFlight {
    ReconfigPlan plan;
    std::set<std::string> pending;  // not yet joined the target
    std::uint64_t seq = 0;
  };

  VPonSlice& slice_mut(const std::string& olt);
  SimTime ploam_delay(const std::string& onu) const;
  // Makes the slice channel reach `onu`'s tree, flipping the home splitter
  // between reflect and cross-pass when the membership side changes. Throws
  // when one wavelength would need to serve both trees at once.
  void reconcile_rules(const VPonSlice& target, const std::string& onu);
  void add_rule(const NodeId& splitter, ChannelIndex ch,
                std::set<ChannelIndex> SplitterRuleSet::*field);
  void issue_plan(ReconfigPlan plan, SimTime at);
  void log(SimTime t, const std::string& action, const std::string& onus,
           const std::string& from, const std::string& to);

  Engine& engine_;
  MetricsHub& metrics_;
  WavelengthPlan& plan_;
  OdnTopology& topo_;
  OffloadPolicy policy_;
  ChannelIndex ploam_channel_;
  NodeId co_node_;
  Hooks hooks_;

  std::vector<VPonSlice> table_;
  std::vector<std::string> tracked_;  // edge-slice ONUs as of init, sorted
  std::vector<InFlight> in_flight_;
  std::set<std::string> activating_;
  std::optional<SimTime> last_reconfig_;
  std::vector<ControlEvent> events_;
  std::uint64_t reconfig_count_ = 0;
  std::uint64_t plan_seq_ = 0;
};

}  // namespace ponsim
