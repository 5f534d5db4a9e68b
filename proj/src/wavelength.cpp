#include "ponsim/wavelength.hpp"

#include <algorithm>
#include <stdexcept>

namespace ponsim {

std::uint64_t capacity_per_cycle_bytes(const ChannelSpec& spec, SimTime cycle_len,
                                       int n_bursts) {
  if (n_bursts < 0) throw std::invalid_argument("negative burst count");
  SimTime overhead = static_cast<SimTime>(n_bursts) * spec.burst_overhead;
  if (overhead > cycle_len)
    throw std::invalid_argument("burst overheads alone exceed the cycle: " +
                                std::to_string(n_bursts) + " bursts");
  unsigned __int128 bits = static_cast<unsigned __int128>(spec.payload_rate_bps) *
                           static_cast<std::uint64_t>(cycle_len - overhead);
  return static_cast<std::uint64_t>(bits / 8'000'000'000ULL);
}

void WavelengthPlan::add_channel(const ChannelSpec& spec) {
  if (has_channel(spec.index))
    throw std::invalid_argument("duplicate channel " + std::to_string(spec.index));
  if (spec.payload_rate_bps > spec.line_rate_bps)
    throw std::invalid_argument("payload rate above line rate on channel " +
                                std::to_string(spec.index));
  channels_.emplace(spec.index, spec);
}

const ChannelSpec& WavelengthPlan::channel(ChannelIndex ch) const {
  auto it = channels_.find(ch);
  if (it == channels_.end())
    throw std::invalid_argument("unknown channel " + std::to_string(ch));
  return it->second;
}

void WavelengthPlan::register_olt(const NodeId& olt, OltKind kind) {
  if (!olt_kinds_.emplace(olt, kind).second)
    throw std::invalid_argument("duplicate OLT " + olt);
}

OltKind WavelengthPlan::olt_kind(const NodeId& olt) const {
  auto it = olt_kinds_.find(olt);
  if (it == olt_kinds_.end()) throw std::invalid_argument("unknown OLT " + olt);
  return it->second;
}

void WavelengthPlan::assign_channel(const NodeId& olt, ChannelIndex ch) {
  OltKind kind = olt_kind(olt);
  const ChannelSpec& spec = channel(ch);
  bool compatible = (kind == OltKind::Edge && spec.role == ChannelRole::Edge) ||
                    (kind == OltKind::Co && spec.role != ChannelRole::Edge);
  if (!compatible)
    throw std::invalid_argument("channel " + std::to_string(ch) +
                                " role does not fit OLT " + olt);
  if (!allow_shared_) {
    for (const auto& [other, och] : olt_channels_)
      if (och == ch && other != olt)
        throw std::invalid_argument("channel " + std::to_string(ch) +
                                    " already held by " + other);
  }
  olt_channels_[olt] = ch;
}

ChannelIndex WavelengthPlan::olt_channel(const NodeId& olt) const {
  auto it = olt_channels_.find(olt);
  if (it == olt_channels_.end())
    throw std::invalid_argument("OLT " + olt + " has no channel");
  return it->second;
}

std::vector<NodeId> WavelengthPlan::channel_holders(ChannelIndex ch) const {
  std::vector<NodeId> out;
  for (const auto& [olt, och] : olt_channels_)
    if (och == ch) out.push_back(olt);
  std::sort(out.begin(), out.end());
  return out;
}

void WavelengthPlan::register_onu(const NodeId& onu, ChannelIndex fixed,
                                  ChannelIndex tunable_initial) {
  channel(fixed);
  channel(tunable_initial);
  if (!onus_.emplace(onu, Tunable{fixed, tunable_initial, tunable_initial, -1}).second)
    throw std::invalid_argument("duplicate ONU " + onu);
}

const WavelengthPlan::Tunable& WavelengthPlan::onu_at(const NodeId& onu) const {
  auto it = onus_.find(onu);
  if (it == onus_.end()) throw std::invalid_argument("unknown ONU " + onu);
  return it->second;
}

ChannelIndex WavelengthPlan::fixed_channel(const NodeId& onu) const {
  return onu_at(onu).fixed;
}

ChannelIndex WavelengthPlan::tuned_channel(const NodeId& onu, SimTime now) const {
  const Tunable& s = onu_at(onu);
  if (s.tuning_until >= 0 && now >= s.tuning_until) return s.target;
  return s.current;
}

bool WavelengthPlan::is_tuning(const NodeId& onu, SimTime now) const {
  const Tunable& s = onu_at(onu);
  return s.tuning_until >= 0 && now < s.tuning_until;
}

SimTime WavelengthPlan::tune_onu(const NodeId& onu, ChannelIndex target, SimTime t_start) {
  channel(target);
  if (is_tuning(onu, t_start))
    throw std::logic_error("ONU " + onu + " is already retuning");
  Tunable& s = onus_.at(onu);
  s.current = tuned_channel(onu, t_start);
  s.target = target;
  s.tuning_until = t_start + tuning_time_;
  return s.tuning_until;
}

}  // namespace ponsim
