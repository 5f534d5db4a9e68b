#include "ponsim/controller.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace ponsim {
namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) out += ';';
    out += p;
  }
  return out;
}

}  // namespace

SliceController::SliceController(Engine& engine, MetricsHub& metrics, WavelengthPlan& plan,
                                 OdnTopology& topo, OffloadPolicy policy,
                                 ChannelIndex ploam_channel)
    : engine_(engine),
      metrics_(metrics),
      plan_(plan),
      topo_(topo),
      policy_(policy),
      ploam_channel_(ploam_channel) {
  PONSIM_ASSERT(plan_.has_channel(ploam_channel_), "unknown control channel");
  PONSIM_ASSERT(policy_.threshold_us > 0.0, "offload threshold must be positive");
  PONSIM_ASSERT(policy_.trigger_fraction > 0.0 && policy_.trigger_fraction <= 1.0,
                "trigger fraction must lie in (0, 1]");
  PONSIM_ASSERT(policy_.window > 0 && policy_.cooldown >= 0 && policy_.activation_delay >= 0,
                "offload policy durations must be non-negative");
  PONSIM_ASSERT(metrics_.window() == policy_.window,
                "policy window disagrees with the metrics window");
  const std::vector<NodeId> cos = topo_.nodes_with_role(NodeRole::CentralOffice);
  PONSIM_ASSERT(cos.size() == 1, "the control plane needs exactly one central office");
  co_node_ = cos.front();
}

void SliceController::init_slices(std::vector<VPonSlice> table) {
  PONSIM_ASSERT(table_.empty(), "slice table installed twice");
  PONSIM_ASSERT(!table.empty(), "empty slice table");
  std::set<std::string> olts;
  std::set<std::string> seen;
  for (const VPonSlice& s : table) {
    PONSIM_ASSERT(olts.insert(s.olt).second, "olt appears in two slices");
    PONSIM_ASSERT(plan_.olt_channel(s.olt) == s.channel,
                  "slice channel does not match the olt assignment");
    if (s.state == SliceState::Dormant)
      PONSIM_ASSERT(s.members.empty(), "dormant slice has members");
    for (const std::string& m : s.members) {
      if (!plan_.has_onu(m))
        throw std::invalid_argument("slice member without registered transceivers: " + m);
      PONSIM_ASSERT(seen.insert(m).second, "onu listed in two slices");
      // Data rides the tunable transceiver on every slice, central office
      // included; an off-channel member would silently starve in the DBA.
      if (plan_.tuned_channel(m, engine_.now()) != s.channel)
        throw std::invalid_argument("slice member not tuned to the slice channel: " + m);
    }
  }
  table_ = std::move(table);
  for (const VPonSlice& s : table_) {
    if (plan_.olt_kind(s.olt) != OltKind::Edge) continue;
    tracked_.insert(tracked_.end(), s.members.begin(), s.members.end());
  }
  std::sort(tracked_.begin(), tracked_.end());
}

const VPonSlice& SliceController::slice(const std::string& olt) const {
  for (const VPonSlice& s : table_)
    if (s.olt == olt) return s;
  throw std::invalid_argument("unknown slice: " + olt);
}

VPonSlice& SliceController::slice_mut(const std::string& olt) {
  return const_cast<VPonSlice&>(slice(olt));
}

std::vector<std::string> SliceController::slice_olts() const {
  std::vector<std::string> out;
  out.reserve(table_.size());
  for (const VPonSlice& s : table_) out.push_back(s.olt);
  return out;
}

double SliceController::monitor_latency(const std::string& olt, SimTime now) {
  return metrics_.windowed_mean_us(slice(olt).olt, now);
}

bool SliceController::should_offload(const std::string& olt, SimTime now) {
  const VPonSlice& s = slice(olt);
  PONSIM_ASSERT(s.state == SliceState::Active, "offload check on a dormant slice");
  if (s.members.empty()) return false;
  if (monitor_latency(olt, now) < policy_.trigger_level_us()) return false;
  if (last_reconfig_ && now < *last_reconfig_ + policy_.cooldown) return false;
  return pick_target(olt, now).has_value();
}

std::vector<std::string> SliceController::select_onus(const std::string& olt, SimTime now) {
  const VPonSlice& s = slice(olt);
  if (s.members.empty()) throw std::logic_error("selecting victims from an empty slice: " + olt);
  // Set order feeds the stable sort, so equal loads rank by ascending id.
  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  ranked.reserve(s.members.size());
  for (const std::string& m : s.members)
    ranked.push_back({metrics_.windowed_offered_bytes(m, now), m});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  if (policy_.kind == PolicyKind::Unbalanced) {
    out.push_back(ranked.front().second);
  } else {
    for (std::size_t r = 0; r < ranked.size(); r += 2) out.push_back(ranked[r].second);
  }
  return out;
}

std::optional<std::string> SliceController::pick_target(const std::string& from_olt,
                                                        SimTime now) {
  std::optional<std::string> best;
  std::size_t best_size = 0;
  for (const VPonSlice& cand : table_) {
    if (cand.olt == from_olt) continue;
    if (plan_.olt_kind(cand.olt) != OltKind::Edge) continue;
    if (activating_.count(cand.olt)) continue;  // bring-up already in flight
    if (cand.state == SliceState::Active &&
        monitor_latency(cand.olt, now) >= policy_.trigger_level_us())
      continue;  // would only move the hot spot
    const std::size_t size = cand.members.size();
    if (!best || size < best_size || (size == best_size && cand.olt < *best)) {
      best = cand.olt;
      best_size = size;
    }
  }
  return best;
}

ReconfigPlan SliceController::make_plan(const std::string& from_olt, SimTime now) {
  ReconfigPlan plan;
  plan.from_olt = from_olt;
  plan.onus = select_onus(from_olt, now);
  const std::optional<std::string> target = pick_target(from_olt, now);
  PONSIM_ASSERT(target.has_value(), "no slice can take the offload");
  plan.to_olt = *target;
  plan.issue_time = now;
  return plan;
}

bool SliceController::execute_reconfiguration(const ReconfigPlan& plan, SimTime now) {
  PONSIM_ASSERT(!plan.onus.empty(), "empty reconfiguration plan");
  const VPonSlice& from = slice(plan.from_olt);
  const VPonSlice& to = slice(plan.to_olt);
  for (const std::string& onu : plan.onus)
    PONSIM_ASSERT(from.members.count(onu) == 1, "plan moves an onu the source does not hold");
  for (const std::string& onu : plan.onus) {
    if (plan_.is_tuning(onu, now)) {
      // A transceiver mid-retune cannot take a new target; park the whole
      // plan and let the cooldown bring the controller back.
      log(now, "deferred", join(plan.onus), plan.from_olt, plan.to_olt);
      last_reconfig_ = now;
      return false;
    }
  }
  SimTime at = now;
  if (to.state == SliceState::Dormant) {
    activate_edge_olt(plan.to_olt, now);
    at = now + policy_.activation_delay;
  }
  last_reconfig_ = now;
  if (at == now) {
    issue_plan(plan, now);
  } else {
    engine_.schedule_at(at, "offload-issue",
                        [this, plan, at] { issue_plan(plan, at); });
  }
  return true;
}

void SliceController::issue_plan(ReconfigPlan plan, SimTime at) {
  VPonSlice& from = slice_mut(plan.from_olt);
  VPonSlice& to = slice_mut(plan.to_olt);
  PONSIM_ASSERT(to.state == SliceState::Active, "issuing a plan into a dormant slice");
  plan.issue_time = at;
  plan.completions.clear();
  for (const std::string& onu : plan.onus) {
    reconcile_rules(to, onu);
    PONSIM_ASSERT(from.members.erase(onu) == 1, "plan moves an onu the source does not hold");
    if (hooks_.on_leave) hooks_.on_leave(onu, from.olt);
    plan.completions.push_back(plan_.tune_onu(onu, to.channel, at + ploam_delay(onu)));
  }
  const std::uint64_t seq = plan_seq_++;
  InFlight flight;
  flight.pending.insert(plan.onus.begin(), plan.onus.end());
  flight.seq = seq;
  log(at, "offload", join(plan.onus), plan.from_olt, plan.to_olt);
  last_reconfig_ = at;
  ++reconfig_count_;
  for (std::size_t i = 0; i < plan.onus.size(); ++i) {
    const std::string onu = plan.onus[i];
    const std::string from_olt = plan.from_olt;
    const std::string to_olt = plan.to_olt;
    engine_.schedule_at(plan.completions[i], "onu-retuned", [this, onu, from_olt, to_olt, seq] {
      slice_mut(to_olt).members.insert(onu);
      if (hooks_.on_join) hooks_.on_join(onu, to_olt);
      log(engine_.now(), "moved", onu, from_olt, to_olt);
      for (std::size_t j = 0; j < in_flight_.size(); ++j) {
        if (in_flight_[j].seq != seq) continue;
        in_flight_[j].pending.erase(onu);
        if (in_flight_[j].pending.empty()) in_flight_.erase(in_flight_.begin() + j);
        break;
      }
    });
  }
  flight.plan = std::move(plan);
  in_flight_.push_back(std::move(flight));
}

void SliceController::activate_edge_olt(const std::string& olt, SimTime now) {
  VPonSlice& s = slice_mut(olt);
  PONSIM_ASSERT(plan_.olt_kind(olt) == OltKind::Edge, "only edge olts are switched on demand");
  if (s.state == SliceState::Active || activating_.count(olt))
    throw std::logic_error("olt is already active: " + olt);
  PONSIM_ASSERT(s.members.empty(), "dormant slice has members");
  activating_.insert(olt);
  auto apply = [this, olt](SimTime at) {
    VPonSlice& up = slice_mut(olt);
    const NodeId home = topo_.parent_splitter(up.olt);
    add_rule(home, up.channel, &SplitterRuleSet::reflect_set);
    for (const NodeId& peer : topo_.xlink_peers(home))
      add_rule(peer, up.channel, &SplitterRuleSet::xpass_set);
    up.state = SliceState::Active;
    activating_.erase(olt);
    log(at, "activate", "", "", olt);
  };
  if (policy_.activation_delay == 0) {
    apply(now);
  } else {
    engine_.schedule_at(now + policy_.activation_delay, "olt-activate",
                        [apply, at = now + policy_.activation_delay] { apply(at); });
  }
}

void SliceController::evaluate(SimTime now) {
  for (const VPonSlice& s : table_) {
    if (s.state != SliceState::Active) continue;
    if (plan_.olt_kind(s.olt) != OltKind::Edge) continue;
    if (!should_offload(s.olt, now)) continue;
    PONSIM_ASSERT(monitor_latency(s.olt, now) >= policy_.trigger_level_us(),
                  "offload issued below the trigger level");
    if (execute_reconfiguration(make_plan(s.olt, now), now)) break;
  }
}

void SliceController::start(SimTime period, SimTime until) {
  PONSIM_ASSERT(period > 0, "controller period must be positive");
  const SimTime next = engine_.now() + period;
  if (next > until) return;
  engine_.schedule_at(next, "controller-eval", [this, period, until] {
    evaluate(engine_.now());
    start(period, until);
  });
}

void SliceController::check_partition() const {
  for (const std::string& onu : tracked_) {
    int homes = 0;
    for (const VPonSlice& s : table_) homes += s.members.count(onu) ? 1 : 0;
    for (const InFlight& f : in_flight_) homes += f.pending.count(onu) ? 1 : 0;
    PONSIM_ASSERT(homes == 1, "onu is not in exactly one slice or in-flight plan");
  }
}

SimTime SliceController::ploam_delay(const std::string& onu) const {
  const Path down = topo_.resolve_path(co_node_, onu, ploam_channel_);
  return topo_.propagation_delay(down) + policy_.msg_proc;
}

void SliceController::reconcile_rules(const VPonSlice& target, const std::string& onu) {
  const NodeId home = topo_.parent_splitter(target.olt);
  const NodeId tree = topo_.parent_splitter(onu);
  const ChannelIndex ch = target.channel;
  SplitterRuleSet rules = topo_.splitter_rules(home);
  if (tree == home) {
    if (rules.xpass_set.count(ch)) {
      // The wavelength currently crosses to the neighbour tree; it can fold
      // back home only once no member still rides the cross-link.
      for (const std::string& m : target.members)
        if (topo_.parent_splitter(m) != home)
          throw std::logic_error("one wavelength cannot serve both trees of " + target.olt);
      rules.xpass_set.erase(ch);
      rules.reflect_set.insert(ch);
      topo_.set_splitter_rules(home, rules);
    } else {
      add_rule(home, ch, &SplitterRuleSet::reflect_set);
    }
  } else {
    if (rules.reflect_set.count(ch)) {
      for (const std::string& m : target.members)
        if (topo_.parent_splitter(m) == home)
          throw std::logic_error("one wavelength cannot serve both trees of " + target.olt);
      rules.reflect_set.erase(ch);
      rules.xpass_set.insert(ch);
      topo_.set_splitter_rules(home, rules);
    } else {
      add_rule(home, ch, &SplitterRuleSet::xpass_set);
    }
    add_rule(tree, ch, &SplitterRuleSet::xpass_set);
  }
  PONSIM_ASSERT(topo_.try_resolve_path(onu, target.olt, ch, topo_.east_west_mode()).has_value(),
                "slice channel cannot reach the onu after the rule update");
}

void SliceController::add_rule(const NodeId& splitter, ChannelIndex ch,
                               std::set<ChannelIndex> SplitterRuleSet::*field) {
  SplitterRuleSet rules = topo_.splitter_rules(splitter);
  if ((rules.*field).count(ch)) return;
  (rules.*field).insert(ch);
  topo_.set_splitter_rules(splitter, rules);
}

void SliceController::log(SimTime t, const std::string& action, const std::string& onus,
                          const std::string& from, const std::string& to) {
  events_.push_back({t, action, onus, from, to});
}

std::string SliceController::control_events_csv() const {
  std::string out = "t_ns,action,onus,from,to\n";
  for (const ControlEvent& e : events_) {
    out += std::to_string(e.t);
    out += ',';
    out += e.action;
    out += ',';
    out += e.onus;
    out += ',';
    out += e.from;
    out += ',';
    out += e.to;
    out += '\n';
  }
  return out;
}

}  // namespace ponsim
