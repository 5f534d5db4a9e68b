#include "ponsim/simulation.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace ponsim {
namespace {

constexpr const char* kVersion = "1.0.0";

SimTime seconds_to_ns(double s) { return static_cast<SimTime>(std::llround(s * 1e9)); }

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

nlohmann::ordered_json summary_block(const std::optional<MetricsHub::Summary>& s) {
  nlohmann::ordered_json j;
  j["count"] = s ? s->count : 0;
  j["mean_us"] = s ? round3(s->mean_us) : 0.0;
  j["p50_us"] = s ? round3(s->p50_us) : 0.0;
  j["p99_us"] = s ? round3(s->p99_us) : 0.0;
  j["max_us"] = s ? round3(s->max_us) : 0.0;
  return j;
}

}  // namespace

Simulation::Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)), plan_(cfg_.wavelength.tuning_time), hub_(cfg_.policy.window) {
  validate_scenario(cfg_);

  topo_ = OdnTopology(cfg_.topology.defaults);
  for (const NodeConfig& n : cfg_.topology.nodes) topo_.add_node(n.id, n.role);
  for (const LinkConfig& l : cfg_.topology.links)
    topo_.add_link(l.a, l.a_port, l.b, l.b_port, l.length_km);
  for (const RuleConfig& r : cfg_.topology.rules) {
    SplitterRuleSet rules;
    rules.reflect_set.insert(r.reflect.begin(), r.reflect.end());
    rules.xpass_set.insert(r.xpass.begin(), r.xpass.end());
    rules.trunkpass_set.insert(r.trunkpass.begin(), r.trunkpass.end());
    topo_.set_splitter_rules(r.splitter, rules);
  }
  topo_.set_east_west_mode(cfg_.topology.east_west);
  warnings_ = topo_.validate();

  for (const ChannelSpec& spec : cfg_.wavelength.channels) plan_.add_channel(spec);
  for (const OltAssignConfig& o : cfg_.wavelength.olts) {
    plan_.register_olt(o.id, o.kind);
    plan_.assign_channel(o.id, o.channel);
  }
  for (const OnuDeclConfig& d : cfg_.wavelength.onus)
    plan_.register_onu(d.id, d.fixed, d.tunable);

  for (const SliceConfig& s : cfg_.slices) hub_.register_olt(s.olt);

  for (const OnuDeclConfig& d : cfg_.wavelength.onus)
    endpoints_[d.id] = std::make_unique<OnuEndpoint>(d.id);

  const int background = static_cast<int>(std::llround(cfg_.traffic.co_background * 1000.0));
  for (const SliceConfig& s : cfg_.slices) {
    OltConfig oc;
    oc.id = s.olt;
    oc.channel = plan_.channel(plan_.olt_channel(s.olt));
    oc.cycle_len = cfg_.dba.cycle_len;
    oc.background_permille = plan_.olt_kind(s.olt) == OltKind::Co ? background : 0;
    scheds_[s.olt] = std::make_unique<OltScheduler>(oc, engine_, hub_, plan_);
    for (const std::string& m : s.members) {
      OnuEndpoint* ep = endpoints_.at(m).get();
      const Path p = topo_.resolve_path(m, s.olt, oc.channel.index);
      ep->set_path(topo_.propagation_delay(p), p.total_length_km);
      scheds_[s.olt]->add_member(ep);
      serving_[m] = s.olt;
    }
  }

  ErlangSchedule schedule = [&] {
    std::vector<std::pair<SimTime, double>> pts;
    for (const auto& [ts, e] : cfg_.traffic.erlang) pts.push_back({seconds_to_ns(ts), e});
    return ErlangSchedule(std::move(pts));
  }();
  const SimTime tti_len = cfg_.dba.cycle_len * cfg_.dba.cycles_per_tti;
  for (const std::string& ru : cfg_.traffic.rus)
    sources_.push_back({ru, std::make_unique<RuSource>(
                                ru, cfg_.traffic.split, cfg_.traffic.n_full, schedule,
                                cfg_.traffic.mean_holding_s, cfg_.run.seed, tti_len,
                                cfg_.dba.cycles_per_tti, cfg_.traffic.ru_delay_max)});

  controller_ = std::make_unique<SliceController>(engine_, hub_, plan_, topo_, cfg_.policy,
                                                  cfg_.control_channel);
  controller_->set_hooks(
      {[this](const std::string& onu, const std::string& olt) {
         scheds_.at(olt)->remove_member(onu);
         serving_.erase(onu);
       },
       [this](const std::string& onu, const std::string& olt) {
         OnuEndpoint* ep = endpoints_.at(onu).get();
         const VPonSlice& s = controller_->slice(olt);
         const Path p = topo_.resolve_path(onu, olt, s.channel);
         ep->set_path(topo_.propagation_delay(p), p.total_length_km);
         scheds_.at(olt)->add_member(ep);
         serving_[onu] = olt;
       }});
  std::vector<VPonSlice> table;
  for (const SliceConfig& s : cfg_.slices) {
    VPonSlice v;
    v.olt = s.olt;
    v.channel = plan_.olt_channel(s.olt);
    v.members.insert(s.members.begin(), s.members.end());
    v.state = s.dormant ? SliceState::Dormant : SliceState::Active;
    table.push_back(std::move(v));
  }
  controller_->init_slices(std::move(table));
}

SimTime Simulation::duration() const { return seconds_to_ns(cfg_.run.duration_s); }
SimTime Simulation::warmup() const { return seconds_to_ns(cfg_.run.warmup_s); }

void Simulation::emit_tti() {
  const SimTime start = engine_.now();
  const SimTime tti_len = cfg_.dba.cycle_len * cfg_.dba.cycles_per_tti;
  for (auto& [onu, src] : sources_) {
    const TtiEmission em = src->emit_tti(start);
    if (em.payload_bytes == 0) continue;
    OnuEndpoint& ep = *endpoints_.at(onu);
    for (std::size_t c = 0; c < em.segment_sizes.size(); ++c) {
      TrafficSegment seg;
      seg.tti = tti_index_;
      seg.seg_index = static_cast<int>(c);
      seg.size = em.segment_sizes[c];
      seg.remaining = seg.size;
      seg.ready = start + em.ru_delay + static_cast<SimTime>(c + 1) * cfg_.dba.cycle_len;
      ep.push_segment(seg);
    }
    hub_.record_offered(start, onu, em.payload_bytes);
    const auto holder = serving_.find(onu);
    if (holder != serving_.end()) {
      SchedInfo info;
      info.onu = onu;
      info.tti_index = tti_index_;
      info.payload_bytes = em.payload_bytes;
      info.ready_offset = em.ru_delay;
      info.received_at = start;
      scheds_.at(holder->second)->ingest_scheduling_info(info, start);
    }
  }
  ++tti_index_;
  if (start + tti_len < duration())
    engine_.schedule_at(start + tti_len, "tti", [this] { emit_tti(); });
}

bool Simulation::queues_empty() const {
  for (const auto& [onu, ep] : endpoints_)
    if (!ep->empty()) return false;
  return true;
}

void Simulation::run() {
  PONSIM_ASSERT(!ran_, "a simulation runs once");
  ran_ = true;
  const auto wall0 = std::chrono::steady_clock::now();
  const SimTime end = duration();

  engine_.schedule_at(0, "tti", [this] { emit_tti(); });
  for (auto& [olt, sched] : scheds_) {
    OltScheduler* s = sched.get();
    // Self-rescheduling cycle pump; index derived from the clock so the
    // drain phase keeps the same grid.
    auto pump = std::make_shared<std::function<void()>>();
    *pump = [this, s, pump] {
      const std::int64_t k = engine_.now() / cfg_.dba.cycle_len;
      s->run_cycle(k);
      engine_.schedule_at(static_cast<SimTime>(k + 1) * cfg_.dba.cycle_len, "cycle", *pump);
    };
    engine_.schedule_at(0, "cycle", *pump);
  }
  controller_->start(cfg_.run.controller_period, end);
  auto snap = std::make_shared<std::function<void()>>();
  *snap = [this, snap, end] {
    hub_.snapshot_window_means(engine_.now());
    const SimTime next = engine_.now() + cfg_.run.controller_period;
    if (next <= end) engine_.schedule_at(next, "window-means", *snap);
  };
  engine_.schedule_at(cfg_.run.controller_period, "window-means", *snap);

  engine_.run_until(end);
  SimTime t = end;
  const SimTime cap = end + t::s(2);
  while (t < cap && (!queues_empty() || controller_->in_flight_plans() > 0)) {
    t += t::ms(1);
    engine_.run_until(t);
  }
  for (const auto& [onu, ep] : endpoints_) undelivered_ += ep->queued_segments();
  hub_.count_undelivered(undelivered_);

  wall_ms_ = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0)
                 .count();
}

ResultBundle Simulation::bundle() const {
  PONSIM_ASSERT(ran_, "bundle requested before the run");
  ResultBundle b;
  b.config_json = scenario_to_json(cfg_);
  b.samples_csv = hub_.samples_csv();
  b.window_means_csv = hub_.window_means_csv();
  b.control_events_csv = controller_->control_events_csv();

  nlohmann::ordered_json s;
  s["name"] = cfg_.name;
  s["seed"] = cfg_.run.seed;
  s["duration_s"] = cfg_.run.duration_s;
  s["warmup_s"] = cfg_.run.warmup_s;
  MetricsHub::Filter all;
  all.t_min = warmup();
  s["overall"] = summary_block(hub_.summarize(all));
  s["per_olt"] = nlohmann::ordered_json::object();
  for (const SliceConfig& sl : cfg_.slices) {
    MetricsHub::Filter f;
    f.olt = sl.olt;
    f.t_min = warmup();
    s["per_olt"][sl.olt] = summary_block(hub_.summarize(f));
  }
  s["samples"] = hub_.sample_count();
  s["undelivered"] = undelivered_;
  s["reconfigurations"] = controller_->reconfig_count();
  s["control_events"] = controller_->control_events().size();
  b.summary_json = s.dump(2) + "\n";

  nlohmann::ordered_json m;
  m["name"] = cfg_.name;
  m["version"] = kVersion;
  m["seed"] = cfg_.run.seed;
  m["duration_s"] = cfg_.run.duration_s;
  m["warmup_s"] = cfg_.run.warmup_s;
  m["wall_ms"] = round3(wall_ms_);
  m["warnings"] = warnings_;
  b.manifest_json = m.dump(2) + "\n";
  return b;
}

void ResultBundle::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto put = [&dir](const char* name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error(std::string("cannot write ") + name + " in " + dir);
    out << text;
  };
  put("config.json", config_json);
  put("samples.csv", samples_csv);
  put("window_means.csv", window_means_csv);
  put("control_events.csv", control_events_csv);
  put("summary.json", summary_json);
  put("manifest.json", manifest_json);
}

ResultBundle run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  sim.run();
  return sim.bundle();
}

}  // namespace ponsim
