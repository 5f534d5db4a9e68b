#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ponsim/config.hpp"
#include "ponsim/controller.hpp"
#include "ponsim/dba.hpp"
#include "ponsim/traffic.hpp"

namespace ponsim {

// Everything a run leaves behind. All files except the manifest are a pure
// function of the config (the manifest carries wall time); the config echo
// re-parsed and re-run reproduces them byte for byte.
struct ResultBundle {
  std::string config_json;
  std::string samples_csv;
  std::string window_means_csv;
  std::string control_events_csv;
  std::string summary_json;
  std::string manifest_json;

  // Writes the six files into `dir` (created if missing).
  void write(const std::string& dir) const;
};

// One experiment instance: builds every component from a validated config,
// drives TTI emission, per-OLT cycles, and the slice controller, then drains
// the queues and exports the bundle. Single-shot: construct, run, read.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  void run();
  ResultBundle bundle() const;

  MetricsHub& metrics() { return hub_; }
  SliceController& controller() { return *controller_; }
  const OdnTopology& topology() const { return topo_; }
  const WavelengthPlan& wavelengths() const { return plan_; }
  const ScenarioConfig& config() const { return cfg_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  SimTime duration() const;
  SimTime warmup() const;
  std::uint64_t undelivered() const { return undelivered_; }

 private:
  void emit_tti();
  bool queues_empty() const;

  ScenarioConfig cfg_;
  Engine engine_;
  OdnTopology topo_;
  WavelengthPlan plan_;
  MetricsHub hub_;
  std::vector<std::string> warnings_;
  std::map<std::string, std::unique_ptr<OnuEndpoint>> endpoints_;
  std::map<std::string, std::unique_ptr<OltScheduler>> scheds_;
  std::map<std::string, std::string> serving_;  // onu -> olt, gaps while retuning
  std::vector<std::pair<std::string, std::unique_ptr<RuSource>>> sources_;
  std::unique_ptr<SliceController> controller_;
  std::int64_t tti_index_ = 0;
  std::uint64_t undelivered_ = 0;
  double wall_ms_ = 0.0;
  bool ran_ = false;
};

ResultBundle run_scenario(const ScenarioConfig& cfg);

}  // namespace ponsim
