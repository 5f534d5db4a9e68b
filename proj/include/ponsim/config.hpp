#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ponsim/controller.hpp"
#include "ponsim/topology.hpp"
#include "ponsim/traffic.hpp"
#include "ponsim/wavelength.hpp"

namespace ponsim {

struct NodeConfig {
  std::string id;
  NodeRole role = NodeRole::OnuSite;
};

struct LinkConfig {
  std::string a;
  PortClass a_port = PortClass::Lower;
  std::string b;
  PortClass b_port = PortClass::Lower;
  double length_km = -1.0;  // negative selects the role-pair default
};

struct RuleConfig {
  std::string splitter;
  std::vector<ChannelIndex> reflect;
  std::vector<ChannelIndex> xpass;
  std::vector<ChannelIndex> trunkpass;
};

struct TopologyConfig {
  OdnTopology::Defaults defaults;
  EastWestMode east_west = EastWestMode::Direct;
  std::vector<NodeConfig> nodes;
  std::vector<LinkConfig> links;
  std::vector<RuleConfig> rules;
};

struct OltAssignConfig {
  std::string id;
  OltKind kind = OltKind::Edge;
  ChannelIndex channel = 0;
};

struct OnuDeclConfig {
  std::string id;
  ChannelIndex fixed = 0;
  ChannelIndex tunable = 0;
};

struct WavelengthConfig {
  SimTime tuning_time = t::ms(1);
  std::vector<ChannelSpec> channels;
  std::vector<OltAssignConfig> olts;
  std::vector<OnuDeclConfig> onus;
};

struct TrafficConfig {
  std::vector<std::pair<double, double>> erlang;  // (time_s, erlang) breakpoints
  std::string split_name = "split8";
  SplitProfile split = SplitProfile::split8();
  int n_full = 48;
  double mean_holding_s = 1.0;
  SimTime ru_delay_max = t::us(125);
  double co_background = 0.0;  // capacity fraction reserved on CO-hosted channels
  std::vector<std::string> rus;
};

struct DbaConfig {
  SimTime cycle_len = t::us(125);
  int cycles_per_tti = 8;
};

struct SliceConfig {
  std::string olt;
  std::vector<std::string> members;
  bool dormant = false;
};

struct RunConfig {
  double duration_s = 30.0;
  double warmup_s = 2.0;
  std::uint64_t seed = 1;
  SimTime controller_period = t::ms(10);
};

struct ScenarioConfig {
  std::string name = "scenario";
  TopologyConfig topology;
  WavelengthConfig wavelength;
  TrafficConfig traffic;
  DbaConfig dba;
  OffloadPolicy policy;
  std::vector<SliceConfig> slices;
  ChannelIndex control_channel = 1;
  RunConfig run;
};

// CLI knobs applied before a preset expands (or onto a parsed file).
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::optional<std::string> policy;          // unbalanced | balanced
  std::optional<int> slice_size;
  std::optional<double> erlang;               // replaces any ramp with a constant
  std::optional<std::string> east_west_mode;  // direct | overlay
  std::optional<std::string> split;           // split8 | split71
};

// Strict parse: unknown keys, wrong types, and unresolved references are
// errors naming the key and its JSON pointer path. Defaults are filled in.
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig parse_scenario_file(const std::string& path);

bool is_preset(const std::string& name);
std::vector<std::string> preset_names();
// fig2: one edge vPON slice; fig2-co: the same slice hosted at the central
// office with 30% background; fig2-ew: the slice served east-west from the
// neighbour tree's OLT; fig3: 12-ONU ramp with threshold offloading; fig4:
// fig3 under the balanced policy.
ScenarioConfig make_preset(const std::string& name, const Overrides& ov = {});

// Preset name or config file path, overrides applied either way.
ScenarioConfig load_scenario(const std::string& source, const Overrides& ov = {});

void apply_overrides(ScenarioConfig& cfg, const Overrides& ov);

// Full echo with every default expanded; parsing it back reproduces the
// config byte-for-byte through a second echo.
std::string scenario_to_json(const ScenarioConfig& cfg);

// Cross-reference and range checks shared by parser and presets.
void validate_scenario(const ScenarioConfig& cfg);

}  // namespace ponsim
