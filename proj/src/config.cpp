#include "ponsim/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ponsim {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("scenario config: " + what + " at '" +
                              (path.empty() ? "/" : path) + "'");
}

const json& member(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing key '") + key + "'");
  return *it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(path, "unknown key '" + key + "'");
  }
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::int64_t as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

double num_or(const json& o, const std::string& p, const char* k, double def) {
  const auto it = o.find(k);
  return it == o.end() ? def : as_num(*it, p + "/" + k);
}

std::int64_t int_or(const json& o, const std::string& p, const char* k, std::int64_t def) {
  const auto it = o.find(k);
  return it == o.end() ? def : as_int(*it, p + "/" + k);
}

std::string str_or(const json& o, const std::string& p, const char* k, const std::string& def) {
  const auto it = o.find(k);
  return it == o.end() ? def : as_str(*it, p + "/" + k);
}

bool bool_or(const json& o, const std::string& p, const char* k, bool def) {
  const auto it = o.find(k);
  return it == o.end() ? def : as_bool(*it, p + "/" + k);
}

SimTime ns_from(double value, double unit_ns, const std::string& path) {
  const double scaled = value * unit_ns;
  if (!(scaled >= 0) || scaled > 9.2e18) fail(path, "duration out of range");
  return static_cast<SimTime>(std::llround(scaled));
}

// Enum name tables; parse and echo share them so round trips are exact.

NodeRole node_role(const std::string& s, const std::string& path) {
  if (s == "central_office") return NodeRole::CentralOffice;
  if (s == "level2_splitter") return NodeRole::Level2Splitter;
  if (s == "level1_splitter") return NodeRole::Level1Splitter;
  if (s == "edge_olt") return NodeRole::EdgeOltSite;
  if (s == "onu") return NodeRole::OnuSite;
  fail(path, "unknown node role '" + s + "'");
}

const char* node_role_name(NodeRole r) {
  switch (r) {
    case NodeRole::CentralOffice: return "central_office";
    case NodeRole::Level2Splitter: return "level2_splitter";
    case NodeRole::Level1Splitter: return "level1_splitter";
    case NodeRole::EdgeOltSite: return "edge_olt";
    case NodeRole::OnuSite: return "onu";
  }
  return "onu";
}

PortClass port_class(const std::string& s, const std::string& path) {
  if (s == "lower") return PortClass::Lower;
  if (s == "trunk") return PortClass::Trunk;
  if (s == "xlink") return PortClass::Xlink;
  if (s == "loopback") return PortClass::Loopback;
  fail(path, "unknown port class '" + s + "'");
}

const char* port_class_name(PortClass p) {
  switch (p) {
    case PortClass::Lower: return "lower";
    case PortClass::Trunk: return "trunk";
    case PortClass::Xlink: return "xlink";
    case PortClass::Loopback: return "loopback";
  }
  return "lower";
}

ChannelRole channel_role(const std::string& s, const std::string& path) {
  if (s == "co_control") return ChannelRole::CoControl;
  if (s == "co_data") return ChannelRole::CoData;
  if (s == "edge") return ChannelRole::Edge;
  fail(path, "unknown channel role '" + s + "'");
}

const char* channel_role_name(ChannelRole r) {
  switch (r) {
    case ChannelRole::CoControl: return "co_control";
    case ChannelRole::CoData: return "co_data";
    case ChannelRole::Edge: return "edge";
  }
  return "edge";
}

OltKind olt_kind(const std::string& s, const std::string& path) {
  if (s == "co") return OltKind::Co;
  if (s == "edge") return OltKind::Edge;
  fail(path, "unknown olt kind '" + s + "'");
}

const char* olt_kind_name(OltKind k) { return k == OltKind::Co ? "co" : "edge"; }

EastWestMode east_west_mode(const std::string& s, const std::string& path) {
  if (s == "direct") return EastWestMode::Direct;
  if (s == "overlay") return EastWestMode::Overlay;
  fail(path, "unknown east-west mode '" + s + "'");
}

const char* east_west_name(EastWestMode m) {
  return m == EastWestMode::Direct ? "direct" : "overlay";
}

PolicyKind policy_kind(const std::string& s, const std::string& path) {
  if (s == "unbalanced") return PolicyKind::Unbalanced;
  if (s == "balanced") return PolicyKind::Balanced;
  fail(path, "unknown policy kind '" + s + "'");
}

const char* policy_kind_name(PolicyKind k) {
  return k == PolicyKind::Unbalanced ? "unbalanced" : "balanced";
}

SplitProfile split_profile(const std::string& s, const std::string& path) {
  if (s == "split8") return SplitProfile::split8();
  if (s == "split71") return SplitProfile::split71();
  fail(path, "unknown split profile '" + s + "'");
}

std::vector<ChannelIndex> channel_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of channel indices");
  std::vector<ChannelIndex> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(static_cast<ChannelIndex>(as_int(j[i], path + "/" + std::to_string(i))));
  return out;
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_str(j[i], path + "/" + std::to_string(i)));
  return out;
}

TopologyConfig parse_topology(const json& j, const std::string& P) {
  check_keys(j, P, {"defaults", "east_west_mode", "nodes", "links", "rules"});
  TopologyConfig out;
  if (j.contains("defaults")) {
    const json& d = j["defaults"];
    const std::string p = P + "/defaults";
    check_keys(d, p, {"feeder_km", "trunk_km", "drop_km", "xlink_km", "drop_warn_km", "us_per_km"});
    out.defaults.feeder_km = num_or(d, p, "feeder_km", out.defaults.feeder_km);
    out.defaults.trunk_km = num_or(d, p, "trunk_km", out.defaults.trunk_km);
    out.defaults.drop_km = num_or(d, p, "drop_km", out.defaults.drop_km);
    out.defaults.xlink_km = num_or(d, p, "xlink_km", out.defaults.xlink_km);
    out.defaults.drop_warn_km = num_or(d, p, "drop_warn_km", out.defaults.drop_warn_km);
    out.defaults.us_per_km = num_or(d, p, "us_per_km", out.defaults.us_per_km);
  }
  out.east_west = east_west_mode(str_or(j, P, "east_west_mode", "direct"), P + "/east_west_mode");
  const json& nodes = member(j, P, "nodes");
  if (!nodes.is_array()) fail(P + "/nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = P + "/nodes/" + std::to_string(i);
    check_keys(nodes[i], p, {"id", "role"});
    NodeConfig n;
    n.id = as_str(member(nodes[i], p, "id"), p + "/id");
    n.role = node_role(as_str(member(nodes[i], p, "role"), p + "/role"), p + "/role");
    out.nodes.push_back(n);
  }
  const json& links = member(j, P, "links");
  if (!links.is_array()) fail(P + "/links", "expected an array");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string p = P + "/links/" + std::to_string(i);
    check_keys(links[i], p, {"a", "a_port", "b", "b_port", "length_km"});
    LinkConfig l;
    l.a = as_str(member(links[i], p, "a"), p + "/a");
    l.a_port = port_class(as_str(member(links[i], p, "a_port"), p + "/a_port"), p + "/a_port");
    l.b = as_str(member(links[i], p, "b"), p + "/b");
    l.b_port = port_class(as_str(member(links[i], p, "b_port"), p + "/b_port"), p + "/b_port");
    l.length_km = num_or(links[i], p, "length_km", -1.0);
    out.links.push_back(l);
  }
  if (j.contains("rules")) {
    const json& rules = j["rules"];
    if (!rules.is_array()) fail(P + "/rules", "expected an array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string p = P + "/rules/" + std::to_string(i);
      check_keys(rules[i], p, {"splitter", "reflect", "xpass", "trunkpass"});
      RuleConfig r;
      r.splitter = as_str(member(rules[i], p, "splitter"), p + "/splitter");
      if (rules[i].contains("reflect"))
        r.reflect = channel_list(rules[i]["reflect"], p + "/reflect");
      if (rules[i].contains("xpass")) r.xpass = channel_list(rules[i]["xpass"], p + "/xpass");
      if (rules[i].contains("trunkpass"))
        r.trunkpass = channel_list(rules[i]["trunkpass"], p + "/trunkpass");
      out.rules.push_back(r);
    }
  }
  return out;
}

WavelengthConfig parse_wavelength(const json& j, const std::string& P) {
  check_keys(j, P, {"tuning_time_ms", "channels", "olts", "onus"});
  WavelengthConfig out;
  out.tuning_time = ns_from(num_or(j, P, "tuning_time_ms", 1.0), 1e6, P + "/tuning_time_ms");
  const json& chans = member(j, P, "channels");
  if (!chans.is_array()) fail(P + "/channels", "expected an array");
  for (std::size_t i = 0; i < chans.size(); ++i) {
    const std::string p = P + "/channels/" + std::to_string(i);
    check_keys(chans[i], p,
               {"index", "role", "line_rate_bps", "payload_rate_bps", "burst_overhead_us"});
    ChannelSpec spec;
    spec.index = static_cast<ChannelIndex>(as_int(member(chans[i], p, "index"), p + "/index"));
    spec.role = channel_role(str_or(chans[i], p, "role", "edge"), p + "/role");
    spec.line_rate_bps = static_cast<std::uint64_t>(
        int_or(chans[i], p, "line_rate_bps", static_cast<std::int64_t>(spec.line_rate_bps)));
    spec.payload_rate_bps = static_cast<std::uint64_t>(int_or(
        chans[i], p, "payload_rate_bps", static_cast<std::int64_t>(spec.payload_rate_bps)));
    spec.burst_overhead = ns_from(num_or(chans[i], p, "burst_overhead_us", 1.0), 1e3,
                                  p + "/burst_overhead_us");
    out.channels.push_back(spec);
  }
  const json& olts = member(j, P, "olts");
  if (!olts.is_array()) fail(P + "/olts", "expected an array");
  for (std::size_t i = 0; i < olts.size(); ++i) {
    const std::string p = P + "/olts/" + std::to_string(i);
    check_keys(olts[i], p, {"id", "kind", "channel"});
    OltAssignConfig o;
    o.id = as_str(member(olts[i], p, "id"), p + "/id");
    o.kind = olt_kind(as_str(member(olts[i], p, "kind"), p + "/kind"), p + "/kind");
    o.channel =
        static_cast<ChannelIndex>(as_int(member(olts[i], p, "channel"), p + "/channel"));
    out.olts.push_back(o);
  }
  const json& onus = member(j, P, "onus");
  if (!onus.is_array()) fail(P + "/onus", "expected an array");
  for (std::size_t i = 0; i < onus.size(); ++i) {
    const std::string p = P + "/onus/" + std::to_string(i);
    check_keys(onus[i], p, {"id", "fixed", "tunable"});
    OnuDeclConfig d;
    d.id = as_str(member(onus[i], p, "id"), p + "/id");
    d.fixed = static_cast<ChannelIndex>(as_int(member(onus[i], p, "fixed"), p + "/fixed"));
    d.tunable =
        static_cast<ChannelIndex>(as_int(member(onus[i], p, "tunable"), p + "/tunable"));
    out.onus.push_back(d);
  }
  return out;
}

TrafficConfig parse_traffic(const json& j, const std::string& P) {
  check_keys(j, P,
             {"erlang", "split", "n_full", "mean_holding_s", "ru_delay_max_us", "co_background",
              "rus"});
  TrafficConfig out;
  const json& e = member(j, P, "erlang");
  if (e.is_number()) {
    out.erlang = {{0.0, as_num(e, P + "/erlang")}};
  } else if (e.is_array()) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string p = P + "/erlang/" + std::to_string(i);
      if (!e[i].is_array() || e[i].size() != 2) fail(p, "expected a [time_s, erlang] pair");
      out.erlang.push_back({as_num(e[i][0], p + "/0"), as_num(e[i][1], p + "/1")});
    }
  } else {
    fail(P + "/erlang", "expected a number or an array of [time_s, erlang] pairs");
  }
  if (j.contains("split")) {
    const json& s = j["split"];
    const std::string p = P + "/split";
    if (s.is_string()) {
      out.split_name = as_str(s, p);
      out.split = split_profile(out.split_name, p);
    } else if (s.is_object()) {
      check_keys(s, p, {"rate_min_bps", "rate_max_bps"});
      out.split_name = "custom";
      out.split.rate_min_bps =
          static_cast<std::uint64_t>(as_int(member(s, p, "rate_min_bps"), p + "/rate_min_bps"));
      out.split.rate_max_bps =
          static_cast<std::uint64_t>(as_int(member(s, p, "rate_max_bps"), p + "/rate_max_bps"));
    } else {
      fail(p, "expected a profile name or {rate_min_bps, rate_max_bps}");
    }
  }
  out.n_full = static_cast<int>(int_or(j, P, "n_full", 48));
  out.mean_holding_s = num_or(j, P, "mean_holding_s", 1.0);
  out.ru_delay_max = ns_from(num_or(j, P, "ru_delay_max_us", 125.0), 1e3, P + "/ru_delay_max_us");
  out.co_background = num_or(j, P, "co_background", 0.0);
  out.rus = string_list(member(j, P, "rus"), P + "/rus");
  return out;
}

DbaConfig parse_dba(const json& j, const std::string& P) {
  check_keys(j, P, {"cycle_us", "cycles_per_tti"});
  DbaConfig out;
  out.cycle_len = ns_from(num_or(j, P, "cycle_us", 125.0), 1e3, P + "/cycle_us");
  out.cycles_per_tti = static_cast<int>(int_or(j, P, "cycles_per_tti", 8));
  return out;
}

OffloadPolicy parse_policy(const json& j, const std::string& P) {
  check_keys(j, P,
             {"kind", "threshold_us", "trigger_fraction", "window_ms", "cooldown_ms",
              "msg_proc_us", "activation_delay_ms"});
  OffloadPolicy out;
  out.kind = policy_kind(str_or(j, P, "kind", "unbalanced"), P + "/kind");
  out.threshold_us = num_or(j, P, "threshold_us", 100.0);
  out.trigger_fraction = num_or(j, P, "trigger_fraction", 0.9);
  out.window = ns_from(num_or(j, P, "window_ms", 100.0), 1e6, P + "/window_ms");
  out.cooldown = ns_from(num_or(j, P, "cooldown_ms", 200.0), 1e6, P + "/cooldown_ms");
  out.msg_proc = ns_from(num_or(j, P, "msg_proc_us", 10.0), 1e3, P + "/msg_proc_us");
  out.activation_delay =
      ns_from(num_or(j, P, "activation_delay_ms", 0.0), 1e6, P + "/activation_delay_ms");
  return out;
}

std::vector<SliceConfig> parse_slices(const json& j, const std::string& P) {
  if (!j.is_array()) fail(P, "expected an array");
  std::vector<SliceConfig> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = P + "/" + std::to_string(i);
    check_keys(j[i], p, {"olt", "members", "dormant"});
    SliceConfig s;
    s.olt = as_str(member(j[i], p, "olt"), p + "/olt");
    s.members = string_list(member(j[i], p, "members"), p + "/members");
    s.dormant = bool_or(j[i], p, "dormant", false);
    out.push_back(s);
  }
  return out;
}

RunConfig parse_run(const json& j, const std::string& P) {
  check_keys(j, P, {"duration_s", "warmup_s", "seed", "controller_period_ms"});
  RunConfig out;
  out.duration_s = num_or(j, P, "duration_s", 30.0);
  out.warmup_s = num_or(j, P, "warmup_s", 2.0);
  const std::int64_t seed = int_or(j, P, "seed", 1);
  if (seed < 0) fail(P + "/seed", "seed must be non-negative");
  out.seed = static_cast<std::uint64_t>(seed);
  out.controller_period =
      ns_from(num_or(j, P, "controller_period_ms", 10.0), 1e6, P + "/controller_period_ms");
  return out;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario config: ") + e.what());
  }
  check_keys(j, "",
             {"name", "topology", "wavelength_plan", "traffic", "dba", "policy", "slices",
              "control_channel", "run"});
  ScenarioConfig cfg;
  cfg.name = str_or(j, "", "name", "scenario");
  cfg.topology = parse_topology(member(j, "", "topology"), "/topology");
  cfg.wavelength = parse_wavelength(member(j, "", "wavelength_plan"), "/wavelength_plan");
  cfg.traffic = parse_traffic(member(j, "", "traffic"), "/traffic");
  if (j.contains("dba")) cfg.dba = parse_dba(j["dba"], "/dba");
  if (j.contains("policy")) cfg.policy = parse_policy(j["policy"], "/policy");
  cfg.slices = parse_slices(member(j, "", "slices"), "/slices");
  cfg.control_channel = static_cast<ChannelIndex>(int_or(j, "", "control_channel", 1));
  if (j.contains("run")) cfg.run = parse_run(j["run"], "/run");
  validate_scenario(cfg);
  return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

void validate_scenario(const ScenarioConfig& cfg) {
  const auto bad = [](const std::string& what) {
    throw std::invalid_argument("scenario config: " + what);
  };

  std::set<std::string> nodes;
  int co_count = 0;
  for (const NodeConfig& n : cfg.topology.nodes) {
    if (!nodes.insert(n.id).second) bad("duplicate node id '" + n.id + "'");
    co_count += n.role == NodeRole::CentralOffice ? 1 : 0;
  }
  if (co_count != 1) bad("exactly one central_office node is required");
  for (const LinkConfig& l : cfg.topology.links) {
    if (!nodes.count(l.a)) bad("link references unknown node '" + l.a + "'");
    if (!nodes.count(l.b)) bad("link references unknown node '" + l.b + "'");
  }
  for (const RuleConfig& r : cfg.topology.rules)
    if (!nodes.count(r.splitter)) bad("rules reference unknown splitter '" + r.splitter + "'");

  std::set<ChannelIndex> channels;
  for (const ChannelSpec& c : cfg.wavelength.channels) {
    if (c.index <= 0) bad("channel indices must be positive");
    if (!channels.insert(c.index).second)
      bad("duplicate channel index " + std::to_string(c.index));
    if (c.payload_rate_bps == 0 || c.payload_rate_bps > c.line_rate_bps)
      bad("channel " + std::to_string(c.index) + " payload rate must be in (0, line rate]");
  }
  if (!channels.count(cfg.control_channel)) bad("control_channel is not a declared channel");

  std::set<std::string> olts;
  for (const OltAssignConfig& o : cfg.wavelength.olts) {
    if (!olts.insert(o.id).second) bad("duplicate olt id '" + o.id + "'");
    if (!nodes.count(o.id)) bad("olt '" + o.id + "' is not a topology node");
    if (!channels.count(o.channel))
      bad("olt '" + o.id + "' is assigned undeclared channel " + std::to_string(o.channel));
  }
  std::set<std::string> onus;
  for (const OnuDeclConfig& d : cfg.wavelength.onus) {
    if (!onus.insert(d.id).second) bad("duplicate onu id '" + d.id + "'");
    if (!nodes.count(d.id)) bad("onu '" + d.id + "' is not a topology node");
    if (!channels.count(d.fixed) || !channels.count(d.tunable))
      bad("onu '" + d.id + "' references an undeclared channel");
  }

  if (cfg.slices.empty()) bad("at least one slice is required");
  std::set<std::string> slice_olts, members;
  for (const SliceConfig& s : cfg.slices) {
    if (!slice_olts.insert(s.olt).second) bad("olt '" + s.olt + "' appears in two slices");
    if (!olts.count(s.olt)) bad("slice references unknown olt '" + s.olt + "'");
    if (s.dormant && !s.members.empty()) bad("dormant slice '" + s.olt + "' must be empty");
    for (const std::string& m : s.members) {
      if (!onus.count(m)) bad("slice member '" + m + "' is not a declared onu");
      if (!members.insert(m).second) bad("onu '" + m + "' is a member of two slices");
    }
  }

  if (cfg.traffic.erlang.empty()) bad("traffic.erlang needs at least one point");
  double prev = -1.0;
  for (const auto& [ts, e] : cfg.traffic.erlang) {
    if (ts < 0 || ts <= prev) bad("traffic.erlang times must be increasing and non-negative");
    if (e < 0) bad("traffic.erlang values must be non-negative");
    prev = ts;
  }
  if (cfg.traffic.n_full < 1) bad("traffic.n_full must be at least 1");
  if (cfg.traffic.mean_holding_s <= 0) bad("traffic.mean_holding_s must be positive");
  if (cfg.traffic.split.rate_max_bps < cfg.traffic.split.rate_min_bps)
    bad("traffic.split rates are inverted");
  if (cfg.traffic.co_background < 0 || cfg.traffic.co_background >= 1)
    bad("traffic.co_background must lie in [0, 1)");
  for (const std::string& ru : cfg.traffic.rus)
    if (!onus.count(ru)) bad("traffic.rus entry '" + ru + "' is not a declared onu");

  if (cfg.dba.cycle_len <= 0) bad("dba.cycle_us must be positive");
  if (cfg.dba.cycles_per_tti < 1) bad("dba.cycles_per_tti must be at least 1");
  if (cfg.traffic.ru_delay_max > cfg.dba.cycle_len)
    bad("traffic.ru_delay_max_us must not exceed one cycle");

  if (cfg.run.duration_s <= 0) bad("run.duration_s must be positive");
  if (cfg.run.warmup_s < 0 || cfg.run.warmup_s >= cfg.run.duration_s)
    bad("run.duration_s must exceed run.warmup_s");
  if (cfg.run.controller_period <= 0) bad("run.controller_period_ms must be positive");

  if (cfg.policy.threshold_us <= 0) bad("policy.threshold_us must be positive");
  if (cfg.policy.trigger_fraction <= 0 || cfg.policy.trigger_fraction > 1)
    bad("policy.trigger_fraction must lie in (0, 1]");
}

namespace {

std::string two_digits(int i) {
  return i < 10 ? "0" + std::to_string(i) : std::to_string(i);
}
std::string cran_name(int i) { return "onu-" + two_digits(i); }
std::string res_name(int i) { return "onu-r" + two_digits(i); }

// Shared preset plant: two level-1 trees behind one level-2 splitter, an edge
// OLT site in each tree, a cross-link between them, 12 mobile ONUs in tree A
// and 12 residential ONUs in tree B. Wavelength 5 loops back for olt1;
// `ew6` pre-opens wavelength 6 across the cross-link for east-west serving.
TopologyConfig preset_topology(bool ew6) {
  TopologyConfig topo;
  topo.nodes = {{"co", NodeRole::CentralOffice},   {"l2", NodeRole::Level2Splitter},
                {"l1a", NodeRole::Level1Splitter}, {"l1b", NodeRole::Level1Splitter},
                {"olt1", NodeRole::EdgeOltSite},   {"olt2", NodeRole::EdgeOltSite}};
  topo.links = {{"l2", PortClass::Trunk, "co", PortClass::Lower, -1.0},
                {"l1a", PortClass::Trunk, "l2", PortClass::Lower, -1.0},
                {"l1b", PortClass::Trunk, "l2", PortClass::Lower, -1.0},
                {"olt1", PortClass::Lower, "l1a", PortClass::Lower, -1.0},
                {"olt2", PortClass::Lower, "l1b", PortClass::Lower, -1.0},
                {"l1a", PortClass::Xlink, "l1b", PortClass::Xlink, -1.0}};
  for (int i = 1; i <= 12; ++i) {
    topo.nodes.push_back({cran_name(i), NodeRole::OnuSite});
    topo.links.push_back({cran_name(i), PortClass::Lower, "l1a", PortClass::Lower, -1.0});
    topo.nodes.push_back({res_name(i), NodeRole::OnuSite});
    topo.links.push_back({res_name(i), PortClass::Lower, "l1b", PortClass::Lower, -1.0});
  }
  RuleConfig ra{"l1a", {5}, {}, {1, 2, 3, 4}};
  RuleConfig rb{"l1b", {}, {}, {1, 2, 3, 4}};
  if (ew6) {
    ra.xpass = {6};
    rb.xpass = {6};
  }
  topo.rules = {ra, rb};
  return topo;
}

WavelengthConfig preset_wavelength(ChannelIndex cran_tuned) {
  WavelengthConfig w;
  ChannelSpec control;
  control.index = 1;
  control.role = ChannelRole::CoControl;
  w.channels.push_back(control);
  for (ChannelIndex ch : {5, 6}) {
    ChannelSpec spec;
    spec.index = ch;
    w.channels.push_back(spec);
  }
  w.olts = {{"co", OltKind::Co, 1}, {"olt1", OltKind::Edge, 5}, {"olt2", OltKind::Edge, 6}};
  for (int i = 1; i <= 12; ++i) {
    w.onus.push_back({cran_name(i), 1, cran_tuned});
    w.onus.push_back({res_name(i), 1, 1});
  }
  return w;
}

std::vector<std::string> cran_names() {
  std::vector<std::string> out;
  for (int i = 1; i <= 12; ++i) out.push_back(cran_name(i));
  return out;
}

std::vector<std::string> res_names() {
  std::vector<std::string> out;
  for (int i = 1; i <= 12; ++i) out.push_back(res_name(i));
  return out;
}

// Keeps the first `k` fronthaul ONUs of the slice that hosts them; the rest
// leave the slice and the traffic list but stay declared (idle plant).
void resize_fronthaul_slice(ScenarioConfig& cfg, int k) {
  if (k < 1) throw std::invalid_argument("slice size must be at least 1");
  std::size_t best = cfg.slices.size();
  std::size_t best_hits = 0;
  const std::set<std::string> rus(cfg.traffic.rus.begin(), cfg.traffic.rus.end());
  for (std::size_t i = 0; i < cfg.slices.size(); ++i) {
    std::size_t hits = 0;
    for (const std::string& m : cfg.slices[i].members) hits += rus.count(m);
    if (hits > best_hits) {
      best = i;
      best_hits = hits;
    }
  }
  if (best == cfg.slices.size())
    throw std::invalid_argument("slice size override needs a slice carrying fronthaul onus");
  if (static_cast<std::size_t>(k) > best_hits)
    throw std::invalid_argument("slice size " + std::to_string(k) + " exceeds the " +
                                std::to_string(best_hits) + " fronthaul onus in the slice");
  SliceConfig& s = cfg.slices[best];
  std::vector<std::string> keep_members;
  std::vector<std::string> slice_rus;
  for (const std::string& m : s.members)
    if (rus.count(m)) slice_rus.push_back(m);
  std::sort(slice_rus.begin(), slice_rus.end());
  const std::set<std::string> kept(slice_rus.begin(), slice_rus.begin() + k);
  for (const std::string& m : s.members)
    if (!rus.count(m) || kept.count(m)) keep_members.push_back(m);
  s.members = keep_members;
  std::vector<std::string> new_rus;
  for (const std::string& r : cfg.traffic.rus)
    if (kept.count(r) || !std::binary_search(slice_rus.begin(), slice_rus.end(), r))
      new_rus.push_back(r);
  cfg.traffic.rus = new_rus;
}

}  // namespace

bool is_preset(const std::string& name) {
  for (const std::string& p : preset_names())
    if (p == name) return true;
  return false;
}

std::vector<std::string> preset_names() { return {"fig2", "fig2-co", "fig2-ew", "fig3", "fig4"}; }

ScenarioConfig make_preset(const std::string& name, const Overrides& ov) {
  if (!is_preset(name)) throw std::invalid_argument("unknown preset: " + name);
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.topology = preset_topology(name == "fig2-ew");
  // The cran tunables park on the channel of whichever slice hosts them:
  // the east-west wavelength, the central office, or the home edge OLT.
  cfg.wavelength = preset_wavelength(name == "fig2-ew" ? 6 : name == "fig2-co" ? 1 : 5);
  cfg.traffic.rus = cran_names();
  cfg.traffic.co_background = 0.30;
  cfg.control_channel = 1;

  const bool fig2 = name.rfind("fig2", 0) == 0;
  if (fig2) {
    cfg.traffic.erlang = {{0.0, 12.5}};
    cfg.run.duration_s = 30.0;
    cfg.run.warmup_s = 2.0;
  } else {
    cfg.traffic.erlang = {{0.0, 1.0}, {120.0, 14.0}};
    cfg.run.duration_s = 120.0;
    cfg.run.warmup_s = 2.0;
  }

  if (name == "fig2") {
    cfg.slices = {{"co", res_names(), false}, {"olt1", cran_names(), false}};
  } else if (name == "fig2-co") {
    cfg.slices = {{"co", cran_names(), false}};
  } else if (name == "fig2-ew") {
    cfg.slices = {{"co", res_names(), false}, {"olt2", cran_names(), false}};
  } else {
    cfg.slices = {{"co", res_names(), false},
                  {"olt1", cran_names(), false},
                  {"olt2", {}, true}};
    if (name == "fig4") cfg.policy.kind = PolicyKind::Balanced;
  }

  Overrides effective = ov;
  if (fig2 && !effective.slice_size) effective.slice_size = 6;
  apply_overrides(cfg, effective);
  validate_scenario(cfg);
  return cfg;
}

void apply_overrides(ScenarioConfig& cfg, const Overrides& ov) {
  if (ov.seed) cfg.run.seed = *ov.seed;
  if (ov.duration_s) cfg.run.duration_s = *ov.duration_s;
  if (ov.policy) cfg.policy.kind = policy_kind(*ov.policy, "--policy");
  if (ov.east_west_mode) cfg.topology.east_west = east_west_mode(*ov.east_west_mode, "--east-west-mode");
  if (ov.split) {
    cfg.traffic.split_name = *ov.split;
    cfg.traffic.split = split_profile(*ov.split, "--split");
  }
  if (ov.erlang) {
    if (*ov.erlang < 0) throw std::invalid_argument("--erlang must be non-negative");
    cfg.traffic.erlang = {{0.0, *ov.erlang}};
  }
  if (ov.slice_size) resize_fronthaul_slice(cfg, *ov.slice_size);
}

ScenarioConfig load_scenario(const std::string& source, const Overrides& ov) {
  if (is_preset(source)) return make_preset(source, ov);
  ScenarioConfig cfg = parse_scenario_file(source);
  apply_overrides(cfg, ov);
  validate_scenario(cfg);
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;

  json topo;
  topo["defaults"] = {{"feeder_km", cfg.topology.defaults.feeder_km},
                      {"trunk_km", cfg.topology.defaults.trunk_km},
                      {"drop_km", cfg.topology.defaults.drop_km},
                      {"xlink_km", cfg.topology.defaults.xlink_km},
                      {"drop_warn_km", cfg.topology.defaults.drop_warn_km},
                      {"us_per_km", cfg.topology.defaults.us_per_km}};
  topo["east_west_mode"] = east_west_name(cfg.topology.east_west);
  topo["nodes"] = json::array();
  for (const NodeConfig& n : cfg.topology.nodes)
    topo["nodes"].push_back({{"id", n.id}, {"role", node_role_name(n.role)}});
  topo["links"] = json::array();
  for (const LinkConfig& l : cfg.topology.links)
    topo["links"].push_back({{"a", l.a},
                             {"a_port", port_class_name(l.a_port)},
                             {"b", l.b},
                             {"b_port", port_class_name(l.b_port)},
                             {"length_km", l.length_km}});
  topo["rules"] = json::array();
  for (const RuleConfig& r : cfg.topology.rules)
    topo["rules"].push_back({{"splitter", r.splitter},
                             {"reflect", r.reflect},
                             {"xpass", r.xpass},
                             {"trunkpass", r.trunkpass}});
  j["topology"] = std::move(topo);

  json wave;
  wave["tuning_time_ms"] = static_cast<double>(cfg.wavelength.tuning_time) / 1e6;
  wave["channels"] = json::array();
  for (const ChannelSpec& c : cfg.wavelength.channels)
    wave["channels"].push_back({{"index", c.index},
                                {"role", channel_role_name(c.role)},
                                {"line_rate_bps", c.line_rate_bps},
                                {"payload_rate_bps", c.payload_rate_bps},
                                {"burst_overhead_us", static_cast<double>(c.burst_overhead) / 1e3}});
  wave["olts"] = json::array();
  for (const OltAssignConfig& o : cfg.wavelength.olts)
    wave["olts"].push_back(
        {{"id", o.id}, {"kind", olt_kind_name(o.kind)}, {"channel", o.channel}});
  wave["onus"] = json::array();
  for (const OnuDeclConfig& d : cfg.wavelength.onus)
    wave["onus"].push_back({{"id", d.id}, {"fixed", d.fixed}, {"tunable", d.tunable}});
  j["wavelength_plan"] = std::move(wave);

  json traffic;
  traffic["erlang"] = json::array();
  for (const auto& [ts, e] : cfg.traffic.erlang) traffic["erlang"].push_back({ts, e});
  if (cfg.traffic.split_name == "custom")
    traffic["split"] = {{"rate_min_bps", cfg.traffic.split.rate_min_bps},
                        {"rate_max_bps", cfg.traffic.split.rate_max_bps}};
  else
    traffic["split"] = cfg.traffic.split_name;
  traffic["n_full"] = cfg.traffic.n_full;
  traffic["mean_holding_s"] = cfg.traffic.mean_holding_s;
  traffic["ru_delay_max_us"] = static_cast<double>(cfg.traffic.ru_delay_max) / 1e3;
  traffic["co_background"] = cfg.traffic.co_background;
  traffic["rus"] = cfg.traffic.rus;
  j["traffic"] = std::move(traffic);

  j["dba"] = {{"cycle_us", static_cast<double>(cfg.dba.cycle_len) / 1e3},
              {"cycles_per_tti", cfg.dba.cycles_per_tti}};

  j["policy"] = {{"kind", policy_kind_name(cfg.policy.kind)},
                 {"threshold_us", cfg.policy.threshold_us},
                 {"trigger_fraction", cfg.policy.trigger_fraction},
                 {"window_ms", static_cast<double>(cfg.policy.window) / 1e6},
                 {"cooldown_ms", static_cast<double>(cfg.policy.cooldown) / 1e6},
                 {"msg_proc_us", static_cast<double>(cfg.policy.msg_proc) / 1e3},
                 {"activation_delay_ms", static_cast<double>(cfg.policy.activation_delay) / 1e6}};

  j["slices"] = json::array();
  for (const SliceConfig& s : cfg.slices)
    j["slices"].push_back({{"olt", s.olt}, {"members", s.members}, {"dormant", s.dormant}});

  j["control_channel"] = cfg.control_channel;
  j["run"] = {{"duration_s", cfg.run.duration_s},
              {"warmup_s", cfg.run.warmup_s},
              {"seed", cfg.run.seed},
              {"controller_period_ms", static_cast<double>(cfg.run.controller_period) / 1e6}};
  return j.dump(2) + "\n";
}

}  // namespace ponsim
