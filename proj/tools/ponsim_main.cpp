// Command-line front end: expand a preset or scenario file, run it (once or
// across a parameter sweep), and leave result bundles plus a combined CSV
// that plots latency-vs-parameter curves with any external tool.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ponsim/simulation.hpp"

namespace {

using namespace ponsim;

struct RunFlags {
  std::string source;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<std::string> policy;
  std::optional<int> slice_size;
  std::optional<double> erlang;
  std::optional<std::string> east_west;
  std::optional<std::string> split;
};

Overrides to_overrides(const RunFlags& f) {
  Overrides ov;
  ov.seed = f.seed;
  ov.duration_s = f.duration;
  ov.policy = f.policy;
  ov.slice_size = f.slice_size;
  ov.erlang = f.erlang;
  ov.east_west_mode = f.east_west;
  ov.split = f.split;
  return ov;
}

// The manifest records which knobs the command line turned, so a bundle on
// disk explains itself without the invoking shell history.
nlohmann::ordered_json overrides_json(const Overrides& ov) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.duration_s) j["duration_s"] = *ov.duration_s;
  if (ov.policy) j["policy"] = *ov.policy;
  if (ov.slice_size) j["slice_size"] = *ov.slice_size;
  if (ov.erlang) j["erlang"] = *ov.erlang;
  if (ov.east_west_mode) j["east_west_mode"] = *ov.east_west_mode;
  if (ov.split) j["split"] = *ov.split;
  return j;
}

void write_bundle(const Simulation& sim, const Overrides& ov, const std::string& dir) {
  ResultBundle b = sim.bundle();
  nlohmann::ordered_json manifest = nlohmann::ordered_json::parse(b.manifest_json);
  manifest["overrides"] = overrides_json(ov);
  b.manifest_json = manifest.dump(2) + "\n";
  b.write(dir);
}

void report_warnings(const Simulation& sim) {
  for (const std::string& w : sim.warnings()) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const RunFlags& flags) {
  const Overrides ov = to_overrides(flags);
  Simulation sim(load_scenario(flags.source, ov));
  report_warnings(sim);
  sim.run();
  if (!flags.out.empty()) {
    write_bundle(sim, ov, flags.out);
    std::cerr << "bundle written to " << flags.out << "\n";
  }
  std::cout << sim.bundle().summary_json;
  return 0;
}

struct SweepFlags {
  std::string source;
  std::string param;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::optional<double> duration;
};

double parse_number(const std::string& param, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw std::invalid_argument("--param " + param + " needs numeric values, got '" + v + "'");
  return x;
}

Overrides sweep_point(const std::string& param, const std::string& value) {
  Overrides ov;
  if (param == "slice-size") {
    const double x = parse_number(param, value);
    if (x != static_cast<int>(x))
      throw std::invalid_argument("--param slice-size needs integer values, got '" + value + "'");
    ov.slice_size = static_cast<int>(x);
  } else if (param == "erlang") {
    ov.erlang = parse_number(param, value);
  } else if (param == "policy") {
    ov.policy = value;
  } else if (param == "east-west-mode") {
    ov.east_west_mode = value;
  } else if (param == "split") {
    ov.split = value;
  } else {
    throw std::invalid_argument(
        "unknown sweep parameter '" + param +
        "' (choose slice-size, erlang, policy, east-west-mode, split)");
  }
  return ov;
}

int cmd_sweep(const SweepFlags& flags) {
  std::vector<std::string> values;
  for (const std::string& v : flags.values) {
    if (v.empty()) throw std::invalid_argument("empty sweep value");
    if (std::find(values.begin(), values.end(), v) != values.end()) {
      std::cerr << "warning: duplicate value '" << v << "' ignored\n";
      continue;
    }
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("no sweep values given");

  // Deterministic output order regardless of how the list arrived.
  const bool numeric = std::all_of(values.begin(), values.end(), [](const std::string& v) {
    std::size_t used = 0;
    try {
      std::stod(v, &used);
    } catch (const std::exception&) {
      return false;
    }
    return used == v.size();
  });
  std::sort(values.begin(), values.end(),
            [numeric](const std::string& a, const std::string& b) {
              return numeric ? std::stod(a) < std::stod(b) : a < b;
            });
  std::vector<std::uint64_t> seeds = flags.seeds;
  if (seeds.empty()) seeds.push_back(load_scenario(flags.source, {}).run.seed);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::string csv = "parameter,seed,mean_us,p99_us\n";
  for (const std::string& value : values) {
    for (std::uint64_t seed : seeds) {
      Overrides ov = sweep_point(flags.param, value);
      ov.seed = seed;
      ov.duration_s = flags.duration;
      Simulation sim(load_scenario(flags.source, ov));
      sim.run();

      // The curve tracks the fronthaul service: every sample of the radio
      // units, whichever OLT happened to serve them after reconfigurations.
      MetricsHub::Filter f;
      f.onus = sim.config().traffic.rus;
      f.t_min = sim.warmup();
      const auto s = sim.metrics().summarize(f);
      if (!s) throw std::runtime_error("no fronthaul samples at " + flags.param + "=" + value);

      char row[128];
      std::snprintf(row, sizeof row, "%s,%llu,%.3f,%.3f\n", value.c_str(),
                    static_cast<unsigned long long>(seed), s->mean_us, s->p99_us);
      csv += row;
      std::cerr << flags.param << "=" << value << " seed=" << seed << " done ("
                << s->count << " samples)\n";

      if (!flags.out.empty())
        write_bundle(sim, ov,
                     (std::filesystem::path(flags.out) /
                      (flags.param + "-" + value + "-seed-" + std::to_string(seed)))
                         .string());
    }
  }
  if (!flags.out.empty()) {
    std::filesystem::create_directories(flags.out);
    std::ofstream out(std::filesystem::path(flags.out) / "sweep.csv", std::ios::binary);
    out << csv;
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TWDM-PON fronthaul simulator"};
  app.require_subcommand(1);

  RunFlags run;
  CLI::App* run_cmd = app.add_subcommand("run", "run one scenario and print its summary");
  run_cmd->add_option("source", run.source, "preset name or scenario file")->required();
  run_cmd->add_option("--seed", run.seed, "master seed");
  run_cmd->add_option("--duration", run.duration, "simulated seconds");
  run_cmd->add_option("--out", run.out, "directory for the result bundle");
  run_cmd->add_option("--policy", run.policy, "unbalanced|balanced");
  run_cmd->add_option("--slice-size", run.slice_size, "fronthaul onus kept in the slice");
  run_cmd->add_option("--erlang", run.erlang, "constant offered load per radio unit");
  run_cmd->add_option("--east-west-mode", run.east_west, "direct|overlay");
  run_cmd->add_option("--split", run.split, "split8|split71");

  SweepFlags sweep;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run once per (value, seed) and emit a combined CSV");
  sweep_cmd->add_option("source", sweep.source, "preset name or scenario file")->required();
  sweep_cmd->add_option("--param", sweep.param,
                        "slice-size|erlang|policy|east-west-mode|split")
      ->required();
  sweep_cmd->add_option("--values", sweep.values, "comma-separated value list")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "comma-separated seed list")->delimiter(',');
  sweep_cmd->add_option("--out", sweep.out, "directory for per-run bundles and sweep.csv");
  sweep_cmd->add_option("--duration", sweep.duration, "simulated seconds per run");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run_cmd->parsed()) return cmd_run(run);
    return cmd_sweep(sweep);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
