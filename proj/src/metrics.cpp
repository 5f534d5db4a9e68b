#include "ponsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ponsim {

std::string format_us(std::int64_t ns) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(ns / 1000),
                static_cast<long long>(ns % 1000));
  return buf;
}

std::int32_t MetricsHub::intern(std::vector<std::string>& names,
                                std::unordered_map<std::string, std::int32_t>& index,
                                const std::string& s) {
  auto it = index.find(s);
  if (it != index.end()) return it->second;
  std::int32_t id = static_cast<std::int32_t>(names.size());
  names.push_back(s);
  index.emplace(s, id);
  return id;
}

void MetricsHub::register_olt(const std::string& olt) {
  std::int32_t id = intern(olt_names_, olt_index_, olt);
  if (static_cast<std::size_t>(id) >= olt_windows_.size()) olt_windows_.resize(id + 1);
}

void MetricsHub::record_latency(SimTime t, const std::string& olt, const std::string& onu,
                                std::int64_t latency_ns, std::int64_t floor_ns) {
  PONSIM_ASSERT(latency_ns >= floor_ns, "latency below the path propagation floor");
  std::int32_t olt_id = intern(olt_names_, olt_index_, olt);
  if (static_cast<std::size_t>(olt_id) >= olt_windows_.size())
    olt_windows_.resize(olt_id + 1);
  std::int32_t onu_id = intern(onu_names_, onu_index_, onu);
  samples_.push_back({t, latency_ns, olt_id, onu_id});

  WindowAgg& w = olt_windows_[olt_id];
  w.entries.emplace_back(t, latency_ns);
  w.sum += latency_ns;
}

void MetricsHub::record_offered(SimTime t, const std::string& onu, std::uint64_t bytes) {
  OfferedAgg& agg = offered_[onu];
  agg.entries.emplace_back(t, bytes);
  agg.sum += bytes;
}

double MetricsHub::windowed_mean_us(const std::string& olt, SimTime now) {
  auto it = olt_index_.find(olt);
  if (it == olt_index_.end()) return 0.0;
  WindowAgg& w = olt_windows_[it->second];
  while (!w.entries.empty() && w.entries.front().first < now - window_) {
    w.sum -= w.entries.front().second;
    w.entries.pop_front();
  }
  if (!w.entries.empty())
    w.last_mean_us =
        static_cast<double>(w.sum) / static_cast<double>(w.entries.size()) / 1000.0;
  return w.last_mean_us;
}

std::uint64_t MetricsHub::windowed_offered_bytes(const std::string& onu, SimTime now) {
  auto it = offered_.find(onu);
  if (it == offered_.end()) return 0;
  OfferedAgg& agg = it->second;
  while (!agg.entries.empty() && agg.entries.front().first < now - window_) {
    agg.sum -= agg.entries.front().second;
    agg.entries.pop_front();
  }
  return agg.sum;
}

std::optional<MetricsHub::Summary> MetricsHub::summarize(const Filter& f) const {
  std::int32_t olt_id = -1, onu_id = -1;
  if (f.olt) {
    auto it = olt_index_.find(*f.olt);
    if (it == olt_index_.end()) return std::nullopt;
    olt_id = it->second;
  }
  if (f.onu) {
    auto it = onu_index_.find(*f.onu);
    if (it == onu_index_.end()) return std::nullopt;
    onu_id = it->second;
  }
  std::vector<std::int32_t> set_ids;
  if (!f.onus.empty()) {
    for (const std::string& name : f.onus) {
      auto it = onu_index_.find(name);
      if (it != onu_index_.end()) set_ids.push_back(it->second);
    }
    if (set_ids.empty()) return std::nullopt;
    std::sort(set_ids.begin(), set_ids.end());
  }
  std::vector<std::int64_t> lat;
  double sum = 0.0;
  for (const Sample& s : samples_) {
    if (olt_id >= 0 && s.olt != olt_id) continue;
    if (onu_id >= 0 && s.onu != onu_id) continue;
    if (!set_ids.empty() && !std::binary_search(set_ids.begin(), set_ids.end(), s.onu))
      continue;
    if (s.t < f.t_min || s.t > f.t_max) continue;
    lat.push_back(s.latency_ns);
    sum += static_cast<double>(s.latency_ns);
  }
  if (lat.empty()) return std::nullopt;
  std::sort(lat.begin(), lat.end());
  auto nearest_rank = [&](double q) {
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * lat.size()));
    if (rank == 0) rank = 1;
    return static_cast<double>(lat[rank - 1]) / 1000.0;
  };
  Summary out;
  out.count = lat.size();
  out.mean_us = sum / static_cast<double>(lat.size()) / 1000.0;
  out.p50_us = nearest_rank(0.50);
  out.p99_us = nearest_rank(0.99);
  out.max_us = static_cast<double>(lat.back()) / 1000.0;
  return out;
}

void MetricsHub::snapshot_window_means(SimTime now) {
  for (std::size_t i = 0; i < olt_windows_.size(); ++i)
    window_rows_.emplace_back(now, static_cast<std::int32_t>(i),
                              windowed_mean_us(olt_names_[i], now));
}

std::string MetricsHub::samples_csv() const {
  std::string out = "t_ns,olt,onu,latency_us\n";
  for (const Sample& s : samples_) {
    out += std::to_string(s.t);
    out += ',';
    out += olt_names_[s.olt];
    out += ',';
    out += onu_names_[s.onu];
    out += ',';
    out += format_us(s.latency_ns);
    out += '\n';
  }
  out += "# undelivered," + std::to_string(undelivered_) + "\n";
  return out;
}

std::string MetricsHub::window_means_csv() const {
  std::string out = "t_ns,olt,window_mean_us\n";
  char buf[48];
  for (const auto& [t, olt, mean] : window_rows_) {
    std::snprintf(buf, sizeof buf, "%lld,%s,%.3f", static_cast<long long>(t),
                  olt_names_[olt].c_str(), mean);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace ponsim
