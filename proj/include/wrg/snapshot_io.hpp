#pragma once

// Snapshot export: CSV columns i,weight,in_degree,cond_mean plus a JSON header
// with the resolved configuration. Weights are written with 17 significant
// digits, so a reimport reproduces them bit for bit.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "wrg_core.hpp"

namespace wrg {

struct SnapshotPaths {
  std::filesystem::path csv;
  std::filesystem::path json;
};

inline nlohmann::json snapshot_header(const GrowthSnapshot& s) {
  nlohmann::json h;
  h["config"] = s.config.to_kv().entries();
  h["n"] = s.n();
  h["m"] = s.m();
  h["seed"] = s.seed();
  h["variant"] = to_string(s.config.variant);
  h["columns"] = {"i", "weight", "in_degree", "cond_mean"};
  h["degree_sum"] = degree_sum(s.in_degrees);
  if (s.n() >= 2) h["harmonic_residual"] = harmonic_residual(s);
  return h;
}

inline void write_snapshot_csv(std::ostream& os, const GrowthSnapshot& s) {
  const auto cm = cond_mean_degrees(s);
  os << "i,weight,in_degree,cond_mean\n";
  for (std::size_t k = 0; k < s.n(); ++k) {
    os << (k + 1) << ',' << KeyValues::format_double17(s.weights[k]) << ',' << s.in_degrees[k] << ','
       << KeyValues::format_double17(cm[k]) << '\n';
  }
}

inline SnapshotPaths write_snapshot(const GrowthSnapshot& s, const std::filesystem::path& dir,
                                    const std::string& stem = "snapshot") {
  std::filesystem::create_directories(dir);
  SnapshotPaths p{dir / (stem + ".csv"), dir / (stem + ".json")};
  std::ofstream csv(p.csv);
  if (!csv) throw DomainError("cannot write " + p.csv.string());
  write_snapshot_csv(csv, s);
  std::ofstream js(p.json);
  if (!js) throw DomainError("cannot write " + p.json.string());
  js << snapshot_header(s).dump(2) << '\n';
  return p;
}

inline GrowthSnapshot read_snapshot(const SnapshotPaths& p) {
  std::ifstream js(p.json);
  if (!js) throw DomainError("cannot read " + p.json.string());
  const nlohmann::json h = nlohmann::json::parse(js);
  KeyValues kv;
  for (const auto& [k, v] : h.at("config").items()) kv.set(k, v.get<std::string>());
  GrowthSnapshot s;
  s.config = WrgConfig::from_kv(kv);

  std::ifstream csv(p.csv);
  if (!csv) throw DomainError("cannot read " + p.csv.string());
  std::string line;
  std::getline(csv, line);
  if (line != "i,weight,in_degree,cond_mean") throw DomainError("unexpected snapshot CSV header: " + line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string i, w, z;
    std::getline(row, i, ',');
    std::getline(row, w, ',');
    std::getline(row, z, ',');
    if (std::stoull(i) != s.weights.size() + 1) throw DomainError("snapshot rows out of order at i=" + i);
    s.weights.push_back(KeyValues::parse_double("weight", w));
    s.in_degrees.push_back(std::stoll(z));
  }
  if (s.weights.size() != s.config.n) throw DomainError("snapshot row count does not match header n");
  s.partial_sums = detail::compensated_prefix(s.weights);
  s.harmonic_sums = detail::harmonic_from_partial(s.partial_sums);
  return s;
}

}  // namespace wrg
