#pragma once

// Append-only Fenwick tree for drawing an index with probability proportional
// to its weight, plus a linear-scan reference sampler with the same rule.
//
// Rule: given u in (0,1), return the smallest 1-based index i with
// prefix(i) >= u * total.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace wrg {

class WeightedSampler {
 public:
  WeightedSampler() { tree_.push_back(0.0); }

  void reserve(std::size_t n) { tree_.reserve(n + 1); }

  std::size_t size() const { return tree_.size() - 1; }

  /// Kahan-compensated sum of all appended weights.
  double total() const { return total_; }

  void push_back(double w) {
    const std::size_t i = tree_.size();
    const std::size_t low = i & (~i + 1);
    double node = w;
    for (std::size_t k = 1; k < low; k <<= 1) node += tree_[i - k];
    tree_.push_back(node);
    if (top_bit_ == 0) {
      top_bit_ = 1;
    } else if (top_bit_ * 2 <= i) {
      top_bit_ <<= 1;
    }
    const double y = w - comp_;
    const double t = total_ + y;
    comp_ = (t - total_) - y;
    total_ = t;
  }

  /// Smallest index with prefix sum >= target, clamped to [1, size()].
  std::size_t find(double target) const {
    const std::size_t n = size();
    std::size_t pos = 0;
    double rem = target;
    for (std::size_t step = top_bit_; step != 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= n && tree_[next] < rem) {
        pos = next;
        rem -= tree_[next];
      }
    }
    return std::min(pos + 1, n);
  }

  std::size_t sample(double u) const { return find(u * total_); }

  /// Prefix sum of the first i weights (O(log n)).
  double prefix(std::size_t i) const {
    double s = 0.0;
    for (; i > 0; i &= i - 1) s += tree_[i];
    return s;
  }

 private:
  std::vector<double> tree_;
  std::size_t top_bit_ = 0;
  double total_ = 0.0;
  double comp_ = 0.0;
};

/// Reference sampler: cumulative sums in index order.
inline std::size_t linear_scan_sample(std::span<const double> weights, double total, double u) {
  const double target = u * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (cum >= target) return i + 1;
  }
  return weights.size();
}

/// Linear-scan answers for many uniforms at once: one pass over the weights
/// after sorting the targets.
inline std::vector<std::size_t> linear_scan_batch(std::span<const double> weights, double total,
                                                  std::span<const double> uniforms) {
  std::vector<std::pair<double, std::size_t>> targets(uniforms.size());
  for (std::size_t k = 0; k < uniforms.size(); ++k) targets[k] = {uniforms[k] * total, k};
  std::sort(targets.begin(), targets.end());
  std::vector<std::size_t> out(uniforms.size(), weights.size());
  double cum = 0.0;
  std::size_t i = 0;
  for (const auto& [t, k] : targets) {
    while (i < weights.size()) {
      const double next = cum + weights[i];
      if (next >= t) break;
      cum = next;
      ++i;
    }
    out[k] = std::min(i + 1, weights.size());
  }
  return out;
}

struct OracleCheckResult {
  bool identical = true;
  std::size_t draws = 0;
  std::optional<std::size_t> first_divergence;  // 0-based draw number
  std::size_t fenwick_index = 0;
  std::size_t oracle_index = 0;
  double uniform = 0.0;

  std::string message() const {
    if (identical) return "identical over " + std::to_string(draws) + " draws";
    return "draw " + std::to_string(*first_divergence) + " (u=" + std::to_string(uniform) +
           "): fenwick=" + std::to_string(fenwick_index) + " linear=" + std::to_string(oracle_index);
  }
};

/// Feeds the same uniforms to the Fenwick sampler and the linear scan and
/// compares the index sequences.
inline OracleCheckResult sampler_oracle_check(std::span<const double> weights, std::size_t draws, RandomStream& rng) {
  if (weights.empty()) throw DomainError("sampler_oracle_check needs at least one weight");
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("sampler_oracle_check needs positive weights");
  }
  WeightedSampler fw;
  fw.reserve(weights.size());
  for (double w : weights) fw.push_back(w);
  std::vector<double> us(draws);
  for (auto& u : us) u = rng.uniform();
  const auto ref = linear_scan_batch(weights, fw.total(), us);
  OracleCheckResult r;
  r.draws = draws;
  for (std::size_t k = 0; k < draws; ++k) {
    const std::size_t f = fw.sample(us[k]);
    if (f != ref[k]) {
      r.identical = false;
      r.first_divergence = k;
      r.fenwick_index = f;
      r.oracle_index = ref[k];
      r.uniform = us[k];
      break;
    }
  }
  return r;
}

}  // namespace wrg
