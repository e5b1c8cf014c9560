#pragma once

// Growth of weighted recursive graphs. Vertex j+1 arrives with m half-edges,
// each attached to an existing vertex i <= j with probability W_i / S_j.
// Only in-degrees are retained.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "weightdist.hpp"

namespace wrg {

enum class Variant { FixedOutDegree, RandomOutDegree };

inline const char* to_string(Variant v) { return v == Variant::FixedOutDegree ? "fixed" : "random"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "fixed") return Variant::FixedOutDegree;
  if (s == "random") return Variant::RandomOutDegree;
  throw DomainError("variant must be 'fixed' or 'random', got '" + s + "'");
}

struct WrgConfig {
  std::uint64_t n = 1000;
  int m = 1;
  WeightFamily family;
  Variant variant = Variant::FixedOutDegree;
  std::uint64_t seed = 0;
  std::uint64_t random_cap = 100000;  // n limit for the quadratic-time variant

  void validate() const {
    if (n < 1) throw DomainError("n must be >= 1");
    if (m < 1) throw DomainError("m must be >= 1");
    if (variant == Variant::RandomOutDegree && m != 1) {
      throw DomainError("the random out-degree variant has no m parameter; use m=1");
    }
  }

  KeyValues to_kv() const {
    KeyValues kv = family_to_kv(family);
    kv.set("n", n);
    kv.set("m", m);
    kv.set("variant", to_string(variant));
    kv.set("seed", seed);
    kv.set("random_cap", random_cap);
    return kv;
  }

  static WrgConfig from_kv(const KeyValues& kv) {
    WrgConfig c;
    c.family = family_from_kv(kv);
    c.n = kv.uint("n", c.n);
    const std::uint64_t m = kv.uint("m", 1);
    if (m < 1 || m > 1000000) throw DomainError("m must lie in [1, 1e6]");
    c.m = static_cast<int>(m);
    c.variant = parse_variant(kv.str("variant", "fixed"));
    c.seed = kv.uint("seed", 0);
    c.random_cap = kv.uint("random_cap", c.random_cap);
    c.validate();
    return c;
  }
};

/// Final state of one grown graph. Vectors are 0-based; vertex i is entry i-1.
struct GrowthSnapshot {
  WrgConfig config;
  std::vector<std::int64_t> in_degrees;  // Z_n(i)
  std::vector<double> weights;           // W_i
  std::vector<double> partial_sums;      // S_j = W_1 + ... + W_j
  std::vector<double> harmonic_sums;     // H_j = sum_{l<j} 1/S_l, H_1 = 0

  std::uint64_t n() const { return in_degrees.size(); }
  int m() const { return config.m; }
  std::uint64_t seed() const { return config.seed; }
};

namespace detail {

/// Kahan-compensated running sums of x_1, x_2, ...
inline std::vector<double> compensated_prefix(std::span<const double> x) {
  std::vector<double> out(x.size());
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = x[i] - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
    out[i] = s;
  }
  return out;
}

/// H_1 = 0 and H_{j+1} = H_j + 1/S_j, compensated.
inline std::vector<double> harmonic_from_partial(std::span<const double> partial) {
  std::vector<double> h(partial.size());
  double s = 0.0, c = 0.0;
  for (std::size_t j = 0; j < partial.size(); ++j) {
    h[j] = s;
    const double y = 1.0 / partial[j] - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return h;
}

}  // namespace detail

/// Draws the n weights of a configuration from its seeded stream.
inline std::vector<double> draw_weights(const WeightLaw& law, std::uint64_t n, RandomStream& rng) {
  std::vector<double> w(n);
  for (auto& x : w) x = law.sample(rng);
  return w;
}

/// Called at each requested vertex count with (n, in-degrees, weights,
/// partial sums), all restricted to the first n vertices.
using GrowthObserver = std::function<void(std::uint64_t, std::span<const std::int64_t>, std::span<const double>,
                                          std::span<const double>)>;

/// Snapshot holding weights and sums only (in-degrees zero); used where the
/// conditional means are the object of interest.
inline GrowthSnapshot weights_only(const WrgConfig& cfg) {
  cfg.validate();
  const WeightLaw law(cfg.family);
  RandomStream rng(cfg.seed);
  GrowthSnapshot s;
  s.config = cfg;
  s.weights = draw_weights(law, cfg.n, rng);
  s.partial_sums = detail::compensated_prefix(s.weights);
  s.harmonic_sums = detail::harmonic_from_partial(s.partial_sums);
  s.in_degrees.assign(cfg.n, 0);
  return s;
}

/// Grows the fixed out-degree graph. `checkpoints` (ascending, each <= n)
/// trigger `observer` once the graph has that many vertices.
inline GrowthSnapshot grow(const WrgConfig& cfg, const std::vector<std::uint64_t>& checkpoints = {},
                           const GrowthObserver& observer = {}) {
  cfg.validate();
  if (cfg.variant != Variant::FixedOutDegree) throw DomainError("grow expects the fixed out-degree variant");
  const WeightLaw law(cfg.family);
  RandomStream rng(cfg.seed);
  GrowthSnapshot s;
  s.config = cfg;
  s.weights = draw_weights(law, cfg.n, rng);
  s.in_degrees.assign(cfg.n, 0);
  s.partial_sums.resize(cfg.n);

  WeightedSampler sampler;
  sampler.reserve(cfg.n);
  sampler.push_back(s.weights[0]);
  s.partial_sums[0] = sampler.total();
  std::size_t next_cp = 0;
  auto fire = [&](std::uint64_t j) {
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == j) {
      if (observer) {
        observer(j, std::span<const std::int64_t>(s.in_degrees.data(), j), std::span<const double>(s.weights.data(), j),
                 std::span<const double>(s.partial_sums.data(), j));
      }
      ++next_cp;
    }
  };
  fire(1);
  if (!(sampler.total() > 0.0)) throw NumericError("first weight is zero; attachment undefined");
  for (std::uint64_t j = 1; j < cfg.n; ++j) {
    // vertex j+1 attaches to vertices 1..j
    for (int e = 0; e < cfg.m; ++e) {
      const std::size_t i = sampler.sample(rng.uniform());
      std::int64_t& z = s.in_degrees[i - 1];
      if (z == std::numeric_limits<std::int64_t>::max()) throw NumericError("degree counter overflow");
      ++z;
    }
    sampler.push_back(s.weights[j]);
    s.partial_sums[j] = sampler.total();
    fire(j + 1);
  }
  s.harmonic_sums = detail::harmonic_from_partial(s.partial_sums);
  return s;
}

/// Vertex j+1 links to each i <= j independently with probability W_i / S_j.
inline GrowthSnapshot grow_random_outdegree(const WrgConfig& cfg) {
  cfg.validate();
  if (cfg.variant != Variant::RandomOutDegree) {
    throw DomainError("grow_random_outdegree expects the random out-degree variant");
  }
  if (cfg.n > cfg.random_cap) {
    throw ResourceError("random out-degree growth is quadratic; n=" + std::to_string(cfg.n) + " exceeds cap " +
                        std::to_string(cfg.random_cap));
  }
  const WeightLaw law(cfg.family);
  RandomStream rng(cfg.seed);
  GrowthSnapshot s;
  s.config = cfg;
  s.weights = draw_weights(law, cfg.n, rng);
  s.in_degrees.assign(cfg.n, 0);
  s.partial_sums = detail::compensated_prefix(s.weights);
  for (std::uint64_t j = 1; j < cfg.n; ++j) {
    const double inv = 1.0 / s.partial_sums[j - 1];
    for (std::uint64_t i = 0; i < j; ++i) {
      const double p = std::min(1.0, s.weights[i] * inv);
      if (rng.uniform() < p) ++s.in_degrees[i];
    }
  }
  s.harmonic_sums = detail::harmonic_from_partial(s.partial_sums);
  return s;
}

/// Dispatches on the configured variant.
inline GrowthSnapshot grow_any(const WrgConfig& cfg) {
  return cfg.variant == Variant::FixedOutDegree ? grow(cfg) : grow_random_outdegree(cfg);
}

/// E_W[Z_n(i)] = m W_i sum_{j=i}^{n-1} 1/S_j for the first n = weights.size()
/// vertices, using compensated suffix sums.
inline std::vector<double> cond_mean_degrees(std::span<const double> weights, std::span<const double> partial_sums,
                                             int m) {
  const std::size_t n = weights.size();
  std::vector<double> out(n, 0.0);
  double s = 0.0, c = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    // out[k] uses 1/S_j for j = k+1 .. n-1 (1-based), i.e. partial_sums[k .. n-2]
    if (k + 1 < n) {
      const double y = 1.0 / partial_sums[k] - c;
      const double t = s + y;
      c = (t - s) - y;
      s = t;
    }
    out[k] = m * weights[k] * s;
  }
  return out;
}

inline std::vector<double> cond_mean_degrees(const GrowthSnapshot& snap) {
  return cond_mean_degrees(snap.weights, snap.partial_sums, snap.m());
}

template <class T>
struct MaxStats {
  T max;
  std::uint64_t index;  // smallest 1-based index attaining the maximum
};

template <class T>
MaxStats<T> max_degree_stats(std::span<const T> values) {
  if (values.empty()) throw DomainError("max_degree_stats needs a nonempty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return {values[best], best + 1};
}

template <class T>
MaxStats<T> max_degree_stats(const std::vector<T>& values) {
  return max_degree_stats(std::span<const T>(values));
}

/// Y_n = H_n - log n with H_n = sum_{j=1}^{n-1} 1/S_j.
inline double harmonic_residual(const GrowthSnapshot& snap) {
  if (snap.n() < 2) throw DomainError("harmonic residual needs n >= 2");
  return snap.harmonic_sums.back() - std::log(static_cast<double>(snap.n()));
}

/// Sum of in-degrees; equals m(n-1) for the fixed out-degree variant.
inline std::int64_t degree_sum(std::span<const std::int64_t> z) {
  std::int64_t s = 0;
  for (auto v : z) s += v;
  return s;
}

inline bool degree_sum_holds(const GrowthSnapshot& snap) {
  if (snap.config.variant != Variant::FixedOutDegree) return true;
  return degree_sum(snap.in_degrees) == static_cast<std::int64_t>(snap.m()) * static_cast<std::int64_t>(snap.n() - 1);
}

}  // namespace wrg
