#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <vector>

#include "wrg/snapshot_io.hpp"
#include "wrg/wrg_core.hpp"

using namespace wrg;

namespace {

WrgConfig make(std::uint64_t n, int m, WeightFamily f, std::uint64_t seed = 1) {
  WrgConfig c;
  c.n = n;
  c.m = m;
  c.family = f;
  c.seed = seed;
  return c;
}

double exact_harmonic(std::uint64_t n_minus_1) {
  double s = 0.0;
  for (std::uint64_t j = n_minus_1; j >= 1; --j) s += 1.0 / static_cast<double>(j);
  return s;
}

}  // namespace

TEST(Sampler, ConventionCase) {
  WeightedSampler s;
  for (double w : {1.0, 1.0, 2.0}) s.push_back(w);
  EXPECT_EQ(s.sample(0.5), 2u);
  std::vector<double> w{1.0, 1.0, 2.0};
  EXPECT_EQ(linear_scan_sample(w, 4.0, 0.5), 2u);
  EXPECT_EQ(s.sample(0.2), 1u);
  EXPECT_EQ(s.sample(0.5000001), 3u);
  EXPECT_EQ(s.sample(0.999999), 3u);
}

TEST(Sampler, SingleWeight) {
  WeightedSampler s;
  s.push_back(3.5);
  for (double u : {1e-9, 0.5, 1 - 1e-9}) EXPECT_EQ(s.sample(u), 1u);
}

TEST(Sampler, PrefixAndTotal) {
  RandomStream rng(4);
  WeightedSampler s;
  std::vector<double> w;
  for (int i = 0; i < 1000; ++i) {
    w.push_back(rng.uniform() + 0.1);
    s.push_back(w.back());
    const double direct = std::accumulate(w.begin(), w.end(), 0.0);
    EXPECT_NEAR(s.total(), direct, 1e-12 * direct);
    EXPECT_NEAR(s.prefix(w.size()), direct, 1e-12 * direct);
  }
  EXPECT_NEAR(s.prefix(17), std::accumulate(w.begin(), w.begin() + 17, 0.0), 1e-12);
}

TEST(Sampler, FrequenciesMatchWeights) {
  WeightedSampler s;
  const std::vector<double> w{0.5, 2.0, 1.0, 0.25, 4.0};
  for (double x : w) s.push_back(x);
  RandomStream rng(2);
  std::vector<int> count(w.size(), 0);
  const int draws = 200000;
  for (int k = 0; k < draws; ++k) ++count[s.sample(rng.uniform()) - 1];
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = w[i] / s.total();
    EXPECT_NEAR(static_cast<double>(count[i]) / draws, p, 4 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST(Sampler, OracleAgreesOnRandomWeights) {
  RandomStream rng(8);
  std::vector<double> w(200000);
  for (auto& x : w) x = rng.exponential();
  auto r = sampler_oracle_check(w, 200000, rng);
  EXPECT_TRUE(r.identical) << r.message();
  // the per-draw scan agrees with the batch scan
  WeightedSampler s;
  for (double x : w) s.push_back(x);
  for (int k = 0; k < 50; ++k) {
    const double u = rng.uniform();
    EXPECT_EQ(linear_scan_sample(w, s.total(), u), s.sample(u));
  }
}

TEST(Sampler, OracleRejectsBadInput) {
  RandomStream rng(1);
  std::vector<double> empty;
  EXPECT_THROW(sampler_oracle_check(empty, 10, rng), DomainError);
  std::vector<double> zero{1.0, 0.0};
  EXPECT_THROW(sampler_oracle_check(zero, 10, rng), DomainError);
}

TEST(Grow, TwoVertices) {
  auto s = grow(make(2, 1, WeightFamily::gumbel_rv(1, 1)));
  EXPECT_EQ(s.in_degrees, (std::vector<std::int64_t>{1, 0}));
}

TEST(Grow, UniformDagInvariant) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = grow(make(3, 2, WeightFamily::constant(1.0), seed));
    EXPECT_EQ(degree_sum(s.in_degrees), 4);
    EXPECT_EQ(s.in_degrees[2], 0);
    EXPECT_EQ(s.in_degrees[0] + s.in_degrees[1], 4);
    EXPECT_GE(s.in_degrees[0], 2);
  }
}

TEST(Grow, SnapshotInvariants) {
  for (auto fam : {WeightFamily::constant(1.0), WeightFamily::frechet_pareto(1.5, 1.0), WeightFamily::gumbel_rav(2, 1),
                   WeightFamily::bounded_weibull(2.0)}) {
    for (int m : {1, 3}) {
      auto s = grow(make(5000, m, fam, 11));
      EXPECT_TRUE(degree_sum_holds(s));
      EXPECT_EQ(s.in_degrees.back(), 0);
      for (std::size_t i = 0; i < s.n(); ++i) {
        EXPECT_LE(s.in_degrees[i], static_cast<std::int64_t>(m) * static_cast<std::int64_t>(s.n() - 1 - i));
      }
      for (std::size_t j = 1; j < s.n(); ++j) {
        ASSERT_GT(s.partial_sums[j], s.partial_sums[j - 1]);
        ASSERT_GT(s.harmonic_sums[j], s.harmonic_sums[j - 1]);
      }
    }
  }
}

TEST(Grow, Deterministic) {
  auto a = grow(make(20000, 2, WeightFamily::gumbel_rv(0.5, 1), 77));
  auto b = grow(make(20000, 2, WeightFamily::gumbel_rv(0.5, 1), 77));
  EXPECT_EQ(a.in_degrees, b.in_degrees);
  EXPECT_EQ(0, std::memcmp(a.weights.data(), b.weights.data(), a.weights.size() * sizeof(double)));
  auto c = grow(make(20000, 2, WeightFamily::gumbel_rv(0.5, 1), 78));
  EXPECT_NE(a.in_degrees, c.in_degrees);
}

TEST(Grow, CheckpointsSeePrefixes) {
  const auto cfg = make(3000, 1, WeightFamily::constant(1.0), 5);
  std::vector<std::uint64_t> seen;
  std::vector<std::int64_t> at1000;
  grow(cfg, {1, 1000, 3000}, [&](std::uint64_t n, auto z, auto w, auto s) {
    seen.push_back(n);
    EXPECT_EQ(z.size(), n);
    EXPECT_EQ(w.size(), n);
    EXPECT_EQ(s.size(), n);
    EXPECT_EQ(degree_sum(z), static_cast<std::int64_t>(n - 1));
    if (n == 1000) at1000.assign(z.begin(), z.end());
  });
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{1, 1000, 3000}));
  EXPECT_EQ(at1000.back(), 0);
}

TEST(Grow, MeanDegreeOfRootMatchesHarmonicSum) {
  // constant weights make the conditional mean deterministic: sum_{j=1}^{n-1} 1/j
  const std::uint64_t n = 10000;
  const int reps = 1000;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    auto snap = grow(make(n, 1, WeightFamily::constant(1.0), derive_seed(123, r)));
    const double z = static_cast<double>(snap.in_degrees[0]);
    s += z;
    s2 += z * z;
  }
  const double mean = s / reps;
  const double sd = std::sqrt((s2 / reps - mean * mean) / reps);
  const double oracle = exact_harmonic(n - 1);
  EXPECT_NEAR(oracle, 9.7875060360443857, 1e-12);
  EXPECT_NEAR(mean, oracle, 3 * sd);
}

TEST(Grow, RecursiveTreeStartProbabilities) {
  const int reps = 100000;
  int two = 0;
  for (int r = 0; r < reps; ++r) {
    auto s = grow(make(3, 1, WeightFamily::constant(1.0), derive_seed(9, r)));
    EXPECT_EQ(s.in_degrees[0] >= 1, true);
    two += s.in_degrees[0] == 2;
  }
  EXPECT_NEAR(static_cast<double>(two) / reps, 0.5, 3 * std::sqrt(0.25 / reps));
}

TEST(Grow, RejectsInvalidConfig) {
  EXPECT_THROW(grow(make(0, 1, WeightFamily::constant(1.0))), DomainError);
  EXPECT_THROW(grow(make(10, 0, WeightFamily::constant(1.0))), DomainError);
  EXPECT_THROW(grow(make(10, 1, WeightFamily::constant(-1.0))), DomainError);
  auto c = make(10, 1, WeightFamily::constant(1.0));
  c.variant = Variant::RandomOutDegree;
  EXPECT_THROW(grow(c), DomainError);
}

TEST(GrowRandom, TwoVertices) {
  auto c = make(2, 1, WeightFamily::gumbel_rv(1, 1));
  c.variant = Variant::RandomOutDegree;
  EXPECT_EQ(grow_random_outdegree(c).in_degrees, (std::vector<std::int64_t>{1, 0}));
}

TEST(GrowRandom, ExpectedDegrees) {
  auto c3 = make(3, 1, WeightFamily::constant(1.0));
  c3.variant = Variant::RandomOutDegree;
  const int reps = 100000;
  double z1 = 0, z1sq = 0;
  for (int r = 0; r < reps; ++r) {
    c3.seed = derive_seed(3, r);
    const double z = static_cast<double>(grow_random_outdegree(c3).in_degrees[0]);
    z1 += z;
    z1sq += z * z;
  }
  const double m1 = z1 / reps;
  EXPECT_NEAR(m1, 1.5, 4 * std::sqrt((z1sq / reps - m1 * m1) / reps));

  auto c100 = make(100, 1, WeightFamily::constant(1.0));
  c100.variant = Variant::RandomOutDegree;
  const int reps100 = 4000;
  double t = 0, t2 = 0;
  for (int r = 0; r < reps100; ++r) {
    c100.seed = derive_seed(100, r);
    const double d = static_cast<double>(degree_sum(grow_random_outdegree(c100).in_degrees));
    t += d;
    t2 += d * d;
  }
  const double m100 = t / reps100;
  EXPECT_NEAR(m100, 99.0, 4 * std::sqrt((t2 / reps100 - m100 * m100) / reps100));
}

TEST(GrowRandom, CapIsEnforced) {
  auto c = make(2001, 1, WeightFamily::constant(1.0));
  c.variant = Variant::RandomOutDegree;
  c.random_cap = 2000;
  EXPECT_THROW(grow_random_outdegree(c), ResourceError);
  c.random_cap = 3000;
  EXPECT_NO_THROW(grow_random_outdegree(c));
  c.m = 2;
  EXPECT_THROW(grow_random_outdegree(c), DomainError);
}

TEST(CondMean, ConstantWeights) {
  auto s = weights_only(make(3, 1, WeightFamily::constant(1.0)));
  auto cm = cond_mean_degrees(s);
  EXPECT_DOUBLE_EQ(cm[0], 1.5);
  EXPECT_DOUBLE_EQ(cm[1], 0.5);
  EXPECT_EQ(cm[2], 0.0);
}

TEST(CondMean, HandSum) {
  std::vector<double> w{2, 1, 1};
  auto ps = detail::compensated_prefix(w);
  auto cm = cond_mean_degrees(w, ps, 1);
  EXPECT_NEAR(cm[0], 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(cm[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(cm[2], 0.0);
  auto cm2 = cond_mean_degrees(w, ps, 2);
  EXPECT_NEAR(cm2[0], 10.0 / 3.0, 1e-15);
}

TEST(CondMean, MatchesHarmonicDifferenceAndSumsToEdges) {
  auto s = weights_only(make(100000, 2, WeightFamily::gumbel_rv(1, 1), 3));
  auto cm = cond_mean_degrees(s);
  const double hn = s.harmonic_sums.back();
  for (std::size_t i : {0ul, 10ul, 5000ul, 99998ul}) {
    EXPECT_NEAR(cm[i], 2 * s.weights[i] * (hn - s.harmonic_sums[i]), 1e-9 * std::max(1.0, cm[i]));
  }
  EXPECT_EQ(cm.back(), 0.0);
  // sum_i W_i sum_{j>=i} 1/S_j = sum_j S_j/S_j = n-1
  const double total = std::accumulate(cm.begin(), cm.end(), 0.0);
  EXPECT_NEAR(total, 2.0 * (s.n() - 1), 1e-7 * s.n());
}

TEST(CondMean, EmpiricalAverageMatches) {
  const auto cfg = make(200, 1, WeightFamily::gumbel_rv(1, 1), 0);
  auto base = weights_only(cfg);
  const auto cm = cond_mean_degrees(base);
  // same weights, independent attachment streams: regrow with fixed weights
  const int reps = 20000;
  std::vector<double> acc(cfg.n, 0.0);
  RandomStream rng(42);
  for (int r = 0; r < reps; ++r) {
    WeightedSampler s;
    s.push_back(base.weights[0]);
    std::vector<int> z(cfg.n, 0);
    for (std::size_t j = 1; j < cfg.n; ++j) {
      ++z[s.sample(rng.uniform()) - 1];
      s.push_back(base.weights[j]);
    }
    for (std::size_t i = 0; i < cfg.n; ++i) acc[i] += z[i];
  }
  for (std::size_t i : {0ul, 1ul, 5ul, 50ul, 150ul}) {
    const double mean = acc[i] / reps;
    EXPECT_NEAR(mean, cm[i], 5 * std::sqrt(std::max(cm[i], 1e-3) / reps) + 1e-3) << i;
  }
}

TEST(MaxStats, Examples) {
  auto a = max_degree_stats(std::vector<std::int64_t>{2, 0, 1});
  EXPECT_EQ(a.max, 2);
  EXPECT_EQ(a.index, 1u);
  auto b = max_degree_stats(std::vector<std::int64_t>{2, 2, 0});
  EXPECT_EQ(b.index, 1u);
  auto c = max_degree_stats(std::vector<std::int64_t>{0, 0, 5});
  EXPECT_EQ(c.max, 5);
  EXPECT_EQ(c.index, 3u);
  EXPECT_THROW(max_degree_stats(std::vector<double>{}), DomainError);
}

TEST(HarmonicResidual, SmallCase) {
  auto s = weights_only(make(3, 1, WeightFamily::constant(1.0)));
  EXPECT_NEAR(harmonic_residual(s), 1.5 - std::log(3.0), 1e-15);
  EXPECT_NEAR(harmonic_residual(s), 0.40138771133189, 1e-13);
  EXPECT_THROW(harmonic_residual(weights_only(make(1, 1, WeightFamily::constant(1.0)))), DomainError);
}

TEST(HarmonicResidual, EulerConstant) {
  auto s = weights_only(make(1000000, 1, WeightFamily::constant(1.0)));
  EXPECT_NEAR(harmonic_residual(s), 0.57721566490153286, 1e-5);
}

TEST(HarmonicResidual, StreamingEqualsBatch) {
  auto s = weights_only(make(1000000, 1, WeightFamily::constant(2.0)));
  double batch = 0.0;
  for (std::uint64_t j = 999999; j >= 1; --j) batch += 1.0 / (2.0 * static_cast<double>(j));
  batch -= std::log(1e6);
  EXPECT_NEAR(harmonic_residual(s), batch, 1e-12);
  // and grown snapshots carry the same sums as weight-only ones
  auto g = grow(make(1000, 1, WeightFamily::gumbel_rv(1, 1), 4));
  auto w = weights_only(make(1000, 1, WeightFamily::gumbel_rv(1, 1), 4));
  EXPECT_EQ(g.weights, w.weights);
  EXPECT_EQ(g.partial_sums, w.partial_sums);
  EXPECT_EQ(harmonic_residual(g), harmonic_residual(w));
}

TEST(HarmonicResidual, CauchyIncrementSmall) {
  for (auto fam : {WeightFamily::constant(1.0), WeightFamily::gumbel_rv(1, 1, 1, 0, true),
                   WeightFamily::frechet_unit_mean(3), WeightFamily::bounded_weibull(2, true),
                   WeightFamily::gumbel_rav(2, 1, 1, 0, true)}) {
    auto s = weights_only(make(2000000, 1, fam, 6));
    const double y2n = harmonic_residual(s);
    const double yn = s.harmonic_sums[999999] - std::log(1e6);
    EXPECT_LT(std::abs(y2n - yn), 1e-2) << describe(fam);
  }
}

TEST(Snapshot, RoundTrip) {
  auto cfg = make(500, 2, WeightFamily::gumbel_rv(0.5, 1.3, 1, 0, true), 991);
  auto s = grow(cfg);
  auto dir = std::filesystem::temp_directory_path() / "wrg_snapshot_test";
  auto paths = write_snapshot(s, dir, "snap");
  auto back = read_snapshot(paths);
  EXPECT_EQ(back.in_degrees, s.in_degrees);
  EXPECT_EQ(back.seed(), s.seed());
  EXPECT_EQ(back.m(), 2);
  EXPECT_EQ(0, std::memcmp(back.weights.data(), s.weights.data(), s.weights.size() * sizeof(double)));
  EXPECT_EQ(back.partial_sums, s.partial_sums);
  // the stored configuration regrows the identical graph
  EXPECT_EQ(grow(back.config).in_degrees, s.in_degrees);
  std::filesystem::remove_all(dir);
}
