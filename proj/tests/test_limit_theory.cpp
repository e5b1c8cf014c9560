#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "wrg/limit_theory.hpp"
#include "wrg/rng.hpp"

using namespace wrg;

namespace {

double pk(const WeightFamily& f, int m, std::uint64_t k) { return pk_limit({f, m, k}); }

// Atom(q0, s) reference: point mass at 1 plus the uniform part via the series
// int_0^T t^k/(1-t) dt = sum_j T^(k+j+1)/(k+j+1).
double atom_reference(double q0, double s, int m, std::uint64_t k) {
  const double mu = q0 + (1.0 - q0) * s / 2.0;
  const double mb = mu / m;
  double point = q0 * (mb / (mb + 1.0)) * std::pow(1.0 / (mb + 1.0), static_cast<double>(k));
  const double T = s / (mb + s);
  double series = 0.0;
  for (std::uint64_t j = 0; j < 5000; ++j) {
    const double e = static_cast<double>(k + j + 1);
    const double term = std::pow(T, e) / e;
    series += term;
    if (term < 1e-30) break;
  }
  return point + (1.0 - q0) / s * mb * series;
}

}  // namespace

TEST(PkLimit, ConstantIsGeometric) {
  const auto f = WeightFamily::constant(1.0);
  EXPECT_NEAR(pk(f, 1, 2), 0.125, 1e-14);
  for (std::uint64_t k = 0; k < 40; ++k) EXPECT_NEAR(pk(f, 1, k), std::ldexp(1.0, -static_cast<int>(k) - 1), 1e-15);
  // m = 2: mb = 1/2, p(k) = (1/3)(2/3)^k
  for (std::uint64_t k = 0; k < 20; ++k) {
    EXPECT_NEAR(pk(f, 2, k), std::pow(2.0 / 3.0, static_cast<double>(k)) / 3.0, 1e-14);
  }
}

TEST(PkLimit, ConstantNormalization) {
  const auto f = WeightFamily::constant(1.0);
  double s = 0.0;
  for (std::uint64_t k = 0; k <= 200; ++k) s += pk(f, 1, k);
  EXPECT_GT(s, 0.999);
  EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(PkLimit, ParetoZeroDegree) {
  const auto f = WeightFamily::frechet_pareto(3.0, 0.5);
  ASSERT_NEAR(WeightLaw(f).mean(), 1.0, 1e-13);
  const double expected = 0.5 * std::log(3.0);
  EXPECT_NEAR(pk(f, 1, 0), expected, 1e-9);
  EXPECT_NEAR(gamma_k_mass({f, 1, 0}, 0.5, kInf), expected, 1e-9);
}

TEST(PkLimit, ParetoMatchesIncompleteBetaClosedForm) {
  struct Case {
    double alpha, x_min;
    int m;
  };
  for (const Case& c : {Case{3.0, 0.5, 1}, Case{2.5, 1.0, 1}, Case{4.0, 2.0, 3}, Case{3.0, 0.5, 2}}) {
    const auto f = WeightFamily::frechet_pareto(c.alpha, c.x_min);
    const double mb = WeightLaw(f).mean() / c.m;
    for (std::uint64_t k : {5u, 20u, 100u, 1000u, 10000u}) {
      const double exact = pk_pareto_closed_form(c.alpha, c.x_min / mb, k);
      const double q = pk(f, c.m, k);
      EXPECT_NEAR(q / exact, 1.0, 1e-9) << "alpha=" << c.alpha << " m=" << c.m << " k=" << k;
    }
  }
}

TEST(PkLimit, AtomMatchesSeries) {
  for (int m : {1, 3}) {
    for (std::uint64_t k : {0u, 1u, 5u, 50u, 200u}) {
      const double ref = atom_reference(0.5, 0.5, m, k);
      EXPECT_NEAR(pk(WeightFamily::atom(0.5, 0.5), m, k) / ref, 1.0, 1e-9) << "m=" << m << " k=" << k;
    }
  }
}

TEST(PkLimit, ScaleInvariant) {
  const auto raw = WeightFamily::gumbel_rv(1.5, 2.0);
  auto norm = raw;
  norm.normalize_mean = true;
  for (std::uint64_t k : {0u, 3u, 30u}) EXPECT_NEAR(pk(raw, 2, k) / pk(norm, 2, k), 1.0, 1e-9);
}

TEST(PkLimit, SumsToOneForLightTails) {
  for (const auto& f : {WeightFamily::atom(0.5, 0.5), WeightFamily::bounded_weibull(3.0),
                        WeightFamily::bounded_gumbel_rv(1.0, 1.0)}) {
    double s = 0.0;
    for (std::uint64_t k = 0; k <= 400; ++k) s += pk(f, 1, k);
    EXPECT_NEAR(s, 1.0, 1e-8) << describe(f);
  }
}

TEST(PkLimit, MeanDegreeIsM) {
  // sum_k k p(k) = m for finite-mean weights (each arrival brings m edges)
  const auto f = WeightFamily::atom(0.5, 0.5);
  for (int m : {1, 2}) {
    double s = 0.0;
    for (std::uint64_t k = 1; k <= 600; ++k) s += static_cast<double>(k) * pk(f, m, k);
    EXPECT_NEAR(s, m, 1e-8);
  }
}

TEST(PkLimit, StrictlyDecreasingBeyondMode) {
  for (const auto& f : {WeightFamily::constant(1.0), WeightFamily::atom(0.5, 0.5), WeightFamily::bounded_weibull(2.5),
                        WeightFamily::frechet_unit_mean(3.0), WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true),
                        WeightFamily::gumbel_rav(2.0, 1.0, 1.0, 0.0, true)}) {
    for (int m : {1, 2}) {
      const double mu = WeightLaw(f).mean();
      const auto start = static_cast<std::uint64_t>(std::floor(m / mu)) + 1;
      double prev = pk(f, m, start);
      for (std::uint64_t k = start + 1; k <= 300; ++k) {
        const double cur = pk(f, m, k);
        ASSERT_LT(cur, prev) << describe(f) << " m=" << m << " k=" << k;
        prev = cur;
      }
    }
  }
}

TEST(PkLimit, AgreesWithMonteCarlo) {
  const std::size_t draws = 1000000;
  for (const auto& f : {WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true), WeightFamily::frechet_unit_mean(3.0),
                        WeightFamily::atom(0.5, 0.5)}) {
    const WeightLaw law(f);
    const double mb = law.mean();
    RandomStream rng(derive_seed(77, 1));
    std::vector<double> w(draws);
    for (auto& x : w) x = law.sample(rng);
    for (std::uint64_t k : {0u, 3u, 10u}) {
      double s = 0.0, s2 = 0.0;
      for (double x : w) {
        const double v = (mb / (mb + x)) * std::pow(x / (mb + x), static_cast<double>(k));
        s += v;
        s2 += v * v;
      }
      const double mean = s / draws;
      const double sd = std::sqrt((s2 / draws - mean * mean) / draws);
      EXPECT_LE(std::abs(pk(f, 1, k) - mean), 4.0 * sd) << describe(f) << " k=" << k;
    }
  }
}

TEST(GammaK, ExamplesAndEmptyInterval) {
  const auto c = WeightFamily::constant(1.0);
  EXPECT_NEAR(gamma_k_mass({c, 1, 0}, 0.5, 1.5), 0.5, 1e-15);
  EXPECT_EQ(gamma_k_mass({c, 1, 0}, 1.5, 2.5), 0.0);
  EXPECT_EQ(gamma_k_mass({c, 1, 4}, 0.7, 0.7), 0.0);
  EXPECT_EQ(gamma_k_mass({WeightFamily::frechet_unit_mean(3.0), 1, 2}, 2.0, 2.0), 0.0);
}

TEST(GammaK, PartitionSumsReproduceWeightLaw) {
  struct Case {
    WeightFamily f;
    std::vector<double> cuts;
  };
  const std::vector<Case> cases = {
      {WeightFamily::atom(0.5, 0.5), {0.0, 0.1, 0.25, 0.5, 0.9, 1.0}},
      {WeightFamily::frechet_pareto(3.0, 0.5), {0.5, 0.6, 1.0, 1.5, 2.0}},
      {WeightFamily::gumbel_rv(1.0, 1.0), {0.0, 0.2, 0.7, 1.0, 2.0}},
  };
  const std::uint64_t K = 300;
  for (const auto& c : cases) {
    const WeightLaw law(c.f);
    for (std::size_t j = 0; j + 1 < c.cuts.size(); ++j) {
      const double lo = c.cuts[j], hi = c.cuts[j + 1];
      double mass = 0.0, first_moment = 0.0;
      for (std::uint64_t k = 0; k <= K; ++k) {
        const double g = gamma_k_mass({c.f, 1, k}, lo, hi);
        mass += g;
        first_moment += static_cast<double>(k) * g;
      }
      const double exact_mass = law.expect([](double) { return 1.0; }, lo, hi);
      EXPECT_NEAR(mass, exact_mass, 1e-9) << describe(c.f) << " (" << lo << "," << hi << "]";
      EXPECT_NEAR(first_moment, gamma_mass(c.f, 1, lo, hi), 1e-9) << describe(c.f);
    }
  }
}

TEST(GammaK, PartitionMatchesSurvivalDifferences) {
  const auto f = WeightFamily::gumbel_rv(1.0, 1.0);
  const WeightLaw law(f);
  // exponential weights: P(lo < W <= hi) = e^-lo - e^-hi
  const double lo = 0.3, hi = 1.7;
  double mass = 0.0;
  for (std::uint64_t k = 0; k <= 400; ++k) mass += gamma_k_mass({f, 1, k}, lo, hi);
  EXPECT_NEAR(mass, std::exp(-lo) - std::exp(-hi), 1e-9);
  EXPECT_NEAR(law.tail_prob(lo) - law.tail_prob(hi), std::exp(-lo) - std::exp(-hi), 1e-12);
}

TEST(PkLimit, InfiniteMeanIsDomainError) {
  const auto f = WeightFamily::frechet_pareto(1.5, 1.0);
  EXPECT_THROW(pk(f, 1, 3), DomainError);
  EXPECT_THROW(gamma_k_mass({f, 1, 0}, 1.0, 2.0), DomainError);
  EXPECT_THROW(theta_m(f, 1), DomainError);
  EXPECT_THROW(pk(WeightFamily::constant(1.0), 0, 1), DomainError);
}

TEST(Theta, Examples) {
  EXPECT_DOUBLE_EQ(theta_m(WeightFamily::constant(1.0), 1), 2.0);
  EXPECT_DOUBLE_EQ(theta_m(WeightFamily::constant(1.0), 2), 1.5);
  EXPECT_DOUBLE_EQ(theta_m(WeightFamily::constant(7.0), 1), 2.0);
  EXPECT_DOUBLE_EQ(gamma_exponent(1.0), 0.5);
  EXPECT_THROW(gamma_exponent(0.0), DomainError);
  // Atom(0.5, 0.5): E W = 0.625
  EXPECT_NEAR(theta_m(WeightFamily::atom(0.5, 0.5), 1), 1.625, 1e-14);
}

TEST(PkAsymptotic, AtomBranch) {
  const auto r = pk_asymptotic({WeightFamily::constant(1.0), 1, 10});
  EXPECT_EQ(r.form, PkForm::Atom);
  EXPECT_TRUE(r.point);
  EXPECT_NEAR(r.lower, std::ldexp(1.0, -11), 1e-18);
  EXPECT_EQ(r.lower, r.upper);
  EXPECT_NEAR(r.lower / pk(WeightFamily::constant(1.0), 1, 10), 1.0, 1e-12);
}

TEST(PkAsymptotic, AtomRatioTendsToOne) {
  const auto f = WeightFamily::atom(0.5, 0.5);
  const double ratio = pk_asymptotic({f, 1, 200}).lower / pk(f, 1, 200);
  EXPECT_GE(ratio, 0.99);
  EXPECT_LE(ratio, 1.01);
}

TEST(PkAsymptotic, GumbelRVExponent) {
  const auto f = WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0);
  const auto r = pk_asymptotic({f, 1, 100});
  EXPECT_EQ(r.form, PkForm::GumbelRV);
  EXPECT_NEAR(std::log(r.lower), -20.0, 1e-12);
  // same value after mean normalization and for the equivalent (k, m) pair
  EXPECT_NEAR(std::log(pk_asymptotic({WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true), 1, 100}).lower), -20.0,
              1e-9);
  EXPECT_NEAR(std::log(pk_asymptotic({f, 2, 200}).lower), -20.0, 1e-12);
}

// |log p(k) / log form(k) - 1| along an increasing k ladder, after removing
// the geometric factor theta^-k (zero for unbounded laws).
std::vector<double> log_gaps(const WeightFamily& f, const std::vector<std::uint64_t>& ks, double log_theta = 0.0) {
  std::vector<double> gaps;
  for (std::uint64_t k : ks) {
    const double geo = static_cast<double>(k) * log_theta;
    const double num = std::log(pk(f, 1, k)) + geo;
    const double den = std::log(pk_asymptotic({f, 1, k}).lower) + geo;
    gaps.push_back(std::abs(num / den - 1.0));
  }
  return gaps;
}

TEST(PkAsymptotic, GumbelRVLogRatioApproachesOne) {
  const auto g = log_gaps(WeightFamily::gumbel_rv(1.0, 1.0), {1000, 10000, 100000});
  EXPECT_GT(g[0], g[1]);
  EXPECT_GT(g[1], g[2]);
  EXPECT_LT(g[2], 0.005);
}

TEST(PkAsymptotic, GumbelRaVLogRatioApproachesOne) {
  const auto g = log_gaps(WeightFamily::gumbel_rav(2.0, 1.0), {1000, 100000, 1000000});
  EXPECT_GT(g[0], g[1]);
  EXPECT_GT(g[1], g[2]);
  EXPECT_LT(g[2], 0.035);
}

TEST(PkAsymptotic, BoundedGumbelRVLogRatio) {
  const auto f = WeightFamily::bounded_gumbel_rv(1.0, 1.0);
  const auto g = log_gaps(f, {100, 300, 1000}, std::log(theta_m(f, 1)));
  EXPECT_GT(g[0], g[1]);
  EXPECT_GT(g[1], g[2]);
  EXPECT_LT(g[2], 0.03);
}

// min over s of eta k e^-s + (s/c1)^tau: the Laplace exponent of the
// sub-geometric part of p(k) when (1-W)^-1 = e^Y with Y Weibull(tau, c1).
double bounded_rav_laplace(double eta, double k, double tau, double c1) {
  auto h = [&](double s) { return eta * k * std::exp(-s) + std::pow(s / c1, tau); };
  double a = 0.0, b = 400.0;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 300; ++i) {
    const double x1 = b - r * (b - a), x2 = a + r * (b - a);
    if (h(x1) < h(x2)) b = x2; else a = x1;
  }
  return h(0.5 * (a + b));
}

TEST(PkAsymptotic, BoundedGumbelRaVMatchesLaplaceExponent) {
  const auto f = WeightFamily::bounded_gumbel_rav(2.0, 1.0);
  const double th = theta_m(f, 1);
  const double eta = 1.0 - 1.0 / th;
  const double K = 2.0 * std::log(std::exp(1.0) * eta / 2.0);
  auto expansion = [&](double k) {
    const double L = std::log(k);
    return L * L * (1.0 - 2.0 * std::log(L) / L + K / L);
  };
  // the returned value is the expansion times theta^-k
  for (std::uint64_t k : {100u, 1000u}) {
    const double kk = static_cast<double>(k);
    EXPECT_NEAR(std::log(pk_asymptotic({f, 1, k}).lower), -expansion(kk) - kk * std::log(th), 1e-9);
  }
  // the expansion converges in log k only; compare it with the exact optimum
  double prev = kInf;
  for (double k : {1e10, 1e20, 1e50}) {
    const double gap = std::abs(bounded_rav_laplace(eta, k, 2.0, 1.0) / expansion(k) - 1.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 0.005);
  // quadrature against the optimum where p(k) is still representable
  const double sub = std::log(pk(f, 1, 1000)) + 1000.0 * std::log(th);
  EXPECT_NEAR(sub / -bounded_rav_laplace(eta, 1000.0, 2.0, 1.0), 1.0, 0.05);
}

TEST(PkAsymptotic, BoundedWeibullEnvelope) {
  for (double alpha : {1.5, 2.5, 4.0}) {
    const auto f = WeightFamily::bounded_weibull(alpha);
    for (std::uint64_t k : {50u, 200u, 1000u, 5000u}) {
      const auto r = pk_asymptotic({f, 1, k});
      EXPECT_EQ(r.form, PkForm::BoundedWeibull);
      EXPECT_FALSE(r.point);
      const double p = pk(f, 1, k);
      EXPECT_LE(p, r.upper) << "alpha=" << alpha << " k=" << k;
      EXPECT_GE(p, r.lower) << "alpha=" << alpha << " k=" << k;
    }
  }
}

TEST(PkAsymptotic, FrechetEnvelope) {
  const auto f = WeightFamily::frechet_unit_mean(3.0);
  for (std::uint64_t k : {10u, 100u, 1000u}) {
    const auto a = pk_asymptotic({f, 1, k});
    const auto b = pk_asymptotic({f, 1, 2 * k});
    const double kk = static_cast<double>(k);
    // power part of the envelope drops by 2^3 when k doubles
    EXPECT_NEAR(a.upper / b.upper * std::pow(std::log(2 * kk) / std::log(kk), 3.0), 8.0, 1e-9);
    EXPECT_NEAR(a.lower / b.lower, 8.0, 1e-9);
    const double p = pk(f, 1, k);
    EXPECT_LE(p, a.upper);
    EXPECT_GE(p, a.lower);
  }
  const std::uint64_t big = 20000;
  EXPECT_NEAR(pk(f, 1, big) / pk_asymptotic({f, 1, big}).lower, 1.0, 1e-3);
}

TEST(PkAsymptotic, DomainErrors) {
  EXPECT_THROW(pk_asymptotic({WeightFamily::gumbel_sv(1.0, 1.0), 1, 50}), DomainError);
  EXPECT_THROW(pk_asymptotic({WeightFamily::frechet_pareto(1.5, 1.0), 1, 50}), DomainError);
  // bounded forms need k > m/E[W]
  EXPECT_THROW(pk_asymptotic({WeightFamily::constant(1.0), 3, 2}), DomainError);
}

TEST(MaxDegree, BoundedConstant) {
  const auto p = max_degree_prediction(WeightFamily::constant(1.0), 1, 1e6);
  EXPECT_NEAR(p.first_order, std::log(1e6) / std::log(2.0), 1e-12);
  EXPECT_NEAR(p.first_order, 19.93, 0.005);
  EXPECT_FALSE(p.second_order_addend);
  EXPECT_FALSE(p.scale_is_random);
}

TEST(MaxDegree, GumbelRVSecondOrder) {
  const double n = std::exp(100.0);
  const auto p = max_degree_prediction(WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0), 1, n);
  EXPECT_NEAR(p.first_order, 2500.0, 1e-9);
  ASSERT_TRUE(p.second_order_addend);
  EXPECT_NEAR(*p.second_order_addend, 0.25 * 100.0 * std::log(100.0), 1e-9);
  EXPECT_NEAR(*p.second_order_addend, 115.13, 0.005);
  // no second order above tau = 1
  EXPECT_FALSE(max_degree_prediction(WeightFamily::gumbel_rv(2.0, 1.0), 1, n).second_order_addend);
}

TEST(MaxDegree, GumbelRaV) {
  EXPECT_DOUBLE_EQ(rav_second_order_coefficient(4.0, 1.0), -18.0);
  EXPECT_DOUBLE_EQ(rav_second_order_coefficient(2.0, 1.0), 0.25);
  const auto f = WeightFamily::gumbel_rav(4.0, 1.0, 1.0, 0.0);
  const double n = std::exp(400.0);  // t_n n >= 2 needs log n > 256 at tau = 4
  const auto p = max_degree_prediction(f, 2, n);
  const auto s = norm_seqs(f, n, 2);
  const double tn = *s.t_n;
  const auto st = unit_mean_seqs(f, tn * n, 2);
  EXPECT_NEAR(p.first_order / (2.0 * *st.b_n * std::log(1.0 / tn)), 1.0, 1e-12);
  ASSERT_TRUE(p.second_order_addend);
  EXPECT_LT(*p.second_order_addend, 0.0);
  EXPECT_NEAR(*p.second_order_addend,
              -18.0 * 2.0 * *st.a_n * std::log(1.0 / tn) * std::pow(std::log(n), 1.0 - 3.0 / 4.0), 1e-9 * p.first_order);
}

TEST(MaxDegree, SlowlyVaryingAndFrechet) {
  const auto sv = WeightFamily::gumbel_sv(1.0, 1.0);
  const auto p = max_degree_prediction(sv, 1, 1e6);
  EXPECT_NEAR(p.first_order, *unit_mean_seqs(sv, 1e6).b_n * std::log(1e6), 1e-9);
  EXPECT_FALSE(p.second_order_addend);

  const auto fr = max_degree_prediction(WeightFamily::frechet_unit_mean(3.0), 1, 1e6);
  EXPECT_TRUE(fr.scale_is_random);
  EXPECT_NEAR(fr.first_order, 0.5 * 1e3, 1e-9);
  const auto inf = max_degree_prediction(WeightFamily::frechet_pareto(1.5, 1.0), 1, 1e6);
  EXPECT_EQ(inf.first_order, 1e6);
  EXPECT_THROW(max_degree_prediction(WeightFamily::frechet_pareto(2.0, 1.0), 1, 1e6), DomainError);
  EXPECT_THROW(max_degree_prediction(WeightFamily::constant(1.0), 1, 2), DomainError);
}

TEST(Location, Examples) {
  EXPECT_DOUBLE_EQ(location_prediction(WeightFamily::gumbel_rv(1.0, 1.0)).exponent, 0.5);
  EXPECT_DOUBLE_EQ(location_prediction(WeightFamily::gumbel_rav(2.0, 1.0)).exponent, 1.0);
  EXPECT_DOUBLE_EQ(location_prediction(WeightFamily::gumbel_sv(1.0, 1.0)).exponent, 0.0);
  const auto b = location_prediction(WeightFamily::constant(1.0), 1);
  EXPECT_TRUE(b.conjecture);
  EXPECT_EQ(b.tag, "CONJECTURE");
  EXPECT_NEAR(b.exponent, 1.0 - 1.0 / (2.0 * std::numbers::ln2), 1e-14);
  EXPECT_NEAR(b.exponent, 0.2787, 5e-5);
  const auto fr = location_prediction(WeightFamily::frechet_unit_mean(3.0));
  EXPECT_TRUE(fr.linear_in_n);
  EXPECT_DOUBLE_EQ(zero_degree_exponent(1.5), 1.0 / 3.0);
}
