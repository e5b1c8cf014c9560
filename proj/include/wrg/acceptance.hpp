#pragma once

// The primary acceptance suite: twelve reproducible checks of the degree law,
// the maximum-degree limits, the point-process objects and the samplers.
// Numeric bands are desk-scale calibrations, not rates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "experiments.hpp"
#include "limit_theory.hpp"
#include "ppp_limits.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stats.hpp"
#include "weightdist.hpp"
#include "wrg_core.hpp"

namespace wrg::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::ostream* progress = nullptr;  // one line per finished criterion when set
};

/// Criteria whose bands lie outside what is reachable at simulation scale,
/// with the measured reason. A failure of one of these is reported as such.
inline std::optional<std::string> documented_gap(int id) {
  switch (id) {
    case 3:
      return "max degree is an integer, so the median of max Z / ln n moves on a lattice of step 1/ln n; when the "
             "1e6 median hits 20/ln(1e6) = 1.448 (0.005 from 1/ln 2), no 1e7 median (23, 23.5 or 24 over "
             "ln(1e7)) is closer than 0.015, and strict approach cannot hold";
    case 11:
      return "both statistics converge at rate 1/log log n. RV(tau=1): the median over 400 replicas is 0.85 at "
             "1e4 and 0.88 at 1e6, and over 100 replicas it is 0.73 at 1e7, on the 0.7 band edge, while a "
             "20-replica median varies by +-0.25 across seeds. RaV(tau=2): the exact finite-n median of the "
             "idealized conditional maximum is 0.92 at n=1e7 and 0.58 at n=1e100, target 0.25";
    case 12:
      return "the exponent min(2-alpha,alpha-1)/alpha only bounds the decay of 1-P(E_n); the decay rate is "
             "2-alpha = 1/2 at alpha=1.5, and fits over 1e4..1e6 range from 0.41 to 0.55 across seeds";
    default: return std::nullopt;
  }
}

namespace detail {

struct Audit {
  std::uint64_t growth_runs = 0;
  std::uint64_t degree_sum_failures = 0;
  void add(const ExperimentReport& r) {
    growth_runs += r.growth_runs;
    degree_sum_failures += r.degree_sum_failures;
  }
};

inline std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

inline ExperimentPlan plan(ExperimentKind kind, const WeightFamily& f, std::vector<std::uint64_t> ladder, int replicas,
                           const Options& o, std::uint64_t salt, bool conditional_only = false, int m = 1) {
  ExperimentPlan p;
  p.kind = kind;
  p.config.family = f;
  p.config.m = m;
  p.ladder = std::move(ladder);
  p.config.n = p.ladder.back();
  p.replicas = replicas;
  p.base_seed = derive_seed(o.seed, salt);
  p.conditional_only = conditional_only;
  p.threads = o.threads;
  return p;
}

inline bool in_band(double x, double lo, double hi) { return x >= lo && x <= hi; }

/// |x_k - target| decreasing along the ladder.
inline bool approaches(const std::vector<double>& x, double target) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(std::abs(x[i] - target) < std::abs(x[i - 1] - target))) return false;
  }
  return true;
}

inline std::string join(const std::vector<double>& x) {
  std::string s;
  for (double v : x) s += (s.empty() ? "" : ", ") + fmt(v);
  return "[" + s + "]";
}

inline const WeightFamily& rv1() {
  static const WeightFamily f = WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true);
  return f;
}

}  // namespace detail

inline CriterionResult criterion_degree_law(const Options& o, detail::Audit& audit) {
  CriterionResult r{1, "RRT degree law: TV(p_n, 2^-(k+1)), k <= 30"};
  const std::uint64_t n = 100000;
  auto p = detail::plan(ExperimentKind::DegreeDist, WeightFamily::constant(), {n}, 50, o, 1);
  p.kmax = 30;
  const auto rep = run_degree_dist(p);
  audit.add(rep);
  std::vector<double> emp = rep.extra["degree_law"][0]["empirical_pk"].get<std::vector<double>>();
  std::vector<double> geo(emp.size());
  for (std::size_t k = 0; k < geo.size(); ++k) geo[k] = std::ldexp(1.0, -static_cast<int>(k + 1));
  const double tv = stats::tv_distance(emp, geo);
  r.pass = tv < 0.01 && rep.wall_seconds < 30.0;
  r.detail = "TV=" + detail::fmt(tv) + " (< 0.01), growth " + detail::fmt(rep.wall_seconds, 3) + " s (< 30 s)";
  return r;
}

inline CriterionResult criterion_pk_oracle(const Options& o) {
  CriterionResult r{2, "p(k) quadrature vs weight Monte Carlo; p(0) closed form"};
  const WeightFamily f = WeightFamily::frechet_unit_mean(3.0);
  const WeightLaw law(f);
  const std::size_t N = 1000000;
  RandomStream rng(derive_seed(o.seed, 2));
  std::vector<double> w(N);
  for (auto& x : w) x = law.sample(rng);
  double worst = 0.0;
  std::string where;
  for (int m : {1, 2}) {
    const double mb = law.mean() / m;
    for (std::uint64_t k : {0, 1, 5, 20}) {
      double s = 0.0;
      for (double x : w) s += wrg::detail::pk_integrand(mb, k, x);
      const double mc = s / N;
      const double quad = pk_limit({f, m, k});
      const double sigma = std::sqrt(std::max(quad * (1.0 - quad), 1e-300) / N);
      const double z = std::abs(mc - quad) / sigma;
      if (z > worst) {
        worst = z;
        where = "m=" + std::to_string(m) + ",k=" + std::to_string(k);
      }
    }
  }
  const double p0 = pk_limit({f, 1, 0});
  const double exact = 0.5 * std::log(3.0);
  const double err = std::abs(p0 - exact);
  r.pass = worst < 4.0 && err < 1e-9;
  r.detail = "max |MC - quad| = " + detail::fmt(worst, 3) + " sigma at " + where + " (< 4); |p(0) - ln(3)/2| = " +
             detail::fmt(err, 3) + " (< 1e-9)";
  return r;
}

inline CriterionResult criterion_bounded_max(const Options& o, detail::Audit& audit) {
  CriterionResult r{3, "Bounded max degree: median max Z / ln n -> 1/ln 2"};
  const std::vector<std::uint64_t> ladder = {10000, 100000, 1000000, 10000000};
  const auto rep = run_max_first_order(
      detail::plan(ExperimentKind::MaxDegreeFirstOrder, WeightFamily::constant(), ladder, 20, o, 3));
  audit.add(rep);
  std::vector<double> med;
  for (auto n : ladder) {
    std::vector<double> x = rep.column("max_degree", n);
    for (auto& v : x) v /= std::log(static_cast<double>(n));
    med.push_back(stats::median(x));
  }
  const double target = 1.0 / std::numbers::ln2;
  const bool mono = detail::approaches(med, target);
  const bool band = detail::in_band(med.back(), 1.2, 1.7);
  r.pass = mono && band && rep.wall_seconds < 300.0;
  r.detail = "medians " + detail::join(med) + (mono ? " approach " : " do not approach ") + detail::fmt(target) +
             "; final in [1.2,1.7]: " + (band ? "yes" : "no") + "; " + detail::fmt(rep.wall_seconds, 3) +
             " s (< 300 s)";
  return r;
}

inline CriterionResult criterion_rv_first_order(const Options& o) {
  CriterionResult r{4, "Gumbel RV first order via conditional means"};
  const std::uint64_t n = 1000000;
  const auto rep = run_max_first_order(
      detail::plan(ExperimentKind::MaxDegreeFirstOrder, detail::rv1(), {n}, 50, o, 4, true));
  const double ratio = rep.median("cond_max_ratio", n);
  const double loc = rep.median("cond_location_exponent", n);
  r.pass = detail::in_band(ratio, 0.7, 1.3) && detail::in_band(loc, 0.4, 0.6);
  r.detail = "median ratio " + detail::fmt(ratio) + " in [0.7,1.3]; median log I/log n " + detail::fmt(loc) +
             " in [0.4,0.6]";
  return r;
}

inline CriterionResult criterion_window(const Options& o) {
  CriterionResult r{5, "Gumbel window limit, tau=1/2, s=1, t=e"};
  const std::uint64_t n = 1000000;
  auto p = detail::plan(ExperimentKind::WindowGumbel, WeightFamily::gumbel_rv(0.5, 1.0, 1.0, 0.0, true), {n}, 500, o,
                        5, true);
  p.window = WindowSpec{};
  const auto rep = run_window_gumbel(p);
  const double ks = rep.statistic("cond_window_stat", n).value;
  const double ks_loc = rep.statistic("cond_window_location", n).value;
  r.pass = ks < 0.08;
  r.detail = "KS to Gumbel(loc 0) = " + detail::fmt(ks) + " (< 0.08); location KS to e^U = " + detail::fmt(ks_loc);
  return r;
}

inline CriterionResult criterion_frechet(const Options& o, detail::Audit& audit) {
  CriterionResult r{6, "Frechet limit law, alpha=3"};
  const std::uint64_t n = 100000;
  const auto rep = run_frechet_limit(
      detail::plan(ExperimentKind::FrechetLimit, WeightFamily::frechet_unit_mean(3.0), {n}, 500, o, 6));
  audit.add(rep);
  const double med = rep.median("max_ratio", n);
  const double target = frechet_max_quantile(3.0, 1, 0.5);
  const double rel = std::abs(med - target) / target;
  const double ks = rep.statistic("max_ratio", n).value;
  const double ks_loc = rep.statistic("location_fraction", n).value;
  r.pass = rel < 0.25 && ks < 0.15 && ks_loc < 0.1;
  r.detail = "median " + detail::fmt(med) + " vs " + detail::fmt(target) + " (rel " + detail::fmt(rel, 3) +
             " < 0.25); KS " + detail::fmt(ks) + " (< 0.15); location KS " + detail::fmt(ks_loc) + " (< 0.1)";
  return r;
}

inline CriterionResult criterion_ppp(const Options& o) {
  CriterionResult r{7, "PPP window maximum: truncated sampler vs inversion; ratio invariance"};
  const int draws = 100000;
  RandomStream a(derive_seed(o.seed, 71)), b(derive_seed(o.seed, 72)), c(derive_seed(o.seed, 73)),
      d(derive_seed(o.seed, 74));
  const double e = std::exp(1.0);
  std::vector<double> inv(draws), ppp(draws), x(draws), y(draws);
  for (auto& v : inv) v = gumbel_window_max_sample(1.0, e, a);
  for (auto& v : ppp) v = gumbel_window_max_sample_ppp(1.0, e, b);
  for (auto& v : x) v = gumbel_window_max_sample_ppp(1.0, 2.0, c);
  for (auto& v : y) v = gumbel_window_max_sample_ppp(10.0, 20.0, d);
  const double ks1 = stats::ks_two_sample(inv, ppp);
  const double ks2 = stats::ks_two_sample(x, y);
  r.pass = ks1 < 0.01 && ks2 < 0.01;
  r.detail = "KS(ppp, inversion) = " + detail::fmt(ks1) + ", KS((1,2), (10,20)) = " + detail::fmt(ks2) + " (< 0.01)";
  return r;
}

inline CriterionResult criterion_z(const Options& o) {
  CriterionResult r{8, "Z functional: two-point example; truncation sensitivity"};
  const std::vector<PppPoint> two = {{0.25, 2.0}, {0.5, 1.0}};
  const double z = z_functional(two, 1);
  const double err = std::abs(z - 7.0 / 12.0);
  const int draws = 10000;
  RandomStream a(derive_seed(o.seed, 81)), b(derive_seed(o.seed, 82));
  std::vector<double> coarse(draws), fine(draws);
  for (auto& v : coarse) v = z_sampler(1.5, 1, 1e-2, a).z;
  for (auto& v : fine) v = z_sampler(1.5, 1, 1e-3, b).z;
  const double mc = stats::median(coarse), mf = stats::median(fine);
  const double shift = std::abs(mc - mf) / mf;
  r.pass = err < 1e-12 && shift < 0.05;
  r.detail = "Z = " + detail::fmt(z, 12) + " (7/12 to " + detail::fmt(err, 2) + "); medians " + detail::fmt(mc) +
             " / " + detail::fmt(mf) + ", shift " + detail::fmt(100.0 * shift, 3) + "% (< 5%)";
  return r;
}

inline CriterionResult criterion_sampler(const Options& o, detail::Audit audit) {
  CriterionResult r{9, "Fenwick vs linear scan; degree-sum invariant on all growth runs"};
  RandomStream rng(derive_seed(o.seed, 9));
  std::vector<double> w(1000000);
  for (auto& x : w) x = rng.uniform(0.01, 10.0);
  const auto chk = sampler_oracle_check(w, 1000000, rng);
  // Own runs, so the invariant is exercised when the suite runs a subset.
  const std::vector<WrgConfig> own = {
      {100000, 3, detail::rv1(), Variant::FixedOutDegree, derive_seed(o.seed, 91)},
      {100000, 1, WeightFamily::frechet_pareto(1.5, 1.0), Variant::FixedOutDegree, derive_seed(o.seed, 92)},
      {20000, 1, WeightFamily::constant(), Variant::RandomOutDegree, derive_seed(o.seed, 93)},
  };
  for (const auto& cfg : own) {
    ++audit.growth_runs;
    if (!degree_sum_holds(grow_any(cfg))) ++audit.degree_sum_failures;
  }
  r.pass = chk.identical && audit.degree_sum_failures == 0 && audit.growth_runs > 0;
  r.detail = "sampler " + chk.message() + "; degree sums: " + std::to_string(audit.degree_sum_failures) +
             " failures over " + std::to_string(audit.growth_runs) + " growth runs";
  return r;
}

inline CriterionResult criterion_concentration(const Options& o, detail::Audit& audit) {
  CriterionResult r{10, "Concentration: max |Z - E_W Z| / (b_n log n), RV tau=1"};
  const std::vector<std::uint64_t> ladder = {10000, 100000, 1000000};
  const auto rep =
      run_concentration(detail::plan(ExperimentKind::Concentration, detail::rv1(), ladder, 20, o, 10));
  audit.add(rep);
  std::vector<double> med;
  for (auto n : ladder) med.push_back(rep.median("concentration", n));
  bool dec = true;
  for (std::size_t i = 1; i < med.size(); ++i) dec = dec && med[i] < med[i - 1];
  r.pass = dec && med.back() < 0.2;
  r.detail = "medians " + detail::join(med) + (dec ? " strictly decreasing" : " not decreasing") + ", final < 0.2: " +
             (med.back() < 0.2 ? "yes" : "no");
  return r;
}

inline CriterionResult criterion_second_order(const Options& o) {
  CriterionResult r{11, "Second-order constants (conditional means): RV tau=1 -> 1/2, RaV tau=2 -> 1/4"};
  const std::vector<std::uint64_t> ladder = {10000, 100000, 1000000, 10000000};
  struct Case {
    WeightFamily f;
    double lo, hi;
    const char* name;
  };
  const std::vector<Case> cases = {{detail::rv1(), 0.3, 0.7, "RV"},
                                   {WeightFamily::gumbel_rav(2.0, 1.0, 1.0, 0.0, true), 0.1, 0.4, "RaV"}};
  bool all = true;
  std::uint64_t salt = 110;
  for (const auto& c : cases) {
    const auto rep =
        run_second_order(detail::plan(ExperimentKind::MaxDegreeSecondOrder, c.f, ladder, 20, o, salt++, true));
    const double target = rep.theory["target"].get<double>();
    std::vector<double> med;
    for (auto n : ladder) med.push_back(rep.median("cond_statistic", n));
    const bool band = detail::in_band(med.back(), c.lo, c.hi);
    const bool toward = std::abs(med.back() - target) < std::abs(med.front() - target);
    all = all && band && toward;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += std::string(c.name) + " medians " + detail::join(med) + ", final in [" + detail::fmt(c.lo) + "," +
                detail::fmt(c.hi) + "]: " + (band ? "yes" : "no") + ", moves toward " + detail::fmt(target) + ": " +
                (toward ? "yes" : "no");
  }
  r.pass = all;
  return r;
}

inline CriterionResult criterion_zero_degree(const Options& o, detail::Audit& audit) {
  CriterionResult r{12, "Zero in-degree fraction, alpha=1.5: fitted exponent of 1-P(E_n)"};
  const std::vector<std::uint64_t> ladder = {10000, 100000, 1000000};
  const auto rep = run_zero_degree_fraction(
      detail::plan(ExperimentKind::ZeroDegreeFraction, WeightFamily::frechet_pareto(1.5, 1.0), ladder, 10, o, 12));
  audit.add(rep);
  const double exponent = rep.extra["fit"]["exponent"].get<double>();
  const double target = zero_degree_exponent(1.5);
  r.pass = std::abs(exponent - target) <= 0.15;
  std::vector<double> frac;
  for (auto n : ladder) frac.push_back(1.0 - rep.summary("zero_fraction", n).mean);
  r.detail = "1-P(E_n) " + detail::join(frac) + ", fitted exponent " + detail::fmt(exponent) + " vs " +
             detail::fmt(target) + " +- 0.15";
  return r;
}

inline std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << r.id << "] " << r.title << " | " << r.detail << " | "
     << std::fixed << std::setprecision(1) << r.seconds << " s";
  if (!r.pass) {
    if (auto gap = documented_gap(r.id)) os << " | documented gap: " << *gap;
  }
  return os.str();
}

/// Runs the criteria in `only` (all twelve when empty) and returns them in id
/// order. Criterion 9 audits the degree sums of every growth run made by the
/// others, so it runs last.
inline std::vector<CriterionResult> run_primary_suite(const Options& o, const std::vector<int>& only = {}) {
  detail::Audit audit;
  std::vector<CriterionResult> out;
  auto timed = [&](int id, const std::function<CriterionResult()>& fn) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{id, "criterion " + std::to_string(id)};
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.progress) *o.progress << format_line(r) << std::endl;
    out.push_back(r);
  };
  timed(1, [&] { return criterion_degree_law(o, audit); });
  timed(2, [&] { return criterion_pk_oracle(o); });
  timed(3, [&] { return criterion_bounded_max(o, audit); });
  timed(4, [&] { return criterion_rv_first_order(o); });
  timed(5, [&] { return criterion_window(o); });
  timed(6, [&] { return criterion_frechet(o, audit); });
  timed(7, [&] { return criterion_ppp(o); });
  timed(8, [&] { return criterion_z(o); });
  timed(10, [&] { return criterion_concentration(o, audit); });
  timed(11, [&] { return criterion_second_order(o); });
  timed(12, [&] { return criterion_zero_degree(o, audit); });
  timed(9, [&] { return criterion_sampler(o, audit); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

inline bool all_pass(const std::vector<CriterionResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.pass; });
}

/// True when every failure is a documented gap.
inline bool only_documented_failures(const std::vector<CriterionResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.pass || documented_gap(r.id).has_value(); });
}

}  // namespace wrg::acceptance
