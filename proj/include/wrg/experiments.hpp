#pragma once

// Replicated Monte Carlo experiments: growth runs at a ladder of sizes, the
// observables of each experiment kind, summaries, goodness-of-fit statistics
// against the limit laws, and JSON/CSV reports.
//
// Replica r grows from derive_seed(base_seed, r), so reports depend only on
// the plan. Every observable that depends on the degrees has a conditional
// mean counterpart (prefix cond_) computed from the weights alone.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "limit_theory.hpp"
#include "ppp_limits.hpp"
#include "stats.hpp"
#include "weightdist.hpp"
#include "wrg_core.hpp"

namespace wrg {

enum class ExperimentKind {
  DegreeDist,
  MaxDegreeFirstOrder,
  MaxDegreeSecondOrder,
  WindowGumbel,
  FrechetLimit,
  Concentration,
  ZeroDegreeFraction,
  LocationScaling
};

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::DegreeDist: return "degree_dist";
    case ExperimentKind::MaxDegreeFirstOrder: return "max_first_order";
    case ExperimentKind::MaxDegreeSecondOrder: return "max_second_order";
    case ExperimentKind::WindowGumbel: return "window_gumbel";
    case ExperimentKind::FrechetLimit: return "frechet_limit";
    case ExperimentKind::Concentration: return "concentration";
    case ExperimentKind::ZeroDegreeFraction: return "zero_degree_fraction";
    case ExperimentKind::LocationScaling: return "location_scaling";
  }
  return "unknown";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::DegreeDist, ExperimentKind::MaxDegreeFirstOrder, ExperimentKind::MaxDegreeSecondOrder,
                 ExperimentKind::WindowGumbel, ExperimentKind::FrechetLimit, ExperimentKind::Concentration,
                 ExperimentKind::ZeroDegreeFraction, ExperimentKind::LocationScaling}) {
    if (s == to_string(k)) return k;
  }
  throw DomainError("unknown experiment kind '" + s + "'");
}

/// Birth-index window {i : s l(n) n^gamma <= i <= t l(n) n^gamma}. Without
/// gamma the regime decides: 1/(tau+1) for RV, and for RaV gamma = 1 with
/// l(n) = t_n. For RV, l(n) = exp(sqrt(zeta0 log n)).
struct WindowSpec {
  std::optional<double> gamma;
  double s = 1.0;
  double t = std::exp(1.0);
  double zeta0 = 0.0;
};

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::DegreeDist;
  WrgConfig config;
  int replicas = 1;
  std::optional<WindowSpec> window;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> ladder;  // sizes observed; empty means {config.n}
  std::uint64_t kmax = 30;
  bool conditional_only = false;      // skip growth, weights and conditional means only
  std::uint64_t reference_draws = 4000;  // Z functional draws when alpha < 2
  double g_min = 1e-3;
  unsigned threads = 0;               // 0: hardware concurrency; not part of the plan identity

  std::vector<std::uint64_t> sizes() const {
    std::vector<std::uint64_t> v = ladder.empty() ? std::vector<std::uint64_t>{config.n} : ladder;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  void validate() const {
    config.validate();
    if (replicas < 1) throw DomainError("replicas must be >= 1");
    for (auto n : sizes()) {
      if (n < 3) throw DomainError("ladder sizes must be >= 3");
    }
    if (kind == ExperimentKind::WindowGumbel && !window) throw DomainError("window_gumbel needs a window");
    if (window && !(window->s > 0.0 && window->s < window->t && std::isfinite(window->t))) {
      throw DomainError("window needs 0 < s < t < inf");
    }
    if (window && window->zeta0 < 0.0) throw DomainError("window zeta0 must be >= 0");
    if (kmax < 1) throw DomainError("kmax must be >= 1");
    if (!(g_min > 0.0)) throw DomainError("g_min must be > 0");
    if (conditional_only && config.variant != Variant::FixedOutDegree) {
      throw DomainError("conditional_only applies to the fixed out-degree variant");
    }
  }

  KeyValues to_kv() const {
    KeyValues kv = config.to_kv();
    kv.erase("seed");
    kv.set("n", sizes().back());
    kv.set("experiment", to_string(kind));
    kv.set("replicas", replicas);
    kv.set("base_seed", base_seed);
    std::string lad;
    for (auto n : sizes()) lad += (lad.empty() ? "" : ",") + std::to_string(n);
    kv.set("ladder", lad);
    kv.set("kmax", kmax);
    kv.set("conditional_only", conditional_only);
    kv.set("reference_draws", reference_draws);
    kv.set("g_min", g_min);
    if (window) {
      if (window->gamma) kv.set("window_gamma", *window->gamma);
      kv.set("window_s", window->s);
      kv.set("window_t", window->t);
      kv.set("window_zeta0", window->zeta0);
    }
    return kv;
  }

  static ExperimentPlan from_kv(const KeyValues& kv) {
    ExperimentPlan p;
    p.config = WrgConfig::from_kv(kv);
    p.kind = parse_experiment_kind(kv.str("experiment", "degree_dist"));
    const std::uint64_t r = kv.uint("replicas", 1);
    if (r < 1 || r > 100000000) throw DomainError("replicas must lie in [1, 1e8]");
    p.replicas = static_cast<int>(r);
    p.base_seed = kv.uint("base_seed", kv.uint("seed", 0));
    if (kv.has("ladder")) {
      std::stringstream ss(kv.str("ladder"));
      std::string tok;
      KeyValues one;
      while (std::getline(ss, tok, ',')) {
        one.set("ladder", tok);
        p.ladder.push_back(one.uint("ladder"));
      }
      if (!p.ladder.empty()) p.config.n = *std::max_element(p.ladder.begin(), p.ladder.end());
    }
    p.kmax = kv.uint("kmax", p.kmax);
    p.conditional_only = kv.boolean("conditional_only", false);
    p.reference_draws = kv.uint("reference_draws", p.reference_draws);
    p.g_min = kv.real("g_min", p.g_min);
    if (kv.has("window_s") || kv.has("window_t") || kv.has("window_gamma")) {
      WindowSpec w;
      if (kv.has("window_gamma")) w.gamma = kv.real("window_gamma");
      w.s = kv.real("window_s", w.s);
      w.t = kv.real("window_t", w.t);
      w.zeta0 = kv.real("window_zeta0", 0.0);
      p.window = w;
    }
    p.validate();
    return p;
  }

  /// 64-bit FNV-1a of the canonical key=value rendering.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_kv().to_string()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

struct Summary {
  std::size_t count = 0;
  double mean = kNaN, stddev = kNaN, median = kNaN, q05 = kNaN, q25 = kNaN, q75 = kNaN, q95 = kNaN;

  nlohmann::json to_json() const {
    return {{"count", count}, {"mean", mean}, {"stddev", stddev}, {"median", median},
            {"q05", q05},     {"q25", q25},   {"q75", q75},       {"q95", q95}};
  }
};

inline Summary summarize(std::span<const double> x) {
  Summary s;
  s.count = x.size();
  if (x.empty()) return s;
  s.mean = stats::mean(x);
  s.stddev = stats::stddev(x);
  s.median = stats::median(x);
  s.q05 = stats::quantile(x, 0.05);
  s.q25 = stats::quantile(x, 0.25);
  s.q75 = stats::quantile(x, 0.75);
  s.q95 = stats::quantile(x, 0.95);
  return s;
}

struct TestStatistic {
  std::string name;
  std::uint64_t n = 0;
  std::string kind;  // KS, KS2, TV
  double value = kNaN;
  std::optional<double> p_value;
  std::size_t samples = 0;
  std::string reference;

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name}, {"n", n}, {"kind", kind}, {"value", value}, {"samples", samples},
                     {"reference", reference}};
    if (p_value) j["p_value"] = *p_value;
    return j;
  }
};

struct ReportRow {
  int replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::vector<double> values;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::string regime;
  nlohmann::json theory;  // predictions actually used, with regime tag
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;  // replica-major, then ascending n
  std::vector<TestStatistic> statistics;
  nlohmann::json extra = nlohmann::json::object();
  std::uint64_t growth_runs = 0;
  std::uint64_t degree_sum_failures = 0;
  double wall_seconds = 0.0;

  std::vector<std::uint64_t> sizes() const { return plan.sizes(); }

  bool has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }

  std::vector<double> column(const std::string& name, std::uint64_t n) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DomainError("report has no column '" + name + "'");
    const std::size_t c = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& r : rows) {
      if (r.n == n) out.push_back(r.values[c]);
    }
    return out;
  }

  Summary summary(const std::string& name, std::uint64_t n) const { return summarize(column(name, n)); }
  double median(const std::string& name, std::uint64_t n) const { return summary(name, n).median; }

  const TestStatistic& statistic(const std::string& name, std::uint64_t n) const {
    for (const auto& s : statistics) {
      if (s.name == name && s.n == n) return s;
    }
    throw DomainError("report has no statistic '" + name + "' at n=" + std::to_string(n));
  }

  nlohmann::json to_json(bool with_timing = true) const {
    nlohmann::json j;
    j["plan"] = plan.to_kv().entries();
    j["plan_hash"] = plan.hash();
    j["base_seed"] = plan.base_seed;
    j["regime"] = regime;
    j["theory"] = theory;
    j["columns"] = columns;
    nlohmann::json seeds = nlohmann::json::array();
    for (int r = 0; r < plan.replicas; ++r) seeds.push_back(derive_seed(plan.base_seed, r));
    j["seeds"] = seeds;
    nlohmann::json summ = nlohmann::json::array();
    for (auto n : sizes()) {
      for (const auto& c : columns) {
        nlohmann::json e = summary(c, n).to_json();
        e["n"] = n;
        e["column"] = c;
        summ.push_back(e);
      }
    }
    j["summary"] = summ;
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : statistics) st.push_back(s.to_json());
    j["statistics"] = st;
    j["extra"] = extra;
    j["growth_runs"] = growth_runs;
    j["degree_sum_failures"] = degree_sum_failures;
    j["tolerance_note"] = "first-order rates are not known; numeric bounds applied to these values are calibration-derived";
    if (with_timing) j["wall_seconds"] = wall_seconds;
    return j;
  }

  void write_csv(std::ostream& os) const {
    os << "replica,seed,n";
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    for (const auto& r : rows) {
      os << r.replica << ',' << r.seed << ',' << r.n;
      for (double v : r.values) os << ',' << KeyValues::format_double17(v);
      os << '\n';
    }
  }
};

struct ReportPaths {
  std::filesystem::path json;
  std::filesystem::path csv;
};

inline std::string report_stem(const ExperimentPlan& p) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(p.hash()));
  return std::string(to_string(p.kind)) + "_" + hex + "_seed" + std::to_string(p.base_seed);
}

inline ReportPaths write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = report_stem(r.plan);
  ReportPaths p{dir / (stem + ".json"), dir / (stem + ".csv")};
  std::ofstream js(p.json);
  if (!js) throw DomainError("cannot write " + p.json.string());
  js << r.to_json().dump(2) << '\n';
  std::ofstream csv(p.csv);
  if (!csv) throw DomainError("cannot write " + p.csv.string());
  r.write_csv(csv);
  return p;
}

// ---------------------------------------------------------------------------
// Replica driver.

/// One observation of a replica at size n. `z` is empty when only weights
/// were drawn.
struct ReplicaView {
  std::uint64_t n = 0;
  int m = 1;
  std::span<const std::int64_t> z;
  std::span<const double> w;
  std::span<const double> S;
  bool grown() const { return !z.empty(); }
};

struct DriveStats {
  std::uint64_t growth_runs = 0;
  std::uint64_t degree_sum_failures = 0;
};

namespace detail {

inline bool degree_sum_ok(const ReplicaView& v) {
  return degree_sum(v.z) == static_cast<std::int64_t>(v.m) * static_cast<std::int64_t>(v.n - 1);
}

/// Calls on_n(view) once per ladder size, in ascending order.
template <class F>
DriveStats drive_replica(const ExperimentPlan& plan, std::uint64_t seed, F&& on_n) {
  DriveStats ds;
  const auto sizes = plan.sizes();
  WrgConfig cfg = plan.config;
  cfg.seed = seed;
  cfg.n = sizes.back();
  if (plan.conditional_only) {
    const GrowthSnapshot s = weights_only(cfg);
    for (auto n : sizes) {
      on_n(ReplicaView{n, cfg.m, {}, std::span<const double>(s.weights.data(), n),
                       std::span<const double>(s.partial_sums.data(), n)});
    }
    return ds;
  }
  if (cfg.variant == Variant::RandomOutDegree) {
    // weights are drawn first, so every size sees the same weight prefix
    for (auto n : sizes) {
      cfg.n = n;
      const GrowthSnapshot s = grow_random_outdegree(cfg);
      ++ds.growth_runs;
      on_n(ReplicaView{n, cfg.m, s.in_degrees, s.weights, s.partial_sums});
    }
    return ds;
  }
  ++ds.growth_runs;
  grow(cfg, sizes,
       [&](std::uint64_t n, std::span<const std::int64_t> z, std::span<const double> w, std::span<const double> S) {
         ReplicaView v{n, cfg.m, z, w, S};
         if (!degree_sum_ok(v)) ++ds.degree_sum_failures;
         on_n(v);
       });
  return ds;
}

/// Runs fn(r) for r in [0, count) over `threads` workers; rethrows the first
/// failure.
template <class F>
void parallel_for(int count, unsigned threads, F&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(count));
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= count) return;
      try {
        fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next.store(count);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

struct ReplicaOut {
  std::vector<ReportRow> rows;
  std::vector<std::vector<double>> aux;  // per ladder size, kind-specific accumulators
  DriveStats drive;
};

/// Runs all replicas; row(view, aux) returns the observable values of one
/// size and may add to the per-size accumulator.
template <class RowFn>
void run_rows(ExperimentReport& rep, RowFn&& row, std::size_t aux_size = 0,
              std::vector<std::vector<double>>* aux_total = nullptr) {
  const ExperimentPlan& plan = rep.plan;
  std::vector<ReplicaOut> outs(plan.replicas);
  const auto sizes = plan.sizes();
  parallel_for(plan.replicas, plan.threads, [&](int r) {
    ReplicaOut& o = outs[r];
    const std::uint64_t seed = derive_seed(plan.base_seed, static_cast<std::uint64_t>(r));
    o.aux.assign(sizes.size(), std::vector<double>(aux_size, 0.0));
    std::size_t idx = 0;
    o.drive = drive_replica(plan, seed, [&](const ReplicaView& v) {
      o.rows.push_back({r, seed, v.n, row(v, o.aux[idx])});
      ++idx;
    });
  });
  if (aux_total) aux_total->assign(sizes.size(), std::vector<double>(aux_size, 0.0));
  for (auto& o : outs) {
    for (auto& row_ : o.rows) rep.rows.push_back(std::move(row_));
    rep.growth_runs += o.drive.growth_runs;
    rep.degree_sum_failures += o.drive.degree_sum_failures;
    if (aux_total) {
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        for (std::size_t k = 0; k < aux_size; ++k) (*aux_total)[i][k] += o.aux[i][k];
      }
    }
  }
}

inline double log_ratio(std::uint64_t index, std::uint64_t n) {
  return std::log(static_cast<double>(index)) / std::log(static_cast<double>(n));
}

inline TestStatistic ks_against(const std::string& name, std::uint64_t n, std::span<const double> x,
                                const std::function<double(double)>& cdf, const std::string& reference) {
  TestStatistic t;
  t.name = name;
  t.n = n;
  t.kind = "KS";
  t.value = stats::ks_statistic(x, cdf);
  t.p_value = stats::kolmogorov_pvalue(t.value, static_cast<double>(x.size()));
  t.samples = x.size();
  t.reference = reference;
  return t;
}

inline TestStatistic ks_two(const std::string& name, std::uint64_t n, std::span<const double> x,
                            std::span<const double> y, const std::string& reference) {
  TestStatistic t;
  t.name = name;
  t.n = n;
  t.kind = "KS2";
  t.value = stats::ks_two_sample(x, y);
  const double ne = static_cast<double>(x.size()) * y.size() / (x.size() + y.size());
  t.p_value = stats::kolmogorov_pvalue(t.value, ne);
  t.samples = x.size();
  t.reference = reference;
  return t;
}

inline double i_alpha_cdf_clamped(double alpha, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return location_I_alpha_cdf(alpha, x);
}

inline ExperimentReport start_report(const ExperimentPlan& plan) {
  plan.validate();
  ExperimentReport rep;
  rep.plan = plan;
  rep.regime = to_string(classify(plan.config.family).cls);
  rep.theory["regime"] = rep.regime;
  return rep;
}

inline void require_growth(const ExperimentPlan& plan, const char* what) {
  if (plan.conditional_only) throw DomainError(std::string(what) + " needs the in-degrees; unset conditional_only");
}

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment kinds.

/// Pooled empirical p_n(k), k <= kmax, with the TV distance to p(k); and the
/// joint masses Gamma_n^(k) of {Z = k, W below / above the weight median}
/// for k <= 2 (continuous laws only).
inline ExperimentReport run_degree_dist(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  detail::require_growth(plan, "degree_dist");
  const WeightLaw law(plan.config.family);
  if (!std::isfinite(law.mean())) throw DomainError("degree_dist needs a finite-mean family");
  const int m = plan.config.m;
  const std::uint64_t K = plan.kmax;
  const bool split = classify(plan.config.family).cls != WeightClass::BoundedAtom;
  const double wmed = split ? law.quantile(0.5) : kNaN;
  rep.columns = {"zero_fraction", "max_degree", "tail_fraction"};
  const std::size_t joint0 = K + 1;
  std::vector<std::vector<double>> totals;
  detail::run_rows(
      rep,
      [&](const ReplicaView& v, std::vector<double>& acc) {
        std::int64_t mx = 0;
        double tail = 0.0;
        for (std::size_t i = 0; i < v.n; ++i) {
          const std::int64_t z = v.z[i];
          mx = std::max(mx, z);
          if (static_cast<std::uint64_t>(z) <= K) {
            acc[z] += 1.0;
          } else {
            tail += 1.0;
          }
          if (split && z <= 2) acc[joint0 + 2 * z + (v.w[i] >= wmed ? 1 : 0)] += 1.0;
        }
        const double nn = static_cast<double>(v.n);
        return std::vector<double>{acc[0] / nn, static_cast<double>(mx), tail / nn};
      },
      K + 1 + 6, &totals);

  std::vector<double> limit(K + 1);
  for (std::uint64_t k = 0; k <= K; ++k) limit[k] = pk_limit({plan.config.family, m, k});
  rep.theory["pk_limit"] = limit;
  rep.theory["source"] = "p(k) = E[(mu/(mu+W)) (W/(mu+W))^k], mu = E[W]/m";
  nlohmann::json per_n = nlohmann::json::array();
  const auto sizes = plan.sizes();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double total = static_cast<double>(plan.replicas) * sizes[i];
    std::vector<double> emp(K + 1);
    for (std::uint64_t k = 0; k <= K; ++k) emp[k] = totals[i][k] / total;
    TestStatistic tv;
    tv.name = "tv_pk";
    tv.n = sizes[i];
    tv.kind = "TV";
    tv.value = stats::tv_distance(emp, limit);
    tv.samples = static_cast<std::size_t>(total);
    tv.reference = "p(k), k <= kmax";
    rep.statistics.push_back(tv);
    nlohmann::json e{{"n", sizes[i]}, {"empirical_pk", emp}};
    if (split) {
      nlohmann::json g = nlohmann::json::array();
      for (std::uint64_t k = 0; k <= 2; ++k) {
        const double lo = gamma_k_mass({plan.config.family, m, k}, -kInf, wmed);
        const double hi = gamma_k_mass({plan.config.family, m, k}, wmed, kInf);
        g.push_back({{"k", k}, {"below_median", totals[i][joint0 + 2 * k] / total}, {"below_median_limit", lo},
                     {"above_median", totals[i][joint0 + 2 * k + 1] / total}, {"above_median_limit", hi}});
      }
      e["gamma_k"] = g;
      e["weight_median"] = wmed;
    }
    per_n.push_back(e);
  }
  rep.extra["degree_law"] = per_n;
  rep.wall_seconds = sw.seconds();
  return rep;
}

namespace detail {

inline nlohmann::json prediction_json(const MaxDegreePrediction& p, std::uint64_t n) {
  nlohmann::json j{{"n", n}, {"first_order", p.first_order}, {"limit", p.limit}, {"scale_is_random", p.scale_is_random}};
  if (p.second_order_addend) j["second_order_addend"] = *p.second_order_addend;
  return j;
}

inline nlohmann::json location_json(const LocationPrediction& l) {
  nlohmann::json j{{"exponent", l.exponent}, {"linear_in_n", l.linear_in_n}, {"tag", l.tag}};
  if (!l.law.empty()) j["law"] = l.law;
  return j;
}

/// KS of the Frechet-regime columns against their limit laws; for alpha < 2 a
/// two-sample test against the Z functional.
inline void frechet_statistics(ExperimentReport& rep, const std::vector<std::string>& ratio_cols,
                               const std::vector<std::string>& loc_cols) {
  const ExperimentPlan& plan = rep.plan;
  const Classification c = classify(plan.config.family);
  if (c.cls != WeightClass::Frechet) return;
  const int m = plan.config.m;
  std::vector<double> zref;
  if (c.alpha < 2.0) {
    RandomStream rng(derive_seed(plan.base_seed, 0x5a5a5a5aULL));
    for (std::uint64_t d = 0; d < plan.reference_draws; ++d) zref.push_back(z_sampler(c.alpha, m, plan.g_min, rng).z);
    rep.theory["z_reference"] = {{"draws", plan.reference_draws}, {"g_min", plan.g_min}, {"median", stats::median(zref)}};
  }
  for (auto n : plan.sizes()) {
    for (const auto& col : ratio_cols) {
      if (!rep.has_column(col)) continue;
      const auto x = rep.column(col, n);
      if (c.alpha > 2.0) {
        rep.statistics.push_back(ks_against(
            col, n, x, [&](double v) { return v <= 0.0 ? 0.0 : frechet_max_cdf(c.alpha, m, v); },
            "exp(-Gamma(alpha) (x/m)^-(alpha-1))"));
      } else if (c.alpha < 2.0) {
        rep.statistics.push_back(ks_two(col, n, x, zref, "Z functional (z_sampler)"));
      }
    }
    if (c.alpha > 2.0) {
      for (const auto& col : loc_cols) {
        if (!rep.has_column(col)) continue;
        const auto x = rep.column(col, n);
        rep.statistics.push_back(
            ks_against(col, n, x, [&](double v) { return i_alpha_cdf_clamped(c.alpha, v); }, "I_alpha = exp(-Gamma(alpha,1))"));
      }
    }
  }
}

}  // namespace detail

/// Per replica and size: max Z / first-order scale, log I_n / log n and I_n / n
/// for the degrees (when grown) and for the conditional means.
inline ExperimentReport run_max_first_order(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  const WeightFamily& f = plan.config.family;
  const int m = plan.config.m;
  const auto sizes = plan.sizes();
  std::vector<double> scale;
  nlohmann::json preds = nlohmann::json::array();
  for (auto n : sizes) {
    const auto p = max_degree_prediction(f, m, static_cast<double>(n));
    scale.push_back(p.first_order);
    preds.push_back(detail::prediction_json(p, n));
  }
  rep.theory["max_degree"] = preds;
  rep.theory["location"] = detail::location_json(location_prediction(f, m));
  if (!plan.conditional_only) rep.columns = {"max_degree", "max_ratio", "location_exponent", "location_fraction"};
  for (const char* c : {"cond_max", "cond_max_ratio", "cond_location_exponent", "cond_location_fraction"}) {
    rep.columns.push_back(c);
  }
  detail::run_rows(rep, [&](const ReplicaView& v, std::vector<double>&) {
    const double sc = scale[std::lower_bound(sizes.begin(), sizes.end(), v.n) - sizes.begin()];
    const double nn = static_cast<double>(v.n);
    std::vector<double> row;
    if (v.grown()) {
      const auto ms = max_degree_stats(v.z);
      row = {static_cast<double>(ms.max), ms.max / sc, detail::log_ratio(ms.index, v.n), ms.index / nn};
    }
    const auto cm = cond_mean_degrees(v.w, v.S, v.m);
    const auto cs = max_degree_stats(cm);
    for (double x : {cs.max, cs.max / sc, detail::log_ratio(cs.index, v.n), cs.index / nn}) row.push_back(x);
    return row;
  });
  detail::frechet_statistics(rep, {"max_ratio", "cond_max_ratio"}, {"location_fraction", "cond_location_fraction"});
  rep.wall_seconds = sw.seconds();
  return rep;
}

/// The first-order experiment restricted to Frechet laws.
inline ExperimentReport run_frechet_limit(const ExperimentPlan& plan) {
  if (classify(plan.config.family).cls != WeightClass::Frechet) {
    throw DomainError("frechet_limit needs a Frechet-class family");
  }
  return run_max_first_order(plan);
}

namespace detail {

struct SecondOrderScale {
  double first_order;
  double denominator;  // second-order addend / target constant
};

}  // namespace detail

/// Limit of the second-order statistic: 1/2 for RV with tau <= 1, the RaV
/// coefficient for tau > 1.
inline double second_order_target(const WeightFamily& f) {
  const Classification c = classify(f);
  if (c.cls == WeightClass::GumbelRV && c.tau <= 1.0) return 0.5;
  if (c.cls == WeightClass::GumbelRaV && c.tau > 1.0) return rav_second_order_coefficient(c.tau, c.c1);
  throw DomainError("second-order limits need RV with tau in (0,1] or RaV with tau > 1");
}

/// (max - first order) divided by the second-order scale, whose limit is 1/2
/// (RV, tau <= 1) or the RaV constant.
inline ExperimentReport run_second_order(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  const WeightFamily& f = plan.config.family;
  const Classification c = classify(f);
  const int m = plan.config.m;
  const double target = second_order_target(f);
  rep.theory["scaling"] = c.cls == WeightClass::GumbelRV ? "m (1-gamma) a_{n^gamma} log n log log n"
                          : c.tau <= 3.0 ? "m a_{t_n n} log(1/t_n) log log n"
                                         : "m a_{t_n n} log(1/t_n) (log n)^(1-3/tau)";
  rep.theory["target"] = target;
  const auto sizes = plan.sizes();
  std::vector<detail::SecondOrderScale> sc;
  nlohmann::json preds = nlohmann::json::array();
  for (auto n : sizes) {
    const auto p = max_degree_prediction(f, m, static_cast<double>(n));
    sc.push_back({p.first_order, *p.second_order_addend / target});
    preds.push_back(detail::prediction_json(p, n));
  }
  rep.theory["max_degree"] = preds;
  if (!plan.conditional_only) rep.columns = {"statistic"};
  rep.columns.push_back("cond_statistic");
  detail::run_rows(rep, [&](const ReplicaView& v, std::vector<double>&) {
    const auto& s = sc[std::lower_bound(sizes.begin(), sizes.end(), v.n) - sizes.begin()];
    std::vector<double> row;
    if (v.grown()) row.push_back((max_degree_stats(v.z).max - s.first_order) / s.denominator);
    const auto cm = cond_mean_degrees(v.w, v.S, v.m);
    row.push_back((max_degree_stats(cm).max - s.first_order) / s.denominator);
    return row;
  });
  rep.wall_seconds = sw.seconds();
  return rep;
}

namespace detail {

struct WindowScale {
  double lo_index, hi_index;  // real window bounds
  double unit;                // l(n) n^gamma
  double center, spread;      // statistic = (max - center) / spread
};

}  // namespace detail

/// Maximum over the birth window, centred and scaled, with its location;
/// compared with the Gumbel law of location log log(t/s) - zeta0 (tau+1)^2/(2 tau)
/// and the law of e^U, U uniform on (log s, log t).
inline ExperimentReport run_window_gumbel(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  const WeightFamily& f = plan.config.family;
  const Classification c = classify(f);
  const WindowSpec& w = *plan.window;
  const int m = plan.config.m;
  const bool rv = c.cls == WeightClass::GumbelRV && c.tau < 1.0;
  const bool rav = c.cls == WeightClass::GumbelRaV;
  if (!rv && !rav) throw DomainError("window_gumbel needs RV with tau in (0,1) or RaV");
  const double gamma = rv ? gamma_exponent(c.tau) : 1.0;
  if (w.gamma && std::abs(*w.gamma - gamma) > 1e-12) {
    throw DomainError("window gamma does not match the regime (expected " + KeyValues::format_double(gamma) + ")");
  }
  if (rav && w.zeta0 != 0.0) throw DomainError("RaV windows use l(n) = t_n; zeta0 must be 0");
  const double loc = rv ? gumbel_window_location(w.s, w.t, c.tau, w.zeta0) : gumbel_window_location(w.s, w.t);
  rep.theory["gumbel_location"] = loc;
  rep.theory["gamma"] = gamma;
  rep.theory["window"] = {{"s", w.s}, {"t", w.t}, {"zeta0", w.zeta0}, {"ell", rv ? "exp(sqrt(zeta0 log n))" : "t_n"}};
  rep.theory["location_law"] = "e^U, U uniform on (log s, log t)";
  const auto sizes = plan.sizes();
  std::vector<detail::WindowScale> ws;
  for (auto n : sizes) {
    const double nn = static_cast<double>(n), L = std::log(nn);
    detail::WindowScale s{};
    if (rv) {
      const auto q = unit_mean_seqs(f, std::pow(nn, gamma), m);
      s.unit = std::exp(std::sqrt(w.zeta0 * L)) * std::pow(nn, gamma);
      s.center = m * (1.0 - gamma) * *q.b_n * L;
      s.spread = m * (1.0 - gamma) * *q.a_n * L;
    } else {
      const double tn = *unit_mean_seqs(f, nn, m).t_n;
      const auto q = unit_mean_seqs(f, tn * nn, m);
      s.unit = tn * nn;
      s.center = m * *q.b_n * std::log(1.0 / tn);
      s.spread = m * *q.a_n * std::log(1.0 / tn);
    }
    s.lo_index = std::max(1.0, std::ceil(w.s * s.unit));
    s.hi_index = std::min(nn, std::floor(w.t * s.unit));
    if (s.lo_index > s.hi_index) throw DomainError("window is empty at n=" + std::to_string(n));
    ws.push_back(s);
  }
  nlohmann::json wj = nlohmann::json::array();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    wj.push_back({{"n", sizes[i]}, {"first_index", ws[i].lo_index}, {"last_index", ws[i].hi_index},
                  {"unit", ws[i].unit}, {"center", ws[i].center}, {"spread", ws[i].spread}});
  }
  rep.theory["windows"] = wj;
  if (!plan.conditional_only) rep.columns = {"window_stat", "window_location"};
  rep.columns.push_back("cond_window_stat");
  rep.columns.push_back("cond_window_location");
  detail::run_rows(rep, [&](const ReplicaView& v, std::vector<double>&) {
    const auto& s = ws[std::lower_bound(sizes.begin(), sizes.end(), v.n) - sizes.begin()];
    const std::size_t lo = static_cast<std::size_t>(s.lo_index) - 1, hi = static_cast<std::size_t>(s.hi_index);
    std::vector<double> row;
    if (v.grown()) {
      const auto ms = max_degree_stats(v.z.subspan(lo, hi - lo));
      row.push_back((ms.max - s.center) / s.spread);
      row.push_back((ms.index + lo) / s.unit);
    }
    const auto cm = cond_mean_degrees(v.w, v.S, v.m);
    const auto cs = max_degree_stats(std::span<const double>(cm).subspan(lo, hi - lo));
    row.push_back((cs.max - s.center) / s.spread);
    row.push_back((cs.index + lo) / s.unit);
    return row;
  });
  const auto gcdf = [loc](double x) { return std::exp(-std::exp(-(x - loc))); };
  const auto ucdf = [&w](double x) { return location_window_cdf(w.s, w.t, x); };
  for (auto n : sizes) {
    for (const char* col : {"window_stat", "cond_window_stat"}) {
      if (rep.has_column(col)) rep.statistics.push_back(detail::ks_against(col, n, rep.column(col, n), gcdf, "Gumbel"));
    }
    for (const char* col : {"window_location", "cond_window_location"}) {
      if (rep.has_column(col)) rep.statistics.push_back(detail::ks_against(col, n, rep.column(col, n), ucdf, "e^U"));
    }
  }
  rep.wall_seconds = sw.seconds();
  return rep;
}

/// Scale g_n of the concentration statistic max_i |Z_n(i) - E_W Z_n(i)| / g_n.
inline double concentration_scale(const WeightFamily& f, int m, double n) {
  const Classification c = classify(f);
  switch (c.cls) {
    case WeightClass::GumbelSV:
    case WeightClass::GumbelRV: return m * *unit_mean_seqs(f, n, m).b_n * std::log(n);
    case WeightClass::GumbelRaV: {
      const double tn = *unit_mean_seqs(f, n, m).t_n;
      return m * *unit_mean_seqs(f, tn * n, m).a_n * std::log(1.0 / tn);
    }
    default: throw DomainError("concentration needs a Gumbel-class family (SV, RV or RaV)");
  }
}

inline ExperimentReport run_concentration(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  detail::require_growth(plan, "concentration");
  const WeightFamily& f = plan.config.family;
  const int m = plan.config.m;
  const auto sizes = plan.sizes();
  std::vector<double> g;
  nlohmann::json gj = nlohmann::json::array();
  for (auto n : sizes) {
    g.push_back(concentration_scale(f, m, static_cast<double>(n)));
    gj.push_back({{"n", n}, {"g_n", g.back()}});
  }
  rep.theory["scale"] = gj;
  rep.theory["limit"] = "max |Z - E_W Z| / g_n -> 0";
  rep.columns = {"concentration"};
  detail::run_rows(rep, [&](const ReplicaView& v, std::vector<double>&) {
    const double gn = g[std::lower_bound(sizes.begin(), sizes.end(), v.n) - sizes.begin()];
    const auto cm = cond_mean_degrees(v.w, v.S, v.m);
    double d = 0.0;
    for (std::size_t i = 0; i < v.n; ++i) d = std::max(d, std::abs(static_cast<double>(v.z[i]) - cm[i]));
    return std::vector<double>{d / gn};
  });
  rep.wall_seconds = sw.seconds();
  return rep;
}

/// Fraction of vertices of in-degree zero. With two or more sizes, the slope
/// of log(1 - mean fraction) against log n is fitted; its negative is compared
/// with min(2-alpha, alpha-1)/alpha.
inline ExperimentReport run_zero_degree_fraction(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  detail::require_growth(plan, "zero_degree_fraction");
  const Classification c = classify(plan.config.family);
  if (c.cls != WeightClass::Frechet || !(c.alpha > 1.0 && c.alpha < 2.0)) {
    throw DomainError("zero_degree_fraction needs Frechet-Pareto weights with alpha in (1,2)");
  }
  rep.theory["exponent"] = zero_degree_exponent(c.alpha);
  rep.theory["bound"] = "P(Z_n(U_n) = 0) >= 1 - C n^-(exponent - eps)";
  rep.columns = {"zero_fraction"};
  detail::run_rows(rep, [&](const ReplicaView& v, std::vector<double>&) {
    const auto zeros = std::count(v.z.begin(), v.z.end(), std::int64_t{0});
    return std::vector<double>{static_cast<double>(zeros) / static_cast<double>(v.n)};
  });
  const auto sizes = plan.sizes();
  if (sizes.size() >= 2) {
    std::vector<double> x, y;
    for (auto n : sizes) {
      const double mean = rep.summary("zero_fraction", n).mean;
      if (mean < 1.0) {
        x.push_back(std::log(static_cast<double>(n)));
        y.push_back(std::log1p(-mean));
      }
    }
    if (x.size() >= 2) {
      const auto fit = stats::least_squares(x, y);
      rep.extra["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"exponent", -fit.slope},
                          {"predicted", zero_degree_exponent(c.alpha)}};
    }
  }
  rep.wall_seconds = sw.seconds();
  return rep;
}

/// log I_n / log n and I_n / n for the degrees and for the conditional means.
inline ExperimentReport run_location_scaling(const ExperimentPlan& plan) {
  detail::Stopwatch sw;
  ExperimentReport rep = detail::start_report(plan);
  const WeightFamily& f = plan.config.family;
  rep.theory["location"] = detail::location_json(location_prediction(f, plan.config.m));
  if (!plan.conditional_only) rep.columns = {"location_exponent", "location_fraction"};
  rep.columns.push_back("cond_location_exponent");
  rep.columns.push_back("cond_location_fraction");
  detail::run_rows(rep, [&](const ReplicaView& v, std::vector<double>&) {
    const double nn = static_cast<double>(v.n);
    std::vector<double> row;
    if (v.grown()) {
      const auto ms = max_degree_stats(v.z);
      row = {detail::log_ratio(ms.index, v.n), ms.index / nn};
    }
    const auto cs = max_degree_stats(cond_mean_degrees(v.w, v.S, v.m));
    row.push_back(detail::log_ratio(cs.index, v.n));
    row.push_back(cs.index / nn);
    return row;
  });
  detail::frechet_statistics(rep, {}, {"location_fraction", "cond_location_fraction"});
  rep.wall_seconds = sw.seconds();
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentPlan& plan) {
  switch (plan.kind) {
    case ExperimentKind::DegreeDist: return run_degree_dist(plan);
    case ExperimentKind::MaxDegreeFirstOrder: return run_max_first_order(plan);
    case ExperimentKind::MaxDegreeSecondOrder: return run_second_order(plan);
    case ExperimentKind::WindowGumbel: return run_window_gumbel(plan);
    case ExperimentKind::FrechetLimit: return run_frechet_limit(plan);
    case ExperimentKind::Concentration: return run_concentration(plan);
    case ExperimentKind::ZeroDegreeFraction: return run_zero_degree_fraction(plan);
    case ExperimentKind::LocationScaling: return run_location_scaling(plan);
  }
  throw DomainError("unknown experiment kind");
}

}  // namespace wrg
