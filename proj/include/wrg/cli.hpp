#pragma once

// Command-line front end. Subcommands: simulate, theory, ppp, experiment,
// verify. Values come from an optional --config file (key=value text) and are
// overridden by flags; the resolved configuration is logged on every run and
// --dump-config prints it without running, in a form --config accepts.
//
// Exit codes: 0 success, 1 parameter or domain error (including usage errors
// and failed verification), 2 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "acceptance.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "limit_theory.hpp"
#include "ppp_limits.hpp"
#include "snapshot_io.hpp"
#include "stats.hpp"
#include "weightdist.hpp"
#include "wrg_core.hpp"

namespace wrg::cli {

enum ExitCode : int { kOk = 0, kParamError = 1, kNumericError = 2 };

/// A value flag and the configuration key it sets.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

inline const std::vector<FlagSpec>& family_flags() {
  static const std::vector<FlagSpec> v = {
      {"--family", "family",
       "constant, atom, gumbel_rv, gumbel_rav, gumbel_sv, frechet_pareto, bounded_weibull, bounded_gumbel_rv, "
       "bounded_gumbel_rav"},
      {"--tau", "tau", "tail exponent tau"},
      {"--c1", "c1", "tail scale c1"},
      {"--a", "a", "tail prefactor a"},
      {"--b", "b", "tail power b"},
      {"--alpha", "alpha", "Pareto exponent alpha"},
      {"--x-min", "x_min", "Pareto scale x_min; PPP mark threshold for ppp"},
      {"--x0", "x0", "reflection point of the bounded families"},
      {"--q0", "q0", "atom mass at 1"},
      {"--atom-s", "s", "support [0, s] of the non-atomic part"},
      {"--c", "c", "constant weight"},
  };
  return v;
}

inline const std::vector<FlagSpec>& graph_flags() {
  static const std::vector<FlagSpec> v = {
      {"--n", "n", "number of vertices"},
      {"--m", "m", "edges per arriving vertex"},
      {"--variant", "variant", "fixed or random out-degree"},
      {"--seed", "seed", "random seed"},
  };
  return v;
}

/// Parsed state of one subcommand.
struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  bool dump_config = false;
  std::map<std::string, std::string> values;  // key -> flag text
  std::vector<std::pair<CLI::Option*, std::string>> options;
  std::vector<std::pair<CLI::Option*, std::string>> switches;  // boolean flags

  void add(const FlagSpec& f) { options.emplace_back(app->add_option(f.flag, values[f.key], f.help), f.key); }
  void add_all(const std::vector<FlagSpec>& fs) {
    for (const auto& f : fs) add(f);
  }
  void add_switch(const char* flag, const char* key, const char* help) {
    switches.emplace_back(app->add_flag(flag)->description(help), key);
  }

  /// Config file values overridden by the flags actually given.
  KeyValues resolve() const {
    KeyValues kv;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw DomainError("cannot read config file '" + config_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      kv = KeyValues::parse(ss.str());
    }
    for (const auto& [opt, key] : options) {
      if (opt->count() > 0) kv.set(key, values.at(key));
    }
    for (const auto& [opt, key] : switches) {
      if (opt->count() > 0) kv.set(key, true);
    }
    return kv;
  }
};

namespace detail {

inline void log_config(std::ostream& err, const char* command, const KeyValues& kv) {
  err << "# " << command << ": " << kv.to_line() << '\n';
}

inline std::filesystem::path out_dir(const KeyValues& kv) { return kv.str("out", "wrg_out"); }

inline void save_config(const std::filesystem::path& dir, const KeyValues& kv) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "config.txt");
  if (!f) throw DomainError("cannot write " + (dir / "config.txt").string());
  f << kv.to_string();
}

inline std::string num(double x) { return KeyValues::format_double(x); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands. Each takes the merged key=value set, resolves it (applying
// defaults), and either prints the resolved set or runs.

inline int cmd_simulate(KeyValues kv, bool dump, std::ostream& out, std::ostream& err) {
  const WrgConfig cfg = WrgConfig::from_kv(kv);
  KeyValues res = cfg.to_kv();
  res.set("out", detail::out_dir(kv).string());
  if (dump) {
    out << res.to_string();
    return kOk;
  }
  detail::log_config(err, "simulate", res);
  const GrowthSnapshot snap = grow_any(cfg);
  const auto dir = detail::out_dir(res);
  const auto paths =
      write_snapshot(snap, dir, "snapshot_n" + std::to_string(cfg.n) + "_seed" + std::to_string(cfg.seed));
  detail::save_config(dir, res);
  const auto mx = max_degree_stats(snap.in_degrees);
  out << "snapshot " << paths.csv.string() << "\nheader " << paths.json.string() << "\nmax_degree " << mx.max
      << " at i=" << mx.index << "\ndegree_sum " << degree_sum(snap.in_degrees) << '\n';
  return kOk;
}

inline nlohmann::json theory_json(const WeightFamily& f, int m, std::uint64_t n) {
  nlohmann::json j;
  const Classification c = classify(f);
  const WeightLaw law(f);
  j["family"] = family_to_kv(f).entries();
  j["class"] = to_string(c.cls);
  j["m"] = m;
  j["mean"] = law.mean();
  if (std::isfinite(law.mean())) j["theta_m"] = theta_m(f, m);
  try {
    const auto p = max_degree_prediction(f, m, static_cast<double>(n));
    nlohmann::json mp{{"n", n}, {"first_order", p.first_order}, {"limit", p.limit}, {"scale_is_random", p.scale_is_random}};
    if (p.second_order_addend) mp["second_order_addend"] = *p.second_order_addend;
    j["max_degree"] = mp;
  } catch (const DomainError& e) {
    j["max_degree"] = {{"n", n}, {"unavailable", e.what()}};
  }
  try {
    const auto l = location_prediction(f, m);
    j["location"] = wrg::detail::location_json(l);
  } catch (const DomainError& e) {
    j["location"] = {{"unavailable", e.what()}};
  }
  if (c.cls == WeightClass::Frechet && c.alpha > 1.0 && c.alpha < 2.0) {
    j["zero_degree_exponent"] = zero_degree_exponent(c.alpha);
  }
  return j;
}

/// CSV k,p_k,lower,upper (the asymptotic envelope, blank when unavailable)
/// followed by a JSON line with the maximum-degree and location predictions.
inline int cmd_theory(KeyValues kv, bool dump, std::ostream& out, std::ostream& err) {
  const WeightFamily f = family_from_kv(kv);
  const std::uint64_t mm = kv.uint("m", 1);
  if (mm < 1 || mm > 1000000) throw DomainError("m must lie in [1, 1e6]");
  const int m = static_cast<int>(mm);
  const std::uint64_t kmax = kv.uint("kmax", 10);
  const std::uint64_t n = kv.uint("n", 1000000);
  KeyValues res = family_to_kv(f);
  res.set("m", m);
  res.set("kmax", kmax);
  res.set("n", n);
  if (kv.has("out")) res.set("out", kv.str("out"));
  if (dump) {
    out << res.to_string();
    return kOk;
  }
  detail::log_config(err, "theory", res);
  std::ostringstream csv;
  csv << "k,p_k,lower,upper\n";
  const bool finite_mean = std::isfinite(WeightLaw(f).mean());
  if (finite_mean) {
    for (std::uint64_t k = 0; k <= kmax; ++k) {
      const DegreeLawQuery q{f, m, k};
      csv << k << ',' << KeyValues::format_double17(pk_limit(q)) << ',';
      try {
        const auto a = pk_asymptotic(q);
        csv << KeyValues::format_double17(a.lower) << ',' << KeyValues::format_double17(a.upper);
      } catch (const DomainError&) {
        csv << ',';
      }
      csv << '\n';
    }
  }
  const nlohmann::json j = theory_json(f, m, n);
  if (res.has("out")) {
    const std::filesystem::path dir = res.str("out");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "theory_pk.csv") << csv.str();
    std::ofstream(dir / "theory.json") << j.dump(2) << '\n';
    detail::save_config(dir, res);
    out << "table " << (dir / "theory_pk.csv").string() << "\npredictions " << (dir / "theory.json").string() << '\n';
  } else {
    if (finite_mean) out << csv.str();
    out << j.dump() << '\n';
  }
  return kOk;
}

/// Point sets and functionals of the limit point processes, as CSV.
///   sample=points       one realisation on [s,t] x [x_min, inf): t,x
///   sample=window_max   max of w - log v over the Gumbel process on [s,t]
///   sample=frechet_max  max of m x log(1/t) over the Frechet process on (0,1)
///   sample=z            the Z functional for alpha in (1,2): z,t_argmax
inline int cmd_ppp(KeyValues kv, bool dump, std::ostream& out, std::ostream& err) {
  KeyValues res;
  const std::string sample = kv.str("sample", "points");
  const std::string intensity =
      kv.str("intensity", sample == "window_max" ? "gumbel" : (sample == "points" ? "gumbel" : "frechet"));
  res.set("sample", sample);
  res.set("intensity", intensity);
  res.set("seed", kv.uint("seed", 0));
  res.set("draws", kv.uint("draws", 1000));
  const double alpha = kv.real("alpha", sample == "z" ? 1.5 : 3.0);
  if (intensity == "frechet" || sample == "z" || sample == "frechet_max") res.set("alpha", alpha);
  const std::uint64_t mm = kv.uint("m", 1);
  if (mm < 1 || mm > 1000000) throw DomainError("m must lie in [1, 1e6]");
  const int m = static_cast<int>(mm);
  if (kv.has("out")) res.set("out", kv.str("out"));
  double s = 0.0, t = 1.0, x_min = 0.0;
  if (sample == "points" || sample == "window_max") {
    s = kv.real("window_s", sample == "window_max" ? 1.0 : 0.0);
    t = kv.real("window_t", sample == "window_max" ? std::exp(1.0) : 1.0);
    res.set("window_s", s);
    res.set("window_t", t);
  }
  if (sample == "points" || sample == "frechet_max") {
    x_min = kv.real("x_min", intensity == "gumbel" ? 0.0 : 0.02);
    res.set("x_min", x_min);
  }
  if (sample == "z") {
    res.set("g_min", kv.real("g_min", 1e-3));
    res.set("truncation", kv.str("truncation", "compensated"));
  }
  if (sample == "frechet_max" || sample == "z") res.set("m", m);
  if (sample != "points" && sample != "window_max" && sample != "frechet_max" && sample != "z") {
    throw DomainError("sample must be points, window_max, frechet_max or z");
  }
  if (intensity != "gumbel" && intensity != "frechet") throw DomainError("intensity must be gumbel or frechet");
  if (dump) {
    out << res.to_string();
    return kOk;
  }
  detail::log_config(err, "ppp", res);
  RandomStream rng(res.uint("seed"));
  const std::uint64_t draws = res.uint("draws");
  std::ostringstream csv;
  if (sample == "points") {
    const Intensity in = intensity == "gumbel" ? Intensity::gumbel() : Intensity::frechet(alpha);
    const PointSet ps = sample_ppp(in, Window{s, t, x_min}, rng);
    csv << "t,x\n";
    for (const auto& p : ps.points) csv << KeyValues::format_double17(p.t) << ',' << KeyValues::format_double17(p.x) << '\n';
  } else if (sample == "window_max") {
    csv << "max\n";
    for (std::uint64_t d = 0; d < draws; ++d) csv << KeyValues::format_double17(gumbel_window_max_sample_ppp(s, t, rng)) << '\n';
  } else if (sample == "frechet_max") {
    check_frechet(alpha, m);
    csv << "max\n";
    for (std::uint64_t d = 0; d < draws; ++d) {
      const PointSet ps = sample_ppp(Intensity::frechet(alpha), Window{0.0, 1.0, x_min}, rng);
      double best = 0.0;
      for (const auto& p : ps.points) best = std::max(best, m * p.x * std::log(1.0 / p.t));
      csv << KeyValues::format_double17(best) << '\n';
    }
  } else {
    const std::string tr = res.str("truncation");
    if (tr != "compensated" && tr != "plain") throw DomainError("truncation must be compensated or plain");
    const Truncation mode = tr == "plain" ? Truncation::Plain : Truncation::Compensated;
    csv << "z,t_argmax\n";
    for (std::uint64_t d = 0; d < draws; ++d) {
      const ZValue z = z_sampler(alpha, m, res.real("g_min"), rng, mode);
      csv << KeyValues::format_double17(z.z) << ',' << KeyValues::format_double17(z.t_argmax) << '\n';
    }
  }
  if (res.has("out")) {
    const std::filesystem::path dir = res.str("out");
    std::filesystem::create_directories(dir);
    const auto file = dir / ("ppp_" + sample + "_seed" + std::to_string(res.uint("seed")) + ".csv");
    std::ofstream(file) << csv.str();
    detail::save_config(dir, res);
    out << "samples " << file.string() << '\n';
  } else {
    out << csv.str();
  }
  return kOk;
}

inline int cmd_experiment(KeyValues kv, bool dump, std::ostream& out, std::ostream& err) {
  ExperimentPlan plan = ExperimentPlan::from_kv(kv);
  plan.threads = static_cast<unsigned>(kv.uint("threads", 0));
  KeyValues res = plan.to_kv();
  res.set("out", detail::out_dir(kv).string());
  if (kv.has("threads")) res.set("threads", kv.uint("threads"));
  if (dump) {
    out << res.to_string();
    return kOk;
  }
  detail::log_config(err, "experiment", res);
  const ExperimentReport rep = run_experiment(plan);
  const auto dir = detail::out_dir(res);
  const auto paths = write_report(rep, dir);
  detail::save_config(dir, res);
  out << "report " << paths.json.string() << "\nobservables " << paths.csv.string() << "\nregime " << rep.regime
      << '\n';
  for (auto n : rep.sizes()) {
    for (const auto& c : rep.columns) out << "n=" << n << " median " << c << " = " << detail::num(rep.median(c, n)) << '\n';
  }
  for (const auto& s : rep.statistics) {
    out << "n=" << s.n << ' ' << s.kind << ' ' << s.name << " = " << detail::num(s.value) << '\n';
  }
  if (rep.degree_sum_failures) {
    err << "degree-sum invariant violated in " << rep.degree_sum_failures << " growth runs\n";
    return kNumericError;
  }
  return kOk;
}

inline std::vector<int> parse_id_list(const std::string& s) {
  std::vector<int> ids;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || v < 1 || v > 12) throw DomainError("criteria must be integers in 1..12, got '" + tok + "'");
    ids.push_back(v);
  }
  return ids;
}

/// Runs the acceptance suite (optionally a subset); exit 0 iff every run
/// criterion passes.
inline int cmd_verify(KeyValues kv, bool dump, std::ostream& out, std::ostream& err) {
  if (!kv.has("seed")) throw DomainError("verify needs --seed");
  const std::string suite = kv.str("suite", "primary");
  if (suite != "primary") throw DomainError("unknown suite '" + suite + "'; available: primary");
  KeyValues res;
  res.set("suite", suite);
  res.set("seed", kv.uint("seed"));
  if (kv.has("only")) res.set("only", kv.str("only"));
  if (kv.has("threads")) res.set("threads", kv.uint("threads"));
  const std::vector<int> only = res.has("only") ? parse_id_list(res.str("only")) : std::vector<int>{};
  if (dump) {
    out << res.to_string();
    return kOk;
  }
  detail::log_config(err, "verify", res);
  acceptance::Options o;
  o.seed = res.uint("seed");
  o.threads = static_cast<unsigned>(res.uint("threads", 0));
  o.progress = &out;
  const auto results = acceptance::run_primary_suite(o, only);
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  out << passed << "/" << results.size() << " criteria pass\n";
  return acceptance::all_pass(results) ? kOk : kParamError;
}

// ---------------------------------------------------------------------------

/// Maps an exception escaping a subcommand to an exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kNumericError;
  if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ResourceError*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e)) {
    return kParamError;
  }
  return kNumericError;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Weighted recursive graphs: growth, limit theory, point processes and experiments", "wrg"};
  app.require_subcommand(1);
  using Runner = std::function<int(KeyValues, bool, std::ostream&, std::ostream&)>;
  std::vector<std::pair<Command, Runner>> cmds;
  cmds.reserve(5);
  auto make = [&](const char* name, const char* help, Runner fn) -> Command& {
    cmds.emplace_back(Command{}, std::move(fn));
    Command& c = cmds.back().first;
    c.app = app.add_subcommand(name, help);
    c.app->add_option("--config", c.config_path, "key=value config file; flags override its values");
    c.app->add_flag("--dump-config", c.dump_config, "print the resolved configuration and exit");
    return c;
  };

  Command& sim = make("simulate", "grow one graph and write its snapshot", cmd_simulate);
  sim.add_all(family_flags());
  sim.add_all(graph_flags());
  sim.add_switch("--normalize-mean", "normalize_mean", "rescale weights to unit mean");
  sim.add({"--out", "out", "output directory"});

  Command& th = make("theory", "p(k) table with asymptotic envelopes, and limit predictions", cmd_theory);
  th.add_all(family_flags());
  th.add_switch("--normalize-mean", "normalize_mean", "rescale weights to unit mean");
  th.add({"--m", "m", "edges per arriving vertex"});
  th.add({"--n", "n", "size for the maximum-degree prediction"});
  th.add({"--kmax", "kmax", "largest k in the table"});
  th.add({"--out", "out", "write theory_pk.csv and theory.json here instead of stdout"});

  Command& pp = make("ppp", "sample limit point processes and their functionals", cmd_ppp);
  pp.add({"--sample", "sample", "points, window_max, frechet_max or z"});
  pp.add({"--intensity", "intensity", "gumbel or frechet (points only)"});
  pp.add({"--alpha", "alpha", "Frechet exponent"});
  pp.add({"--x-min", "x_min", "mark threshold"});
  pp.add({"--window-s", "window_s", "window start"});
  pp.add({"--window-t", "window_t", "window end"});
  pp.add({"--g-min", "g_min", "mark threshold of the Z sampler"});
  pp.add({"--truncation", "truncation", "compensated or plain (Z sampler)"});
  pp.add({"--m", "m", "edges per arriving vertex"});
  pp.add({"--draws", "draws", "number of samples"});
  pp.add({"--seed", "seed", "random seed"});
  pp.add({"--out", "out", "output directory"});

  Command& ex = make("experiment", "replicated experiment with a JSON/CSV report", cmd_experiment);
  ex.add({"--experiment", "experiment",
          "degree_dist, max_first_order, max_second_order, window_gumbel, frechet_limit, concentration, "
          "zero_degree_fraction, location_scaling"});
  ex.add_all(family_flags());
  ex.add_all(graph_flags());
  ex.add_switch("--normalize-mean", "normalize_mean", "rescale weights to unit mean");
  ex.add_switch("--conditional-only", "conditional_only", "weights and conditional means only, no growth");
  ex.add({"--replicas", "replicas", "number of replicas"});
  ex.add({"--ladder", "ladder", "comma-separated sizes"});
  ex.add({"--kmax", "kmax", "largest k of the degree law"});
  ex.add({"--window-s", "window_s", "window start"});
  ex.add({"--window-t", "window_t", "window end"});
  ex.add({"--window-gamma", "window_gamma", "window exponent"});
  ex.add({"--window-zeta0", "window_zeta0", "l(n) = exp(sqrt(zeta0 log n))"});
  ex.add({"--g-min", "g_min", "Z sampler threshold for the infinite-mean comparison"});
  ex.add({"--threads", "threads", "worker threads (0: all cores)"});
  ex.add({"--out", "out", "output directory"});

  Command& ve = make("verify", "run the acceptance suite", cmd_verify);
  ve.add({"--suite", "suite", "suite name (primary)"});
  ve.add({"--seed", "seed", "random seed (required)"});
  ve.add({"--only", "only", "comma-separated criterion ids"});
  ve.add({"--threads", "threads", "worker threads (0: all cores)"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kParamError;
  }
  for (auto& [c, fn] : cmds) {
    if (!c.app->parsed()) continue;
    try {
      return fn(c.resolve(), c.dump_config, out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e);
    }
  }
  err << app.help();
  return kParamError;
}

}  // namespace wrg::cli
