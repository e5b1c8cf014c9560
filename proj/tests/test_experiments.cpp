#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "wrg/experiments.hpp"

using namespace wrg;

namespace {

ExperimentPlan plan_of(ExperimentKind kind, const WeightFamily& f, std::uint64_t n, int replicas, int m = 1) {
  ExperimentPlan p;
  p.kind = kind;
  p.config.family = f;
  p.config.n = n;
  p.config.m = m;
  p.replicas = replicas;
  p.base_seed = 2024;
  return p;
}

}  // namespace

TEST(ExperimentPlan, KeyValueRoundTripAndHash) {
  auto p = plan_of(ExperimentKind::WindowGumbel, WeightFamily::gumbel_rv(0.5, 1.0, 1.0, 0.0, true), 1000, 4);
  p.ladder = {1000, 100, 10000};
  p.window = WindowSpec{std::nullopt, 1.0, 3.0, 0.1};
  const auto q = ExperimentPlan::from_kv(KeyValues::parse(p.to_kv().to_string()));
  EXPECT_EQ(q.to_kv().to_string(), p.to_kv().to_string());
  EXPECT_EQ(q.hash(), p.hash());
  EXPECT_EQ(q.sizes(), (std::vector<std::uint64_t>{100, 1000, 10000}));
  EXPECT_EQ(q.config.n, 10000u);
  auto r = p;
  r.base_seed = 2025;
  EXPECT_NE(r.hash(), p.hash());
  r = p;
  r.threads = 7;
  EXPECT_EQ(r.hash(), p.hash());
}

TEST(ExperimentPlan, Validation) {
  auto p = plan_of(ExperimentKind::WindowGumbel, WeightFamily::constant(), 100, 1);
  EXPECT_THROW(p.validate(), DomainError);  // window required
  p.kind = ExperimentKind::DegreeDist;
  p.replicas = 0;
  EXPECT_THROW(p.validate(), DomainError);
  p.replicas = 1;
  p.ladder = {2};
  EXPECT_THROW(p.validate(), DomainError);
  EXPECT_THROW(parse_experiment_kind("nope"), DomainError);
  EXPECT_EQ(parse_experiment_kind("max_second_order"), ExperimentKind::MaxDegreeSecondOrder);
}

TEST(DegreeDist, ConstantWeightsGiveGeometricLaw) {
  const auto rep = run_degree_dist(plan_of(ExperimentKind::DegreeDist, WeightFamily::constant(), 20000, 5));
  EXPECT_LT(rep.statistic("tv_pk", 20000).value, 0.01);
  EXPECT_NEAR(rep.summary("zero_fraction", 20000).mean, 0.5, 0.01);
  EXPECT_EQ(rep.degree_sum_failures, 0u);
  EXPECT_EQ(rep.growth_runs, 5u);
  EXPECT_NEAR(rep.theory["pk_limit"][2].get<double>(), 0.125, 1e-12);
}

TEST(DegreeDist, TwoEdgesZeroFractionOneThird) {
  const auto rep = run_degree_dist(plan_of(ExperimentKind::DegreeDist, WeightFamily::constant(), 20000, 4, 2));
  EXPECT_NEAR(rep.theory["pk_limit"][0].get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.summary("zero_fraction", 20000).mean, 1.0 / 3.0, 0.01);
}

TEST(DegreeDist, JointMassesTrackLimit) {
  const auto rep = run_degree_dist(plan_of(ExperimentKind::DegreeDist, WeightFamily::frechet_unit_mean(3.0), 20000, 5));
  const auto& g = rep.extra["degree_law"][0]["gamma_k"];
  ASSERT_EQ(g.size(), 3u);
  for (const auto& e : g) {
    EXPECT_NEAR(e["below_median"].get<double>(), e["below_median_limit"].get<double>(), 0.01);
    EXPECT_NEAR(e["above_median"].get<double>(), e["above_median_limit"].get<double>(), 0.01);
  }
  EXPECT_THROW(run_degree_dist(plan_of(ExperimentKind::DegreeDist, WeightFamily::frechet_pareto(1.5, 1.0), 100, 1)),
               DomainError);
}

TEST(Experiments, ReproducibleAndThreadIndependent) {
  auto p = plan_of(ExperimentKind::MaxDegreeFirstOrder, WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true), 3000, 6);
  p.ladder = {300, 3000};
  p.threads = 1;
  const auto a = run_max_first_order(p);
  p.threads = 3;
  const auto b = run_max_first_order(p);
  EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
  EXPECT_EQ(a.rows.size(), 12u);
  EXPECT_EQ(a.rows[0].seed, derive_seed(2024, 0));
}

TEST(FirstOrder, ConditionalOnlySkipsGrowth) {
  auto p = plan_of(ExperimentKind::MaxDegreeFirstOrder, WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true), 100000, 5);
  p.conditional_only = true;
  const auto rep = run_max_first_order(p);
  EXPECT_EQ(rep.growth_runs, 0u);
  EXPECT_FALSE(rep.has_column("max_ratio"));
  const double med = rep.median("cond_max_ratio", 100000);
  EXPECT_GT(med, 0.7);
  EXPECT_LT(med, 1.3);
}

TEST(FirstOrder, ConstantWeightsRatioNearOne) {
  const auto rep = run_max_first_order(plan_of(ExperimentKind::MaxDegreeFirstOrder, WeightFamily::constant(), 100000, 5));
  const double med = rep.median("max_ratio", 100000);
  EXPECT_GT(med, 0.7);
  EXPECT_LT(med, 1.2);
  for (double v : rep.column("max_degree", 100000)) EXPECT_GE(v, 1.0);
}

TEST(FirstOrder, FrechetReportsKsStatistics) {
  auto p = plan_of(ExperimentKind::FrechetLimit, WeightFamily::frechet_unit_mean(3.0), 5000, 40);
  const auto rep = run_experiment(p);
  for (const char* c : {"max_ratio", "cond_max_ratio", "location_fraction", "cond_location_fraction"}) {
    const auto& s = rep.statistic(c, 5000);
    EXPECT_EQ(s.kind, "KS");
    EXPECT_GE(s.value, 0.0);
    EXPECT_LE(s.value, 1.0);
  }
  p.config.family = WeightFamily::constant();
  EXPECT_THROW(run_frechet_limit(p), DomainError);
}

TEST(FirstOrder, InfiniteMeanComparesWithZFunctional) {
  auto p = plan_of(ExperimentKind::MaxDegreeFirstOrder, WeightFamily::frechet_pareto(1.5, 1.0), 2000, 20);
  p.reference_draws = 500;
  const auto rep = run_max_first_order(p);
  EXPECT_EQ(rep.statistic("max_ratio", 2000).kind, "KS2");
  for (double v : rep.column("cond_max_ratio", 2000)) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(SecondOrder, TargetsAndRegimeChecks) {
  auto p = plan_of(ExperimentKind::MaxDegreeSecondOrder, WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true), 10000, 2);
  p.conditional_only = true;
  EXPECT_DOUBLE_EQ(run_second_order(p).theory["target"].get<double>(), 0.5);
  p.config.family = WeightFamily::gumbel_rav(2.0, 1.0, 1.0, 0.0, true);
  p.config.n = 1000000;
  p.replicas = 1;
  EXPECT_DOUBLE_EQ(run_second_order(p).theory["target"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(second_order_target(WeightFamily::gumbel_rav(4.0, 1.0, 1.0, 0.0, true)), -18.0);
  p.config.family = WeightFamily::constant();
  EXPECT_THROW(run_second_order(p), DomainError);
  p.config.family = WeightFamily::gumbel_rv(2.0, 1.0, 1.0, 0.0, true);
  EXPECT_THROW(run_second_order(p), DomainError);
}

TEST(WindowGumbel, StatisticAndLocation) {
  auto p = plan_of(ExperimentKind::WindowGumbel, WeightFamily::gumbel_rv(0.5, 1.0, 1.0, 0.0, true), 100000, 60);
  p.window = WindowSpec{};
  p.conditional_only = true;
  const auto rep = run_window_gumbel(p);
  EXPECT_NEAR(rep.theory["gumbel_location"].get<double>(), 0.0, 1e-15);
  for (double x : rep.column("cond_window_location", 100000)) {
    EXPECT_GE(x, 1.0 - 1e-9);
    EXPECT_LE(x, std::exp(1.0) + 1e-9);
  }
  // Gumbel(0) has median -log log 2 = 0.3665
  EXPECT_NEAR(rep.median("cond_window_stat", 100000), 0.3665, 0.6);
  EXPECT_EQ(rep.statistic("cond_window_stat", 100000).samples, 60u);
}

TEST(WindowGumbel, DomainErrors) {
  auto p = plan_of(ExperimentKind::WindowGumbel, WeightFamily::gumbel_rv(0.5, 1.0, 1.0, 0.0, true), 1000, 1);
  p.window = WindowSpec{0.5, 1.0, std::exp(1.0), 0.0};  // gamma should be 2/3
  EXPECT_THROW(run_window_gumbel(p), DomainError);
  p.window = WindowSpec{std::nullopt, 1.001, 1.002, 0.0};  // no index in [100.1, 100.2]
  EXPECT_THROW(run_window_gumbel(p), DomainError);
  p.window = WindowSpec{};
  p.config.family = WeightFamily::constant();
  EXPECT_THROW(run_window_gumbel(p), DomainError);
  p.config.family = WeightFamily::gumbel_rv(1.5, 1.0, 1.0, 0.0, true);
  EXPECT_THROW(run_window_gumbel(p), DomainError);
}

TEST(Concentration, NonNegativeAndDecreasing) {
  auto p = plan_of(ExperimentKind::Concentration, WeightFamily::gumbel_rv(1.0, 1.0, 1.0, 0.0, true), 100000, 6);
  p.ladder = {1000, 100000};
  const auto rep = run_concentration(p);
  for (auto n : p.sizes()) {
    for (double v : rep.column("concentration", n)) EXPECT_GE(v, 0.0);
  }
  EXPECT_LT(rep.median("concentration", 100000), rep.median("concentration", 1000));
  p.conditional_only = true;
  EXPECT_THROW(run_concentration(p), DomainError);
  p.conditional_only = false;
  p.config.family = WeightFamily::constant();
  EXPECT_THROW(run_concentration(p), DomainError);
}

TEST(ZeroDegree, FractionAndFit) {
  auto p = plan_of(ExperimentKind::ZeroDegreeFraction, WeightFamily::frechet_pareto(1.5, 1.0), 10000, 3);
  p.ladder = {1000, 10000};
  const auto rep = run_zero_degree_fraction(p);
  EXPECT_NEAR(rep.theory["exponent"].get<double>(), 1.0 / 3.0, 1e-15);
  for (auto n : p.sizes()) {
    for (double v : rep.column("zero_fraction", n)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_TRUE(rep.extra.contains("fit"));
  p.config.family = WeightFamily::frechet_pareto(1.2, 1.0);
  p.replicas = 1;
  EXPECT_NEAR(run_zero_degree_fraction(p).theory["exponent"].get<double>(), 1.0 / 6.0, 1e-15);
  p.config.family = WeightFamily::frechet_unit_mean(3.0);
  EXPECT_THROW(run_zero_degree_fraction(p), DomainError);
}

TEST(LocationScaling, ExponentColumns) {
  auto p = plan_of(ExperimentKind::LocationScaling, WeightFamily::gumbel_sv(1.0, 1.0, 1.0, 0.0, true), 5000, 4);
  const auto rep = run_location_scaling(p);
  EXPECT_EQ(rep.theory["location"]["exponent"].get<double>(), 0.0);
  for (double v : rep.column("cond_location_exponent", 5000)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Reports, FilesNamedByHashAndSeed) {
  auto p = plan_of(ExperimentKind::DegreeDist, WeightFamily::constant(), 500, 3);
  p.kmax = 5;
  const auto rep = run_experiment(p);
  const auto dir = std::filesystem::temp_directory_path() / "wrg_report_test";
  std::filesystem::remove_all(dir);
  const auto paths = write_report(rep, dir);
  const std::string stem = paths.json.stem().string();
  EXPECT_NE(stem.find("degree_dist_"), std::string::npos);
  EXPECT_NE(stem.find("_seed2024"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(paths.csv));
  std::ifstream csv(paths.csv);
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 4);
  std::ifstream js(paths.json);
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["regime"], "bounded_atom");
  EXPECT_EQ(j["seeds"].size(), 3u);
  EXPECT_EQ(j["plan_hash"].get<std::uint64_t>(), p.hash());
  std::filesystem::remove_all(dir);
}
