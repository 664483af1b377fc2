#include <cstdio>
#include <gtest/gtest.h>

#include "hwflow/harness.hpp"

namespace {

using namespace hwflow;

ExperimentConfig base_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.master_seed = 20260809;
  return cfg;
}

TEST(Config, JsonRoundTrip) {
  json j = {{"experiment", "current"},
            {"model", "discrete"},
            {"dist", {{"kind", "beta"}, {"a", 2.0}, {"b", 2.0}}},
            {"scales", {64}},
            {"replicates", 500},
            {"master_seed", 42},
            {"points", {{{"t", 1.0}, {"r", 0.0}}}},
            {"profile", {{"kind", "linear"}, {"slope", 0.7}}},
            {"noise", true}};
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  EXPECT_EQ(cfg.experiment, ExperimentKind::kCurrent);
  EXPECT_EQ(cfg.model, ModelKind::kDiscrete);
  EXPECT_EQ(cfg.replicates, 500);
  EXPECT_EQ(cfg.profile.kind, ProfileKind::kLinear);
  const json back = cfg.to_json();
  EXPECT_EQ(back["experiment"], "current");
  EXPECT_EQ(back["scales"][0], 64);
  // unknown experiment and tiny replicate counts are config errors
  json bad = j;
  bad["experiment"] = "nope";
  EXPECT_THROW(ExperimentConfig::from_json(bad), std::domain_error);
  bad = j;
  bad["replicates"] = 10;
  EXPECT_THROW(ExperimentConfig::from_json(bad), std::domain_error);
}

TEST(Config, HashStableUnderKeyOrder) {
  json a = {{"b", 1}, {"a", 2}};
  json b = {{"a", 2}, {"b", 1}};
  EXPECT_EQ(config_hash(a), config_hash(b));
  json c = {{"a", 2}, {"b", 3}};
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Assertions, OperatorsAndBounds) {
  ExperimentConfig cfg = base_config(ExperimentKind::kReturnDecay);
  cfg.assertions = {{"le ok", "x", "le", 1.0, "", "", 0.0, 1.0},
                    {"ge fail", "x", "ge", 1.0, "", "", 0.0, 1.0},
                    {"abs ok", "y", "abs_le", 0.5, "", "", 0.0, 1.0},
                    {"within se", "x", "within", 0.4, "", "se", 0.0, 3.0}};
  EnsembleResult res;
  res.put("x", 0.5);
  res.put("y", -0.3);
  res.put("se", 0.05);
  evaluate_assertions(cfg, res);
  ASSERT_EQ(res.assertions.size(), 4u);
  EXPECT_TRUE(res.assertions[0].pass);
  EXPECT_FALSE(res.assertions[1].pass);
  EXPECT_TRUE(res.assertions[2].pass);
  EXPECT_TRUE(res.assertions[3].pass);  // |0.5 - 0.4| <= 0.15
  EXPECT_FALSE(res.all_pass());
}

TEST(RunTwoPointCov, SmallRunPassesDefaults) {
  ExperimentConfig cfg = base_config(ExperimentKind::kTwoPointCov);
  cfg.dt = 1e-3;
  cfg.replicates = 8000;
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
  EXPECT_GT(res.stat("g_plus_h"), 0.6);
  EXPECT_LT(res.stat("g_plus_h"), 0.7);
}

TEST(RunLocalTime, SmallRunPassesDefaults) {
  ExperimentConfig cfg = base_config(ExperimentKind::kLocalTime);
  cfg.dt = 1e-3;
  cfg.replicates = 8000;
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
  // u = 0.6 is beyond the structural cutoff: tail and target both zero
  EXPECT_DOUBLE_EQ(res.stat("tail_2"), 0.0);
  EXPECT_DOUBLE_EQ(res.stat("tail_2_target"), 0.0);
}

TEST(RunReturnDecay, SlopeInBand) {
  ExperimentConfig cfg = base_config(ExperimentKind::kReturnDecay);
  cfg.dt = 2e-3;
  cfg.replicates = 3000;
  cfg.n_blocks = 32;
  cfg.fit_k_lo = 4;
  cfg.fit_k_hi = 31;
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
}

TEST(RunQip, DiscreteDeterministicReducesToClassicalClt) {
  // deterministic environment: the quenched law is binomial; its KS distance
  // to the Gaussian is the classical de Moivre-Laplace discreteness error
  ExperimentConfig cfg = base_config(ExperimentKind::kQip);
  cfg.model = ModelKind::kDiscrete;
  cfg.dist.kind = EnvKind::kDeterministic;
  cfg.dist.p = 0.5;
  cfg.scales = {256, 512};
  cfg.n_envs = 2;
  const EnsembleResult res = run_experiment(cfg);
  // binomial-vs-Gaussian KS: the classical discreteness error, about
  // phi(0) / sqrt(n); generous band around it
  EXPECT_GT(res.stat("ks_max_512"), 0.005);
  EXPECT_LT(res.stat("ks_max_512"), 0.05);
  EXPECT_GT(res.stat("ks_max_256"), res.stat("ks_max_512"));
  // deterministic environment: quenched mean drift vanishes
  EXPECT_NEAR(res.stat("z_mean_256"), 0.0, 1e-12);
  EXPECT_TRUE(res.all_pass());
}

TEST(RunQip, BetaEnvironments) {
  ExperimentConfig cfg = base_config(ExperimentKind::kQip);
  cfg.model = ModelKind::kDiscrete;
  cfg.scales = {64, 256, 1024};
  cfg.n_envs = 12;
  // the 0.05 KS level of the shipped config is calibrated for n = 4096;
  // at n = 1024 the exact quenched law still sits ~0.04-0.06 away from the
  // Gaussian (its variance fluctuates at order n^{-1/4}), so this smaller
  // run pins a level measured for its own scale
  cfg.assertions = {
      {"quenched-law KS at n=1024", "ks_max_1024", "le", 0.08, "", "", 0.0, 1.0},
      {"drift statistic decreasing in n", "z_mean_worst_increase", "le", 1e-12, "", "", 0.0, 1.0}};
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
  // drift statistic means decrease along the scales
  EXPECT_LT(res.stat("z_mean_1024"), res.stat("z_mean_64"));
  // and the quenched law tightens toward the Gaussian as n grows
  EXPECT_LT(res.stat("ks_max_1024"), res.stat("ks_max_64"));
}

TEST(RunQuenchedMean, DiscreteDefaults) {
  ExperimentConfig cfg = base_config(ExperimentKind::kQuenchedMean);
  cfg.model = ModelKind::kDiscrete;
  cfg.master_seed = 20260815;
  cfg.scales = {16, 32, 64, 128};
  cfg.replicates = 3000;
  cfg.points = {{1.0, 0.0}, {1.0, 0.5}, {1.0, 1.0}};
  // the default [0.4, 0.6] slope band is calibrated for the acceptance
  // scales {64..4096}; at these small scales the additive constant in
  // sum p_k biases the slope low, so the band is widened accordingly
  cfg.assertions = {
      {"variance scaling slope upper", "var_scaling_slope", "le", 0.65, "", "", 0.0, 1.0},
      {"variance scaling slope lower", "var_scaling_slope", "ge", 0.3, "", "", 0.0, 1.0},
      {"a_n mean zero", "mean_pt0", "within", 0.0, "", "mean_se_pt0", 0.0, 3.0},
      {"a_n normality", "ks_an", "le", 0.0, "ks_crit_1pct", "", 0.0, 1.0},
      {"cov oracle pt1", "cov_01", "within", 0.0, "oracle_01", "cov_01_se", 0.0, 3.0},
      {"cov oracle pt2", "cov_02", "within", 0.0, "oracle_02", "cov_02_se", 0.0, 3.0},
      {"cov decays", "cov_trend_violation", "le", 0.0, "", "", 0.0, 1.0}};
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
}

TEST(RunQuenchedMean, ContinuumSamplerValidation) {
  ExperimentConfig cfg = base_config(ExperimentKind::kQuenchedMean);
  cfg.model = ModelKind::kContinuum;
  cfg.replicates = 20000;
  cfg.points = {{1.0, 0.0}, {1.0, 0.5}, {0.5, -0.3}};
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
}

TEST(RunCurrent, AdditivityAndOracle) {
  ExperimentConfig cfg = base_config(ExperimentKind::kCurrent);
  cfg.model = ModelKind::kDiscrete;
  cfg.scales = {64};
  cfg.replicates = 4000;
  cfg.points = {{1.0, 0.0}, {1.0, 0.5}};
  cfg.profile.kind = ProfileKind::kLinear;
  cfg.profile.slope = 0.7;
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass()) << res.to_json().dump(2);
  EXPECT_TRUE(res.has_stat("additivity_gap"));
  EXPECT_TRUE(res.has_stat("oracle_01"));
}

TEST(RunCurrent, ZeroProfileNoNoiseDegenerate) {
  ExperimentConfig cfg = base_config(ExperimentKind::kCurrent);
  cfg.model = ModelKind::kDiscrete;
  cfg.scales = {32};
  cfg.replicates = 200;
  cfg.points = {{1.0, 0.0}};
  cfg.noise_on = false;
  cfg.assertions = {{"zn identically zero", "var_full", "abs_le", 1e-20, "", "", 0.0, 1.0}};
  const EnsembleResult res = run_experiment(cfg);
  EXPECT_TRUE(res.all_pass());
}

TEST(Reproducibility, JobsDoNotChangePayload) {
  ExperimentConfig cfg = base_config(ExperimentKind::kTwoPointCov);
  cfg.dt = 2e-3;
  cfg.replicates = 2000;
  cfg.jobs = 1;
  const EnsembleResult a = run_experiment(cfg);
  cfg.jobs = 4;
  const EnsembleResult b = run_experiment(cfg);
  json ja = a.to_json(), jb = b.to_json();
  ja["metadata"].erase("wall_ms");
  jb["metadata"].erase("wall_ms");
  ja["metadata"]["config"].erase("jobs");
  jb["metadata"]["config"].erase("jobs");
  EXPECT_EQ(ja.dump(), jb.dump());
  EXPECT_EQ(a.tables.at("replicates"), b.tables.at("replicates"));
}

TEST(Reproducibility, SeedChangesPayload) {
  ExperimentConfig cfg = base_config(ExperimentKind::kTwoPointCov);
  cfg.dt = 2e-3;
  cfg.replicates = 500;
  const EnsembleResult a = run_experiment(cfg);
  cfg.master_seed += 1;
  const EnsembleResult b = run_experiment(cfg);
  EXPECT_NE(a.stat("cov_mc"), b.stat("cov_mc"));
}

}  // namespace
