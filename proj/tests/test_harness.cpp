#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dld/dld.hpp"
#include "oracles.hpp"

using namespace dld;

namespace {

ExperimentConfig small_matrix() {
  ExperimentConfig cfg;
  cfg.victim.input_dims = 64;
  cfg.victim.cell = 2;
  cfg.victim.spread = 0.2;
  cfg.victim.scale = 30;
  cfg.victim.sample_noise = 0.05;
  cfg.sample_count = 12;
  cfg.budget = 300;
  cfg.generator.epsilon_n = 0.1;
  DefenseSpec none;
  DefenseSpec rnd{"rnd", RndParams{0.02}, LossMap::identity(), std::nullopt};
  DefenseSpec dld{"dld", std::nullopt, LossMap(DldParams{}), std::nullopt};
  DefenseSpec aaa{"aaa-linear", std::nullopt, LossMap(AaaLinearParams{}), std::nullopt};
  cfg.defenses = {none, rnd, dld, aaa};
  cfg.tactics = {TacticEntry{}, TacticEntry{"standard", TacticSpec{TacticKind::Standard}},
                 TacticEntry{"reverse", TacticSpec{TacticKind::Reverse}}};
  return cfg;
}

AttackRun run_at(std::optional<std::size_t> q) {
  AttackRun r;
  if (q) {
    r.outcome = Outcome::Success;
    r.success_query = q;
  }
  return r;
}

}  // namespace

TEST(Harness, AsrCurve) {
  const auto none = asr_curve({run_at({}), run_at({})}, 20);
  for (double v : none) EXPECT_EQ(v, 0.0);
  const auto half = asr_curve({run_at(10), run_at({})}, 20);
  for (std::size_t q = 1; q <= 20; ++q) EXPECT_EQ(half[q - 1], q < 10 ? 0.0 : 0.5);
  Rng rng(3);
  std::vector<AttackRun> runs;
  for (int i = 0; i < 50; ++i) runs.push_back(rng.bernoulli(0.5) ? run_at(1 + rng.uniform_index(100)) : run_at({}));
  const auto c = asr_curve(runs, 100);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c[i], c[i - 1]);
  EXPECT_THROW(asr_curve({}, 10), PreconditionError);
}

TEST(Harness, MatrixNoneRowAndDeterminism) {
  ExperimentConfig cfg = small_matrix();
  const ExperimentResult r = run_matrix(cfg);
  ASSERT_EQ(r.cells.size(), 12u);
  EXPECT_EQ(r.cell("none", "none").accuracy, 1.0);
  EXPECT_EQ(r.cell("none", "dld").accuracy, 1.0);
  EXPECT_EQ(r.cell("none", "aaa-linear").accuracy, 1.0);
  EXPECT_LE(r.cell("none", "rnd").accuracy, 1.0);
  // The undefended attack makes progress at this budget.
  EXPECT_LT(r.cell("standard", "none").accuracy, 1.0);

  cfg.threads = 3;
  const ExperimentResult again = run_matrix(cfg);
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    EXPECT_EQ(r.cells[k].accuracy, again.cells[k].accuracy);
    EXPECT_EQ(r.cells[k].mean_queries, again.cells[k].mean_queries);
    EXPECT_EQ(r.cells[k].asr_curve, again.cells[k].asr_curve);
  }
}

TEST(Harness, MatrixValidation) {
  ExperimentConfig cfg = small_matrix();
  cfg.budget = 0;
  EXPECT_THROW(run_matrix(cfg), ConfigError);
  cfg = small_matrix();
  cfg.generator.kind = GeneratorKind::Idealized;
  cfg.generator.step = 0.01;
  EXPECT_THROW(run_matrix(cfg), ConfigError);
}

TEST(Harness, SingleValueSweepIsOneMatrix) {
  ExperimentConfig cfg = small_matrix();
  cfg.sample_count = 5;
  const auto sw = sweep(cfg, SweepAxis::Tau, {6.0});
  const auto direct = run_matrix(cfg);
  ASSERT_EQ(sw.size(), 1u);
  for (std::size_t k = 0; k < direct.cells.size(); ++k) EXPECT_EQ(sw[0].cells[k].accuracy, direct.cells[k].accuracy);
}

TEST(Harness, SweepRebuildsIntervalSet) {
  ExperimentConfig cfg = small_matrix();
  const ExperimentConfig zero = apply_sweep_value(cfg, SweepAxis::Ratio, 0.0);
  const auto& p = std::get<DldParams>(zero.defenses[2].post.params());
  EXPECT_TRUE(p.s.empty());
  const ExperimentConfig tau = apply_sweep_value(cfg, SweepAxis::Tau, 2.0);
  EXPECT_EQ(std::get<DldParams>(tau.defenses[2].post.params()).tau, 2.0);
  EXPECT_EQ(std::get<AaaLinearParams>(tau.defenses[3].post.params()).tau, 6.0);
  EXPECT_THROW(apply_sweep_value(cfg, SweepAxis::Ratio, 1.5), ConfigError);
}

TEST(Bounds, Formulas) {
  EXPECT_DOUBLE_EQ(theorem1_bound(6, 0.5, 1), 0.03125);
  EXPECT_NEAR(theorem1_bound(6, 0.3, 1), 0.00243, 1e-15);
  EXPECT_DOUBLE_EQ(theorem1_bound(6, 1.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(theorem2_bound(6, 0.5, 1), 2.0);
  EXPECT_DOUBLE_EQ(theorem2_bound(12, 0.5, 1), 5.0);
  EXPECT_DOUBLE_EQ(theorem2_bound(6, 0.0, 1), 0.0);
  EXPECT_DOUBLE_EQ(theorem2_bound(6, 1.0, 1), 0.0);
  // Exponent survives representation error: (0.6 - 0.1) / 0.1 is 4.999...
  EXPECT_DOUBLE_EQ(floor_ratio(0.6 - 0.1, 0.1), 5.0);
  EXPECT_DOUBLE_EQ(expected_probes_formula(0.5), 5.0);
}

TEST(Bounds, EvaluateRelations) {
  BoundCheck c;
  c.empirical = 1.05;
  c.bound = 1.0;
  c.sigma = 0.02;
  c.relation = "le";
  EXPECT_TRUE(evaluate(c));
  c.relation = "ge";
  EXPECT_TRUE(evaluate(c));
  c.relation = "within";
  EXPECT_TRUE(evaluate(c));
  c.empirical = 1.1;
  EXPECT_FALSE(evaluate(c));
  c.relation = "gt";
  EXPECT_TRUE(evaluate(c));
  c.relation = "??";
  EXPECT_THROW(evaluate(c), ConfigError);
}

TEST(Bounds, Theorem1SmallRun) {
  LandscapeTrialSpec spec;
  spec.trials = 2000;
  Rng rng(kDefaultSeed);
  const BoundCheck c = verify_theorem1(spec, rng);
  EXPECT_TRUE(c.pass) << c.empirical;
  // Degenerate p = 1: pure rising branch, every episode escapes.
  spec.p = 1.0;
  spec.trials = 50;
  const BoundCheck all = verify_theorem1(spec, rng);
  EXPECT_EQ(all.empirical, 1.0);
}

TEST(Bounds, Theorem2SmallRun) {
  LandscapeTrialSpec spec;
  spec.trials = 2000;
  Rng rng(kDefaultSeed);
  const BoundCheck c = verify_theorem2(spec, 23, rng);
  EXPECT_TRUE(c.pass) << c.empirical;
  for (double p : {0.0, 1.0}) {
    spec.p = p;
    spec.trials = 20;
    const BoundCheck d = verify_theorem2(spec, 23, rng);
    EXPECT_EQ(d.bound, 0.0);
    EXPECT_EQ(d.empirical, 0.0);
  }
}

TEST(Bounds, BranchProportion) {
  Rng rng(7);
  DldParams p;
  p.s = build_interval_set(0.04, 0.5);
  const double n = 100000;
  EXPECT_NEAR(branch_proportion(p, 100000, 10, rng), 0.5, 3 * std::sqrt(0.25 / n));
  p.s = build_interval_set(0.04, 0.0);
  EXPECT_EQ(branch_proportion(p, 10000, 10, rng), 0.0);
  p.s = build_interval_set(0.04, 1.0);
  EXPECT_EQ(branch_proportion(p, 10000, 10, rng), 1.0);
  EXPECT_THROW(branch_proportion(p, 0, 10, rng), PreconditionError);
}

// Monte-Carlo stopping time against the directly summed series.
TEST(Bounds, BypassProbeExpectation) {
  for (double p : {0.5, 0.1, 0.9, 0.3}) {
    const double exact = static_cast<double>(oracle::probe_expectation(p));
    EXPECT_NEAR(exact_expected_probes(p), exact, 1e-9);
    Rng rng(kDefaultSeed);
    const ProbeStats s = expected_bypass_probes(p, 10000, rng);
    EXPECT_NEAR(s.mean, exact, 3 * s.stderr_ + 1e-12) << "p=" << p;
  }
  Rng rng(1);
  EXPECT_THROW(expected_bypass_probes(0.0, 10, rng), ConfigError);
  EXPECT_THROW(expected_bypass_probes(1.0, 10, rng), ConfigError);
}

TEST(Bounds, BypassExperiment) {
  BypassAttackSpec spec;
  spec.landscape.l0 = 7;
  spec.landscape.trials = 300;
  Rng rng(kDefaultSeed);
  const BypassAttackResult r = run_bypass_experiment(spec, rng, 3);
  EXPECT_EQ(r.undefended_queries, 9u);
  EXPECT_EQ(r.budget, 90u);
  EXPECT_GT(r.bypass_success, 0.95);
  EXPECT_LT(r.standard_success, 0.1);
  EXPECT_EQ(r.deterministic_bypass_success, 0.0);
  EXPECT_EQ(r.sample_runs.size(), 3u);
}

TEST(Harness, ParallelForPropagatesErrors) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] = 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) {
                 if (i == 5) throw InputError("boom");
               }),
               InputError);
}
