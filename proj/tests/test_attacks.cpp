#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "dld/dld.hpp"

using namespace dld;

namespace {

// Landscape with L0 = 7 and one idealized step lowering the margin by 0.9.
struct Descent {
  RobustLandscapeModel land{7.0, 20.0, 2};
  GeneratorSpec spec;
  Descent() {
    spec.kind = GeneratorKind::Idealized;
    spec.epsilon_n = 0.5;
    spec.step = 0.9 / 20.0;
  }
  IdealizedGenerator gen() const { return IdealizedGenerator(spec, land.x0(), &land, land.input_range()); }
};

}  // namespace

// --- victims ----------------------------------------------------------------

TEST(Victims, SyntheticIsDeterministic) {
  const auto a = make_synthetic_classifier(64, 10, 7);
  const auto b = make_synthetic_classifier(64, 10, 7);
  const auto c = make_synthetic_classifier(64, 10, 8);
  Rng rng(1);
  bool differs = false;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(64);
    for (double& v : x) v = rng.uniform();
    EXPECT_EQ(a.scores(x), b.scores(x));
    EXPECT_EQ(a.scores(x).size(), 10u);
    differs = differs || !(a.scores(x) == c.scores(x));
  }
  EXPECT_TRUE(differs);
}

TEST(Victims, SmoothPrototypesStayInBand) {
  const SyntheticClassifier m(256, 10, 3, 30.0, 0.2, 4);
  for (std::size_t c = 0; c < 10; ++c) {
    const auto mu = m.prototype(c);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      EXPECT_GE(mu[i], 0.4 - 1e-12);
      EXPECT_LE(mu[i], 0.6 + 1e-12);
    }
    // Neighbouring pixels on the 16 x 16 grid differ by at most a quarter of the band.
    for (std::size_t r = 0; r < 16; ++r) {
      for (std::size_t q = 0; q + 1 < 16; ++q) EXPECT_LE(std::abs(mu[r * 16 + q] - mu[r * 16 + q + 1]), 0.05 + 1e-12);
    }
  }
}

TEST(Victims, SaveLoadRoundTrip) {
  const auto m = make_synthetic_classifier(16, 4, 9);
  std::stringstream ss;
  save_classifier(m, ss);
  const auto back = load_classifier(ss);
  std::vector<double> x(16, 0.3);
  EXPECT_EQ(m.scores(x), back.scores(x));
}

TEST(Victims, LandscapeGeometry) {
  const RobustLandscapeModel land(7.0, 20.0, 3);
  EXPECT_DOUBLE_EQ(land.true_margin(land.x0()), 7.0);
  Input x = land.x0();
  x[0] += 0.01;
  EXPECT_NEAR(land.true_margin(x), 7.0 - 0.2, 1e-12);
  x[0] = 1.0;
  EXPECT_DOUBLE_EQ(land.true_margin(x), RobustLandscapeModel::kDefaultFloor);
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    Input a(3), b(3);
    for (std::size_t k = 0; k < 3; ++k) {
      a[k] = rng.uniform();
      b[k] = std::clamp(a[k] + rng.uniform(-0.01, 0.01), 0.0, 1.0);
    }
    EXPECT_LE(std::abs(land.true_margin(a) - land.true_margin(b)), 20.0 * distance(a, b, Norm::Linf) + 1e-12);
  }
}

TEST(Victims, DefendedLandscapeUnderDld) {
  const RobustLandscapeModel land(7.0, 20.0, 2);
  DefendedModel plain(land);
  EXPECT_EQ(plain.query(land.x0()), land.scores(land.x0()));
  DefendedModel dld(land, LossMap(DldParams{}));
  const ScoreVector s = dld.query(land.x0());
  // frac 1/6 falls inside (0.16, 0.18] of the default set: rising branch.
  EXPECT_NEAR(margin_loss(s, Label{0}), 8.5, 1e-12);
  DefendedModel falling(land, LossMap(DldParams{6.0, 0.3, IntervalSet{}}));
  EXPECT_NEAR(margin_loss(falling.query(land.x0()), Label{0}), 7.5, 1e-12);
  EXPECT_EQ(dld.query(land.x0()), s);
  EXPECT_EQ(dld.query_count(), 2u);
  EXPECT_THROW(dld.query(std::vector<double>{0.5}), InputError);
  EXPECT_THROW(dld.query(std::vector<double>{0.5, 1.5}), InputError);
}

TEST(Victims, GlobalRobustnessCheck) {
  const RobustLandscapeModel land(7.0, 20.0, 2);
  Rng rng(8);
  const Region region{land.x0(), 0.2, Norm::Linf};
  EXPECT_TRUE(verify_global_robustness(land, region, 0.01, 2 * 20.0 * 0.01 + 1e-6, 2000, rng));
  EXPECT_FALSE(verify_global_robustness(land, region, 0.01, 0.01, 2000, rng));
  EXPECT_THROW(verify_global_robustness(land, region, 0.01, 1.0, 0, rng), PreconditionError);
}

// --- generators ---------------------------------------------------------------

TEST(Generators, SquareLinfStaysInBallAndPatch) {
  GeneratorSpec spec;
  spec.epsilon_n = 0.05;
  const Input x0(64, 0.5);
  SquareGenerator gen(spec, x0, {}, 2500);
  Rng rng(12);
  Input cur = x0;
  for (std::size_t it = 0; it < 300; ++it) {
    const Input next = gen.propose(cur, it, rng);
    std::size_t rmin = 8, rmax = 0, cmin = 8, cmax = 0, changed = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      EXPECT_LE(std::abs(next[i] - x0[i]), 0.05 + 1e-12);
      if (next[i] != cur[i]) {
        ++changed;
        rmin = std::min(rmin, i / 8);
        rmax = std::max(rmax, i / 8);
        cmin = std::min(cmin, i % 8);
        cmax = std::max(cmax, i % 8);
      }
    }
    if (changed > 0) {
      EXPECT_LE(rmax - rmin + 1, gen.side(it));
      EXPECT_LE(cmax - cmin + 1, gen.side(it));
    }
    cur = next;
  }
}

TEST(Generators, SquareL2StaysInBall) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::SquareL2;
  spec.epsilon_n = 0.5;
  const Input x0(64, 0.5);
  SquareGenerator gen(spec, x0, {}, 2500);
  Rng rng(13);
  Input cur = x0;
  for (std::size_t it = 0; it < 300; ++it) {
    cur = gen.propose(cur, it, rng);
    EXPECT_LE(distance(cur, x0, Norm::L2), 0.5 + 1e-9);
  }
}

TEST(Generators, IdealizedStep) {
  Descent d;
  auto gen = d.gen();
  Rng rng(0);
  Input x = d.land.x0();
  for (int i = 0; i < 5; ++i) {
    const Input next = gen.propose(x, i, rng);
    EXPECT_LE(distance(next, x, Norm::Linf), d.spec.step + 1e-15);
    EXPECT_NEAR(d.land.true_margin(next), d.land.true_margin(x) - 0.9, 1e-9);
    x = next;
  }
}

// --- tactics ----------------------------------------------------------------

TEST(Tactics, BudgetOfOne) {
  Descent d;
  auto gen = d.gen();
  DefendedModel model(d.land);
  Rng rng(1);
  const AttackRun run = run_standard(model, d.land.x0(), gen, 1, rng);
  EXPECT_EQ(run.outcome, Outcome::BudgetExhausted);
  EXPECT_EQ(run.best_x, d.land.x0());
  EXPECT_EQ(run.queries_used, 1u);
}

TEST(Tactics, UndefendedDescentIsFast) {
  Descent d;
  auto gen = d.gen();
  DefendedModel model(d.land);
  Rng rng(1);
  const AttackRun run = run_standard(model, d.land.x0(), gen, 2500, rng);
  ASSERT_TRUE(run.success());
  EXPECT_LE(run.queries_used, 9u);
  EXPECT_EQ(*run.success_query, run.queries_used);
  // Best-sample loss never rises under the standard tactic.
  for (std::size_t i = 1; i < run.loss_trace.size(); ++i) EXPECT_LE(run.loss_trace[i].best, run.loss_trace[i - 1].best);
}

TEST(Tactics, SaAcceptanceProbability) {
  EXPECT_NEAR(sa_acceptance_probability(25, 25), std::exp(-1.0), 1e-15);
  EXPECT_EQ(sa_acceptance_probability(-1, 25), 1.0);
}

TEST(Tactics, ReverseWithHugeThresholdIsStandard) {
  const auto clf = make_synthetic_classifier(64, 10, 2);
  Rng s(3);
  const Input x0 = clf.sample(4, 0.05, s);
  GeneratorSpec spec;
  spec.epsilon_n = 0.1;
  SquareGenerator g1(spec, x0, {}, 300), g2(spec, x0, {}, 300);
  DefendedModel m1(clf), m2(clf);
  Rng r1(9), r2(9);
  const AttackRun a = run_standard(m1, x0, g1, 300, r1, Label{4});
  const AttackRun b = run_reverse(m2, x0, g2, 300, 1000000, r2, Label{4});
  EXPECT_EQ(b.reversal_count, 0u);
  ASSERT_EQ(a.loss_trace.size(), b.loss_trace.size());
  for (std::size_t i = 0; i < a.loss_trace.size(); ++i) {
    EXPECT_EQ(a.loss_trace[i].observed, b.loss_trace[i].observed);
    EXPECT_EQ(a.loss_trace[i].accepted, b.loss_trace[i].accepted);
  }
}

TEST(Tactics, FixedProbabilityExtremes) {
  const auto clf = make_synthetic_classifier(64, 10, 2);
  Rng s(3);
  const Input x0 = clf.sample(1, 0.05, s);
  GeneratorSpec spec;
  spec.epsilon_n = 0.1;
  SquareGenerator g1(spec, x0, {}, 200), g2(spec, x0, {}, 200), g3(spec, x0, {}, 200);
  DefendedModel m1(clf), m2(clf), m3(clf);
  Rng r1(5), r2(5), r3(5);
  const AttackRun std_run = run_standard(m1, x0, g1, 200, r1, Label{1});
  const AttackRun zero = run_randomized(m2, x0, g2, 200, ProbSchedule::fixed(0.0), r2, Label{1});
  ASSERT_EQ(std_run.loss_trace.size(), zero.loss_trace.size());
  for (std::size_t i = 0; i < zero.loss_trace.size(); ++i) {
    EXPECT_EQ(std_run.loss_trace[i].accepted, zero.loss_trace[i].accepted);
  }
  const AttackRun one = run_randomized(m3, x0, g3, 200, ProbSchedule::fixed(1.0), r3, Label{1});
  for (const auto& e : one.loss_trace) EXPECT_TRUE(e.accepted);
}

// Stagnation counting: with a defense that makes every candidate look worse,
// the reverse flag flips once every t + 1 queries.
TEST(Tactics, ReverseFlipsAfterThreshold) {
  Descent d;
  auto gen = d.gen();
  // AAA-linear turns the monotone descent into a rising observed loss inside
  // each interval, so standard sees no improvement until an interval edge.
  DefendedModel model(d.land, LossMap(AaaLinearParams{100.0}));
  Rng rng(1);
  const AttackRun run = run_reverse(model, d.land.x0(), gen, 40, 3, rng, Label{0});
  EXPECT_GE(run.reversal_count, 1u);
  // Entry 0 is the initial query. The next three candidates are rejected,
  // the fourth flips the direction and is accepted.
  ASSERT_GE(run.loss_trace.size(), 5u);
  EXPECT_FALSE(run.loss_trace[1].accepted);
  EXPECT_FALSE(run.loss_trace[2].accepted);
  EXPECT_FALSE(run.loss_trace[3].accepted);
  EXPECT_TRUE(run.loss_trace[4].accepted);
}

TEST(Tactics, StartAlreadyAdversarial) {
  Descent d;
  auto gen = d.gen();
  DefendedModel model(d.land);
  Rng rng(1);
  const AttackRun run = run_standard(model, d.land.x0(), gen, 10, rng, Label{1});
  EXPECT_TRUE(run.success());
  EXPECT_EQ(run.success_query, 1u);
  EXPECT_THROW(run_standard(model, d.land.x0(), gen, 0, rng), PreconditionError);
}

// --- bypass -----------------------------------------------------------------

TEST(Bypass, DeterministicDefenseIsInconclusive) {
  Descent d;
  DefendedModel model(d.land, LossMap(DldParams{}));
  const BypassProbe p = bypass_random_dld(model, d.land.x0(), Label{0}, 30);
  EXPECT_FALSE(p.conclusive);
  EXPECT_EQ(p.probes, 30u);
}

TEST(Bypass, RecoversRisingBranch) {
  Descent d;
  DefendedModel model(d.land, LossMap(RandomDldParams{6, 0.3, 0.5}), std::nullopt, Rng(4));
  const BypassProbe p = bypass_random_dld(model, d.land.x0(), Label{0}, 60);
  ASSERT_TRUE(p.conclusive);
  EXPECT_NEAR(p.recovered_high, loss_high(7.0, 6, 0.3), 1e-12);
  EXPECT_THROW(bypass_random_dld(model, d.land.x0(), Label{0}, 1), PreconditionError);
}

TEST(Bypass, AttackSucceedsThroughRandomDld) {
  Descent d;
  int wins = 0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    auto gen = d.gen();
    DefendedModel model(d.land, LossMap(RandomDldParams{6, 0.3, 0.5}), std::nullopt, Rng::derive(1, {k}));
    Rng rng(k);
    wins += run_bypass(model, d.land.x0(), Label{0}, gen, 90, 30, rng).success() ? 1 : 0;
  }
  EXPECT_GE(wins, 48);
}
