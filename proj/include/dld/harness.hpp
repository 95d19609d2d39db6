#ifndef DLD_HARNESS_HPP
#define DLD_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dld/attacks.hpp"
#include "dld/defenses.hpp"
#include "dld/error.hpp"
#include "dld/generators.hpp"
#include "dld/margin.hpp"
#include "dld/rng.hpp"
#include "dld/victims.hpp"

namespace dld {

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to index-keyed slots so that output does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Stream tags for Rng::derive.
enum StreamTag : std::uint64_t {
  kSampleStream = 1,
  kAttackStream = 2,
  kDefenseStream = 3,
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class VictimKind { Synthetic, Landscape };

struct VictimSpec {
  VictimKind kind = VictimKind::Synthetic;
  std::size_t input_dims = 32;
  std::size_t num_classes = 10;
  std::uint64_t seed = 1;
  double scale = SyntheticClassifier::kDefaultScale;
  double spread = SyntheticClassifier::kDefaultSpread;
  /// Pixels per prototype knot; 1 draws every coordinate independently.
  std::size_t cell = 1;
  /// Std-dev of clean draws around each class prototype.
  double sample_noise = 0.1;
  double landscape_l0 = 7.0;
  double landscape_lipschitz = 20.0;
};

/// A named defense column: optional input noise plus a score post-processor.
struct DefenseSpec {
  std::string name = "none";
  std::optional<RndParams> pre;
  LossMap post = LossMap::identity();
  /// Set when a deterministic DLD's set was built from (step, ratio).
  std::optional<std::pair<double, double>> step_ratio;
};

/// A tactic row. An empty spec is the "none" row (clean accuracy, one query).
struct TacticEntry {
  std::string name = "none";
  std::optional<TacticSpec> spec;
};

/// Which trace entries a run record keeps: none, new lowest observed losses
/// only, every accepted candidate, or every query.
enum class TraceMode { None, Minima, Accepted, Full };

struct ExperimentConfig {
  VictimSpec victim;
  std::vector<DefenseSpec> defenses;
  std::vector<TacticEntry> tactics;
  GeneratorSpec generator;
  std::size_t sample_count = 200;
  std::size_t budget = 2500;
  std::uint64_t root_seed = kDefaultSeed;
  std::size_t trials = 10000;
  unsigned threads = 1;
  TraceMode trace = TraceMode::Accepted;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.sample_count < 1) throw ConfigError("sample_count must be >= 1");
  if (cfg.budget < 1) throw ConfigError("budget must be >= 1");
  if (cfg.defenses.empty()) throw ConfigError("at least one defense is required");
  if (cfg.tactics.empty()) throw ConfigError("at least one tactic is required");
  if (cfg.victim.input_dims < 1) throw ConfigError("victim.input_dims must be >= 1");
  if (cfg.victim.num_classes < 2) throw ConfigError("victim.num_classes must be >= 2");
  if (!(cfg.victim.sample_noise >= 0.0)) throw ConfigError("victim.sample_noise must be >= 0");
  validate(cfg.generator);
  if (cfg.generator.kind == GeneratorKind::Idealized && cfg.victim.kind != VictimKind::Landscape) {
    throw ConfigError("the idealized generator needs victim.kind = landscape");
  }
  for (const auto& d : cfg.defenses) {
    if (d.pre) validate(*d.pre);
  }
  for (const auto& t : cfg.tactics) {
    if (t.spec) validate(*t.spec);
  }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Compact per-run record for export.
struct RunRecord {
  std::size_t sample = 0;
  std::size_t label = 0;
  Outcome outcome = Outcome::BudgetExhausted;
  std::size_t queries_used = 0;
  std::size_t reversal_count = 0;
  std::optional<std::size_t> success_query;
  std::vector<TraceEntry> trace;
};

struct CellResult {
  std::string defense;
  std::string tactic;
  double accuracy = 1.0;
  std::vector<double> asr_curve;
  double mean_queries = 0.0;
  double mean_reversals = 0.0;
  double sd_reversals = 0.0;
  std::vector<RunRecord> runs;
};

struct BoundCheck {
  std::string name;
  double empirical = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
  /// "le": empirical <= bound + 3 sigma. "ge": empirical >= bound - 3 sigma.
  /// "within": |empirical - bound| <= 3 sigma. "gt": empirical > bound.
  std::string relation = "le";
  std::size_t trials = 0;
  bool pass = false;
  std::vector<std::pair<std::string, double>> details;
};

/// Sets and returns c.pass from the relation.
inline bool evaluate(BoundCheck& c) {
  if (c.relation == "le") {
    c.pass = c.empirical <= c.bound + 3.0 * c.sigma;
  } else if (c.relation == "ge") {
    c.pass = c.empirical >= c.bound - 3.0 * c.sigma;
  } else if (c.relation == "within") {
    c.pass = std::abs(c.empirical - c.bound) <= 3.0 * c.sigma;
  } else if (c.relation == "gt") {
    c.pass = c.empirical > c.bound;
  } else {
    throw ConfigError("unknown bound relation '" + c.relation + "'");
  }
  return c.pass;
}

struct ExperimentResult {
  std::vector<std::string> defenses;
  std::vector<std::string> tactics;
  std::vector<CellResult> cells;  // tactic-major
  std::vector<BoundCheck> bound_checks;

  const CellResult& cell(std::size_t tactic, std::size_t defense) const {
    return cells.at(tactic * defenses.size() + defense);
  }

  const CellResult& cell(const std::string& tactic, const std::string& defense) const {
    for (const auto& c : cells) {
      if (c.tactic == tactic && c.defense == defense) return c;
    }
    throw ConfigError("no result cell for tactic '" + tactic + "' and defense '" + defense + "'");
  }
};

// ---------------------------------------------------------------------------
// ASR curves
// ---------------------------------------------------------------------------

/// Entry q-1 is the fraction of runs whose success came at query index <= q.
inline std::vector<double> asr_curve(const std::vector<AttackRun>& runs, std::size_t budget) {
  if (runs.empty()) throw PreconditionError("asr_curve needs at least one run");
  std::vector<double> counts(budget, 0.0);
  for (const auto& r : runs) {
    if (r.success() && r.success_query && *r.success_query >= 1 && *r.success_query <= budget) {
      counts[*r.success_query - 1] += 1.0;
    }
  }
  double acc = 0.0;
  for (double& c : counts) {
    acc += c;
    c = acc / static_cast<double>(runs.size());
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Victims and samples
// ---------------------------------------------------------------------------

struct LabeledSample {
  Input x;
  Label label;
};

/// The victim plus its correctly classified evaluation samples.
struct VictimSet {
  std::unique_ptr<Classifier> model;
  const MarginOracle* oracle = nullptr;
  std::vector<LabeledSample> samples;
};

inline VictimSet make_victims(const ExperimentConfig& cfg) {
  VictimSet vs;
  if (cfg.victim.kind == VictimKind::Landscape) {
    auto land = std::make_unique<RobustLandscapeModel>(cfg.victim.landscape_l0, cfg.victim.landscape_lipschitz,
                                                       cfg.victim.input_dims);
    vs.oracle = land.get();
    for (std::size_t i = 0; i < cfg.sample_count; ++i) vs.samples.push_back({land->x0(), Label{0}});
    vs.model = std::move(land);
    return vs;
  }
  auto clf = std::make_unique<SyntheticClassifier>(cfg.victim.input_dims, cfg.victim.num_classes, cfg.victim.seed,
                                                   cfg.victim.scale, cfg.victim.spread, cfg.victim.cell);
  for (std::size_t i = 0; i < cfg.sample_count; ++i) {
    const std::size_t c = i % cfg.victim.num_classes;
    Rng rng = Rng::derive(cfg.root_seed, {kSampleStream, i});
    // Misclassified draws are redrawn.
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000) throw ConfigError("could not draw a correctly classified sample; lower sample_noise");
      Input x = clf->sample(c, cfg.victim.sample_noise, rng);
      if (margin_loss(clf->scores(x), Label{c}) > 0.0) {
        vs.samples.push_back({std::move(x), Label{c}});
        break;
      }
    }
  }
  vs.model = std::move(clf);
  return vs;
}

inline std::unique_ptr<CandidateGenerator> make_generator(const ExperimentConfig& cfg, const VictimSet& vs,
                                                          std::span<const double> x0) {
  if (cfg.generator.kind == GeneratorKind::Idealized) {
    return std::make_unique<IdealizedGenerator>(cfg.generator, x0, vs.oracle, vs.model->input_range());
  }
  return std::make_unique<SquareGenerator>(cfg.generator, x0, vs.model->input_range(), cfg.budget);
}

// ---------------------------------------------------------------------------
// Attack x defense matrix
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<TraceEntry> compact_trace(const AttackRun& run, TraceMode mode) {
  if (mode == TraceMode::Full) return run.loss_trace;
  std::vector<TraceEntry> out;
  if (mode == TraceMode::Accepted) {
    for (const auto& e : run.loss_trace) {
      if (e.accepted) out.push_back(e);
    }
  } else if (mode == TraceMode::Minima) {
    for (const auto& e : run.loss_trace) {
      if (e.accepted && (out.empty() || e.observed < out.back().observed)) out.push_back(e);
    }
  }
  return out;
}

}  // namespace detail

/// Attacks every sample under every (defense, tactic) cell and reports the
/// fraction still correctly classified when each episode ends.
///
/// Streams: the attacker's stream depends only on (tactic, sample), so all
/// defenses face the same proposal sequence; each defended model draws from
/// its own (defense, tactic, sample) stream.
inline ExperimentResult run_matrix(const ExperimentConfig& cfg) {
  validate(cfg);
  const VictimSet vs = make_victims(cfg);
  const std::size_t nd = cfg.defenses.size();
  const std::size_t nt = cfg.tactics.size();
  const std::size_t ns = vs.samples.size();

  std::vector<AttackRun> runs(nd * nt * ns);
  parallel_for(runs.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t t = job / (nd * ns);
    const std::size_t d = (job / ns) % nd;
    const std::size_t i = job % ns;
    const DefenseSpec& def = cfg.defenses[d];
    const LabeledSample& smp = vs.samples[i];
    DefendedModel model(*vs.model, def.post, def.pre, Rng::derive(cfg.root_seed, {kDefenseStream, d, t, i}));
    const TacticEntry& tactic = cfg.tactics[t];
    AttackRun& run = runs[job];
    if (!tactic.spec) {
      // Clean accuracy: a single query of the unperturbed sample.
      const double m = margin_loss(model.query(smp.x), smp.label);
      run.best_x = smp.x;
      run.observed_loss = m;
      run.queries_used = 1;
      run.loss_trace.push_back({1, m, true, m});
      run.outcome = m < 0.0 ? Outcome::Success : Outcome::BudgetExhausted;
      if (m < 0.0) run.success_query = 1;
      return;
    }
    auto gen = make_generator(cfg, vs, smp.x);
    Rng rng = Rng::derive(cfg.root_seed, {kAttackStream, t, i});
    run = run_tactic(model, smp.x, smp.label, *gen, *tactic.spec, cfg.budget, rng);
    if (vs.oracle) run.final_true_margin = vs.oracle->true_margin(run.best_x);
  });

  ExperimentResult result;
  for (const auto& d : cfg.defenses) result.defenses.push_back(d.name);
  for (const auto& t : cfg.tactics) result.tactics.push_back(t.name);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t d = 0; d < nd; ++d) {
      const auto first = runs.begin() + static_cast<std::ptrdiff_t>((t * nd + d) * ns);
      std::vector<AttackRun> cell_runs(std::make_move_iterator(first),
                                       std::make_move_iterator(first + static_cast<std::ptrdiff_t>(ns)));
      CellResult cell;
      cell.defense = cfg.defenses[d].name;
      cell.tactic = cfg.tactics[t].name;
      const std::size_t horizon = cfg.tactics[t].spec ? cfg.budget : 1;
      cell.asr_curve = asr_curve(cell_runs, horizon);
      cell.accuracy = 1.0 - cell.asr_curve.back();
      double q = 0.0, rev = 0.0, rev2 = 0.0;
      for (std::size_t i = 0; i < ns; ++i) {
        const AttackRun& r = cell_runs[i];
        q += static_cast<double>(r.queries_used);
        rev += static_cast<double>(r.reversal_count);
        rev2 += static_cast<double>(r.reversal_count) * static_cast<double>(r.reversal_count);
        cell.runs.push_back({i, vs.samples[i].label.index, r.outcome, r.queries_used, r.reversal_count,
                             r.success_query, detail::compact_trace(r, cfg.trace)});
      }
      const double n = static_cast<double>(ns);
      cell.mean_queries = q / n;
      cell.mean_reversals = rev / n;
      cell.sd_reversals = std::sqrt(std::max(0.0, rev2 / n - cell.mean_reversals * cell.mean_reversals));
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

enum class SweepAxis { Ratio, Step, Tau };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Ratio: return "ratio";
    case SweepAxis::Step: return "step";
    case SweepAxis::Tau: return "tau";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "ratio") return SweepAxis::Ratio;
  if (s == "step") return SweepAxis::Step;
  if (s == "tau") return SweepAxis::Tau;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (expected ratio, step or tau)");
}

/// Copy of `cfg` with the swept parameter set to `value` on every DLD column.
/// Ratio and step sweeps rebuild S from (step, ratio), holding the other
/// coordinate at the column's own value (default step 0.04, ratio 0.5).
inline ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, SweepAxis axis, double value) {
  if (axis == SweepAxis::Ratio && !(value >= 0.0 && value <= 1.0)) throw ConfigError("ratio values must lie in [0, 1]");
  if (axis == SweepAxis::Step && !(value > 0.0 && value <= 1.0)) throw ConfigError("step values must lie in (0, 1]");
  if (axis == SweepAxis::Tau && !(value > 0.0)) throw ConfigError("tau values must be > 0");
  ExperimentConfig out = cfg;
  for (DefenseSpec& d : out.defenses) {
    if (const auto* p = std::get_if<DldParams>(&d.post.params())) {
      DldParams q = *p;
      if (axis == SweepAxis::Tau) {
        q.tau = value;
      } else {
        auto [step, ratio] = d.step_ratio.value_or(std::pair{0.04, 0.5});
        (axis == SweepAxis::Ratio ? ratio : step) = value;
        q.s = build_interval_set(step, ratio);
        d.step_ratio = std::pair{step, ratio};
      }
      d.post = LossMap(q);
    } else if (const auto* r = std::get_if<RandomDldParams>(&d.post.params())) {
      RandomDldParams q = *r;
      if (axis == SweepAxis::Tau) q.tau = value;
      if (axis == SweepAxis::Ratio) q.p = value;
      d.post = LossMap(q);
    }
  }
  return out;
}

inline std::vector<ExperimentResult> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                                           const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> configs;
  for (double v : values) configs.push_back(apply_sweep_value(cfg, axis, v));
  std::vector<ExperimentResult> out;
  for (const auto& c : configs) out.push_back(run_matrix(c));
  return out;
}

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

/// floor(num / den) with a relative guard against representation error
/// (e.g. (6 - 0.2) / 0.1 evaluating to 57.999...).
inline double floor_ratio(double num, double den) {
  const double q = num / den;
  const double r = std::round(q);
  return std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q)) ? r : std::floor(q);
}

/// Success-probability bound for standard-SQA: p^floor((tau - eps) / eps).
inline double theorem1_bound(double tau, double p, double eps) {
  return std::pow(p, std::max(0.0, floor_ratio(tau - eps, eps)));
}

/// Expected-reversal bound for the reverse tactic: 2 floor((tau - 2 eps) / eps) p (1 - p).
inline double theorem2_bound(double tau, double p, double eps) {
  return 2.0 * std::max(0.0, floor_ratio(tau - 2.0 * eps, eps)) * p * (1.0 - p);
}

/// Published closed form for the queries needed until a random-DLD shows two
/// distinct outputs: 1 + 1 / (p (1 - p)).
inline double expected_probes_formula(double p) { return 1.0 + 1.0 / (p * (1.0 - p)); }

/// Exact mean of that stopping time. After the first output, the wait for the
/// other branch is geometric: 1 + p / (1 - p) + (1 - p) / p = 1 / (p (1 - p)) - 1.
inline double exact_expected_probes(double p) { return 1.0 / (p * (1.0 - p)) - 1.0; }

/// Setting shared by the landscape-based checks. The landscape's Lipschitz
/// constant is chosen so the whole descent fits inside [0, 1].
struct LandscapeTrialSpec {
  double tau = 6.0;
  double h = 0.3;
  double p = 0.5;
  /// Theorem step bound: per-step true-margin change stays below eps.
  double eps = 1.0;
  /// Per-step margin decrease as a fraction of eps, in (0, 1).
  double drift = 0.9;
  /// Initial true margin; must be >= tau.
  double l0 = 6.0;
  std::size_t trials = 10000;
  std::size_t dims = 2;
  unsigned threads = 1;
};

inline void validate(const LandscapeTrialSpec& s) {
  validate(RandomDldParams{s.tau, s.h, s.p});
  if (!(s.eps > 0.0)) throw ConfigError("eps must be > 0");
  if (!(s.drift > 0.0 && s.drift < 1.0)) throw ConfigError("drift must lie in (0, 1) so steps stay below eps");
  if (!(s.l0 >= s.tau)) throw ConfigError("initial margin l0 must be >= tau");
  if (s.trials < 1) throw ConfigError("trials must be >= 1");
  if (s.dims < 1) throw ConfigError("dims must be >= 1");
}

/// Landscape, idealized generator spec and per-step drift for one setting.
struct LandscapeSetup {
  RobustLandscapeModel model;
  GeneratorSpec gen;
  double step_margin;
};

inline LandscapeSetup make_landscape_setup(const LandscapeTrialSpec& s) {
  const double step_margin = s.drift * s.eps;
  // Travel to the floor (and one step past it) within 0.4 input units.
  const double lipschitz = (s.l0 - RobustLandscapeModel::kDefaultFloor + step_margin) / 0.4;
  LandscapeSetup setup{RobustLandscapeModel(s.l0, lipschitz, s.dims), GeneratorSpec{}, step_margin};
  setup.gen.kind = GeneratorKind::Idealized;
  setup.gen.norm = Norm::Linf;
  setup.gen.epsilon_n = 0.5;
  setup.gen.step = step_margin / lipschitz;
  return setup;
}

namespace detail {

// Which random-DLD branch produced `observed` for true margin L; ties (at an
// interval start both branches agree) count as High.
inline Branch observed_branch(double observed, double true_margin, double tau, double h) {
  const double hi = loss_high(true_margin, tau, h);
  const double lo = loss_low(true_margin, tau, h);
  return std::abs(observed - lo) < std::abs(observed - hi) ? Branch::Low : Branch::High;
}

inline double binomial_sigma(double p, std::size_t n) {
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& v) {
  MeanSe r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return r;
}

}  // namespace detail

/// Monte-Carlo check of the standard-SQA success bound against random-DLD.
///
/// Each trial runs the standard tactic with the idealized generator on a
/// fresh landscape episode. A trial is stopped as failed once it is locked:
/// the accepted sample sits on the falling branch and the next candidate
/// stays in the same tau-interval, so no later candidate can show a lower
/// observed loss.
inline BoundCheck verify_theorem1(const LandscapeTrialSpec& spec, Rng& rng) {
  validate(spec);
  const std::uint64_t base = rng.next_u64();
  const LandscapeSetup setup = make_landscape_setup(spec);
  const RandomDldParams params{spec.tau, spec.h, spec.p};
  // Descent to below zero needs about l0 / step_margin steps; the rest is slack.
  const std::size_t budget = static_cast<std::size_t>(std::ceil(spec.l0 / setup.step_margin)) * 4 + 16;

  std::vector<char> success(spec.trials, 0);
  std::vector<char> locked(spec.trials, 0);
  parallel_for(spec.trials, spec.threads, [&](std::size_t k) {
    IdealizedGenerator gen(setup.gen, setup.model.x0(), &setup.model, setup.model.input_range());
    DefendedModel model(setup.model, LossMap(params), std::nullopt, Rng::derive(base, {k, 0}));
    Rng attacker = Rng::derive(base, {k, 1});
    const StopRule lock = [&](const AttackRun& run) {
      const double l = setup.model.true_margin(run.best_x);
      if (l < 0.0) return false;
      if (detail::observed_branch(run.observed_loss, l, spec.tau, spec.h) != Branch::Low) return false;
      const double next = setup.model.true_margin(gen.peek(run.best_x));
      return next >= 0.0 && loss_bias(next, spec.tau) == loss_bias(l, spec.tau);
    };
    const AttackRun run = run_standard(model, setup.model.x0(), gen, budget, attacker, Label{0}, lock);
    success[k] = run.success() ? 1 : 0;
    locked[k] = run.outcome == Outcome::Stopped ? 1 : 0;
  });

  BoundCheck c;
  c.name = "theorem1";
  c.relation = "le";
  c.trials = spec.trials;
  double wins = 0.0, traps = 0.0;
  for (std::size_t k = 0; k < spec.trials; ++k) {
    wins += success[k];
    traps += locked[k];
  }
  c.empirical = wins / static_cast<double>(spec.trials);
  c.bound = theorem1_bound(spec.tau, spec.p, spec.eps);
  c.sigma = detail::binomial_sigma(c.bound, spec.trials);
  evaluate(c);
  c.details = {{"tau", spec.tau}, {"h", spec.h}, {"p", spec.p}, {"eps", spec.eps},
               {"step_margin", setup.step_margin}, {"l0", spec.l0},
               {"trapped_fraction", traps / static_cast<double>(spec.trials)}};
  return c;
}

/// Monte-Carlo check of the expected-reversal bound.
///
/// Follows the forced-acceptance chain: every idealized candidate is
/// accepted, and a reversal is counted whenever two consecutive accepted
/// samples land on different random-DLD branches. The chain runs while the
/// true margin stays non-negative.
///
/// The operational reverse tactic (threshold t) is also run on the same
/// setting, and its mean reversal count is reported as a detail only.
inline BoundCheck verify_theorem2(const LandscapeTrialSpec& spec, int threshold, Rng& rng) {
  validate(spec);
  if (threshold < 1) throw ConfigError("reverse threshold must be >= 1");
  const std::uint64_t base = rng.next_u64();
  const LandscapeSetup setup = make_landscape_setup(spec);
  const RandomDldParams params{spec.tau, spec.h, spec.p};

  std::vector<double> reversals(spec.trials, 0.0);
  parallel_for(spec.trials, spec.threads, [&](std::size_t k) {
    IdealizedGenerator gen(setup.gen, setup.model.x0(), &setup.model, setup.model.input_range());
    DefendedModel model(setup.model, LossMap(params), std::nullopt, Rng::derive(base, {k, 0}));
    Input x = setup.model.x0();
    std::optional<Branch> previous;
    std::size_t flips = 0;
    for (;;) {
      x = gen.peek(x);
      const double l = setup.model.true_margin(x);
      if (l < 0.0) break;
      const double observed = margin_loss(model.query(x), Label{0});
      const Branch b = detail::observed_branch(observed, l, spec.tau, spec.h);
      if (previous && *previous != b) ++flips;
      previous = b;
    }
    reversals[k] = static_cast<double>(flips);
  });

  // Observational: the operational reverse tactic on the same setting.
  const std::size_t op_trials = std::min<std::size_t>(spec.trials, 1000);
  std::vector<double> op_reversals(op_trials, 0.0);
  std::vector<double> op_success(op_trials, 0.0);
  parallel_for(op_trials, spec.threads, [&](std::size_t k) {
    IdealizedGenerator gen(setup.gen, setup.model.x0(), &setup.model, setup.model.input_range());
    DefendedModel model(setup.model, LossMap(params), std::nullopt, Rng::derive(base, {k, 2}));
    Rng attacker = Rng::derive(base, {k, 3});
    const AttackRun run = run_reverse(model, setup.model.x0(), gen, 2500, threshold, attacker, Label{0});
    op_reversals[k] = static_cast<double>(run.reversal_count);
    op_success[k] = run.success() ? 1.0 : 0.0;
  });

  const auto stats = detail::mean_and_se(reversals);
  const auto op = detail::mean_and_se(op_reversals);
  const auto op_win = detail::mean_and_se(op_success);
  BoundCheck c;
  c.name = "theorem2";
  c.relation = "ge";
  c.trials = spec.trials;
  c.empirical = stats.mean;
  c.sigma = stats.se;
  c.bound = theorem2_bound(spec.tau, spec.p, spec.eps);
  evaluate(c);
  c.details = {{"tau", spec.tau}, {"h", spec.h}, {"p", spec.p}, {"eps", spec.eps},
               {"step_margin", setup.step_margin}, {"threshold", static_cast<double>(threshold)},
               {"operational_mean_reversals", op.mean}, {"operational_success_rate", op_win.mean}};
  return c;
}

/// Fraction of uniformly drawn margins on [0, periods * tau) that a
/// deterministic DLD routes to its rising branch.
inline double branch_proportion(const DldParams& params, std::size_t num_samples, std::size_t periods, Rng& rng) {
  validate(params);
  if (num_samples < 1) throw PreconditionError("branch_proportion needs num_samples >= 1");
  if (periods < 1) throw PreconditionError("branch_proportion needs a positive number of periods");
  const double hi = static_cast<double>(periods) * params.tau;
  std::size_t high = 0;
  for (std::size_t i = 0; i < num_samples; ++i) {
    if (dld_branch(rng.uniform(0.0, hi), params) == Branch::High) ++high;
  }
  return static_cast<double>(high) / static_cast<double>(num_samples);
}

struct ProbeStats {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Simulated stopping time of the two-distinct-outputs probe on a fixed
/// margin (one that is not an interval start, so both branches differ).
inline ProbeStats expected_bypass_probes(double p, std::size_t trials, Rng& rng, double tau = 6.0, double h = 0.3) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("bypass probes need p in (0, 1); at p = 0 or 1 the outputs never differ");
  if (trials < 1) throw PreconditionError("trials must be >= 1");
  const RandomDldParams params{tau, h, p};
  validate(params);
  const double margin = 0.5 * tau;
  std::vector<double> counts(trials);
  for (double& c : counts) {
    const double first = random_dld_map(margin, params, rng);
    std::size_t n = 1;
    for (;;) {
      ++n;
      if (random_dld_map(margin, params, rng) != first) break;
    }
    c = static_cast<double>(n);
  }
  const auto s = detail::mean_and_se(counts);
  return {s.mean, s.se};
}

struct BypassAttackSpec {
  LandscapeTrialSpec landscape;
  /// Budget as a multiple of the undefended standard attack's query cost.
  double budget_factor = 10.0;
  std::size_t max_probes = 30;
};

struct BypassAttackResult {
  std::size_t undefended_queries = 0;
  std::size_t budget = 0;
  double bypass_success = 0.0;
  double standard_success = 0.0;
  double deterministic_bypass_success = 0.0;
  double mean_bypass_queries = 0.0;
  std::vector<AttackRun> sample_runs;  // first few bypass runs, for export
};

/// Repeat-query bypass against random-DLD on the landscape: compares the
/// bypass-driven attack with standard-SQA at the same budget, and with the
/// bypass against a deterministic DLD (where every probe is inconclusive).
inline BypassAttackResult run_bypass_experiment(const BypassAttackSpec& spec, Rng& rng,
                                                std::size_t keep_runs = 0) {
  validate(spec.landscape);
  if (!(spec.budget_factor >= 1.0)) throw ConfigError("budget_factor must be >= 1");
  if (spec.max_probes < 2) throw ConfigError("max_probes must be >= 2");
  const auto& ls = spec.landscape;
  const std::uint64_t base = rng.next_u64();
  const LandscapeSetup setup = make_landscape_setup(ls);

  BypassAttackResult out;
  {
    IdealizedGenerator gen(setup.gen, setup.model.x0(), &setup.model, setup.model.input_range());
    DefendedModel clean(setup.model);
    Rng unused(base);
    const AttackRun run = run_standard(clean, setup.model.x0(), gen, 1000000, unused, Label{0});
    if (!run.success()) throw ConfigError("undefended landscape attack did not succeed");
    out.undefended_queries = run.queries_used;
  }
  out.budget = static_cast<std::size_t>(std::ceil(spec.budget_factor * static_cast<double>(out.undefended_queries)));

  const RandomDldParams rparams{ls.tau, ls.h, ls.p};
  DldParams dparams;
  dparams.tau = ls.tau;
  dparams.h = ls.h;
  std::vector<double> by(ls.trials), st(ls.trials), det(ls.trials), q(ls.trials);
  std::vector<AttackRun> kept(std::min(keep_runs, ls.trials));
  parallel_for(ls.trials, ls.threads, [&](std::size_t k) {
    IdealizedGenerator gen(setup.gen, setup.model.x0(), &setup.model, setup.model.input_range());
    Rng attacker = Rng::derive(base, {k, 1});
    {
      DefendedModel model(setup.model, LossMap(rparams), std::nullopt, Rng::derive(base, {k, 0}));
      AttackRun run = run_bypass(model, setup.model.x0(), Label{0}, gen, out.budget, spec.max_probes, attacker);
      by[k] = run.success() ? 1.0 : 0.0;
      q[k] = static_cast<double>(run.queries_used);
      if (k < kept.size()) kept[k] = std::move(run);
    }
    {
      DefendedModel model(setup.model, LossMap(rparams), std::nullopt, Rng::derive(base, {k, 2}));
      st[k] = run_standard(model, setup.model.x0(), gen, out.budget, attacker, Label{0}).success() ? 1.0 : 0.0;
    }
    {
      DefendedModel model(setup.model, LossMap(dparams), std::nullopt, Rng::derive(base, {k, 3}));
      det[k] = run_bypass(model, setup.model.x0(), Label{0}, gen, out.budget, spec.max_probes, attacker).success()
                   ? 1.0
                   : 0.0;
    }
  });
  out.bypass_success = detail::mean_and_se(by).mean;
  out.standard_success = detail::mean_and_se(st).mean;
  out.deterministic_bypass_success = detail::mean_and_se(det).mean;
  out.mean_bypass_queries = detail::mean_and_se(q).mean;
  out.sample_runs = std::move(kept);
  return out;
}

}  // namespace dld

#endif  // DLD_HARNESS_HPP
