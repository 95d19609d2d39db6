#ifndef DLD_ATTACKS_HPP
#define DLD_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dld/error.hpp"
#include "dld/generators.hpp"
#include "dld/margin.hpp"
#include "dld/rng.hpp"
#include "dld/victims.hpp"

namespace dld {

// ---------------------------------------------------------------------------
// Tactic configuration
// ---------------------------------------------------------------------------

enum class TacticKind { Standard, Reverse, Explore, Annealing };

inline std::string_view to_string(TacticKind k) {
  switch (k) {
    case TacticKind::Standard: return "standard";
    case TacticKind::Reverse: return "reverse";
    case TacticKind::Explore: return "explore";
    case TacticKind::Annealing: return "sa";
  }
  return "?";
}

inline TacticKind parse_tactic_kind(std::string_view s) {
  if (s == "standard") return TacticKind::Standard;
  if (s == "reverse") return TacticKind::Reverse;
  if (s == "explore") return TacticKind::Explore;
  if (s == "sa") return TacticKind::Annealing;
  throw ConfigError("unknown tactic '" + std::string(s) + "'");
}

struct TacticSpec {
  TacticKind kind = TacticKind::Standard;
  int reverse_threshold = 23;
  double explore_prob = 0.5;
  double sa_initial_temp = 25.0;
  double sa_decay = 0.997;
  int sa_stagnation_reset = 20;
};

inline void validate(const TacticSpec& t) {
  if (t.reverse_threshold < 1) throw ConfigError("reverse threshold t must be >= 1");
  if (!(t.explore_prob >= 0.0 && t.explore_prob <= 1.0)) throw ConfigError("explore prob must lie in [0, 1]");
  if (!(t.sa_initial_temp > 0.0)) throw ConfigError("sa initial_temp must be > 0");
  if (!(t.sa_decay > 0.0 && t.sa_decay <= 1.0)) throw ConfigError("sa decay must lie in (0, 1]");
  if (t.sa_stagnation_reset < 1) throw ConfigError("sa stagnation_reset must be >= 1");
}

/// Annealing acceptance probability for a worse candidate, capped at 1.
inline double sa_acceptance_probability(double loss_increase, double temperature) {
  return std::min(1.0, std::exp(-loss_increase / temperature));
}

// ---------------------------------------------------------------------------
// Run state
// ---------------------------------------------------------------------------

enum class Outcome {
  Success,          // some queried candidate had reference-label margin < 0
  BudgetExhausted,  // query budget spent
  ZeroMargin,       // loop left with best margin exactly 0 (counted as failure)
  Stopped,          // halted by the caller's stop rule (e.g. a detected trap)
};

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::BudgetExhausted: return "budget_exhausted";
    case Outcome::ZeroMargin: return "zero_margin";
    case Outcome::Stopped: return "stopped";
  }
  return "?";
}

/// One query: its 1-based index, observed reference-label margin, whether the
/// candidate was accepted, and the best-sample loss after the decision.
struct TraceEntry {
  std::size_t query = 0;
  double observed = 0.0;
  bool accepted = false;
  double best = 0.0;
};

struct AttackRun {
  Input best_x;
  double observed_loss = 0.0;
  std::size_t queries_used = 0;
  std::size_t iterations = 0;
  std::vector<TraceEntry> loss_trace;
  std::size_t reversal_count = 0;
  Outcome outcome = Outcome::BudgetExhausted;
  std::optional<std::size_t> success_query;
  std::optional<double> final_true_margin;

  bool success() const { return outcome == Outcome::Success; }
};

/// Called after every iteration; returning true ends the run with Outcome::Stopped.
using StopRule = std::function<bool(const AttackRun&)>;

// ---------------------------------------------------------------------------
// Tactic state machine
// ---------------------------------------------------------------------------

namespace detail {

inline AttackRun start_run(DefendedModel& model, std::span<const double> x0, std::optional<Label> label,
                           std::size_t budget, Label& y0) {
  if (budget < 1) throw PreconditionError("query budget must be >= 1");
  AttackRun run;
  run.best_x.assign(x0.begin(), x0.end());
  const ScoreVector first = model.query(x0);
  run.queries_used = 1;
  if (label) {
    y0 = *label;
    run.observed_loss = margin_loss(first, y0);
  } else {
    y0 = predicted_label(first);
    run.observed_loss = margin_loss(first, y0);
    if (!(run.observed_loss > 0.0)) throw PreconditionError("x0 is not strictly classified (margin <= 0)");
  }
  run.loss_trace.push_back({1, run.observed_loss, true, run.observed_loss});
  if (run.observed_loss < 0.0) {
    run.outcome = Outcome::Success;
    run.success_query = 1;
  }
  return run;
}

inline void finish(AttackRun& run, bool stopped) {
  if (run.outcome == Outcome::Success) return;
  if (stopped) {
    run.outcome = Outcome::Stopped;
  } else if (run.observed_loss <= 0.0) {
    run.outcome = Outcome::ZeroMargin;
  } else {
    run.outcome = Outcome::BudgetExhausted;
  }
}

}  // namespace detail

/// Runs one score-based query attack episode.
///
/// The first query fixes the reference label (unless `label` is given) and
/// the starting loss; it counts against `budget`. Every later iteration
/// proposes one candidate, queries it once and applies the tactic's
/// acceptance rule. The episode ends as soon as any queried candidate shows a
/// negative reference-label margin, when the budget is spent, or when the best
/// margin is no longer positive.
///
/// - standard: accept iff the loss strictly decreases.
/// - reverse: accept iff (decrease XOR reverse); after more than t consecutive
///   non-accepts the direction flips before the acceptance test.
/// - explore: accept improvements, otherwise accept with fixed probability.
/// - sa: as explore with probability exp(-(L_new - L) / tmp); tmp decays once
///   per iteration and is reset after `sa_stagnation_reset` straight rejections.
inline AttackRun run_tactic(DefendedModel& model, std::span<const double> x0, std::optional<Label> label,
                            CandidateGenerator& gen, const TacticSpec& tactic, std::size_t budget, Rng& rng,
                            const StopRule& stop = {}) {
  validate(tactic);
  Label y0;
  AttackRun run = detail::start_run(model, x0, label, budget, y0);
  if (run.success()) return run;

  bool reverse = false;
  int stagnation = 0;
  double temperature = tactic.sa_initial_temp;
  bool stopped = false;

  while (run.observed_loss > 0.0 && run.queries_used < budget) {
    Input candidate = gen.propose(run.best_x, run.iterations, rng);
    const ScoreVector scores = model.query(candidate);
    ++run.queries_used;
    ++run.iterations;
    const double loss_new = margin_loss(scores, y0);

    if (loss_new < 0.0) {
      run.best_x = std::move(candidate);
      run.observed_loss = loss_new;
      run.loss_trace.push_back({run.queries_used, loss_new, true, loss_new});
      run.outcome = Outcome::Success;
      run.success_query = run.queries_used;
      break;
    }

    const bool improved = loss_new < run.observed_loss;
    bool accept = false;
    switch (tactic.kind) {
      case TacticKind::Standard:
        accept = improved;
        break;
      case TacticKind::Reverse:
        if (!(improved != reverse)) ++stagnation;
        if (stagnation > tactic.reverse_threshold) {
          stagnation = 0;
          reverse = !reverse;
          ++run.reversal_count;
        }
        accept = improved != reverse;
        if (accept) stagnation = 0;
        break;
      case TacticKind::Explore:
      case TacticKind::Annealing: {
        if (improved) {
          accept = true;
        } else {
          const double prob = tactic.kind == TacticKind::Explore
                                  ? tactic.explore_prob
                                  : sa_acceptance_probability(loss_new - run.observed_loss, temperature);
          // Degenerate probabilities consume no randomness.
          accept = prob >= 1.0 ? true : prob <= 0.0 ? false : rng.bernoulli(prob);
        }
        if (tactic.kind == TacticKind::Annealing) {
          stagnation = accept ? 0 : stagnation + 1;
          temperature *= tactic.sa_decay;
          if (stagnation >= tactic.sa_stagnation_reset) {
            temperature = tactic.sa_initial_temp;
            stagnation = 0;
          }
        }
        break;
      }
    }

    if (accept) {
      run.best_x = std::move(candidate);
      run.observed_loss = loss_new;
    }
    run.loss_trace.push_back({run.queries_used, loss_new, accept, run.observed_loss});
    if (stop && stop(run)) {
      stopped = true;
      break;
    }
  }
  detail::finish(run, stopped);
  return run;
}

inline AttackRun run_standard(DefendedModel& model, std::span<const double> x0, CandidateGenerator& gen,
                              std::size_t budget, Rng& rng, std::optional<Label> label = std::nullopt,
                              const StopRule& stop = {}) {
  return run_tactic(model, x0, label, gen, TacticSpec{TacticKind::Standard}, budget, rng, stop);
}

inline AttackRun run_reverse(DefendedModel& model, std::span<const double> x0, CandidateGenerator& gen,
                             std::size_t budget, int t, Rng& rng, std::optional<Label> label = std::nullopt,
                             const StopRule& stop = {}) {
  TacticSpec spec{TacticKind::Reverse};
  spec.reverse_threshold = t;
  return run_tactic(model, x0, label, gen, spec, budget, rng, stop);
}

/// Fixed-probability exploration, or annealing when `annealing` holds a schedule.
struct ProbSchedule {
  double fixed_prob = 0.5;
  std::optional<TacticSpec> annealing;

  static ProbSchedule fixed(double p) { return {p, std::nullopt}; }
  static ProbSchedule sa(double initial_temp = 25.0, double decay = 0.997, int reset = 20) {
    TacticSpec t{TacticKind::Annealing};
    t.sa_initial_temp = initial_temp;
    t.sa_decay = decay;
    t.sa_stagnation_reset = reset;
    return {0.0, t};
  }
};

inline AttackRun run_randomized(DefendedModel& model, std::span<const double> x0, CandidateGenerator& gen,
                                std::size_t budget, const ProbSchedule& schedule, Rng& rng,
                                std::optional<Label> label = std::nullopt, const StopRule& stop = {}) {
  TacticSpec spec{TacticKind::Explore};
  if (schedule.annealing) {
    spec = *schedule.annealing;
  } else {
    spec.explore_prob = schedule.fixed_prob;
  }
  return run_tactic(model, x0, label, gen, spec, budget, rng, stop);
}

// ---------------------------------------------------------------------------
// Random-DLD repeat-query bypass
// ---------------------------------------------------------------------------

struct BypassProbe {
  /// Larger of the observed margins; equals L_high(L_real) when conclusive.
  double recovered_high = 0.0;
  std::size_t probes = 0;
  /// Two distinct outputs were seen.
  bool conclusive = false;
  /// Some probe already showed a negative margin.
  bool adversarial = false;
  double min_observed = 0.0;
};

/// Queries `x` until two distinct observed margins appear, a probe is
/// adversarial, or `max_probes` is reached. Against a deterministic defense
/// the result is always inconclusive.
namespace detail {

inline BypassProbe probe_until_distinct(DefendedModel& model, std::span<const double> x, Label y0,
                                        std::size_t max_probes, std::vector<TraceEntry>* trace,
                                        std::size_t query_offset) {
  BypassProbe r;
  std::optional<double> first;
  while (r.probes < max_probes) {
    const double obs = margin_loss(model.query(x), y0);
    ++r.probes;
    if (trace) trace->push_back({query_offset + r.probes, obs, false, 0.0});
    if (!first) {
      first = obs;
      r.recovered_high = r.min_observed = obs;
    } else {
      r.recovered_high = std::max(r.recovered_high, obs);
      r.min_observed = std::min(r.min_observed, obs);
    }
    if (obs < 0.0) {
      r.adversarial = true;
      return r;
    }
    if (obs != *first) {
      r.conclusive = true;
      return r;
    }
  }
  return r;
}

}  // namespace detail

inline BypassProbe bypass_random_dld(DefendedModel& model, std::span<const double> x, Label y0,
                                     std::size_t max_probes) {
  if (max_probes < 2) throw PreconditionError("bypass needs max_probes >= 2");
  return detail::probe_until_distinct(model, x, y0, max_probes, nullptr, 0);
}

/// Attack that probes every candidate with bypass_random_dld and minimizes the
/// recovered rising-branch value. Inconclusive candidates are rejected.
inline AttackRun run_bypass(DefendedModel& model, std::span<const double> x0, Label y0, CandidateGenerator& gen,
                            std::size_t budget, std::size_t max_probes, Rng& rng) {
  if (budget < 1) throw PreconditionError("query budget must be >= 1");
  if (max_probes < 2) throw PreconditionError("bypass needs max_probes >= 2");
  AttackRun run;
  run.best_x.assign(x0.begin(), x0.end());

  auto probe = [&](std::span<const double> x) {
    const std::size_t room = budget - run.queries_used;
    const std::size_t before = run.loss_trace.size();
    BypassProbe p = detail::probe_until_distinct(model, x, y0, std::min(max_probes, room), &run.loss_trace,
                                                 run.queries_used);
    run.queries_used += p.probes;
    for (std::size_t i = before; i < run.loss_trace.size(); ++i) run.loss_trace[i].best = run.observed_loss;
    return p;
  };

  BypassProbe start = probe(x0);
  run.observed_loss = start.recovered_high;
  for (auto& e : run.loss_trace) e.best = run.observed_loss;
  if (start.adversarial) {
    run.outcome = Outcome::Success;
    run.observed_loss = start.min_observed;
    run.success_query = run.queries_used;
    return run;
  }

  while (run.observed_loss > 0.0 && run.queries_used < budget) {
    Input candidate = gen.propose(run.best_x, run.iterations, rng);
    ++run.iterations;
    const BypassProbe p = probe(candidate);
    if (p.adversarial) {
      run.best_x = std::move(candidate);
      run.observed_loss = p.min_observed;
      run.outcome = Outcome::Success;
      run.success_query = run.queries_used;
      run.loss_trace.back().accepted = true;
      run.loss_trace.back().best = p.min_observed;
      return run;
    }
    if (p.conclusive && p.recovered_high < run.observed_loss) {
      run.best_x = std::move(candidate);
      run.observed_loss = p.recovered_high;
      run.loss_trace.back().accepted = true;
      run.loss_trace.back().best = run.observed_loss;
    }
  }
  detail::finish(run, false);
  return run;
}

}  // namespace dld

#endif  // DLD_ATTACKS_HPP
