#ifndef DLD_DEFENSES_HPP
#define DLD_DEFENSES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "dld/error.hpp"
#include "dld/interval_set.hpp"
#include "dld/margin.hpp"
#include "dld/rng.hpp"

namespace dld {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct IdentityParams {
  friend bool operator==(const IdentityParams&, const IdentityParams&) = default;
};

/// Deterministic dashed-line defense: interval length tau, branch split h,
/// and the set of fractional positions routed to the rising branch.
struct DldParams {
  double tau = 6.0;
  double h = 0.3;
  IntervalSet s = dashed_interval_set();

  friend bool operator==(const DldParams&, const DldParams&) = default;
};

/// Randomized variant: rising branch with probability p on every call.
struct RandomDldParams {
  double tau = 6.0;
  double h = 0.3;
  double p = 0.5;

  friend bool operator==(const RandomDldParams&, const RandomDldParams&) = default;
};

struct AaaLinearParams {
  double tau = 6.0;

  friend bool operator==(const AaaLinearParams&, const AaaLinearParams&) = default;
};

struct AaaSineParams {
  double tau = 6.0;
  double alpha = 0.7;

  friend bool operator==(const AaaSineParams&, const AaaSineParams&) = default;
};

/// Input-noise pre-processor; nu is the per-coordinate standard deviation.
struct RndParams {
  double nu = 0.01;

  friend bool operator==(const RndParams&, const RndParams&) = default;
};

inline void validate(const IdentityParams&) {}

inline void validate_tau_h(double tau, double h) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be > 0");
  if (!(h >= 0.0 && h <= 1.0)) throw ConfigError("h must lie in [0, 1]");
}

inline void validate(const DldParams& p) { validate_tau_h(p.tau, p.h); }

inline void validate(const RandomDldParams& p) {
  validate_tau_h(p.tau, p.h);
  if (!(p.p >= 0.0 && p.p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
}

inline void validate(const AaaLinearParams& p) {
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw ConfigError("tau must be > 0");
}

inline void validate(const AaaSineParams& p) {
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw ConfigError("tau must be > 0");
  if (!std::isfinite(p.alpha)) throw ConfigError("alpha must be finite");
}

inline void validate(const RndParams& p) {
  if (!(p.nu >= 0.0) || !std::isfinite(p.nu)) throw ConfigError("nu must be >= 0");
}

// ---------------------------------------------------------------------------
// Dashed-line pieces
// ---------------------------------------------------------------------------

/// Start of the tau-interval containing L (floor toward -inf).
inline double loss_bias(double loss, double tau) { return std::floor(loss / tau) * tau; }

/// Rising branch: slope (1 - h), starts at bias + h*tau.
inline double loss_high(double loss, double tau, double h) {
  const double bias = loss_bias(loss, tau);
  return bias + h * tau + (1.0 - h) * (loss - bias);
}

/// Falling branch: slope -h, starts at bias + h*tau.
inline double loss_low(double loss, double tau, double h) {
  const double bias = loss_bias(loss, tau);
  return bias + h * tau - h * (loss - bias);
}

enum class Branch { High, Low };

/// Fractional position of L inside its tau-interval, in [0, 1).
inline double interval_fraction(double loss, double tau) {
  return (loss - loss_bias(loss, tau)) / tau;
}

inline Branch dld_branch(double loss, const DldParams& params) {
  return params.s.contains(interval_fraction(loss, params.tau)) ? Branch::High : Branch::Low;
}

inline double branch_value(Branch b, double loss, double tau, double h) {
  return b == Branch::High ? loss_high(loss, tau, h) : loss_low(loss, tau, h);
}

inline double dld_map(double loss, const DldParams& params) {
  return branch_value(dld_branch(loss, params), loss, params.tau, params.h);
}

/// One Bernoulli(p) draw per call picks the branch.
inline double random_dld_map(double loss, const RandomDldParams& params, Rng& rng) {
  const Branch b = rng.bernoulli(params.p) ? Branch::High : Branch::Low;
  return branch_value(b, loss, params.tau, params.h);
}

// ---------------------------------------------------------------------------
// AAA baselines
// ---------------------------------------------------------------------------

/// Sawtooth: slope -1 on every [k*tau, (k+1)*tau).
inline double aaa_linear_map(double loss, double tau) {
  return 2.0 * std::floor(loss / tau) * tau + tau - loss;
}

inline double aaa_sine_map(double loss, double tau, double alpha) {
  const double k = std::floor(loss / tau);
  const double phase = 1.0 - (2.0 * loss - (2.0 * k + 1.0) * tau) / tau;
  return loss - alpha * tau * std::sin(std::numbers::pi * phase);
}

// ---------------------------------------------------------------------------
// LossMap
// ---------------------------------------------------------------------------

/// Scalar margin remapping applied by a post-processing defense.
class LossMap {
 public:
  using Params = std::variant<IdentityParams, DldParams, RandomDldParams, AaaLinearParams, AaaSineParams>;

  LossMap() = default;

  template <class P>
    requires std::is_constructible_v<Params, P>
  LossMap(P params) : params_(std::move(params)) {  // NOLINT(google-explicit-constructor)
    std::visit([](const auto& p) { validate(p); }, params_);
  }

  static LossMap identity() { return LossMap(IdentityParams{}); }

  const Params& params() const { return params_; }

  std::string_view variant_name() const {
    constexpr std::string_view names[] = {"identity", "dld", "random-dld", "aaa-linear", "aaa-sine"};
    return names[params_.index()];
  }

  bool is_identity() const { return std::holds_alternative<IdentityParams>(params_); }
  bool is_randomized() const { return std::holds_alternative<RandomDldParams>(params_); }

  /// rng is consumed only by the random-dld variant.
  double operator()(double loss, Rng& rng) const {
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, IdentityParams>) {
            return loss;
          } else if constexpr (std::is_same_v<T, DldParams>) {
            return dld_map(loss, p);
          } else if constexpr (std::is_same_v<T, RandomDldParams>) {
            return random_dld_map(loss, p, rng);
          } else if constexpr (std::is_same_v<T, AaaLinearParams>) {
            return aaa_linear_map(loss, p.tau);
          } else {
            return aaa_sine_map(loss, p.tau, p.alpha);
          }
        },
        params_);
  }

  friend bool operator==(const LossMap&, const LossMap&) = default;

 private:
  Params params_;
};

/// Label-preserving score adjustment: the top entry is replaced by
/// (runner-up + map(margin)); every other entry is returned bit-identical.
inline ScoreVector apply_postprocess(const ScoreVector& s, const LossMap& map, Rng& rng) {
  if (map.is_identity()) return s;
  const Label top = predicted_label(s);
  const double runner_up = best_other(s, top.index).second;
  const double remapped = map(s[top.index] - runner_up, rng);
  ScoreVector out = s;
  out.set(top.index, runner_up + remapped);
  return out;
}

// ---------------------------------------------------------------------------
// RND pre-processing
// ---------------------------------------------------------------------------

/// Per-coordinate input box.
struct InputRange {
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const InputRange&, const InputRange&) = default;
};

/// x + N(0, nu^2) per coordinate, clamped to the victim's input box.
inline std::vector<double> rnd_preprocess(std::span<const double> x, const RndParams& params, InputRange range,
                                          Rng& rng) {
  std::vector<double> out(x.begin(), x.end());
  if (params.nu == 0.0) return out;
  for (double& v : out) v = std::clamp(v + params.nu * rng.normal(), range.lo, range.hi);
  return out;
}

}  // namespace dld

#endif  // DLD_DEFENSES_HPP
