#ifndef DLD_VICTIMS_HPP
#define DLD_VICTIMS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dld/defenses.hpp"
#include "dld/error.hpp"
#include "dld/geometry.hpp"
#include "dld/margin.hpp"
#include "dld/rng.hpp"

namespace dld {

/// Deterministic, stateless scorer. Query accounting lives in DefendedModel.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t input_dims() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual InputRange input_range() const { return {}; }
  virtual ScoreVector scores(std::span<const double> x) const = 0;
};

/// Ground-truth margin access for the experiment harness. Attack tactics only
/// ever see a DefendedModel, which does not expose this.
class MarginOracle {
 public:
  virtual ~MarginOracle() = default;

  virtual double true_margin(std::span<const double> x) const = 0;
  /// Unit vector along which the true margin decreases.
  virtual std::span<const double> descent_direction() const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic classifier
// ---------------------------------------------------------------------------

/// Radial-prototype scorer: f_c(x) = -scale * ||x - mu_c||^2.
///
/// Prototypes are random fields on the most square h x w grid of the
/// input. With `cell` = 1 every coordinate is drawn independently; with a
/// larger cell a coarse grid of knots (one per `cell` pixels) is drawn and
/// bilinearly interpolated, giving spatially smooth prototypes. Values lie in
/// a band of width `spread` centred on 0.5. A fixed (dims, classes, seed,
/// scale, spread, cell) always yields the same model.
class SyntheticClassifier final : public Classifier {
 public:
  static constexpr double kDefaultScale = 12.0;
  static constexpr double kDefaultSpread = 0.6;

  SyntheticClassifier(std::size_t dims, std::size_t classes, std::uint64_t seed, double scale = kDefaultScale,
                      double spread = kDefaultSpread, std::size_t cell = 1)
      : dims_(dims), classes_(classes), seed_(seed), scale_(scale) {
    if (dims < 1) throw ConfigError("synthetic classifier needs input_dims >= 1");
    if (classes < 2) throw ConfigError("synthetic classifier needs num_classes >= 2");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("synthetic classifier scale must be > 0");
    if (!(spread > 0.0 && spread <= 1.0)) throw ConfigError("synthetic classifier spread must lie in (0, 1]");
    if (cell < 1) throw ConfigError("synthetic classifier cell must be >= 1");
    Rng rng = Rng::derive(seed, {0x5eedULL});
    prototypes_.resize(dims * classes);
    const double lo = 0.5 - 0.5 * spread;
    const double hi = 0.5 + 0.5 * spread;
    if (cell == 1) {
      for (double& w : prototypes_) w = rng.uniform(lo, hi);
      return;
    }
    const auto [h, w] = patch_grid(dims);
    const std::size_t kh = (h - 1) / cell + 2;
    const std::size_t kw = (w - 1) / cell + 2;
    std::vector<double> knots(kh * kw);
    for (std::size_t c = 0; c < classes; ++c) {
      for (double& k : knots) k = rng.uniform(lo, hi);
      double* mu = prototypes_.data() + c * dims;
      for (std::size_t r = 0; r < h; ++r) {
        const std::size_t r0 = r / cell;
        const double fr = static_cast<double>(r % cell) / static_cast<double>(cell);
        for (std::size_t q = 0; q < w; ++q) {
          const std::size_t q0 = q / cell;
          const double fq = static_cast<double>(q % cell) / static_cast<double>(cell);
          const double top = knots[r0 * kw + q0] * (1.0 - fq) + knots[r0 * kw + q0 + 1] * fq;
          const double bot = knots[(r0 + 1) * kw + q0] * (1.0 - fq) + knots[(r0 + 1) * kw + q0 + 1] * fq;
          mu[r * w + q] = top * (1.0 - fr) + bot * fr;
        }
      }
    }
  }

  /// Reload from explicit weights (see save/load below).
  SyntheticClassifier(std::size_t dims, std::size_t classes, std::uint64_t seed, double scale,
                      std::vector<double> prototypes)
      : dims_(dims), classes_(classes), seed_(seed), scale_(scale), prototypes_(std::move(prototypes)) {
    if (dims < 1 || classes < 2) throw ConfigError("invalid synthetic classifier shape");
    if (prototypes_.size() != dims * classes) throw ConfigError("prototype array has wrong length");
  }

  std::size_t input_dims() const override { return dims_; }
  std::size_t num_classes() const override { return classes_; }
  std::uint64_t seed() const { return seed_; }
  double scale() const { return scale_; }
  std::span<const double> prototype(std::size_t c) const { return {prototypes_.data() + c * dims_, dims_}; }
  std::span<const double> weights() const { return prototypes_; }

  ScoreVector scores(std::span<const double> x) const override {
    std::vector<double> out(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      const double* mu = prototypes_.data() + c * dims_;
      double d2 = 0.0;
      for (std::size_t i = 0; i < dims_; ++i) {
        const double d = x[i] - mu[i];
        d2 += d * d;
      }
      out[c] = -scale_ * d2;
    }
    return ScoreVector(std::move(out));
  }

  /// Clean draw for class c: prototype plus N(0, noise^2), clamped to [0, 1].
  Input sample(std::size_t c, double noise, Rng& rng) const {
    Input x(prototype(c).begin(), prototype(c).end());
    for (double& v : x) v = std::clamp(v + noise * rng.normal(), 0.0, 1.0);
    return x;
  }

 private:
  std::size_t dims_;
  std::size_t classes_;
  std::uint64_t seed_;
  double scale_;
  std::vector<double> prototypes_;  // row-major, classes x dims
};

inline SyntheticClassifier make_synthetic_classifier(std::size_t input_dims, std::size_t num_classes,
                                                     std::uint64_t seed,
                                                     double scale = SyntheticClassifier::kDefaultScale,
                                                     double spread = SyntheticClassifier::kDefaultSpread,
                                                     std::size_t cell = 1) {
  return SyntheticClassifier(input_dims, num_classes, seed, scale, spread, cell);
}

/// Text format: a header line, then `dims`, `classes`, `seed`, `scale`, then
/// one line per class with hexfloat weights (exact round trip).
inline void save_classifier(const SyntheticClassifier& m, std::ostream& os) {
  char buf[64];
  os << "dld-synthetic-classifier 1\n";
  os << "dims " << m.input_dims() << "\nclasses " << m.num_classes() << "\nseed " << m.seed() << "\n";
  std::snprintf(buf, sizeof buf, "%a", m.scale());
  os << "scale " << buf << "\n";
  for (std::size_t c = 0; c < m.num_classes(); ++c) {
    const auto row = m.prototype(c);
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", row[i]);
      os << (i ? " " : "") << buf;
    }
    os << "\n";
  }
}

inline SyntheticClassifier load_classifier(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "dld-synthetic-classifier" || version != 1) {
    throw ConfigError("not a dld-synthetic-classifier v1 file");
  }
  auto field = [&](const char* name) {
    std::string key, value;
    if (!(is >> key >> value) || key != name) throw ConfigError(std::string("classifier file: expected ") + name);
    return value;
  };
  const std::size_t dims = std::stoul(field("dims"));
  const std::size_t classes = std::stoul(field("classes"));
  const std::uint64_t seed = std::stoull(field("seed"));
  const double scale = std::strtod(field("scale").c_str(), nullptr);
  std::vector<double> w(dims * classes);
  for (double& v : w) {
    std::string tok;
    if (!(is >> tok)) throw ConfigError("classifier file: truncated weight array");
    char* end = nullptr;
    v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw ConfigError("classifier file: bad weight '" + tok + "'");
  }
  return SyntheticClassifier(dims, classes, seed, scale, std::move(w));
}

// ---------------------------------------------------------------------------
// Globally robust landscape
// ---------------------------------------------------------------------------

/// Two-class model whose true margin is
///   max(L0 - lipschitz * max(0, <x - x0, d>), floor)
/// with d = e_0, x0 = 0.5 * ones and input box [0, 1]. Scores are
/// (+m/2, -m/2), so every score moves at most lipschitz * ||dx|| / 2 under
/// either norm: the model is (r, eps/2)-globally robust for any eps > lipschitz * r.
class RobustLandscapeModel final : public Classifier, public MarginOracle {
 public:
  static constexpr double kDefaultFloor = -1.0;

  RobustLandscapeModel(double l0, double lipschitz, std::size_t dims, double floor = kDefaultFloor)
      : l0_(l0), lipschitz_(lipschitz), floor_(floor), x0_(dims, 0.5), direction_(dims, 0.0) {
    if (!(l0 > 0.0)) throw ConfigError("landscape L0 must be > 0");
    if (!(lipschitz > 0.0)) throw ConfigError("landscape lipschitz must be > 0");
    if (dims < 1) throw ConfigError("landscape needs dims >= 1");
    if (!(floor < l0)) throw ConfigError("landscape floor must be below L0");
    direction_[0] = 1.0;
  }

  std::size_t input_dims() const override { return x0_.size(); }
  std::size_t num_classes() const override { return 2; }

  double l0() const { return l0_; }
  double lipschitz() const { return lipschitz_; }
  double floor_value() const { return floor_; }
  const Input& x0() const { return x0_; }

  double true_margin(std::span<const double> x) const override {
    double along = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) along += (x[i] - x0_[i]) * direction_[i];
    return std::max(l0_ - lipschitz_ * std::max(0.0, along), floor_);
  }

  std::span<const double> descent_direction() const override { return direction_; }

  ScoreVector scores(std::span<const double> x) const override {
    const double m = true_margin(x);
    return ScoreVector({0.5 * m, -0.5 * m});
  }

 private:
  double l0_;
  double lipschitz_;
  double floor_;
  Input x0_;
  Input direction_;
};

inline RobustLandscapeModel make_robust_landscape(double l0, double lipschitz, std::size_t dims) {
  return RobustLandscapeModel(l0, lipschitz, dims);
}

// ---------------------------------------------------------------------------
// Defended black box
// ---------------------------------------------------------------------------

/// The attacker-facing model: optional input noise, inner classifier, score
/// post-processing, and a query counter. Randomized components draw from the
/// model's own stream.
class DefendedModel {
 public:
  DefendedModel(const Classifier& inner, LossMap post = LossMap::identity(),
                std::optional<RndParams> pre = std::nullopt, Rng rng = Rng())
      : inner_(&inner), post_(std::move(post)), pre_(pre), rng_(rng) {
    if (pre_) validate(*pre_);
  }

  std::size_t input_dims() const { return inner_->input_dims(); }
  std::size_t num_classes() const { return inner_->num_classes(); }
  InputRange input_range() const { return inner_->input_range(); }
  std::size_t query_count() const { return queries_; }
  const LossMap& post() const { return post_; }
  const std::optional<RndParams>& pre() const { return pre_; }

  ScoreVector query(std::span<const double> x) {
    check_input(x);
    ++queries_;
    if (pre_ && pre_->nu > 0.0) {
      const Input noisy = rnd_preprocess(x, *pre_, input_range(), rng_);
      return apply_postprocess(inner_->scores(noisy), post_, rng_);
    }
    return apply_postprocess(inner_->scores(x), post_, rng_);
  }

 private:
  void check_input(std::span<const double> x) const {
    if (x.size() != input_dims()) {
      throw InputError("input has " + std::to_string(x.size()) + " dims, model expects " +
                       std::to_string(input_dims()));
    }
    const InputRange r = input_range();
    for (double v : x) {
      if (!(v >= r.lo && v <= r.hi)) throw InputError("input coordinate outside the model's input range");
    }
  }

  const Classifier* inner_;
  LossMap post_;
  std::optional<RndParams> pre_;
  Rng rng_;
  std::size_t queries_ = 0;
};

// ---------------------------------------------------------------------------
// Sampled robustness check
// ---------------------------------------------------------------------------

/// Ball around `center` used as the input region.
struct Region {
  Input center;
  double radius = 0.0;
  Norm norm = Norm::Linf;
};

namespace detail {

// Uniform point of the norm ball of `radius` (rejection-free for both norms).
inline Input sample_ball(std::span<const double> center, double radius, Norm norm, Rng& rng) {
  Input x(center.begin(), center.end());
  if (norm == Norm::Linf) {
    for (double& v : x) v += rng.uniform(-radius, radius);
    return x;
  }
  Input g(center.size());
  double n2 = 0.0;
  for (double& v : g) {
    v = rng.normal();
    n2 += v * v;
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(center.size())) / std::sqrt(n2);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += g[i] * r;
  return x;
}

inline void clamp_to(std::span<double> x, InputRange r) {
  for (double& v : x) v = std::clamp(v, r.lo, r.hi);
}

}  // namespace detail

/// Falsification test of (delta, epsilon)-global robustness on `region`:
/// draws `samples` pairs with ||x1 - x2|| <= delta and reports false as soon
/// as some class score differs by >= epsilon. True means no violation found.
inline bool verify_global_robustness(const Classifier& model, const Region& region, double delta, double epsilon,
                                     std::size_t samples, Rng& rng) {
  if (samples < 1) throw PreconditionError("verify_global_robustness needs samples >= 1");
  if (region.center.size() != model.input_dims()) throw InputError("region centre has wrong dimension");
  const InputRange range = model.input_range();
  for (std::size_t k = 0; k < samples; ++k) {
    Input x1 = detail::sample_ball(region.center, region.radius, region.norm, rng);
    detail::clamp_to(x1, range);
    Input x2 = detail::sample_ball(x1, delta, region.norm, rng);
    // Both projections are non-expansive and fix x1, so ||x1 - x2|| <= delta still holds.
    project_to_ball(x2, region.center, region.radius, region.norm);
    detail::clamp_to(x2, range);
    const ScoreVector s1 = model.scores(x1);
    const ScoreVector s2 = model.scores(x2);
    for (std::size_t y = 0; y < s1.size(); ++y) {
      if (!(std::abs(s1[y] - s2[y]) < epsilon)) return false;
    }
  }
  return true;
}

}  // namespace dld

#endif  // DLD_VICTIMS_HPP
