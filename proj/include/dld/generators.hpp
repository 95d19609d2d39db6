#ifndef DLD_GENERATORS_HPP
#define DLD_GENERATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "dld/defenses.hpp"
#include "dld/error.hpp"
#include "dld/geometry.hpp"
#include "dld/rng.hpp"
#include "dld/victims.hpp"

namespace dld {

enum class GeneratorKind { SquareLinf, SquareL2, Idealized };

inline std::string_view to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::SquareLinf: return "square-linf";
    case GeneratorKind::SquareL2: return "square-l2";
    case GeneratorKind::Idealized: return "idealized";
  }
  return "?";
}

inline GeneratorKind parse_generator_kind(std::string_view s) {
  if (s == "square-linf") return GeneratorKind::SquareLinf;
  if (s == "square-l2") return GeneratorKind::SquareL2;
  if (s == "idealized") return GeneratorKind::Idealized;
  throw ConfigError("unknown generator kind '" + std::string(s) + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::SquareLinf;
  double epsilon_n = 0.05;
  /// Only consulted by the idealized generator; square kinds imply their norm.
  Norm norm = Norm::Linf;
  /// Initial fraction of coordinates covered by a square patch.
  double p_init = 0.05;
  /// Idealized generator step length r.
  double step = 0.0;

  Norm effective_norm() const {
    switch (kind) {
      case GeneratorKind::SquareLinf: return Norm::Linf;
      case GeneratorKind::SquareL2: return Norm::L2;
      case GeneratorKind::Idealized: return norm;
    }
    return norm;
  }
};

inline void validate(const GeneratorSpec& g) {
  if (!(g.epsilon_n >= 0.0) || !std::isfinite(g.epsilon_n)) throw ConfigError("epsilon_n must be >= 0");
  if (!(g.p_init > 0.0 && g.p_init <= 1.0)) throw ConfigError("p_init must lie in (0, 1]");
  if (g.kind == GeneratorKind::Idealized && !(g.step > 0.0)) throw ConfigError("idealized step must be > 0");
}

/// Proposes the next candidate from the current best sample.
class CandidateGenerator {
 public:
  virtual ~CandidateGenerator() = default;
  virtual Input propose(std::span<const double> current, std::size_t iteration, Rng& rng) = 0;
};

/// Square Attack's piecewise-constant patch-fraction schedule; the iteration
/// is rescaled to a 10,000-iteration horizon.
inline double square_patch_fraction(double p_init, std::size_t iteration, std::size_t n_iters) {
  const auto it = static_cast<long>(static_cast<double>(iteration) / static_cast<double>(std::max<std::size_t>(n_iters, 1)) * 10000.0);
  if (it <= 10) return p_init;
  if (it <= 50) return p_init / 2;
  if (it <= 200) return p_init / 4;
  if (it <= 500) return p_init / 8;
  if (it <= 1000) return p_init / 16;
  if (it <= 2000) return p_init / 32;
  if (it <= 4000) return p_init / 64;
  if (it <= 6000) return p_init / 128;
  if (it <= 8000) return p_init / 256;
  return p_init / 512;
}

/// Random-search proposals from Square Attack on a single-channel h x w view
/// of the input. Every proposal differs from the current sample inside one
/// axis-aligned square patch and lies in N(x0, epsilon_n) and the input box.
class SquareGenerator final : public CandidateGenerator {
 public:
  SquareGenerator(const GeneratorSpec& spec, std::span<const double> x0, InputRange range, std::size_t budget)
      : spec_(spec), x0_(x0.begin(), x0.end()), range_(range), budget_(budget) {
    validate(spec_);
    if (spec_.kind == GeneratorKind::Idealized) throw ConfigError("SquareGenerator needs a square kind");
    std::tie(h_, w_) = patch_grid(x0_.size());
  }

  std::size_t side(std::size_t iteration) const {
    const double p = square_patch_fraction(spec_.p_init, iteration, budget_);
    const auto s = static_cast<long>(std::lround(std::sqrt(p * static_cast<double>(x0_.size()))));
    const long cap = h_ > 1 ? static_cast<long>(h_) - 1 : 1;
    return static_cast<std::size_t>(std::clamp(s, 1L, cap));
  }

  Input propose(std::span<const double> current, std::size_t iteration, Rng& rng) override {
    const std::size_t s = side(iteration);
    return spec_.kind == GeneratorKind::SquareLinf ? propose_linf(current, s, rng) : propose_l2(current, s, rng);
  }

 private:
  struct Window {
    std::size_t row, col, side;
  };

  Window random_window(std::size_t s, Rng& rng) const {
    return {static_cast<std::size_t>(rng.uniform_index(h_ - std::min(s, h_) + 1)),
            static_cast<std::size_t>(rng.uniform_index(w_ - std::min(s, w_) + 1)), s};
  }

  template <class F>
  void for_each_in(const Window& win, F&& f) const {
    for (std::size_t r = win.row; r < std::min(win.row + win.side, h_); ++r) {
      for (std::size_t c = win.col; c < std::min(win.col + win.side, w_); ++c) f(r * w_ + c);
    }
  }

  double clip(double v) const { return std::clamp(v, range_.lo, range_.hi); }

  Input propose_linf(std::span<const double> current, std::size_t s, Rng& rng) const {
    const Window win = random_window(s, rng);
    const double eps = spec_.epsilon_n;
    // Resample the patch sign until the patch actually changes.
    double sign = rng.sign();
    auto changes = [&](double sg) {
      double diff = 0.0;
      for_each_in(win, [&](std::size_t i) { diff += std::abs(clip(x0_[i] + sg * eps) - current[i]); });
      return diff >= 1e-7;
    };
    for (int attempt = 0; attempt < 8 && !changes(sign); ++attempt) sign = rng.sign();
    if (!changes(sign)) sign = -sign;

    Input out(current.begin(), current.end());
    for_each_in(win, [&](std::size_t i) { out[i] = clip(x0_[i] + sign * eps); });
    return out;
  }

  // Centre-peaked patch of two opposite-signed halves, unit l2 norm.
  static std::vector<double> pseudo_gaussian_rect(std::size_t rows, std::size_t cols) {
    std::vector<double> d(rows * cols, 0.0);
    if (rows == 0 || cols == 0) return d;
    long r0 = static_cast<long>(rows / 2);  // x_c - 1 with x_c = rows / 2 + 1
    long c0 = static_cast<long>(cols / 2);
    const std::size_t rounds = std::max(rows / 2 + 1, cols / 2 + 1);
    for (std::size_t k = 0; k < rounds; ++k) {
      const long span = 2 * static_cast<long>(k) + 1;
      for (long r = std::max(r0, 0L); r < std::min(r0 + span, static_cast<long>(rows)); ++r) {
        for (long c = std::max(c0, 0L); c < std::min(c0 + span, static_cast<long>(cols)); ++c) {
          d[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)] += 1.0 / static_cast<double>((k + 1) * (k + 1));
        }
      }
      --r0;
      --c0;
    }
    double n = 0.0;
    for (double v : d) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0) for (double& v : d) v /= n;
    return d;
  }

  static std::vector<double> meta_pseudo_gaussian(std::size_t s, Rng& rng) {
    std::vector<double> d(s * s, 0.0);
    const std::size_t top = s / 2;
    const auto upper = pseudo_gaussian_rect(top, s);
    const auto lower = pseudo_gaussian_rect(s - top, s);
    for (std::size_t i = 0; i < upper.size(); ++i) d[i] = upper[i];
    for (std::size_t i = 0; i < lower.size(); ++i) d[top * s + i] = -lower[i];
    double n = 0.0;
    for (double v : d) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0) for (double& v : d) v /= n;
    if (rng.uniform() > 0.5) {
      std::vector<double> t(s * s);
      for (std::size_t r = 0; r < s; ++r)
        for (std::size_t c = 0; c < s; ++c) t[c * s + r] = d[r * s + c];
      d.swap(t);
    }
    return d;
  }

  Input propose_l2(std::span<const double> current, std::size_t s, Rng& rng) const {
    const double eps = spec_.epsilon_n;
    const std::size_t n = x0_.size();
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = current[i] - x0_[i];

    const Window win1 = random_window(s, rng);
    const Window win2 = random_window(s, rng);
    std::vector<char> in1(n, 0), in_any(n, 0);
    for_each_in(win1, [&](std::size_t i) { in1[i] = in_any[i] = 1; });
    for_each_in(win2, [&](std::size_t i) { in_any[i] = 1; });

    double norm1 = 0.0, norm_windows = 0.0, norm_image = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = delta[i] * delta[i];
      norm_image += d2;
      if (in1[i]) norm1 += d2;
      if (in_any[i]) norm_windows += d2;
    }
    norm1 = std::sqrt(norm1);
    norm_windows = std::sqrt(norm_windows);
    norm_image = std::sqrt(norm_image);

    const std::vector<double> pert = meta_pseudo_gaussian(s, rng);
    const double sign = rng.sign();
    std::vector<double> fresh;
    fresh.reserve(s * s);
    std::size_t k = 0;
    for_each_in(win1, [&](std::size_t i) { fresh.push_back(sign * pert[k++] + delta[i] / (1e-10 + norm1)); });
    double fresh_norm = 0.0;
    for (double v : fresh) fresh_norm += v * v;
    fresh_norm = std::sqrt(fresh_norm);
    const double target = std::sqrt(std::max(eps * eps - norm_image * norm_image, 0.0) + norm_windows * norm_windows);

    for_each_in(win2, [&](std::size_t i) { delta[i] = 0.0; });
    k = 0;
    for_each_in(win1, [&](std::size_t i) { delta[i] = fresh_norm > 0.0 ? fresh[k] / fresh_norm * target : 0.0; ++k; });

    const double total = norm_of(delta, Norm::L2);
    Input out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = clip(x0_[i] + (total > 0.0 ? delta[i] / total * eps : 0.0));
    project_to_ball(out, x0_, eps, Norm::L2);
    return out;
  }

  GeneratorSpec spec_;
  Input x0_;
  InputRange range_;
  std::size_t budget_;
  std::size_t h_ = 1, w_ = 1;
};

/// Idealized generator: one step of length r along the landscape's descent
/// direction, projected into N(x0, epsilon_n) and the input box. Needs the
/// harness-side margin oracle; rng is never consumed.
class IdealizedGenerator final : public CandidateGenerator {
 public:
  IdealizedGenerator(const GeneratorSpec& spec, std::span<const double> x0, const MarginOracle* oracle,
                     InputRange range = {})
      : spec_(spec), x0_(x0.begin(), x0.end()), oracle_(oracle), range_(range) {
    if (oracle_ == nullptr) throw ConfigError("idealized generator requires a margin oracle");
    if (spec_.kind != GeneratorKind::Idealized) throw ConfigError("IdealizedGenerator needs kind=idealized");
    validate(spec_);
  }

  /// Deterministic next candidate.
  Input peek(std::span<const double> current) const {
    const auto dir = oracle_->descent_direction();
    Input out(current.begin(), current.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += spec_.step * dir[i];
    project_to_ball(out, x0_, spec_.epsilon_n, spec_.effective_norm());
    for (double& v : out) v = std::clamp(v, range_.lo, range_.hi);
    return out;
  }

  Input propose(std::span<const double> current, std::size_t, Rng&) override { return peek(current); }

 private:
  GeneratorSpec spec_;
  Input x0_;
  const MarginOracle* oracle_;
  InputRange range_;
};

}  // namespace dld

#endif  // DLD_GENERATORS_HPP
