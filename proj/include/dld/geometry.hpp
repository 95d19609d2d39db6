#ifndef DLD_GEOMETRY_HPP
#define DLD_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dld/error.hpp"

namespace dld {

using Input = std::vector<double>;

enum class Norm { Linf, L2 };

inline std::string_view to_string(Norm n) { return n == Norm::Linf ? "linf" : "l2"; }

inline Norm parse_norm(std::string_view s) {
  if (s == "linf") return Norm::Linf;
  if (s == "l2") return Norm::L2;
  throw ConfigError("unknown norm '" + std::string(s) + "' (expected linf or l2)");
}

inline double norm_of(std::span<const double> v, Norm n) {
  double acc = 0.0;
  for (double x : v) acc = n == Norm::Linf ? std::max(acc, std::abs(x)) : acc + x * x;
  return n == Norm::Linf ? acc : std::sqrt(acc);
}

inline double distance(std::span<const double> a, std::span<const double> b, Norm n) {
  if (a.size() != b.size()) throw InputError("distance between vectors of different length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc = n == Norm::Linf ? std::max(acc, std::abs(d)) : acc + d * d;
  }
  return n == Norm::Linf ? acc : std::sqrt(acc);
}

/// Side lengths (h, w) of the most square h x w grid with h * w == dims, h <= w.
inline std::pair<std::size_t, std::size_t> patch_grid(std::size_t dims) {
  std::size_t h = static_cast<std::size_t>(std::sqrt(static_cast<double>(dims)));
  while (h > 1 && dims % h != 0) --h;
  return {h, dims / h};
}

/// Euclidean projection onto the ball of `radius` around `center`, in place.
inline void project_to_ball(std::span<double> x, std::span<const double> center, double radius, Norm n) {
  if (n == Norm::Linf) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], center[i] - radius, center[i] + radius);
    return;
  }
  const double d = distance(x, center, Norm::L2);
  if (d <= radius) return;
  const double scale = radius / d;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = center[i] + (x[i] - center[i]) * scale;
}

}  // namespace dld

#endif  // DLD_GEOMETRY_HPP
