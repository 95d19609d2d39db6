#ifndef DLD_INTERVAL_SET_HPP
#define DLD_INTERVAL_SET_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dld/error.hpp"

namespace dld {

/// Half-open interval (lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo < v && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Sorted union of disjoint half-open intervals inside [0, 1].
///
/// Used as the set of fractional positions that a DLD routes to the rising
/// branch. Membership uses exact comparisons.
class IntervalSet {
 public:
  IntervalSet() = default;

  /// Validates ordering, disjointness and bounds. Touching neighbours
  /// ((a, b] followed by (b, c]) are merged.
  static IntervalSet from_intervals(std::vector<Interval> intervals) {
    IntervalSet set;
    for (const Interval& iv : intervals) {
      if (!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo < iv.hi)) {
        throw ConfigError("interval (" + std::to_string(iv.lo) + ", " + std::to_string(iv.hi) +
                          "] must satisfy 0 <= lo < hi <= 1");
      }
      if (!set.intervals_.empty()) {
        Interval& last = set.intervals_.back();
        if (iv.lo < last.hi) throw ConfigError("intervals must be sorted and disjoint");
        if (iv.lo == last.hi) {
          last.hi = iv.hi;
          continue;
        }
      }
      set.intervals_.push_back(iv);
    }
    return set;
  }

  bool contains(double v) const {
    // First interval whose upper end is >= v is the only candidate.
    auto it = std::lower_bound(intervals_.begin(), intervals_.end(), v,
                               [](const Interval& iv, double x) { return iv.hi < x; });
    return it != intervals_.end() && it->contains(v);
  }

  double measure() const {
    double m = 0.0;
    for (const Interval& iv : intervals_) m += iv.hi - iv.lo;
    return m;
  }

  bool empty() const { return intervals_.empty(); }
  std::span<const Interval> intervals() const { return intervals_; }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> intervals_;
};

namespace detail {

// k / n when step is 1/n for an integer n, so that grid points are exact.
inline double grid_point(double k, double step, double inv_step_int) {
  return inv_step_int > 0.0 ? k / inv_step_int : k * step;
}

}  // namespace detail

/// Union over k of ((k - ratio) * step, k * step], intersected with (0, 1].
/// When 1/step is an integer the measure equals ratio.
inline IntervalSet build_interval_set(double step, double ratio) {
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError("interval step must lie in (0, 1]");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("interval ratio must lie in [0, 1]");
  const double inv = 1.0 / step;
  const double inv_int = std::abs(inv - std::round(inv)) < 1e-9 ? std::round(inv) : 0.0;

  std::vector<Interval> out;
  for (long k = 1;; ++k) {
    const double lo = std::max(0.0, detail::grid_point(static_cast<double>(k) - ratio, step, inv_int));
    if (lo >= 1.0) break;
    const double hi = std::min(1.0, detail::grid_point(static_cast<double>(k), step, inv_int));
    if (hi > lo) out.push_back({lo, hi});
  }
  return IntervalSet::from_intervals(std::move(out));
}

/// (0, w] U (2w, 3w] U ... with w = 1/segments, every other segment, starting
/// at 0. With 50 segments this is (0, 0.02] U (0.04, 0.06] U ... U (0.96, 0.98].
inline IntervalSet dashed_interval_set(int segments = 50) {
  if (segments < 1) throw ConfigError("segment count must be positive");
  std::vector<Interval> out;
  for (int i = 0; i < segments; i += 2) {
    out.push_back({static_cast<double>(i) / segments, static_cast<double>(i + 1) / segments});
  }
  return IntervalSet::from_intervals(std::move(out));
}

}  // namespace dld

#endif  // DLD_INTERVAL_SET_HPP
