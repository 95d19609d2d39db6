#ifndef DLD_MARGIN_HPP
#define DLD_MARGIN_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dld/error.hpp"

namespace dld {

/// Class index.
struct Label {
  std::size_t index = 0;

  friend bool operator==(Label, Label) = default;
};

/// Per-class output scores of one query. Raw reals, never softmaxed.
class ScoreVector {
 public:
  ScoreVector() = default;

  explicit ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {
    if (scores_.size() < 2) throw InputError("score vector needs at least 2 classes");
    for (double v : scores_) {
      if (!std::isfinite(v)) throw InputError("score vector entries must be finite");
    }
  }

  ScoreVector(std::initializer_list<double> scores) : ScoreVector(std::vector<double>(scores)) {}

  std::size_t size() const { return scores_.size(); }
  double operator[](std::size_t i) const { return scores_[i]; }
  std::span<const double> values() const { return scores_; }

  void set(std::size_t i, double v) {
    if (!std::isfinite(v)) throw InputError("score vector entries must be finite");
    scores_.at(i) = v;
  }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> scores_;
};

/// Argmax; ties go to the lowest index.
inline Label predicted_label(const ScoreVector& s) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] > s[best]) best = i;
  }
  return Label{best};
}

/// Highest score over all classes except `excluded`, with its index.
inline std::pair<std::size_t, double> best_other(const ScoreVector& s, std::size_t excluded) {
  std::size_t best = excluded == 0 ? 1 : 0;
  for (std::size_t i = best + 1; i < s.size(); ++i) {
    if (i != excluded && s[i] > s[best]) best = i;
  }
  return {best, s[best]};
}

/// f_y(x) - max_{t != y} f_t(x). Negative means the model no longer favours y.
inline double margin_loss(const ScoreVector& s, Label y) {
  if (y.index >= s.size()) {
    throw InvalidLabel("label " + std::to_string(y.index) + " out of range for " +
                       std::to_string(s.size()) + " classes");
  }
  return s[y.index] - best_other(s, y.index).second;
}

/// Margin against the model's own prediction; never negative.
inline double margin_loss_predicted(const ScoreVector& s) {
  return margin_loss(s, predicted_label(s));
}

}  // namespace dld

#endif  // DLD_MARGIN_HPP
