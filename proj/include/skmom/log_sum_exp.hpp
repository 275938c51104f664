#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace skmom {

/// Streaming accumulator for ln(sum_i exp(x_i)).
///
/// Keeps a running maximum and a sum of exp(x_i - max); the sum is rescaled
/// whenever a larger term arrives. Terms equal to -inf contribute nothing.
class LogSumExp {
 public:
  void add(double x) noexcept {
    if (x == -std::numeric_limits<double>::infinity()) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }

  /// Adds c * exp(x) for c > 0.
  void add_weighted(double log_weight, double x) noexcept { add(log_weight + x); }

  /// Merges another accumulator as if all its terms had been added here.
  void merge(const LogSumExp& other) noexcept {
    if (other.empty()) return;
    if (empty()) {
      *this = other;
      return;
    }
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  bool empty() const noexcept { return sum_ == 0.0; }

  double value() const noexcept {
    if (empty()) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

/// Two-pass log-sum-exp over a contiguous range.
inline double log_sum_exp(std::span<const double> xs) noexcept {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace skmom
