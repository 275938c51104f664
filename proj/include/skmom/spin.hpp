#pragma once

// Spin configurations on {-1,1}^k, probability mass functions over them, and
// the variational functional F(p) = entropy(p) + (beta^2/4) E_p (V.V')^2.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "skmom/errors.hpp"
#include "skmom/log_sum_exp.hpp"

namespace skmom {

/// Largest replica dimension supported by Pmf operations (2^16 cells).
inline constexpr int kMaxPmfDim = 16;

inline constexpr double kLn2 = 0.69314718055994530942;

/// Overlap of two k-bit spin words: sum_i a_i b_i = k - 2 popcount(a ^ b).
constexpr int overlap_bits(std::uint32_t a, std::uint32_t b, int k) noexcept {
  return k - 2 * std::popcount(a ^ b);
}

/// A point of {-1,1}^k stored as a k-bit word.
///
/// Bit i set means coordinate i is +1; bit i clear means -1. Coordinate 0 is
/// the least significant bit.
class SpinVector {
 public:
  SpinVector(int dim, std::uint32_t bits) : dim_(dim), bits_(bits) {
    if (dim < 1 || dim > 31) throw std::invalid_argument("SpinVector: dimension must be in [1, 31]");
    if (bits >= (std::uint32_t{1} << dim))
      throw std::invalid_argument("SpinVector: index " + std::to_string(bits) +
                                  " does not fit in " + std::to_string(dim) + " bits");
  }

  /// Builds from explicit +-1 components.
  static SpinVector from_spins(const std::vector<int>& spins) {
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < spins.size(); ++i) {
      if (spins[i] == 1) {
        bits |= std::uint32_t{1} << i;
      } else if (spins[i] != -1) {
        throw std::invalid_argument("SpinVector: components must be +1 or -1");
      }
    }
    return SpinVector(static_cast<int>(spins.size()), bits);
  }

  int dim() const noexcept { return dim_; }
  std::uint32_t bits() const noexcept { return bits_; }

  int spin(int i) const noexcept { return ((bits_ >> i) & 1U) ? 1 : -1; }

  SpinVector negated() const noexcept { return SpinVector(dim_, bits_ ^ mask(dim_), 0); }

  /// "+-+" style rendering, coordinate 0 first.
  std::string to_string() const {
    std::string s(static_cast<std::size_t>(dim_), '-');
    for (int i = 0; i < dim_; ++i)
      if (spin(i) == 1) s[static_cast<std::size_t>(i)] = '+';
    return s;
  }

  static SpinVector parse(const std::string& s) {
    std::vector<int> spins;
    spins.reserve(s.size());
    for (char c : s) {
      if (c == '+') spins.push_back(1);
      else if (c == '-') spins.push_back(-1);
      else throw std::invalid_argument("SpinVector: bad spin character '" + std::string(1, c) + "'");
    }
    return from_spins(spins);
  }

  static constexpr std::uint32_t mask(int dim) noexcept {
    return dim >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << dim) - 1U;
  }

  friend bool operator==(const SpinVector&, const SpinVector&) = default;

 private:
  SpinVector(int dim, std::uint32_t bits, int /*unchecked*/) noexcept : dim_(dim), bits_(bits) {}

  int dim_;
  std::uint32_t bits_;
};

/// sigma . sigma' for two spin vectors of equal dimension.
inline int overlap(const SpinVector& a, const SpinVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("overlap: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()) + ")");
  return overlap_bits(a.bits(), b.bits(), a.dim());
}

/// Overlap with an explicitly declared dimension; both indices must fit in k bits.
inline int overlap(std::uint32_t a, std::uint32_t b, int k) {
  return overlap(SpinVector(k, a), SpinVector(k, b));
}

/// (k, N, beta) of a moment computation.
struct ModelParams {
  int k = 2;
  int n = 2;
  double beta = 1.0;

  void validate() const {
    if (k < 1) throw std::invalid_argument("ModelParams: k must be >= 1");
    if (n < 1) throw std::invalid_argument("ModelParams: n must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("ModelParams: beta must be a finite non-negative real");
  }
};

/// Probability mass function on {-1,1}^k, indexed by SpinVector bits.
class Pmf {
 public:
  static constexpr double kSumTolerance = 1e-12;
  static constexpr double kRenormalizeTolerance = 1e-9;

  /// Validates and (if the drift is below 1e-9) renormalizes a weight vector.
  static Pmf from_weights(int k, std::vector<double> weights) {
    check_dim(k);
    if (weights.size() != cell_count(k))
      throw std::invalid_argument("Pmf: expected " + std::to_string(cell_count(k)) + " weights, got " +
                                  std::to_string(weights.size()));
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("Pmf: weights must be finite and >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kRenormalizeTolerance)
      throw std::invalid_argument("Pmf: weights sum to " + std::to_string(sum) + ", not 1");
    // Summation rounding alone is left untouched so serialized weights round-trip bit for bit.
    if (std::abs(sum - 1.0) > 64 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights.size()))
      for (double& w : weights) w /= sum;
    return Pmf(k, std::move(weights));
  }

  /// Normalizes any non-negative vector with positive total.
  static Pmf normalized(int k, std::vector<double> weights) {
    check_dim(k);
    if (weights.size() != cell_count(k)) throw std::invalid_argument("Pmf: wrong number of weights");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("Pmf: weights must be finite and >= 0");
      sum += w;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("Pmf: weights have zero total mass");
    for (double& w : weights) w /= sum;
    return Pmf(k, std::move(weights));
  }

  /// Builds exp(log_weights) / sum, normalizing in log scale. -inf entries become 0.
  static Pmf from_log_weights(int k, const std::vector<double>& log_weights) {
    check_dim(k);
    if (log_weights.size() != cell_count(k)) throw std::invalid_argument("Pmf: wrong number of weights");
    const double lse = log_sum_exp(log_weights);
    if (!std::isfinite(lse)) throw std::invalid_argument("Pmf: log weights have no finite mass");
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - lse);
    return normalized(k, std::move(w));
  }

  static Pmf uniform(int k) {
    check_dim(k);
    return Pmf(k, std::vector<double>(cell_count(k), 1.0 / static_cast<double>(cell_count(k))));
  }

  static Pmf point_mass(const SpinVector& at) {
    check_dim(at.dim());
    std::vector<double> w(cell_count(at.dim()), 0.0);
    w[at.bits()] = 1.0;
    return Pmf(at.dim(), std::move(w));
  }

  /// Mass 1/2 on sigma0 and 1/2 on -sigma0.
  static Pmf symmetric_pair(const SpinVector& at) {
    check_dim(at.dim());
    std::vector<double> w(cell_count(at.dim()), 0.0);
    w[at.bits()] = 0.5;
    w[at.negated().bits()] = 0.5;
    return Pmf(at.dim(), std::move(w));
  }

  int dim() const noexcept { return k_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  double at(const SpinVector& s) const {
    if (s.dim() != k_) throw std::invalid_argument("Pmf::at: dimension mismatch");
    return weights_[s.bits()];
  }

  double min_weight() const noexcept { return *std::min_element(weights_.begin(), weights_.end()); }

  std::uint32_t flip_mask() const noexcept { return SpinVector::mask(k_); }

  static std::size_t cell_count(int k) noexcept { return std::size_t{1} << k; }

 private:
  Pmf(int k, std::vector<double> w) : k_(k), weights_(std::move(w)) {}

  static void check_dim(int k) {
    if (k < 1 || k > kMaxPmfDim)
      throw std::invalid_argument("Pmf: dimension " + std::to_string(k) + " outside [1, " +
                                  std::to_string(kMaxPmfDim) + "]");
  }

  int k_;
  std::vector<double> weights_;
};

/// -sum p ln p with 0 ln 0 = 0. Lies in [0, k ln 2].
inline double entropy_nats(const Pmf& p) noexcept {
  double h = 0.0;
  for (double w : p.weights())
    if (w > 0.0) h -= w * std::log(w);
  return h;
}

/// Base-2 entropy.
inline double entropy_bits(const Pmf& p) noexcept { return entropy_nats(p) / kLn2; }

/// sum_{sigma,sigma'} p_sigma p_sigma' (sigma.sigma')^2 by the direct O(4^k) double sum.
inline double overlap_sq_mean(const Pmf& p) noexcept {
  const int k = p.dim();
  const auto& w = p.weights();
  const auto n = static_cast<std::uint32_t>(w.size());
  double total = 0.0;
  for (std::uint32_t a = 0; a < n; ++a) {
    if (w[a] == 0.0) continue;
    double row = 0.0;
    for (std::uint32_t b = 0; b < n; ++b) {
      const int ov = overlap_bits(a, b, k);
      row += w[b] * static_cast<double>(ov * ov);
    }
    total += w[a] * row;
  }
  return total;
}

/// Replica pair correlations m_ij = sum_sigma p_sigma sigma_i sigma_j for i < j,
/// in row-major pair order (0,1), (0,2), ..., (k-2,k-1).
inline std::vector<double> pair_correlations(const Pmf& p) {
  const int k = p.dim();
  std::vector<double> m(static_cast<std::size_t>(k * (k - 1) / 2), 0.0);
  const auto& w = p.weights();
  for (std::uint32_t s = 0; s < w.size(); ++s) {
    if (w[s] == 0.0) continue;
    std::size_t idx = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j, ++idx) {
        const bool same = (((s >> i) ^ (s >> j)) & 1U) == 0;
        m[idx] += same ? w[s] : -w[s];
      }
  }
  return m;
}

/// sum_{i<j} (sum_sigma p_sigma sigma_i sigma_j)^2, which equals overlap_sq_mean(p)/2 - k/2.
inline double pair_correlation_energy(const Pmf& p) {
  double e = 0.0;
  for (double v : pair_correlations(p)) e += v * v;
  return e;
}

/// F(p) = entropy_nats(p) + (beta^2/4) overlap_sq_mean(p).
inline double eval_F(const Pmf& p, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("eval_F: beta must be >= 0");
  return entropy_nats(p) + 0.25 * beta * beta * overlap_sq_mean(p);
}

/// Averages each cell with its global flip: q_sigma = (p_sigma + p_{-sigma}) / 2.
inline Pmf symmetrize(const Pmf& p) {
  const std::uint32_t flip = p.flip_mask();
  std::vector<double> w(p.size());
  for (std::uint32_t s = 0; s < w.size(); ++s) w[s] = 0.5 * (p[s] + p[s ^ flip]);
  return Pmf::normalized(p.dim(), std::move(w));
}

/// True when p_sigma = p_{-sigma} for every sigma, within `tol`.
inline bool is_flip_symmetric(const Pmf& p, double tol = 0.0) noexcept {
  const std::uint32_t flip = p.flip_mask();
  for (std::uint32_t s = 0; s < p.size(); ++s)
    if (std::abs(p[s] - p[s ^ flip]) > tol) return false;
  return true;
}

/// Moves mass eps onto the empty cell sigma0, taken from the heaviest cell.
///
/// For small eps this raises F by -eps ln eps + O(eps), which is why no
/// maximizer of F sits on the boundary of the simplex.
inline Pmf boundary_escape(const Pmf& p, const SpinVector& sigma0, double eps) {
  if (sigma0.dim() != p.dim()) throw std::invalid_argument("boundary_escape: dimension mismatch");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("boundary_escape: eps must lie in (0, 1)");
  if (p[sigma0.bits()] != 0.0) throw std::invalid_argument("boundary_escape: target cell is not empty");
  const auto& w = p.weights();
  const auto donor = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
  if (!(w[donor] > eps)) throw InfeasiblePerturbation("boundary_escape: no cell holds more than eps");
  std::vector<double> q = w;
  q[donor] -= eps;
  q[sigma0.bits()] = eps;
  return Pmf::from_weights(p.dim(), std::move(q));
}

}  // namespace skmom
