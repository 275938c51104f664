#pragma once

// One-dimensional characterization of lim (1/N) ln E[Z_N(beta)^k] through
//   H(q) = sum_sigma e^{q (sigma.sigma0)^2} = sum_i C(k,i) e^{(2i-k)^2 q}
//        = 2^k E cosh^k(sqrt(2q) Z),
//   f(q) = -k(k-1) q^2/beta^2 + ln H(q) - qk + k beta^2/4,
// maximized over the stationary set S = {q in [0, beta^2/2] : f'(q) = 0}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skmom/gauss_hermite.hpp"
#include "skmom/io.hpp"
#include "skmom/log_sum_exp.hpp"
#include "skmom/spin.hpp"

namespace skmom {

struct HEvaluation {
  double q = 0.0;
  double h = 0.0;
  double h_prime = 0.0;
  double log_h = 0.0;
  /// H'(q)/H(q), computed without forming H.
  double log_derivative = 0.0;
  /// (H'/H)'(q) = H''/H - (H'/H)^2 >= 0.
  double log_curvature = 0.0;
};

namespace detail {

inline double binomial(int k, int i) {
  double c = 1.0;
  for (int j = 1; j <= i; ++j) c = c * (k - i + j) / j;
  return c;
}

inline void require_k(int k, const char* who) {
  if (k < 2) throw std::invalid_argument(std::string(who) + ": requires k >= 2");
}

inline void require_beta_positive(double beta, const char* who) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument(std::string(who) + ": requires beta > 0");
}

}  // namespace detail

/// H and H' by the binomial form. Summed directly while the largest term is
/// representable (so H(0) = 2^k and H'(0) = k 2^k come out exact), in log scale beyond.
inline HEvaluation h_eval(double q, int k) {
  if (k < 1) throw std::invalid_argument("h_eval: k must be >= 1");
  HEvaluation out;
  out.q = q;
  const double kk = static_cast<double>(k);
  if (std::abs(q) * kk * kk < 600.0) {
    double h = 0.0, h1 = 0.0, h2 = 0.0;
    for (int i = 0; i <= k; ++i) {
      const double d2 = (2.0 * i - k) * (2.0 * i - k);
      const double t = detail::binomial(k, i) * std::exp(d2 * q);
      h += t;
      h1 += t * d2;
      h2 += t * d2 * d2;
    }
    out.h = h;
    out.h_prime = h1;
    out.log_h = std::log(h);
    out.log_derivative = h1 / h;
    out.log_curvature = std::max(0.0, h2 / h - out.log_derivative * out.log_derivative);
    return out;
  }
  std::vector<double> terms(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) {
    const double d = 2.0 * i - k;
    terms[static_cast<std::size_t>(i)] = std::log(detail::binomial(k, i)) + d * d * q;
  }
  out.log_h = log_sum_exp(terms);
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double d2 = (2.0 * i - k) * (2.0 * i - k);
    const double w = std::exp(terms[static_cast<std::size_t>(i)] - out.log_h);
    m1 += w * d2;
    m2 += w * d2 * d2;
  }
  out.log_derivative = m1;
  out.log_curvature = std::max(0.0, m2 - m1 * m1);
  out.h = std::exp(out.log_h);
  out.h_prime = out.h * m1;
  return out;
}

/// H by the direct 2^k-term spin sum around sigma0.
inline double h_eval_spin_sum(double q, int k, const SpinVector& sigma0) {
  if (sigma0.dim() != k) throw std::invalid_argument("h_eval_spin_sum: sigma0 has the wrong dimension");
  if (k > 30) throw std::invalid_argument("h_eval_spin_sum: k too large for direct summation");
  const std::uint32_t cells = std::uint32_t{1} << k;
  std::vector<double> terms(cells);
  for (std::uint32_t s = 0; s < cells; ++s) {
    const int ov = overlap_bits(s, sigma0.bits(), k);
    terms[s] = q * ov * ov;
  }
  return std::exp(log_sum_exp(terms));
}

/// Default node count for the quadrature form of H.
inline constexpr int kDefaultHermiteNodes = 160;

/// H by Gauss-Hermite quadrature of 2^k E cosh^k(sqrt(2q) Z).
inline double h_eval_quadrature(double q, int k, int nodes = kDefaultHermiteNodes) {
  if (q < 0.0) throw std::invalid_argument("h_eval_quadrature: q must be >= 0");
  if (k < 1) throw std::invalid_argument("h_eval_quadrature: k must be >= 1");
  const auto rule = gauss_hermite(nodes);
  const double a = std::sqrt(2.0 * q);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double x = std::abs(a * std::numbers::sqrt2 * rule.nodes[i]);
    const double log_cosh = x + std::log1p(std::exp(-2.0 * x)) - kLn2;
    terms[i] = std::log(rule.weights[i]) + k * log_cosh;
  }
  return std::exp(k * kLn2 + log_sum_exp(terms) - 0.5 * std::log(std::numbers::pi));
}

/// f(q) = -k(k-1) q^2/beta^2 + ln H(q) - qk + k beta^2/4.
inline double f_eval(double q, int k, double beta) {
  detail::require_k(k, "f_eval");
  detail::require_beta_positive(beta, "f_eval");
  const double b2 = beta * beta;
  return -k * (k - 1.0) * q * q / b2 + h_eval(q, k).log_h - q * k + k * b2 / 4.0;
}

/// f'(q) = -2k(k-1) q/beta^2 + H'/H - k.
inline double f_derivative(double q, int k, double beta) {
  detail::require_k(k, "f_derivative");
  detail::require_beta_positive(beta, "f_derivative");
  return -2.0 * k * (k - 1.0) * q / (beta * beta) + h_eval(q, k).log_derivative - k;
}

inline double f_second_derivative(double q, int k, double beta) {
  detail::require_k(k, "f_second_derivative");
  detail::require_beta_positive(beta, "f_second_derivative");
  return -2.0 * k * (k - 1.0) / (beta * beta) + h_eval(q, k).log_curvature;
}

/// q - (beta^2 / (2k(k-1))) (H'(q)/H(q) - k); zero exactly on S.
inline double stationarity_residual(double q, int k, double beta) {
  return q - beta * beta / (2.0 * k * (k - 1.0)) * (h_eval(q, k).log_derivative - k);
}

enum class BranchKind { kZero, kInterior };

inline const char* to_string(BranchKind b) { return b == BranchKind::kZero ? "zero-branch" : "interior"; }

struct StationaryPoint {
  double q = 0.0;
  double f_value = 0.0;
  BranchKind kind = BranchKind::kZero;
  double fp_residual = 0.0;
  /// f''(q); negative at local maxima of f.
  double curvature = 0.0;

  bool is_local_max() const noexcept { return curvature < 0.0; }
};

inline void to_json(nlohmann::json& j, const StationaryPoint& p) {
  j = nlohmann::json{{"q", p.q},
                     {"f_value", p.f_value},
                     {"kind", to_string(p.kind)},
                     {"fp_residual", p.fp_residual},
                     {"local_max", p.is_local_max()}};
}

struct ScanConfig {
  int grid_points = 4096;
  double q_tol = 1e-13;
  int max_bisections = 200;
};

inline void to_json(nlohmann::json& j, const ScanConfig& c) {
  j = nlohmann::json{{"grid_points", c.grid_points}, {"q_tol", c.q_tol}, {"max_bisections", c.max_bisections}};
}

inline void from_json(const nlohmann::json& j, ScanConfig& c) {
  c.grid_points = j.value("grid_points", c.grid_points);
  c.q_tol = j.value("q_tol", c.q_tol);
  c.max_bisections = j.value("max_bisections", c.max_bisections);
}

struct StationarySet {
  std::vector<StationaryPoint> points;
  std::vector<std::string> warnings;
};

namespace detail {

inline StationaryPoint make_point(double q, int k, double beta, BranchKind kind) {
  StationaryPoint p;
  p.q = q;
  p.kind = kind;
  p.f_value = f_eval(q, k, beta);
  p.fp_residual = std::abs(stationarity_residual(q, k, beta));
  p.curvature = f_second_derivative(q, k, beta);
  return p;
}

}  // namespace detail

/// All q in [0, beta^2/2] with q = (beta^2/(2k(k-1))) (H'/H - k), ascending.
///
/// q = 0 is always a member. Interior roots come from sign changes of the
/// residual on a uniform grid, refined by bisection. Near-tangencies that the
/// grid cannot resolve and counts above three are reported as warnings.
inline StationarySet find_stationary_set(int k, double beta, const ScanConfig& cfg = {}) {
  detail::require_k(k, "find_stationary_set");
  detail::require_beta_positive(beta, "find_stationary_set");
  if (cfg.grid_points < 2) throw std::invalid_argument("find_stationary_set: grid_points must be >= 2");
  StationarySet out;
  out.points.push_back(detail::make_point(0.0, k, beta, BranchKind::kZero));

  const double upper = 0.5 * beta * beta;
  const double step = upper / cfg.grid_points;
  // A probe just right of zero catches roots closer to 0 than one grid step.
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(cfg.grid_points) + 1);
  grid.push_back(step * 1e-6);
  for (int j = 1; j <= cfg.grid_points; ++j) grid.push_back(step * j);
  std::vector<double> res(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) res[j] = stationarity_residual(grid[j], k, beta);
  // The residual at beta^2/2 is >= 0 analytically; when H'/H saturates at k^2
  // it can round to zero or slightly below.
  if (res.back() <= 0.0 && res.back() > -1e-12 * std::max(1.0, upper))
    res.back() = std::numeric_limits<double>::min();

  auto refine = [&](double lo, double hi, double rlo) {
    for (int it = 0; it < cfg.max_bisections && hi - lo > cfg.q_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double rm = stationarity_residual(mid, k, beta);
      if (rm == 0.0) return mid;
      if ((rm < 0.0) == (rlo < 0.0)) {
        lo = mid;
        rlo = rm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (res[j] == 0.0) {
      out.points.push_back(detail::make_point(grid[j], k, beta, BranchKind::kInterior));
      continue;
    }
    if (j + 1 < grid.size() && res[j + 1] != 0.0 && (res[j] < 0.0) != (res[j + 1] < 0.0))
      out.points.push_back(
          detail::make_point(refine(grid[j], grid[j + 1], res[j]), k, beta, BranchKind::kInterior));
    if (j > 0 && j + 1 < grid.size()) {
      const double a = std::abs(res[j - 1]);
      const double b = std::abs(res[j]);
      const double c = std::abs(res[j + 1]);
      const bool same_sign = (res[j - 1] < 0.0) == (res[j] < 0.0) && (res[j] < 0.0) == (res[j + 1] < 0.0);
      if (same_sign && b < a && b < c && b < 1e-3 * step)
        out.warnings.push_back("residual nearly touches zero near q=" + io::fmt_double(grid[j]) +
                               " without a sign change; a double root may be unresolved by the grid");
    }
  }
  if (out.points.size() > 3)
    out.warnings.push_back("found " + std::to_string(out.points.size()) + " stationary points (more than 3)");
  return out;
}

struct TalagrandLimit {
  double value = 0.0;
  double argmax_q = 0.0;
};

/// max of f over the stationary set; ties within 1e-12 go to the smaller q.
inline TalagrandLimit talagrand_limit(int k, double beta, const ScanConfig& cfg = {}) {
  const auto set = find_stationary_set(k, beta, cfg);
  TalagrandLimit best{set.points.front().f_value, set.points.front().q};
  for (const auto& p : set.points)
    if (p.f_value > best.value + 1e-12) best = {p.f_value, p.q};
  return best;
}

/// p_sigma = e^{q (sigma.sigma1)^2} / H(q).
inline Pmf stationary_pmf(double q, int k, const SpinVector& sigma1) {
  if (sigma1.dim() != k) throw std::invalid_argument("stationary_pmf: sigma1 has the wrong dimension");
  std::vector<double> logw(Pmf::cell_count(k));
  for (std::uint32_t s = 0; s < logw.size(); ++s) {
    const int ov = overlap_bits(s, sigma1.bits(), k);
    logw[s] = q * ov * ov;
  }
  return Pmf::from_log_weights(k, logw);
}

/// Absolute gap between sum_sigma (sigma.sigma0)^2 e^{q (sigma.sigma1)^2} and
/// its closed form (H' - kH)/(k^2 - k) (sigma0.sigma1)^2 + (k^2 H - H')/(k - 1).
inline double eqsum_residual(double q, int k, const SpinVector& sigma0, const SpinVector& sigma1) {
  detail::require_k(k, "eqsum_residual");
  if (sigma0.dim() != k || sigma1.dim() != k) throw std::invalid_argument("eqsum_residual: dimension mismatch");
  const std::uint32_t cells = std::uint32_t{1} << k;
  double lhs = 0.0;
  for (std::uint32_t s = 0; s < cells; ++s) {
    const int a = overlap_bits(s, sigma0.bits(), k);
    const int b = overlap_bits(s, sigma1.bits(), k);
    lhs += static_cast<double>(a * a) * std::exp(q * b * b);
  }
  const auto h = h_eval(q, k);
  const int c = overlap(sigma0, sigma1);
  const double kk = static_cast<double>(k);
  const double rhs = (h.h_prime - kk * h.h) / (kk * kk - kk) * c * c + (kk * kk * h.h - h.h_prime) / (kk - 1.0);
  return std::abs(lhs - rhs);
}

/// Temperature of the Z-model matching the hat-model at beta (Z-hat_N(beta) has
/// the moments of e^{beta g} Z_N(sqrt(2) beta)).
inline double hatz_rescale(double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("hatz_rescale: beta must be >= 0");
  return std::numbers::sqrt2 * beta;
}

}  // namespace skmom
