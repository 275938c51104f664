#pragma once

// Maximization of F(p) = entropy(p) + (beta^2/4) sum p_s p_s' (s.s')^2 over the
// simplex on {-1,1}^k.
//
// Stationary points satisfy p_{s0} proportional to exp{(beta^2/2) sum_s p_s (s.s0)^2}.
// Iterating that map is a minorize-maximize step (the quadratic term is convex,
// so its linearization is a lower bound), hence F never decreases along
// undamped steps except by rounding. A damping fallback covers that case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "skmom/log_sum_exp.hpp"
#include "skmom/spin.hpp"

namespace skmom {

struct SolverConfig {
  /// Number of random symmetric Dirichlet(1) starts, on top of the
  /// uniform start and the two-point start.
  int starts = 8;
  std::uint64_t seed = 20240917;
  int max_iters = 100000;
  double tol_weights = 1e-12;
  double tol_kkt = 1e-10;
  double damping_init = 1.0;
};

inline void to_json(nlohmann::json& j, const SolverConfig& c) {
  j = nlohmann::json{{"starts", c.starts},           {"seed", c.seed},       {"max_iters", c.max_iters},
                     {"tol_weights", c.tol_weights}, {"tol_kkt", c.tol_kkt}, {"damping_init", c.damping_init}};
}

inline void from_json(const nlohmann::json& j, SolverConfig& c) {
  c.starts = j.value("starts", c.starts);
  c.seed = j.value("seed", c.seed);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.tol_weights = j.value("tol_weights", c.tol_weights);
  c.tol_kkt = j.value("tol_kkt", c.tol_kkt);
  c.damping_init = j.value("damping_init", c.damping_init);
}

struct VariationalResult {
  Pmf maximizer;
  double value = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  int start_count = 0;
  bool converged = false;
};

namespace detail {

/// State of one solver run, carried in log weights so that cells far below
/// double underflow keep a finite representation.
class EntropicIterate {
 public:
  EntropicIterate(int k, double beta) : k_(k), beta_(beta), cells_(std::uint32_t{1} << k) {
    pairs_ = k * (k - 1) / 2;
    sign_.resize(static_cast<std::size_t>(cells_) * static_cast<std::size_t>(pairs_));
    for (std::uint32_t s = 0; s < cells_; ++s) {
      int p = 0;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j, ++p)
          sign_[s * static_cast<std::size_t>(pairs_) + static_cast<std::size_t>(p)] =
              (((s >> i) ^ (s >> j)) & 1U) ? -1.0 : 1.0;
    }
  }

  std::uint32_t cells() const noexcept { return cells_; }

  /// Pair correlations m_p = sum_s p_s sigma_i sigma_j.
  std::vector<double> correlations(const std::vector<double>& w) const {
    std::vector<double> m(static_cast<std::size_t>(pairs_), 0.0);
    for (std::uint32_t s = 0; s < cells_; ++s) {
      if (w[s] == 0.0) continue;
      const double* sg = &sign_[s * static_cast<std::size_t>(pairs_)];
      for (int p = 0; p < pairs_; ++p) m[static_cast<std::size_t>(p)] += w[s] * sg[p];
    }
    return m;
  }

  /// field_{s0} = sum_s p_s (s.s0)^2 = k + 2 sum_{i<j} s0_i s0_j m_ij.
  std::vector<double> field(const std::vector<double>& w) const {
    const auto m = correlations(w);
    std::vector<double> f(cells_);
    for (std::uint32_t s = 0; s < cells_; ++s) {
      const double* sg = &sign_[s * static_cast<std::size_t>(pairs_)];
      double acc = 0.0;
      for (int p = 0; p < pairs_; ++p) acc += sg[p] * m[static_cast<std::size_t>(p)];
      f[s] = k_ + 2.0 * acc;
    }
    return f;
  }

  /// F from log weights; overlap term via k + 2 sum m_ij^2.
  double objective(const std::vector<double>& logw, const std::vector<double>& w) const {
    double h = 0.0;
    for (std::uint32_t s = 0; s < cells_; ++s)
      if (w[s] > 0.0) h -= w[s] * logw[s];
    double e = 0.0;
    for (double v : correlations(w)) e += v * v;
    return h + 0.25 * beta_ * beta_ * (k_ + 2.0 * e);
  }

  /// Log of the fixed-point image, normalized.
  std::vector<double> step_log(const std::vector<double>& w) const {
    auto f = field(w);
    const double c = 0.5 * beta_ * beta_;
    for (double& x : f) x *= c;
    const double lse = log_sum_exp(f);
    for (double& x : f) x -= lse;
    return f;
  }

  /// max - min over cells of ln p_s - (beta^2/2) field_s.
  double kkt_residual(const std::vector<double>& logw, const std::vector<double>& w) const {
    const auto f = field(w);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::uint32_t s = 0; s < cells_; ++s) {
      const double r = logw[s] - 0.5 * beta_ * beta_ * f[s];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    return hi - lo;
  }

  /// Averages each cell with its global flip, in log scale.
  void symmetrize_log(std::vector<double>& logw) const {
    const std::uint32_t flip = cells_ - 1;
    for (std::uint32_t s = 0; s < cells_; ++s) {
      const std::uint32_t t = s ^ flip;
      if (t < s) continue;
      const double a = logw[s];
      const double b = logw[t];
      const double m = std::max(a, b);
      const double v = (m == -std::numeric_limits<double>::infinity())
                           ? m
                           : m + std::log(0.5 * (std::exp(a - m) + std::exp(b - m)));
      logw[s] = v;
      logw[t] = v;
    }
  }

 private:
  int k_;
  double beta_;
  std::uint32_t cells_;
  int pairs_ = 0;
  std::vector<double> sign_;
};

inline std::vector<double> exp_normalized(std::vector<double>& logw) {
  const double lse = log_sum_exp(logw);
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    logw[i] -= lse;
    w[i] = std::exp(logw[i]);
  }
  return w;
}

struct RunOutcome {
  std::vector<double> logw;
  std::vector<double> w;
  double value;
  double entropy;
  double kkt;
  int iterations;
  bool converged;
};

inline RunOutcome run_from(const EntropicIterate& it, std::vector<double> logw, const SolverConfig& cfg) {
  auto w = exp_normalized(logw);
  double value = it.objective(logw, w);
  double t = std::clamp(cfg.damping_init, 1e-8, 1.0);
  int iter = 0;
  bool converged = false;
  while (iter < cfg.max_iters) {
    ++iter;
    const auto target = it.step_log(w);
    std::vector<double> cand;
    std::vector<double> cw;
    double cval = 0.0;
    for (;;) {
      cand.resize(target.size());
      if (t >= 1.0) {
        cand = target;
      } else {
        for (std::size_t s = 0; s < cand.size(); ++s)
          cand[s] = std::isinf(logw[s]) ? (1.0 - t) * -std::numeric_limits<double>::max() + t * target[s]
                                        : (1.0 - t) * logw[s] + t * target[s];
      }
      it.symmetrize_log(cand);
      cw = exp_normalized(cand);
      cval = it.objective(cand, cw);
      if (cval >= value - 1e-14 * std::max(1.0, std::abs(value)) || t < 1e-8) break;
      t *= 0.5;
    }
    double change = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) change = std::max(change, std::abs(cw[s] - w[s]));
    logw = std::move(cand);
    w = std::move(cw);
    value = std::max(value, cval);
    t = std::min(1.0, 2.0 * t);
    if (change <= cfg.tol_weights || it.kkt_residual(logw, w) <= cfg.tol_kkt) {
      converged = true;
      break;
    }
  }
  value = it.objective(logw, w);
  double h = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s)
    if (w[s] > 0.0) h -= w[s] * logw[s];
  const double kkt = it.kkt_residual(logw, w);
  return {std::move(logw), std::move(w), value, h, kkt, iter, converged};
}

}  // namespace detail

/// One application of the stationarity map:
/// q_{s0} proportional to exp{(beta^2/2) sum_s p_s (s.s0)^2}.
inline Pmf fixed_point_step(const Pmf& p, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("fixed_point_step: beta must be >= 0");
  const detail::EntropicIterate it(p.dim(), beta);
  return Pmf::from_log_weights(p.dim(), it.step_log(p.weights()));
}

/// Spread of ln p_s - (beta^2/2) sum_s' p_s' (s.s')^2 over cells; zero exactly
/// at solutions of the Lagrange system (the multiplier is the common value).
inline double kkt_residual(const Pmf& p, double beta) {
  if (!(p.min_weight() > 0.0)) throw std::invalid_argument("kkt_residual: all weights must be positive");
  const detail::EntropicIterate it(p.dim(), beta);
  std::vector<double> logw(p.size());
  for (std::size_t s = 0; s < logw.size(); ++s) logw[s] = std::log(p[s]);
  return it.kkt_residual(logw, p.weights());
}

/// Multistart maximization of F over the simplex.
///
/// Starts: uniform, the symmetric pair on +-(all minus), and `cfg.starts`
/// flip-symmetric Dirichlet(1) draws. The best value wins; values within 1e-12
/// are broken in favour of higher entropy.
inline VariationalResult maximize_F(int k, double beta, const SolverConfig& cfg = {}) {
  if (k < 1 || k > 12) throw std::invalid_argument("maximize_F: k must lie in [1, 12]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("maximize_F: beta must be >= 0");
  const detail::EntropicIterate it(k, beta);
  const std::uint32_t cells = it.cells();
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> starts;
  starts.emplace_back(cells, 0.0);
  {
    std::vector<double> pair(cells, neg_inf);
    pair[0] = 0.0;
    pair[cells - 1] = 0.0;
    starts.push_back(std::move(pair));
  }
  std::mt19937_64 rng(cfg.seed);
  std::exponential_distribution<double> expo(1.0);
  for (int r = 0; r < cfg.starts; ++r) {
    std::vector<double> logw(cells);
    for (std::uint32_t s = 0; s < cells; ++s) {
      const std::uint32_t t = s ^ (cells - 1);
      if (t < s) {
        logw[s] = logw[t];
        continue;
      }
      logw[s] = std::log(expo(rng));
    }
    starts.push_back(std::move(logw));
  }

  std::optional<detail::RunOutcome> best;
  for (auto& start : starts) {
    auto run = detail::run_from(it, std::move(start), cfg);
    if (!best) {
      best = std::move(run);
      continue;
    }
    const double diff = run.value - best->value;
    if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && run.entropy > best->entropy)) best = std::move(run);
  }

  VariationalResult out{Pmf::normalized(k, best->w), best->value, best->kkt, best->iterations,
                        static_cast<int>(starts.size()), best->converged};
  return out;
}

}  // namespace skmom
