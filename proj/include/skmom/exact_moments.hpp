#pragma once

// Exact evaluation of E[Z_N(beta)^k] for the SK partition function
//   Z_N(beta) = sum_sigma exp{ beta/sqrt(N) sum_{i<j} g_ij sigma_i sigma_j }
// with the Gaussian couplings integrated out analytically.
//
// Two independent routes:
//   * brute force over all k-tuples of configurations (2^{kN} terms),
//   * the composition sum over occupancy counts of the 2^k possible rows
//     of the N x k replica matrix (polynomially many terms in N).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "skmom/errors.hpp"
#include "skmom/gauss_hermite.hpp"
#include "skmom/io.hpp"
#include "skmom/log_sum_exp.hpp"
#include "skmom/spin.hpp"

namespace skmom {

/// Natural log of a strictly positive moment.
struct LogMoment {
  double log_value = 0.0;
};

/// Enumeration budgets. These are engineering limits, adjustable through the
/// CLI's --config file.
struct MomentBudget {
  /// Brute force enumerates 2^{kN} configurations; refuse when kN exceeds this.
  int max_bruteforce_bits = 24;
  /// Upper bound on the number of compositions C(N + 2^k - 1, 2^k - 1).
  double max_compositions = 1e9;
};

inline void to_json(nlohmann::json& j, const MomentBudget& b) {
  j = nlohmann::json{{"max_bruteforce_bits", b.max_bruteforce_bits}, {"max_compositions", b.max_compositions}};
}

inline void from_json(const nlohmann::json& j, MomentBudget& b) {
  b.max_bruteforce_bits = j.value("max_bruteforce_bits", b.max_bruteforce_bits);
  b.max_compositions = j.value("max_compositions", b.max_compositions);
}

namespace detail {

inline void check_bruteforce_budget(const ModelParams& p, const MomentBudget& budget) {
  p.validate();
  if (static_cast<long long>(p.k) * p.n > budget.max_bruteforce_bits)
    throw ResourceLimitError("max_bruteforce_bits",
                             "brute force needs 2^" + std::to_string(static_cast<long long>(p.k) * p.n) +
                                 " configurations; max_bruteforce_bits = " +
                                 std::to_string(budget.max_bruteforce_bits));
}

}  // namespace detail

/// Number of configurations (sigma^1..sigma^k) grouped by the integer
/// S = sum_{i<j} (sigma^1_i sigma^1_j + ... + sigma^k_i sigma^k_j)^2.
///
/// The configuration is viewed as N rows r_i in {0,1}^k, so the inner sum for
/// the pair (i,j) is the overlap of rows i and j. Flipping one replica on all
/// sites (XOR every row with the same mask) leaves S unchanged, so row 0 is
/// pinned to zero and counts are scaled by 2^k.
inline std::vector<std::uint64_t> bruteforce_histogram(const ModelParams& params,
                                                       const MomentBudget& budget = {}) {
  detail::check_bruteforce_budget(params, budget);
  const int k = params.k;
  const int n = params.n;
  const std::uint32_t cells = std::uint32_t{1} << k;
  std::vector<int> sq(cells);
  for (std::uint32_t x = 0; x < cells; ++x) {
    const int ov = overlap_bits(0, x, k);
    sq[x] = ov * ov;
  }
  const std::size_t max_s = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2 *
                                static_cast<std::size_t>(k * k);
  std::vector<std::uint64_t> hist(max_s + 1, 0);
  std::vector<std::uint32_t> rows(static_cast<std::size_t>(n), 0);

  // Depth-first over rows 1..n-1 carrying the partial S.
  auto descend = [&](auto&& self, int i, std::size_t partial) -> void {
    if (i == n) {
      ++hist[partial];
      return;
    }
    for (std::uint32_t r = 0; r < cells; ++r) {
      std::size_t s = partial;
      for (int j = 0; j < i; ++j) s += static_cast<std::size_t>(sq[r ^ rows[static_cast<std::size_t>(j)]]);
      rows[static_cast<std::size_t>(i)] = r;
      self(self, i + 1, s);
    }
  };
  descend(descend, 1, 0);
  for (auto& c : hist) c *= cells;
  return hist;
}

/// ln sum over all 2^{kN} configurations of exp{(beta^2/2N) S}.
inline LogMoment brute_force_log_moment(const ModelParams& params, const MomentBudget& budget = {}) {
  const auto hist = bruteforce_histogram(params, budget);
  const double scale = params.beta * params.beta / (2.0 * params.n);
  LogSumExp acc;
  for (std::size_t s = 0; s < hist.size(); ++s)
    if (hist[s] != 0) acc.add(std::log(static_cast<double>(hist[s])) + scale * static_cast<double>(s));
  return {acc.value()};
}

/// ln C(n + m - 1, m - 1), the number of compositions of n into m cells.
inline double log_composition_count(int n, std::uint64_t cells) {
  const double m = static_cast<double>(cells);
  return std::lgamma(n + m) - std::lgamma(n + 1.0) - std::lgamma(m);
}

/// Exact composition count; only meaningful when it fits in 64 bits.
inline std::uint64_t composition_count(int n, std::uint64_t cells) {
  // C(n + m - 1, n) built up multiplicatively; each partial product is a binomial.
  std::uint64_t c = 1;
  const std::uint64_t top = static_cast<std::uint64_t>(n) + cells - 1;
  for (std::uint64_t i = 1; i <= static_cast<std::uint64_t>(n); ++i) c = c * (top - static_cast<std::uint64_t>(n) + i) / i;
  return c;
}

struct CompositionSum {
  LogMoment log_moment;
  std::uint64_t summands = 0;
};

/// The composition form of E[Z_N^k]:
///   sum_{i_sigma} N!/prod i_sigma! exp{beta^2 kN/4 - beta^2 k^2/4
///                                      + (beta^2/2N) sum_{i<j} (sum_sigma i_sigma sigma_i sigma_j)^2}.
///
/// Compositions are visited in colexicographic order. Work is split into fixed
/// blocks by the count in the last cell and merged in block order, so the
/// result does not depend on `threads`.
inline CompositionSum composition_sum(const ModelParams& params, const MomentBudget& budget = {},
                                      int threads = 1) {
  params.validate();
  if (params.k < 2) throw std::invalid_argument("composition_log_moment: requires k >= 2");
  if (params.k > kMaxPmfDim) throw std::invalid_argument("composition_log_moment: k too large");
  const int k = params.k;
  const int n = params.n;
  const std::uint32_t cells = std::uint32_t{1} << k;
  if (log_composition_count(n, cells) > std::log(budget.max_compositions) + 1e-12)
    throw ResourceLimitError("max_compositions",
                             "composition sum needs C(" + std::to_string(n + cells - 1) + ", " +
                                 std::to_string(cells - 1) + ") terms; max_compositions = " +
                                 io::fmt_double(budget.max_compositions));

  const int pairs = k * (k - 1) / 2;
  // sign[cell * pairs + p] = sigma_i sigma_j for the p-th replica pair.
  std::vector<int> sign(static_cast<std::size_t>(cells) * static_cast<std::size_t>(pairs));
  for (std::uint32_t s = 0; s < cells; ++s) {
    int p = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j, ++p)
        sign[s * static_cast<std::size_t>(pairs) + static_cast<std::size_t>(p)] =
            (((s >> i) ^ (s >> j)) & 1U) ? -1 : 1;
  }
  std::vector<double> log_fact(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) log_fact[static_cast<std::size_t>(i)] = std::lgamma(i + 1.0);

  const double b2 = params.beta * params.beta;
  const double prefactor = b2 * k * n / 4.0 - b2 * k * k / 4.0 + log_fact[static_cast<std::size_t>(n)];
  const double scale = b2 / (2.0 * n);

  struct Block {
    LogSumExp acc;
    std::uint64_t count = 0;
  };

  auto run_block = [&](int top_count) {
    Block out;
    std::vector<std::int64_t> corr(static_cast<std::size_t>(pairs) * static_cast<std::size_t>(cells), 0);
    // corr[c * pairs + p]: correlation totals after cells >= c are assigned.
    auto level = [&](std::uint32_t c) { return corr.data() + static_cast<std::size_t>(c) * pairs; };
    const int* top_sign = &sign[(cells - 1) * static_cast<std::size_t>(pairs)];
    for (int p = 0; p < pairs; ++p) level(cells - 1)[p] = static_cast<std::int64_t>(top_count) * top_sign[p];

    auto fill = [&](auto&& self, std::uint32_t c, int remaining, double log_den) -> void {
      // Cells c+1..cells-1 are assigned; level(c+1) holds their totals.
      const std::int64_t* above = level(c + 1);
      const int* sc = &sign[c * static_cast<std::size_t>(pairs)];
      if (c == 0) {
        double energy = 0.0;
        for (int p = 0; p < pairs; ++p) {
          const double t = static_cast<double>(above[p] + static_cast<std::int64_t>(remaining) * sc[p]);
          energy += t * t;
        }
        out.acc.add(prefactor - log_den - log_fact[static_cast<std::size_t>(remaining)] + scale * energy);
        ++out.count;
        return;
      }
      std::int64_t* here = level(c);
      for (int v = 0; v <= remaining; ++v) {
        for (int p = 0; p < pairs; ++p) here[p] = above[p] + static_cast<std::int64_t>(v) * sc[p];
        self(self, c - 1, remaining - v, log_den + log_fact[static_cast<std::size_t>(v)]);
      }
    };
    fill(fill, cells - 2, n - top_count, log_fact[static_cast<std::size_t>(top_count)]);
    return out;
  };

  std::vector<Block> blocks(static_cast<std::size_t>(n) + 1);
  const int workers = std::clamp(threads, 1, n + 1);
  if (workers == 1) {
    for (int t = 0; t <= n; ++t) blocks[static_cast<std::size_t>(t)] = run_block(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int t = next++; t <= n; t = next++) blocks[static_cast<std::size_t>(t)] = run_block(t);
      });
    pool.clear();
  }

  CompositionSum result;
  LogSumExp total;
  for (const auto& b : blocks) {
    total.merge(b.acc);
    result.summands += b.count;
  }
  result.log_moment = {total.value()};
  return result;
}

inline LogMoment composition_log_moment(const ModelParams& params, const MomentBudget& budget = {},
                                        int threads = 1) {
  return composition_sum(params, budget, threads).log_moment;
}

struct IdentityCheck {
  LogMoment lhs;
  LogMoment rhs;
  double gap = 0.0;
};

/// Checks E[Z_N(beta)^k] = exp{beta^2 kN/4 - beta^2 k^2/4} E[Z_k(beta sqrt(k/N))^N}.
/// Both sides use the brute-force evaluator.
inline IdentityCheck verify_identity(const ModelParams& params, const MomentBudget& budget = {}) {
  params.validate();
  if (params.k < 2) throw std::invalid_argument("verify_identity: requires k >= 2");
  const ModelParams dual{params.n, params.k, params.beta * std::sqrt(static_cast<double>(params.k) / params.n)};
  detail::check_bruteforce_budget(params, budget);
  detail::check_bruteforce_budget(dual, budget);
  const double b2 = params.beta * params.beta;
  IdentityCheck out;
  out.lhs = brute_force_log_moment(params, budget);
  out.rhs = {b2 * params.k * params.n / 4.0 - b2 * params.k * params.k / 4.0 +
             brute_force_log_moment(dual, budget).log_value};
  out.gap = std::abs(out.lhs.log_value - out.rhs.log_value);
  return out;
}

/// (1/N) ln E[Z_N(beta)^k] from the composition sum.
inline double finite_n_rate(const ModelParams& params, const MomentBudget& budget = {}, int threads = 1) {
  return composition_log_moment(params, budget, threads).log_value / params.n;
}

/// Second moment through its dual form
///   E[Z_N(beta)^2] = e^{beta^2 N/2 - beta^2} 4^N E cosh^N(beta g / sqrt(N)),
/// with the Gaussian expectation done by Gauss-Hermite quadrature.
inline LogMoment second_moment_by_quadrature(int n, double beta, int nodes = 160) {
  if (n < 1) throw std::invalid_argument("second_moment_by_quadrature: n must be >= 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("second_moment_by_quadrature: beta must be >= 0");
  const auto rule = gauss_hermite(nodes);
  const double c = beta / std::sqrt(static_cast<double>(n));
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double z = std::numbers::sqrt2 * rule.nodes[i];
    // ln cosh(x) = |x| + ln((1 + e^{-2|x|}) / 2)
    const double ax = std::abs(c * z);
    const double log_cosh = ax + std::log1p(std::exp(-2.0 * ax)) - kLn2;
    terms[i] = std::log(rule.weights[i]) + n * log_cosh;
  }
  const double log_expectation = log_sum_exp(terms) - 0.5 * std::log(std::numbers::pi);
  const double b2 = beta * beta;
  return {b2 * n / 2.0 - b2 + n * std::log(4.0) + log_expectation};
}

enum class MomentMethod { kBruteForce, kComposition };

inline const char* to_string(MomentMethod m) {
  return m == MomentMethod::kBruteForce ? "bruteforce" : "composition";
}

inline MomentMethod parse_moment_method(const std::string& s) {
  if (s == "bruteforce") return MomentMethod::kBruteForce;
  if (s == "composition") return MomentMethod::kComposition;
  throw std::invalid_argument("unknown moment method '" + s + "' (expected bruteforce|composition)");
}

inline LogMoment log_moment(const ModelParams& params, MomentMethod method, const MomentBudget& budget = {},
                            int threads = 1) {
  return method == MomentMethod::kBruteForce ? brute_force_log_moment(params, budget)
                                             : composition_log_moment(params, budget, threads);
}

inline nlohmann::json moment_record_json(const ModelParams& p, MomentMethod m, LogMoment v) {
  return nlohmann::json{{"n", p.n}, {"k", p.k}, {"beta", p.beta}, {"method", to_string(m)}, {"log_moment", v.log_value}};
}

inline constexpr const char* kMomentCsvHeader = "n,k,beta,method,log_moment";

inline std::string moment_record_csv(const ModelParams& p, MomentMethod m, LogMoment v) {
  return std::to_string(p.n) + "," + std::to_string(p.k) + "," + io::fmt_double(p.beta) + "," + to_string(m) +
         "," + io::fmt_double(v.log_value);
}

}  // namespace skmom
