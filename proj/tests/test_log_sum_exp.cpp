#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "skmom/log_sum_exp.hpp"

namespace {

using skmom::LogSumExp;

TEST(LogSumExp, EmptyIsMinusInfinity) {
  LogSumExp acc;
  EXPECT_TRUE(acc.empty());
  EXPECT_EQ(acc.value(), -INFINITY);
}

TEST(LogSumExp, HandlesValuesThatOverflowDirectly) {
  LogSumExp acc;
  acc.add(1000.0);
  acc.add(1000.0);
  EXPECT_NEAR(acc.value(), 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogSumExp, StreamingMatchesTwoPassAndMergeIsOrderFree) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::vector<double> xs(1000);
  for (auto& x : xs) x = u(rng);
  LogSumExp all, left, right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    all.add(xs[i]);
    (i < 400 ? left : right).add(xs[i]);
  }
  left.merge(right);
  EXPECT_NEAR(all.value(), skmom::log_sum_exp(xs), 1e-12);
  EXPECT_NEAR(left.value(), all.value(), 1e-12);
}

TEST(LogSumExp, IgnoresMinusInfinity) {
  LogSumExp acc;
  acc.add(-INFINITY);
  acc.add(0.0);
  EXPECT_DOUBLE_EQ(acc.value(), 0.0);
}

}  // namespace
