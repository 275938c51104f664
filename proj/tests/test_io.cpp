#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "skmom/exact_moments.hpp"
#include "skmom/io.hpp"
#include "skmom/talagrand.hpp"
#include "skmom/variational.hpp"

namespace {

using namespace skmom;

Pmf random_pmf(int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(Pmf::cell_count(k));
  for (auto& x : w) x = e(rng);
  return Pmf::normalized(k, std::move(w));
}

TEST(FmtDouble, RoundTripsExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(io::fmt_double(x)), x);
  }
  EXPECT_EQ(io::fmt_double(1.0), "1");
}

TEST(PmfJson, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  for (int k = 1; k <= 6; ++k) {
    const auto p = random_pmf(k, rng);
    const auto back = io::pmf_from_json(nlohmann::json::parse(io::pmf_to_json(p).dump()));
    EXPECT_EQ(back.dim(), k);
    EXPECT_EQ(back.weights(), p.weights());
  }
}

TEST(PmfCsv, RoundTripIsBitExact) {
  std::mt19937_64 rng(6);
  for (int k = 1; k <= 6; ++k) {
    const auto p = random_pmf(k, rng);
    const auto back = io::pmf_from_csv(io::pmf_to_csv(p));
    EXPECT_EQ(back.weights(), p.weights());
  }
}

TEST(PmfCsv, LayoutIsIndexSpinStringWeight) {
  const auto csv = io::pmf_to_csv(Pmf::point_mass(SpinVector(2, 1)));
  EXPECT_EQ(csv, "index,spin_string,weight\n0,--,0\n1,+-,1\n2,-+,0\n3,++,0\n");
}

TEST(PmfCsv, RejectsMalformedInput) {
  EXPECT_THROW(io::pmf_from_csv(""), std::invalid_argument);
  EXPECT_THROW(io::pmf_from_csv("index,spin_string,weight\n0,--\n"), std::invalid_argument);
  EXPECT_THROW(io::pmf_from_csv("index,spin_string,weight\n1,--,1\n"), std::invalid_argument);
  EXPECT_THROW(io::pmf_from_csv("index,spin_string,weight\n0,-x,1\n"), std::invalid_argument);
  EXPECT_THROW(io::pmf_from_csv("index,spin_string,weight\n0,--,0.5\n1,+-,0.1\n2,-+,0\n3,++,0\n"),
               std::invalid_argument);
}

TEST(PmfJson, RejectsMalformedInput) {
  EXPECT_THROW(io::pmf_from_json(nlohmann::json{{"k", 2}}), nlohmann::json::exception);
  EXPECT_THROW(io::pmf_from_json(nlohmann::json{{"k", 2}, {"weights", {0.5, 0.5}}}), std::invalid_argument);
  EXPECT_THROW(io::pmf_from_json(nlohmann::json{{"k", 1}, {"weights", {1.5, -0.5}}}), std::invalid_argument);
}

TEST(ConfigJson, BudgetAndScanRoundTrip) {
  MomentBudget b;
  b.max_bruteforce_bits = 12;
  const auto b2 = nlohmann::json(b).get<MomentBudget>();
  EXPECT_EQ(b2.max_bruteforce_bits, 12);
  EXPECT_EQ(b2.max_compositions, b.max_compositions);
  ScanConfig s;
  s.grid_points = 99;
  EXPECT_EQ(nlohmann::json(s).get<ScanConfig>().grid_points, 99);
  EXPECT_EQ(nlohmann::json::object().get<ScanConfig>().grid_points, ScanConfig{}.grid_points);
}

TEST(StationaryPointJson, CarriesTheListedFields) {
  const auto s = find_stationary_set(2, 1.5);
  const nlohmann::json j = s.points;
  ASSERT_EQ(j.size(), 2U);
  for (const auto& e : j) {
    EXPECT_TRUE(e.contains("q"));
    EXPECT_TRUE(e.contains("f_value"));
    EXPECT_TRUE(e.contains("kind"));
    EXPECT_TRUE(e.contains("fp_residual"));
  }
  EXPECT_EQ(j[0].at("kind"), "zero-branch");
  EXPECT_EQ(j[1].at("kind"), "interior");
}

}  // namespace
