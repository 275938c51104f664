#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

using nlohmann::json;

constexpr double kLn2 = 0.69314718055994530942;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SKMOM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, {}};
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

json outputs(const Run& r) { return json::parse(r.out).at("outputs"); }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

TEST(CliMoment, BruteForceHandValue) {
  const auto r = run("moment --n 2 --k 2 --beta 1 --method bruteforce");
  ASSERT_EQ(r.code, 0);
  const auto rec = json::parse(r.out);
  EXPECT_EQ(rec.at("command"), "moment");
  EXPECT_TRUE(rec.contains("wall_time_ms"));
  EXPECT_TRUE(rec.contains("tool_version"));
  EXPECT_NEAR(rec.at("outputs")[0].at("log_moment").get<double>(), std::log(8.0 * std::exp(1.0) + 8.0), 1e-12);
}

TEST(CliMoment, BetaZeroDefaultsToComposition) {
  const auto r = run("moment --n 3 --k 2 --beta 0");
  ASSERT_EQ(r.code, 0);
  const auto o = outputs(r)[0];
  EXPECT_EQ(o.at("method"), "composition");
  EXPECT_NEAR(o.at("log_moment").get<double>(), 6 * kLn2, 1e-12);
}

TEST(CliMoment, BudgetRefusalExitsTwo) {
  EXPECT_EQ(run("moment --n 50 --k 4 --method bruteforce").code, 2);
  const std::string cmd = std::string(SKMOM_CLI_PATH) + " moment --n 50 --k 4 --method bruteforce 2>&1 >/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  char buf[1024] = {};
  const std::size_t got = fread(buf, 1, sizeof buf - 1, pipe);
  pclose(pipe);
  EXPECT_NE(std::string(buf, got).find("max_bruteforce_bits"), std::string::npos);
}

TEST(CliMoment, CsvHasFullPrecision) {
  const auto r = run("--format csv moment --n 2 --k 2 --beta 1 --method bruteforce");
  ASSERT_EQ(r.code, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "k", "beta", "method", "log_moment"}));
  EXPECT_EQ(std::stod(rows[1][4]), std::log(8.0 * std::exp(1.0) + 8.0));
}

TEST(CliUsage, BadInputExitsOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("moment --method montecarlo").code, 1);
  EXPECT_EQ(run("--format xml moment").code, 1);
  EXPECT_EQ(run("moment --n 2 --k 2 --beta -1").code, 1);
  EXPECT_EQ(run("scan --k 1").code, 1);
  EXPECT_EQ(run("--config /nonexistent/cfg.json limit").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(CliVerifyIdentity, Examples) {
  for (const char* args : {"verify-identity --n 3 --k 2 --beta 1.0", "verify-identity --n 4 --k 3 --beta 2.5"}) {
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << args;
    EXPECT_LE(outputs(r)[0].at("gap").get<double>(), 1e-9) << args;
  }
  const auto zero = run("verify-identity --n 2 --k 2 --beta 0");
  ASSERT_EQ(zero.code, 0);
  EXPECT_EQ(outputs(zero)[0].at("gap").get<double>(), 0.0);
}

TEST(CliLimit, BothMethodsAgreeBelowTransition) {
  const auto r = run("limit --k 2 --beta 0.8 --method both");
  ASSERT_EQ(r.code, 0);
  const auto o = outputs(r);
  ASSERT_EQ(o.size(), 3U);
  EXPECT_NEAR(o[0].at("value").get<double>(), 1.706294, 1e-6);
  EXPECT_NEAR(o[1].at("value").get<double>(), 1.706294, 1e-6);
  EXPECT_EQ(o[2].at("method"), "difference");
  EXPECT_LE(o[2].at("value").get<double>(), 1e-9);
}

TEST(CliLimit, ClosedForms) {
  const auto r = run("limit --k 3 --beta 0");
  ASSERT_EQ(r.code, 0);
  for (const auto& row : outputs(r))
    if (row.at("method") != "difference") EXPECT_NEAR(row.at("value").get<double>(), 3 * kLn2, 1e-12);
  const auto one = run("limit --k 1 --beta 0.6");
  ASSERT_EQ(one.code, 0);
  EXPECT_NEAR(outputs(one)[1].at("value").get<double>(), kLn2 + 0.09, 1e-12);
}

TEST(CliLimit, TalagrandAboveTransition) {
  const auto r = run("limit --k 2 --beta 1.5 --method talagrand");
  ASSERT_EQ(r.code, 0);
  const auto o = outputs(r)[0];
  EXPECT_NEAR(o.at("value").get<double>(), 2.9551, 1e-3);
  EXPECT_NEAR(o.at("q_star").get<double>(), 1.09744, 1e-5);
}

TEST(CliLimit, SeedAndConfigAreDeterministic) {
  const auto a = run("--format csv --seed 7 limit --k 3 --beta 1.3 --method variational");
  const auto b = run("--format csv --seed 7 limit --k 3 --beta 1.3 --method variational");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);

  const std::string path = ::testing::TempDir() + "skmom_cfg.json";
  std::ofstream(path) << R"({"solver": {"starts": 1}, "scan": {"grid_points": 512}})";
  const auto c = run("--config " + path + " limit --k 2 --beta 1.5");
  EXPECT_EQ(c.code, 0);
}

TEST(CliConverge, GapShrinksAndCsvCarriesFittedC) {
  const auto r = run("--format csv converge --k 2 --beta 0.8 --n 8 16 32 64");
  ASSERT_EQ(r.code, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 5U);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "rate", "limit", "gap"}));
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][3]), std::stod(rows[i - 1][3]) + 1e-12);
  EXPECT_NE(r.out.find("# fitted_C="), std::string::npos);
}

TEST(CliConverge, BetaZeroHasZeroGap) {
  const auto r = run("converge --k 2 --beta 0 --n 4 8");
  ASSERT_EQ(r.code, 0);
  for (const auto& row : outputs(r)) EXPECT_NEAR(row.at("gap").get<double>(), 0.0, 1e-13);
}

TEST(CliConverge, KThreeRateIsBoundedByFittedC) {
  const auto r = run("converge --k 3 --beta 1.0 --n 6 12 24");
  ASSERT_EQ(r.code, 0);
  const auto rec = json::parse(r.out);
  const double c = rec.at("params").at("fitted_C").get<double>();
  EXPECT_TRUE(std::isfinite(c));
  for (const auto& row : rec.at("outputs")) {
    const double n = row.at("N").get<double>();
    EXPECT_LE(row.at("gap").get<double>(), c * std::log(n) / n + 1e-12);
  }
}

TEST(CliScan, BranchSwitchNearOne) {
  const auto r = run("scan --k 2 --beta-min 0.5 --beta-max 1.5 --steps 20");
  ASSERT_EQ(r.code, 0);
  const auto rec = json::parse(r.out);
  const double sw = rec.at("params").at("branch_switch_beta").get<double>();
  EXPECT_GT(sw, 1.0);
  EXPECT_LE(sw, 1.05 + 1e-12);
  const auto first = rec.at("outputs")[0];
  EXPECT_EQ(first.at("s_size"), 1);
  EXPECT_EQ(first.at("q_star").get<double>(), 0.0);
}

TEST(CliScan, SmallBetaRowIsTheZeroBranch) {
  for (int k : {2, 3, 4}) {
    const auto r = run("--format csv scan --k " + std::to_string(k) + " --beta-min 0.1 --beta-max 0.2 --steps 1");
    ASSERT_EQ(r.code, 0);
    const auto rows = csv_rows(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"beta", "k", "s_size", "q_star", "limit_value", "branch"}));
    EXPECT_NEAR(std::stod(rows[1][4]), k * kLn2 + k * 0.01 / 4.0, 1e-12);
    EXPECT_EQ(rows[1][5], "zero-branch");
  }
}

TEST(CliStationary, Examples) {
  const auto hi = outputs(run("stationary --k 2 --beta 1.5"));
  ASSERT_EQ(hi.size(), 2U);
  EXPECT_FALSE(hi[0].at("winner").get<bool>());
  EXPECT_TRUE(hi[1].at("winner").get<bool>());
  EXPECT_NEAR(hi[1].at("q").get<double>(), 1.09744, 1e-5);
  for (const char* args : {"stationary --k 2 --beta 0.5", "stationary --k 3 --beta 0.2"}) {
    const auto lo = outputs(run(args));
    ASSERT_EQ(lo.size(), 1U) << args;
    EXPECT_EQ(lo[0].at("q").get<double>(), 0.0);
    EXPECT_TRUE(lo[0].at("winner").get<bool>());
  }
}

TEST(CliThreads, EnvironmentFallbackGivesTheSameBits) {
  const auto a = run("--format csv --threads 1 moment --n 10 --k 3 --beta 1.2");
  const std::string cmd = "SKMOM_THREADS=3 " + std::string(SKMOM_CLI_PATH) + " --format csv moment --n 10 --k 3 --beta 1.2";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  char buf[1024] = {};
  const std::size_t got = fread(buf, 1, sizeof buf - 1, pipe);
  EXPECT_EQ(WEXITSTATUS(pclose(pipe)), 0);
  EXPECT_EQ(a.out, std::string(buf, got));
}

}  // namespace
