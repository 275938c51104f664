// skmom: command-line front end. Every command prints one record (JSON) or a
// table (CSV) on stdout; diagnostics go to stderr.
//
// Exit codes: 0 ok, 1 usage, 2 budget refusal, 3 cross-method disagreement.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skmom/skmom.hpp"

namespace {

using nlohmann::json;
using skmom::io::fmt_double;

constexpr int kExitUsage = 1;
constexpr int kExitBudget = 2;
constexpr int kExitDisagree = 3;
constexpr double kBothTolerance = 1e-6;

struct Globals {
  std::string format = "json";
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string config_path;

  skmom::SolverConfig solver;
  skmom::ScanConfig scan;
  skmom::MomentBudget budget;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SKMOM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

void load_config(Globals& g) {
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw std::invalid_argument("cannot open config file '" + g.config_path + "'");
    const json j = json::parse(in);
    if (j.contains("solver")) g.solver = j.at("solver").get<skmom::SolverConfig>();
    if (j.contains("scan")) g.scan = j.at("scan").get<skmom::ScanConfig>();
    if (j.contains("budget")) g.budget = j.at("budget").get<skmom::MomentBudget>();
  }
  if (g.seed) g.solver.seed = *g.seed;
}

// Output sink: a JSON RunRecord or CSV text.
struct Emitter {
  const Globals& g;
  std::string command;
  json params;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  bool csv() const { return g.format == "csv"; }

  void json_record(const json& outputs) const {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    json rec{{"command", command},
             {"params", params},
             {"outputs", outputs},
             {"wall_time_ms", ms.count()},
             {"tool_version", skmom::kVersion}};
    std::cout << rec.dump(2) << '\n';
  }
};

// k = 1 and beta = 0 lie outside the stationary-set machinery; both have closed forms.
skmom::TalagrandLimit talagrand_value(int k, double beta, const skmom::ScanConfig& scan) {
  if (k == 1) return {skmom::kLn2 + beta * beta / 4.0, 0.0};
  if (beta == 0.0) return {k * skmom::kLn2, 0.0};
  return skmom::talagrand_limit(k, beta, scan);
}

int cmd_moment(const Globals& g, int n, int k, double beta, const std::string& method_name) {
  const skmom::ModelParams p{k, n, beta};
  p.validate();
  const auto method = skmom::parse_moment_method(method_name);
  Emitter out{g, "moment", {{"n", n}, {"k", k}, {"beta", beta}, {"method", method_name}}};
  const auto v = skmom::log_moment(p, method, g.budget, resolve_threads(g.threads));
  if (out.csv()) {
    std::cout << skmom::kMomentCsvHeader << '\n' << skmom::moment_record_csv(p, method, v) << '\n';
  } else {
    out.json_record(json::array({skmom::moment_record_json(p, method, v)}));
  }
  return 0;
}

int cmd_verify_identity(const Globals& g, int n, int k, double beta) {
  const skmom::ModelParams p{k, n, beta};
  p.validate();
  Emitter out{g, "verify-identity", {{"n", n}, {"k", k}, {"beta", beta}}};
  const auto r = skmom::verify_identity(p, g.budget);
  if (out.csv()) {
    std::cout << "n,k,beta,lhs,rhs,gap\n"
              << n << ',' << k << ',' << fmt_double(beta) << ',' << fmt_double(r.lhs.log_value) << ','
              << fmt_double(r.rhs.log_value) << ',' << fmt_double(r.gap) << '\n';
  } else {
    out.json_record(json::array({{{"n", n},
                                  {"k", k},
                                  {"beta", beta},
                                  {"lhs", r.lhs.log_value},
                                  {"rhs", r.rhs.log_value},
                                  {"gap", r.gap}}}));
  }
  return 0;
}

int cmd_limit(const Globals& g, int k, double beta, const std::string& method) {
  if (method != "variational" && method != "talagrand" && method != "both")
    throw std::invalid_argument("unknown limit method '" + method + "'");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  Emitter out{g, "limit", {{"k", k}, {"beta", beta}, {"method", method}, {"seed", g.solver.seed}}};

  json rows = json::array();
  std::string table = "k,beta,method,value,q_star\n";
  auto add_row = [&](const std::string& m, double value, std::optional<double> q) {
    json r{{"k", k}, {"beta", beta}, {"method", m}, {"value", value}};
    if (q) r["q_star"] = *q;
    rows.push_back(r);
    table += std::to_string(k) + ',' + fmt_double(beta) + ',' + m + ',' + fmt_double(value) + ',' +
             (q ? fmt_double(*q) : std::string()) + '\n';
  };

  std::optional<double> variational, talagrand;
  if (method != "talagrand") {
    const auto r = skmom::maximize_F(k, beta, g.solver);
    if (!r.converged) std::cerr << "warning: variational solver hit max_iters (kkt " << r.kkt_residual << ")\n";
    variational = r.value;
    add_row("variational", r.value, std::nullopt);
  }
  if (method != "variational") {
    const auto t = talagrand_value(k, beta, g.scan);
    talagrand = t.value;
    add_row("talagrand", t.value, t.argmax_q);
  }
  int code = 0;
  if (variational && talagrand) {
    const double diff = std::abs(*variational - *talagrand);
    add_row("difference", diff, std::nullopt);
    if (diff > kBothTolerance) {
      std::cerr << "error: variational and talagrand limits differ by " << fmt_double(diff) << '\n';
      code = kExitDisagree;
    }
  }
  if (out.csv()) std::cout << table;
  else out.json_record(rows);
  return code;
}

int cmd_converge(const Globals& g, int k, double beta, const std::vector<int>& ns) {
  if (ns.empty()) throw std::invalid_argument("converge needs at least one N");
  Emitter out{g, "converge", {{"k", k}, {"beta", beta}, {"n", ns}}};
  const double limit = talagrand_value(k, beta, g.scan).value;
  const int threads = resolve_threads(g.threads);

  json rows = json::array();
  std::string table = "N,rate,limit,gap\n";
  // Smallest C with gap <= C ln N / N over the rows with N > 1.
  double fitted_c = 0.0;
  for (int n : ns) {
    const double rate = skmom::finite_n_rate({k, n, beta}, g.budget, threads);
    const double gap = std::abs(rate - limit);
    if (n > 1) fitted_c = std::max(fitted_c, gap * n / std::log(static_cast<double>(n)));
    rows.push_back({{"N", n}, {"rate", rate}, {"limit", limit}, {"gap", gap}});
    table += std::to_string(n) + ',' + fmt_double(rate) + ',' + fmt_double(limit) + ',' + fmt_double(gap) + '\n';
  }
  if (out.csv()) {
    std::cout << table << "# fitted_C=" << fmt_double(fitted_c) << '\n';
  } else {
    out.params["fitted_C"] = fitted_c;
    out.json_record(rows);
  }
  return 0;
}

int cmd_scan(const Globals& g, int k, double beta_min, double beta_max, int steps) {
  if (k < 2) throw std::invalid_argument("scan needs k >= 2");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(beta_min > 0.0) || !(beta_max >= beta_min)) throw std::invalid_argument("need 0 < beta_min <= beta_max");
  Emitter out{g, "scan", {{"k", k}, {"beta_min", beta_min}, {"beta_max", beta_max}, {"steps", steps}}};

  json rows = json::array();
  std::string table = "beta,k,s_size,q_star,limit_value,branch\n";
  std::optional<double> switch_beta;
  for (int i = 0; i <= steps; ++i) {
    const double beta = beta_min + (beta_max - beta_min) * i / steps;
    const auto set = skmom::find_stationary_set(k, beta, g.scan);
    for (const auto& w : set.warnings) std::cerr << "warning: beta=" << fmt_double(beta) << ": " << w << '\n';
    const auto lim = skmom::talagrand_limit(k, beta, g.scan);
    const char* branch = lim.argmax_q > 0.0 ? "interior" : "zero-branch";
    if (lim.argmax_q > 0.0 && !switch_beta) switch_beta = beta;
    rows.push_back({{"beta", beta},
                    {"k", k},
                    {"s_size", set.points.size()},
                    {"q_star", lim.argmax_q},
                    {"limit_value", lim.value},
                    {"branch", branch}});
    table += fmt_double(beta) + ',' + std::to_string(k) + ',' + std::to_string(set.points.size()) + ',' +
             fmt_double(lim.argmax_q) + ',' + fmt_double(lim.value) + ',' + branch + '\n';
  }
  if (out.csv()) {
    std::cout << table << "# branch_switch_beta=" << (switch_beta ? fmt_double(*switch_beta) : "none") << '\n';
  } else {
    out.params["branch_switch_beta"] = switch_beta ? json(*switch_beta) : json(nullptr);
    out.json_record(rows);
  }
  return 0;
}

int cmd_stationary(const Globals& g, int k, double beta) {
  Emitter out{g, "stationary", {{"k", k}, {"beta", beta}}};
  const auto set = skmom::find_stationary_set(k, beta, g.scan);
  for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
  std::size_t winner = 0;
  for (std::size_t i = 1; i < set.points.size(); ++i)
    if (set.points[i].f_value > set.points[winner].f_value + 1e-12) winner = i;

  json rows = json::array();
  std::string table = "q,f_value,kind,fp_residual,winner\n";
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const auto& p = set.points[i];
    json r = p;
    r["winner"] = i == winner;
    rows.push_back(r);
    table += fmt_double(p.q) + ',' + fmt_double(p.f_value) + ',' + skmom::to_string(p.kind) + ',' +
             fmt_double(p.fp_residual) + ',' + (i == winner ? "1" : "0") + '\n';
  }
  if (out.csv()) std::cout << table;
  else out.json_record(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact replica moments of the Sherrington-Kirkpatrick partition function"};
  app.set_version_flag("--version", std::string(skmom::kVersion));
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed = 0;
  auto* fmt = app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  auto* thr = app.add_option("--threads", g.threads, "Worker threads (default: SKMOM_THREADS, else all cores)")
                  ->check(CLI::NonNegativeNumber);
  auto* sd = app.add_option("--seed", seed, "Seed for the variational multistart");
  auto* cfg = app.add_option("--config", g.config_path, "JSON file with solver/scan/budget overrides");
  for (auto* o : {fmt, thr, sd, cfg}) o->configurable(false);
  app.fallthrough();

  int n = 2, k = 2, steps = 20;
  double beta = 1.0, beta_min = 0.1, beta_max = 2.0;
  std::string moment_method = "composition", limit_method = "both";
  std::vector<int> ns{8, 16, 32, 64};

  auto* moment = app.add_subcommand("moment", "log E[Z_N^k]");
  moment->add_option("--n", n)->check(CLI::PositiveNumber);
  moment->add_option("--k", k)->check(CLI::PositiveNumber);
  moment->add_option("--beta", beta);
  moment->add_option("--method", moment_method)->check(CLI::IsMember({"bruteforce", "composition"}));

  auto* verify = app.add_subcommand("verify-identity", "Check the replica/size duality of the moments");
  verify->add_option("--n", n)->check(CLI::PositiveNumber);
  verify->add_option("--k", k)->check(CLI::PositiveNumber);
  verify->add_option("--beta", beta);

  auto* limit = app.add_subcommand("limit", "Large-N limit of (1/N) log E[Z_N^k]");
  limit->add_option("--k", k)->check(CLI::PositiveNumber);
  limit->add_option("--beta", beta);
  limit->add_option("--method", limit_method)->check(CLI::IsMember({"variational", "talagrand", "both"}));

  auto* converge = app.add_subcommand("converge", "Finite-N rates against the limit");
  converge->add_option("--k", k)->check(CLI::PositiveNumber);
  converge->add_option("--beta", beta);
  converge->add_option("--n", ns, "List of N")->check(CLI::PositiveNumber);

  auto* scan = app.add_subcommand("scan", "Stationary-set branch structure over a beta grid");
  scan->add_option("--k", k)->check(CLI::PositiveNumber);
  scan->add_option("--beta-min", beta_min);
  scan->add_option("--beta-max", beta_max);
  scan->add_option("--steps", steps);

  auto* stationary = app.add_subcommand("stationary", "Stationary points of the one-dimensional limit function");
  stationary->add_option("--k", k)->check(CLI::PositiveNumber);
  stationary->add_option("--beta", beta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  if (*sd) g.seed = seed;

  try {
    load_config(g);
    if (*moment) return cmd_moment(g, n, k, beta, moment_method);
    if (*verify) return cmd_verify_identity(g, n, k, beta);
    if (*limit) return cmd_limit(g, k, beta, limit_method);
    if (*converge) return cmd_converge(g, k, beta, ns);
    if (*scan) return cmd_scan(g, k, beta_min, beta_max, steps);
    if (*stationary) return cmd_stationary(g, k, beta);
  } catch (const skmom::ResourceLimitError& e) {
    std::cerr << "budget refusal (" << e.limit_name() << "): " << e.what() << '\n';
    return kExitBudget;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
