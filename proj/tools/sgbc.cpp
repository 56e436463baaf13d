// sgbc: simulation and gain analysis from the command line.
//
// Exit codes: 0 ok, 1 usage or schema error, 2 I/O error, 3 simulation blow-up,
// 4 design check failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "sgbc/gain_analysis.hpp"
#include "sgbc/report.hpp"
#include "sgbc/scenario.hpp"
#include "sgbc/simulation.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kBlowup = 3, kDesignFail = 4 };

struct Output {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path);
    if (!file) throw sgbc::io_error("cannot write '" + path + "'");
    stream = &file;
  }
  void finish() {
    stream->flush();
    if (!*stream) throw sgbc::io_error("write failed");
  }
};

void print_json(nlohmann::json j, std::ostream& out, int digits) {
  if (digits > 0) sgbc::round_json(j, digits);
  out << j.dump(2) << '\n';
}

std::size_t xi_count(const sgbc::SimConfig& cfg) {
  if (const auto* d = std::get_if<sgbc::DynamicController>(&cfg.controller)) return d->size();
  return 0;
}

int run_simulation(const sgbc::Scenario& sc, const std::string& out_path) {
  const sgbc::Trace tr = sgbc::simulate(sc.sim);
  Output out(out_path);
  sgbc::write_trace_csv(*out.stream, tr, xi_count(sc.sim));
  out.finish();
  if (tr.blew_up()) {
    std::cerr << "blow-up at t=" << sgbc::format_number(*tr.blowup_time) << '\n';
    return kBlowup;
  }
  return kOk;
}

int run_ub_sweep(double r_max, double step, const sgbc::AchievableOptions& opt, bool use_ub, double mu,
                 const std::string& out_path) {
  Output out(out_path);
  *out.stream << "r," << (use_ub ? "ub" : "b") << ",omega_star,lambda_star\n";
  const int n = static_cast<int>(std::llround(r_max / step));
  for (int i = 0; i <= n; ++i) {
    const double r = i * step;
    const auto res = use_ub ? sgbc::ub(r, opt) : sgbc::b_achievable(r, mu, opt);
    *out.stream << sgbc::format_number(r) << ',' << sgbc::format_number(res.value) << ','
                << sgbc::format_number(res.omega_star) << ',' << sgbc::format_number(res.lambda_star) << '\n';
  }
  out.finish();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulation and small-gain boundary control analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  int digits = 0;
  app.add_option("--digits", digits, "Significant digits for JSON display (0: full precision)")
      ->check(CLI::Range(0, 17));

  std::string scenario_path, out_path;

  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write a CSV trace");
  sim->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("-o,--output", out_path, "Output CSV (default stdout)");

  double mu = 0.0;
  int m_max = 8;
  auto* lower = app.add_subcommand("gain-lower", "Kernel-independent lower bounds sqrt(g_m(mu))");
  lower->add_option("--mu", mu, "mu = sqrt(q/p)/pi")->check(CLI::NonNegativeNumber);
  lower->add_option("--m-max", m_max, "Largest mode count")->check(CLI::PositiveNumber);

  double r = 0.91;
  bool use_ub = false, sweep = false;
  double r_max = 3.0, r_step = 0.01;
  sgbc::AchievableOptions opt;
  auto* ach = app.add_subcommand("gain-achievable", "Achievable gain bound of the single-mode law");
  ach->add_option("--r", r, "Feedback amplitude r")->check(CLI::NonNegativeNumber);
  ach->add_option("--mu", mu, "mu = sqrt(q/p)/pi")->check(CLI::NonNegativeNumber);
  ach->add_flag("--use-ub", use_ub, "Use the closed-form majorant (mu = 0)");
  ach->add_flag("--sweep", sweep, "Sweep r over [0, r-max] and write CSV");
  ach->add_option("--r-max", r_max, "Sweep upper end")->check(CLI::NonNegativeNumber);
  ach->add_option("--r-step", r_step, "Sweep step")->check(CLI::PositiveNumber);
  ach->add_option("--grid", opt.grid, "Grid points per axis")->check(CLI::Range(3, 100000));
  ach->add_option("--n-series", opt.N_series, "Series terms before the tail bracket")->check(CLI::PositiveNumber);
  ach->add_option("-o,--output", out_path, "Output file for --sweep (default stdout)");

  auto* design = app.add_subcommand("design-check", "Evaluate the small-gain conditions of a scenario");
  design->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  std::string kernel_name = "single_mode";
  double p = 1.0, q = 0.0;
  int m = 6;
  auto* steady = app.add_subcommand("steady-gain", "Exact steady-state gain of a static kernel");
  steady->add_option("--kernel", kernel_name, "zero | single_mode")
      ->check(CLI::IsMember({"zero", "single_mode"}));
  steady->add_option("--r", r, "Feedback amplitude r")->check(CLI::NonNegativeNumber);
  steady->add_option("--p", p, "Diffusion coefficient")->check(CLI::PositiveNumber);
  steady->add_option("--q", q, "Reaction coefficient (>= 0)")->check(CLI::NonNegativeNumber);
  steady->add_option("--m", m, "Number of source modes")->check(CLI::PositiveNumber);

  std::string target;
  auto* repro = app.add_subcommand("reproduce", "Write the data behind a reference figure");
  repro->add_option("target", target, "fig1 | fig2 | fig3 | fig4")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4"}));
  repro->add_option("-o,--output", out_path, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*sim) return run_simulation(sgbc::load_scenario(scenario_path), out_path);

    if (*lower) {
      const auto g = sgbc::gamma_lower(mu, m_max);
      nlohmann::json j;
      j["mu"] = mu;
      j["table"] = nlohmann::json::array();
      for (int k = 1; k <= m_max; ++k) {
        j["table"].push_back({{"m", k}, {"g_m", g.g[k - 1]}, {"sqrt_g_m", std::sqrt(g.g[k - 1])}});
      }
      j["gamma_lower"] = g.value;
      j["last_increment"] = g.last_increment;
      print_json(j, std::cout, digits);
      return kOk;
    }

    if (*ach) {
      if (use_ub && mu != 0.0) throw std::invalid_argument("--use-ub requires --mu 0");
      if (sweep) return run_ub_sweep(r_max, r_step, opt, use_ub, mu, out_path);
      const auto res = use_ub ? sgbc::ub(r, opt) : sgbc::b_achievable(r, mu, opt);
      nlohmann::json j;
      j["r"] = r;
      j["mu"] = mu;
      j[use_ub ? "ub" : "b"] = res.value;
      j["omega_star"] = res.omega_star;
      j["lambda_star"] = res.lambda_star;
      print_json(j, std::cout, digits);
      return kOk;
    }

    if (*design) {
      const auto rep = sgbc::design_report(sgbc::load_scenario(scenario_path));
      print_json(rep, std::cout, digits);
      return rep["pass"].get<bool>() ? kOk : kDesignFail;
    }

    if (*steady) {
      const auto k = kernel_name == "zero" ? sgbc::zero_kernel() : sgbc::single_mode(r);
      const double g = sgbc::static_gain_exact(k, p, q, m);
      const double lambda1 = p * sgbc::kPi * sgbc::kPi + q;
      nlohmann::json j;
      j["kernel"] = sgbc::to_string(k.kind);
      j["r"] = k.r;
      j["p"] = p;
      j["q"] = q;
      j["m"] = m;
      j["gain"] = g;
      j["gain_numerator"] = g * lambda1;
      j["gamma_lower"] = sgbc::gamma_lower(sgbc::mu_of(p, q), m).value;
      print_json(j, std::cout, digits);
      return kOk;
    }

    if (*repro) {
      if (target == "fig2") return run_ub_sweep(3.0, 0.01, opt, true, 0.0, out_path);
      const std::string text = target == "fig1"   ? sgbc::builtin::fig1()
                               : target == "fig3" ? sgbc::builtin::fig3()
                                                  : sgbc::builtin::fig4();
      return run_simulation(sgbc::parse_scenario_text(text), out_path);
    }
  } catch (const sgbc::io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const sgbc::scenario_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
