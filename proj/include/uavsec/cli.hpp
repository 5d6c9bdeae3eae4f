#pragma once

// Command-line front end. Exit codes: 0 success, 1 infeasible scenario,
// 2 bad input, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uavsec/bcd.hpp"
#include "uavsec/errors.hpp"
#include "uavsec/io.hpp"
#include "uavsec/model.hpp"
#include "uavsec/oracle.hpp"

namespace uavsec::cli {

enum ExitCode : int { kOk = 0, kInfeasible = 1, kBadInput = 2, kNumerical = 3 };

inline std::vector<double> parse_gamma_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell == "inf" || cell == "none") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw ValidationError("--gammas-dbm: '" + cell + "' is not a number");
    out.push_back(dbm_to_watts(v));
  }
  if (out.empty()) throw ValidationError("--gammas-dbm needs at least one value");
  return out;
}

/// Seed for the oracle suite; CRN_SEED overrides the default.
inline std::uint64_t oracle_seed() {
  if (const char* env = std::getenv("CRN_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw ValidationError(std::string("CRN_SEED is not an integer: ") + env);
    }
  }
  return oracle::kDefaultSeed;
}

/// Random UAV position in the node bounding box, outside every uncertainty disc.
inline Vec2 random_probe(const Scenario& scen, std::mt19937_64& rng) {
  double x0 = scen.q_start.x(), x1 = x0, y0 = scen.q_start.y(), y1 = y0;
  auto grow = [&](const Vec2& p) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  };
  grow(scen.q_end);
  for (const auto& u : scen.users) grow(u);
  for (const auto& w : scen.primaries) grow(w);
  for (const auto& e : scen.eves) grow(e.estimate);
  std::uniform_real_distribution<double> ux(x0 - 100.0, x1 + 100.0), uy(y0 - 100.0, y1 + 100.0);
  while (true) {
    const Vec2 q(ux(rng), uy(rng));
    bool ok = true;
    for (const auto& e : scen.eves) ok = ok && (q - e.estimate).norm() >= e.radius + 1.0;
    if (ok) return q;
  }
}

struct ValidationSummary {
  int checks = 0;
  int failures = 0;
};

/// Jensen-direction checks of the rate and interference bounds at random probes.
inline ValidationSummary run_oracle_suite(const Scenario& scen, std::uint64_t seed, std::size_t probes,
                                          std::size_t samples, std::ostream& log) {
  ValidationSummary s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> up(0.0, scen.p_max);
  for (std::size_t i = 0; i < probes; ++i) {
    const Vec2 q = random_probe(scen, rng);
    const double p = up(rng);
    const auto est = oracle::mc_rate_estimate(q, p, scen, samples, seed + 2 * i);
    const double lb = legit_rate_lb(q, p, scen);
    ++s.checks;
    if (!(est.mean >= lb - 3.0 * est.stderr_)) {
      ++s.failures;
      log << "FAIL rate probe " << i << ": mc " << est.mean << " +- " << est.stderr_ << " < bound " << lb << "\n";
    }
    for (std::size_t r = 0; r < scen.num_primaries(); ++r) {
      const auto ie = oracle::mc_interference_estimate(q, p, scen, r, samples, seed + 2 * i + 1);
      const double ib = interference_bound(q, p, scen, r);
      ++s.checks;
      if (!(ib >= ie.mean - 3.0 * ie.stderr_)) {
        ++s.failures;
        log << "FAIL interference probe " << i << " primary " << r << ": bound " << ib << " < mc " << ie.mean
            << " +- " << ie.stderr_ << "\n";
      }
    }
  }
  return s;
}

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Secrecy-rate optimization for a UAV base station in an underlay cognitive radio network"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, scheme_name = "proposed", gammas, traj_csv, power_csv;
  double epsilon = -1.0;
  int max_iters = 50;
  std::size_t probes = 50, samples = 100000;

  auto* opt = app.add_subcommand("optimize", "Run one scheme and write result files");
  opt->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  opt->add_option("--scheme", scheme_name, "proposed | fpft | fpot | opft");
  opt->add_option("--out", out_dir, "Output directory")->required();
  opt->add_option("--epsilon", epsilon, "Stop when the WASR gain falls below this (default: scenario value)");
  opt->add_option("--max-iters", max_iters, "Outer iteration cap");

  auto* sweep = app.add_subcommand("sweep-gamma", "Run all schemes over a list of interference thresholds");
  sweep->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  sweep->add_option("--gammas-dbm", gammas, "Comma-separated thresholds in dBm ('inf' disables)")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--max-iters", max_iters, "Outer iteration cap");

  auto* val = app.add_subcommand("validate", "Check the model bounds against Monte-Carlo oracles");
  val->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  val->add_option("--probes", probes, "Random probes");
  val->add_option("--samples", samples, "Fading draws per probe");

  auto* eval = app.add_subcommand("evaluate", "Score a given trajectory and power profile");
  eval->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  eval->add_option("--trajectory", traj_csv, "CSV with slot,x_m,y_m")->required();
  eval->add_option("--power", power_csv, "CSV with slot,watts")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kBadInput;
  }

  try {
    const io::ScenarioFile file = io::load_scenario_file(scenario_path);
    const Scenario& scen = file.scenario;
    BcdConfig cfg;
    cfg.epsilon = epsilon > 0.0 ? epsilon : file.epsilon;
    cfg.max_iters = max_iters;
    cfg.validate();

    if (opt->parsed()) {
      const auto scheme = parse_scheme(scheme_name);
      if (!scheme) {
        std::cerr << "error: unknown scheme '" << scheme_name << "' (expected proposed, fpft, fpot or opft)\n";
        return kBadInput;
      }
      const BcdResult res = run_benchmark(scen, *scheme, cfg);
      io::emit_results(res.solution, res.trace, scen, to_string(*scheme), out_dir);
      std::cout << "scheme " << to_string(*scheme) << " wasr " << io::fmt(res.solution.wasr) << " iterations "
                << res.trace.records.size() << " status " << res.trace.status << "\n";
      return kOk;
    }
    if (sweep->parsed()) {
      const auto rows = sweep_it_threshold(scen, parse_gamma_list(gammas), cfg);
      io::write_sweep(rows, out_dir);
      for (const auto& r : rows)
        std::cout << (std::isinf(r.gamma_w) ? std::string("inf") : io::fmt(watts_to_dbm(r.gamma_w))) << " dBm "
                  << to_string(r.scheme) << " wasr " << io::fmt(r.wasr) << "\n";
      return kOk;
    }
    if (val->parsed()) {
      const std::uint64_t seed = oracle_seed();
      const auto s = run_oracle_suite(scen, seed, probes, samples, std::cerr);
      std::cout << "oracle checks " << s.checks << " failures " << s.failures << " seed " << seed << "\n";
      return s.failures == 0 ? kOk : kNumerical;
    }
    if (eval->parsed()) {
      const Trajectory t = io::load_trajectory_csv(traj_csv);
      const PowerProfile p = io::load_power_csv(power_csv);
      if (t.size() != scen.n_slots || p.size() != scen.n_slots)
        throw ValidationError("trajectory/power rows (" + std::to_string(t.size()) + "/" + std::to_string(p.size()) +
                              ") do not match the scenario's " + std::to_string(scen.n_slots) + " slots");
      const Solution sol = evaluate_solution(t, p, scen);
      const ConstraintAudit a = audit_solution(sol, scen);
      std::cout << "wasr " << io::fmt(sol.wasr) << "\nsee " << (sol.see ? io::fmt(*sol.see) : "undefined")
                << "\nmax_violation " << io::fmt(a.max_violation()) << "\nfeasible " << (a.feasible() ? "yes" : "no")
                << "\n";
      return kOk;
    }
  } catch (const InfeasibleScenario& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kBadInput;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const EveExclusionViolated& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const DegenerateDistance& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}

}  // namespace uavsec::cli
