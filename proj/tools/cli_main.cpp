// Command-line front end: check / simulate / validate / triples.
//
// Exit codes: 0 success (including well-posed `check` verdicts),
//             2 configuration or argument errors,
//             3 run-level failures (step budget, lazy window),
//             4 a statistical validation check failed.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rankflow/conditions.hpp"
#include "rankflow/config.hpp"
#include "rankflow/errors.hpp"
#include "rankflow/infinite.hpp"
#include "rankflow/io.hpp"
#include "rankflow/model.hpp"
#include "rankflow/sim.hpp"
#include "rankflow/stats.hpp"

namespace rf = rankflow;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void config_error(const std::string& message) {
  rf::raise(rf::Errc::bad_config, message);
}

unsigned resolve_threads(std::optional<unsigned> cli_threads) {
  if (cli_threads) return *cli_threads;
  const char* env = std::getenv("RANKFLOW_THREADS");
  if (env == nullptr || *env == '\0') return 0;  // auto
  unsigned value = 0;
  const char* last = env;
  while (*last != '\0') ++last;
  const auto [ptr, ec] = std::from_chars(env, last, value);
  if (ec != std::errc{} || ptr != last) {
    config_error("RANKFLOW_THREADS must be an unsigned integer");
  }
  return value;
}

std::uint64_t require_seed(const rf::ExperimentConfig& cfg) {
  if (!cfg.mc.seed) {
    config_error(cfg.source_path +
                 ": missing key 'seed' in [mc] (seeds are never implicit)");
  }
  return *cfg.mc.seed;
}

std::size_t require_n_paths(const rf::ExperimentConfig& cfg) {
  if (!cfg.mc.n_paths || *cfg.mc.n_paths == 0) {
    config_error(cfg.source_path + ": missing key 'n_paths' in [mc]");
  }
  return *cfg.mc.n_paths;
}

rf::SystemSpec finite_system(const rf::ExperimentConfig& cfg) {
  const auto& sys = cfg.system;
  if (sys.infinite) {
    config_error(cfg.source_path + ": this command needs a finite system");
  }
  rf::SystemSpec spec;
  spec.sigmas = rf::resolved_sigmas(sys);
  if (spec.sigmas.empty()) {
    config_error(cfg.source_path +
                 ": missing key 'sigmas' (or 'sigmas2') in [system]");
  }
  spec.drifts = sys.drifts;
  if (spec.drifts.empty()) {
    config_error(cfg.source_path + ": missing key 'drifts' in [system]");
  }
  if (sys.initial.empty()) {
    config_error(cfg.source_path + ": missing key 'initial' in [system]");
  }
  spec.initial = sys.initial;
  rf::validate_spec(spec);
  return spec;
}

rf::InfiniteSpec infinite_system(const rf::ExperimentConfig& cfg) {
  const auto& sys = cfg.system;
  rf::InfiniteSpec spec;
  if (!sys.M) config_error(cfg.source_path + ": missing key 'M' in [system]");
  spec.M = *sys.M;
  spec.head_sigmas = rf::resolved_sigmas(sys);
  if (spec.head_sigmas.empty()) {
    config_error(cfg.source_path +
                 ": missing key 'sigmas' (or 'sigmas2') in [system]");
  }
  spec.head_drifts = sys.drifts;
  if (spec.head_drifts.empty()) {
    config_error(cfg.source_path + ": missing key 'drifts' in [system]");
  }
  if (!sys.gamma1) {
    config_error(cfg.source_path + ": missing key 'gamma1' in [system]");
  }
  spec.gamma1 = *sys.gamma1;
  spec.gamma2 = sys.gamma2.value_or(0.0);
  if (!sys.initial_slope) {
    config_error(cfg.source_path +
                 ": missing key 'initial_slope' in [system]");
  }
  const double slope = *sys.initial_slope;
  const double offset = sys.initial_offset.value_or(0.0);
  spec.initial_fn = [slope, offset](std::size_t i) {
    return slope * static_cast<double>(i) + offset;
  };
  rf::validate_infinite(spec, spec.M);
  if (slope < spec.gamma1) {
    config_error(cfg.source_path +
                 ": 'initial_slope' below 'gamma1' violates the growth "
                 "condition eventually");
  }
  return spec;
}

std::filesystem::path out_file(const std::string& out_dir,
                               const std::string& name) {
  std::filesystem::create_directories(out_dir);
  return std::filesystem::path(out_dir) / name;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) config_error("cannot write " + path.string());
  out << text;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

// ---- check ---------------------------------------------------------------

int cmd_check(const rf::ExperimentConfig& cfg, const std::string& out_dir) {
  std::vector<double> vars = rf::resolved_variances(cfg.system);
  if (vars.empty()) {
    config_error(cfg.source_path +
                 ": missing key 'sigmas' (or 'sigmas2') in [system]");
  }
  const bool infinite = cfg.system.infinite;
  std::vector<double> ledger_vars = vars;
  if (infinite && ledger_vars.size() < 2) {
    // Verdicts are invariant under extending the head by tail copies, and
    // the spectral ledger needs at least two slots.
    ledger_vars.push_back(ledger_vars.back());
  }
  if (ledger_vars.size() < 2) {
    config_error(cfg.source_path +
                 ": the classification needs at least 2 variances");
  }
  const rf::ConditionReport report = rf::classify(ledger_vars, infinite);

  std::cout << "classification  " << rf::to_string(report.classification)
            << '\n'
            << "condition1      " << yes_no(report.condition1) << '\n'
            << "condition2      " << yes_no(report.condition2) << '\n'
            << "M0              " << rf::format_double(report.M0) << '\n'
            << "M1              " << rf::format_double(report.M1) << '\n'
            << "M2              " << rf::format_double(report.M2) << '\n'
            << "C               " << rf::format_double(report.C) << '\n'
            << "c               " << rf::format_double(report.c) << '\n'
            << "de_blassie      " << yes_no(report.de_blassie) << '\n';

  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["input"] = {{"sigmas2", vars}, {"infinite", infinite}};
  doc["classification"] = std::string(rf::to_string(report.classification));
  doc["condition1"] = report.condition1;
  doc["condition2"] = report.condition2;
  doc["M0"] = report.M0;
  doc["M1"] = report.M1;
  doc["M2"] = report.M2;
  doc["C"] = report.C;
  doc["c"] = report.c;
  doc["de_blassie"] = report.de_blassie;
  const auto path = out_file(out_dir, cfg.output.check);
  write_text_file(path, doc.dump(2) + "\n");
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

// ---- simulate ------------------------------------------------------------

int cmd_simulate(const rf::ExperimentConfig& cfg, const std::string& out_dir) {
  const std::uint64_t seed = require_seed(cfg);
  const auto& simc = cfg.simulation;
  const rf::SimLimits limits{simc.max_steps};

  if (cfg.system.infinite) {
    const rf::InfiniteSpec spec = infinite_system(cfg);
    const rf::InfiniteRun run = rf::simulate_infinite(
        spec, simc.T, simc.dt, rf::Seed{seed, 0}, simc.safety_margin,
        simc.epsilon_triple, limits);

    std::ostringstream traj_csv;
    rf::write_trajectory_csv(traj_csv, run.trajectory, simc.decimation,
                             run.halt);
    const auto traj_path = out_file(out_dir, cfg.output.trajectory);
    write_text_file(traj_path, traj_csv.str());

    std::ostringstream act_csv;
    rf::write_activations_csv(act_csv, run.activations);
    const auto act_path = out_file(out_dir, cfg.output.activations);
    write_text_file(act_path, act_csv.str());

    std::cout << "steps=" << run.trajectory.steps()
              << " materialized=" << run.materialized
              << " block=" << run.block_size
              << " activations=" << (run.activations.kappas.size() - 1)
              << " truncation_bound="
              << rf::format_double(run.truncation_union_bound) << '\n';
    if (run.halt) {
      std::cout << "halted_at_triple_proximity t="
                << rf::format_double(run.trajectory.times[run.halt->step])
                << " gap=" << (run.halt->gap + 1)
                << " radius=" << rf::format_double(run.halt->radius) << '\n';
    }
    std::cout << "wrote " << traj_path.string() << '\n'
              << "wrote " << act_path.string() << '\n';
    return 0;
  }

  const rf::SystemSpec spec = finite_system(cfg);
  rf::Trajectory traj;
  std::optional<rf::TripleHit> halt;
  std::size_t n_events = 0;
  if (simc.scheme == "event") {
    rf::EventRun run =
        rf::event_driven_path(spec, simc.T, simc.dt, rf::Seed{seed, 0},
                              simc.epsilon_triple, limits);
    n_events = run.events.size();
    halt = run.halt;
    traj = std::move(run.trajectory);
  } else {
    traj = rf::simulate_path(spec, simc.T, simc.dt, rf::Seed{seed, 0}, limits);
  }

  std::ostringstream csv;
  rf::write_trajectory_csv(csv, traj, simc.decimation, halt);
  const auto path = out_file(out_dir, cfg.output.trajectory);
  write_text_file(path, csv.str());

  std::cout << "steps=" << traj.steps() << " scheme=" << simc.scheme;
  if (simc.scheme == "event") std::cout << " events=" << n_events;
  std::cout << '\n';
  if (halt) {
    std::cout << "halted_at_triple_proximity t="
              << rf::format_double(traj.times[halt->step])
              << " gap=" << (halt->gap + 1)
              << " radius=" << rf::format_double(halt->radius) << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

// ---- validate ------------------------------------------------------------

struct CheckOutcome {
  std::string name;
  std::string status;  // pass | fail | underpowered
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

int cmd_validate(const rf::ExperimentConfig& cfg, const std::string& out_dir,
                 unsigned threads) {
  const std::uint64_t seed = require_seed(cfg);
  const std::size_t n_paths = require_n_paths(cfg);
  const auto& simc = cfg.simulation;

  std::vector<std::string> checks = cfg.validate.checks;
  if (checks.empty()) {
    checks = {"gap_law", "local_time", "sum_conservation"};
  }
  for (const auto& name : checks) {
    if (name != "gap_law" && name != "local_time" &&
        name != "sum_conservation") {
      rf::raise(rf::Errc::unknown_check,
                cfg.source_path + ": unknown check '" + name + "'");
    }
  }

  const rf::SystemSpec spec = finite_system(cfg);
  const double t_eff =
      static_cast<double>(rf::grid_steps(simc.T, simc.dt,
                                         rf::SimLimits{simc.max_steps})) *
      simc.dt;

  std::vector<CheckOutcome> outcomes;
  for (const auto& name : checks) {
    CheckOutcome out;
    out.name = name;
    if (name == "gap_law") {
      if (spec.size() != 2) {
        config_error(cfg.source_path + ": gap_law needs a system with n = 2");
      }
      constexpr double kKsThreshold = 0.02;
      const double floor =
          1.628 / std::sqrt(static_cast<double>(n_paths));  // 1% critical
      const rf::GapLawResult r =
          rf::gap_law_test(spec, simc.T, simc.dt, n_paths,
                           rf::Seed{seed, 0}, kKsThreshold, threads);
      out.statistic = r.ks;
      out.threshold = kKsThreshold;
      if (floor >= kKsThreshold) {
        out.status = "underpowered";
        out.detail = "KS noise floor " + rf::format_double(floor) +
                     " exceeds the threshold; increase n_paths";
      } else {
        out.status = r.pass ? "pass" : "fail";
        out.detail = "terminal ranked gap vs reflected-Brownian law";
      }
    } else if (name == "local_time") {
      if (spec.size() != 2) {
        config_error(cfg.source_path +
                     ": local_time needs a system with n = 2");
      }
      const double y0 = std::abs(spec.initial[1] - spec.initial[0]);
      const double mu = spec.drifts[1] - spec.drifts[0];
      const double nu2 = spec.sigmas[0] * spec.sigmas[0] +
                         spec.sigmas[1] * spec.sigmas[1];
      const double target =
          rf::reflected_bm_mean(y0, mu, nu2, t_eff) - y0 - mu * t_eff;
      const rf::McResult mc = rf::mc_mean(
          [&](const rf::Trajectory& traj) {
            return rf::local_time_tanaka(traj, spec).value;
          },
          spec, simc.T, simc.dt, n_paths, rf::Seed{seed, 0}, threads);
      const double z = mc.std_error > 0.0
                           ? std::abs(mc.estimate - target) / mc.std_error
                           : 0.0;
      out.statistic = z;
      out.threshold = 3.0;
      if (n_paths < 100) {
        out.status = "underpowered";
        out.detail = "needs at least 100 paths for a meaningful z-score";
      } else {
        out.status = z <= 3.0 ? "pass" : "fail";
        out.detail = "boundary local time " + rf::format_double(mc.estimate) +
                     " vs " + rf::format_double(target);
      }
    } else {  // sum_conservation
      double drift_sum = 0.0;
      for (double d : spec.drifts) drift_sum += d;
      double initial_sum = 0.0;
      for (double v : spec.initial) initial_sum += v;
      const double target = initial_sum + t_eff * drift_sum;
      const rf::McResult mc = rf::mc_mean(
          [](const rf::Trajectory& traj) {
            return rf::pairwise_sum(traj.positions_at(traj.steps()));
          },
          spec, simc.T, simc.dt, n_paths, rf::Seed{seed, 0}, threads);
      const double z = mc.std_error > 0.0
                           ? std::abs(mc.estimate - target) / mc.std_error
                           : 0.0;
      out.statistic = z;
      out.threshold = 3.0;
      if (n_paths < 100) {
        out.status = "underpowered";
        out.detail = "needs at least 100 paths for a meaningful z-score";
      } else {
        out.status = z <= 3.0 ? "pass" : "fail";
        out.detail = "mean position sum " + rf::format_double(mc.estimate) +
                     " vs " + rf::format_double(target);
      }
    }
    outcomes.push_back(std::move(out));
  }

  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["seed"] = seed;
  doc["n_paths"] = n_paths;
  doc["checks"] = json::array();
  bool any_fail = false;
  std::size_t passed = 0;
  for (const auto& out : outcomes) {
    std::string tag = out.status;
    for (auto& ch : tag) ch = static_cast<char>(std::toupper(ch));
    std::cout << tag << ' ' << out.name
              << " statistic=" << rf::format_double(out.statistic)
              << " threshold=" << rf::format_double(out.threshold)
              << " n_paths=" << n_paths << " (" << out.detail << ")\n";
    doc["checks"].push_back({{"name", out.name},
                             {"status", out.status},
                             {"statistic", out.statistic},
                             {"threshold", out.threshold},
                             {"detail", out.detail}});
    if (out.status == "fail") any_fail = true;
    if (out.status == "pass") ++passed;
  }
  const auto path = out_file(out_dir, cfg.output.report);
  write_text_file(path, doc.dump(2) + "\n");
  std::cout << "validate: " << passed << '/' << outcomes.size()
            << " passed\n"
            << "wrote " << path.string() << '\n';
  return any_fail ? 4 : 0;
}

// ---- triples -------------------------------------------------------------

int cmd_triples(const std::vector<rf::ExperimentConfig>& cfgs,
                const std::string& out_dir, unsigned threads) {
  if (cfgs.size() == 2 && cfgs[0].output.curve == cfgs[1].output.curve) {
    config_error("both configs write 'output.curve' to '" +
                 cfgs[0].output.curve + "'; give them distinct names");
  }
  std::vector<rf::ProximityCurve> curves;
  json runs = json::array();
  for (const auto& cfg : cfgs) {
    const std::uint64_t seed = require_seed(cfg);
    const std::size_t n_paths = require_n_paths(cfg);
    if (cfg.mc.epsilons.empty()) {
      config_error(cfg.source_path + ": missing key 'epsilons' in [mc]");
    }
    const rf::SystemSpec spec = finite_system(cfg);
    if (spec.size() < 3) {
      config_error(cfg.source_path + ": triples needs a system with n >= 3");
    }
    const rf::ProximityCurve curve = rf::triple_proximity_curve(
        spec, cfg.simulation.T, cfg.simulation.dt, cfg.mc.epsilons, n_paths,
        rf::Seed{seed, 0}, threads);

    std::ostringstream csv;
    rf::write_proximity_csv(csv, curve);
    const auto path = out_file(out_dir, cfg.output.curve);
    write_text_file(path, csv.str());

    for (std::size_t e = 0; e < curve.epsilons.size(); ++e) {
      std::cout << cfg.output.curve << " epsilon="
                << rf::format_double(curve.epsilons[e])
                << " frequency=" << rf::format_double(curve.frequencies[e])
                << " ci=" << rf::format_double(curve.ci_halfwidths[e])
                << '\n';
    }
    std::cout << "wrote " << path.string() << '\n';

    runs.push_back({{"config", cfg.source_path},
                    {"curve", cfg.output.curve},
                    {"seed", seed},
                    {"n_paths", n_paths},
                    {"epsilons", curve.epsilons},
                    {"frequencies", curve.frequencies},
                    {"ci_halfwidths", curve.ci_halfwidths}});
    curves.push_back(curve);
  }

  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["runs"] = runs;
  if (curves.size() == 2) {
    if (curves[0].epsilons != curves[1].epsilons) {
      config_error("the two configs must use the same epsilon grid");
    }
    json ratios = json::array();
    for (std::size_t e = 0; e < curves[0].epsilons.size(); ++e) {
      const double a = curves[0].frequencies[e];
      const double b = curves[1].frequencies[e];
      if (b > 0.0) {
        ratios.push_back(a / b);
        std::cout << "ratio epsilon="
                  << rf::format_double(curves[0].epsilons[e]) << ' '
                  << rf::format_double(a / b) << '\n';
      } else {
        ratios.push_back(nullptr);
        std::cout << "ratio epsilon="
                  << rf::format_double(curves[0].epsilons[e])
                  << " undefined (denominator 0)\n";
      }
    }
    doc["ratio_first_over_second"] = ratios;
  }
  const auto path = out_file(out_dir, cfgs[0].output.report);
  write_text_file(path, doc.dump(2) + "\n");
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-based interacting particle systems: classification, "
               "simulation and statistical validation"};
  app.require_subcommand(1);

  std::vector<std::string> config_paths;
  std::string out_dir = ".";
  std::optional<unsigned> threads_flag;

  const auto add_common = [&](CLI::App* sub, bool multi_config) {
    auto* opt = sub->add_option("-c,--config", config_paths,
                                "experiment config file (INI style)");
    opt->required();
    if (multi_config) {
      opt->expected(1, 2);
    } else {
      opt->expected(1);
    }
    sub->add_option("-o,--out", out_dir, "output directory (default: .)");
    sub->add_option("-t,--threads", threads_flag,
                    "worker threads (0 = hardware; default: "
                    "RANKFLOW_THREADS or hardware)");
  };

  auto* check = app.add_subcommand(
      "check", "classify a variance profile (conditions + spectral ledger)");
  add_common(check, false);
  auto* simulate =
      app.add_subcommand("simulate", "simulate one path and dump CSV");
  add_common(simulate, false);
  auto* validate = app.add_subcommand(
      "validate", "statistical validation battery against closed forms");
  add_common(validate, false);
  auto* triples = app.add_subcommand(
      "triples", "triple-proximity frequency curve(s); give two configs "
                 "to compare profiles");
  add_common(triples, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const unsigned threads = resolve_threads(threads_flag);
    std::vector<rf::ExperimentConfig> cfgs;
    cfgs.reserve(config_paths.size());
    for (const auto& path : config_paths) {
      cfgs.push_back(rf::parse_config_file(path));
    }
    if (check->parsed()) return cmd_check(cfgs[0], out_dir);
    if (simulate->parsed()) return cmd_simulate(cfgs[0], out_dir);
    if (validate->parsed()) return cmd_validate(cfgs[0], out_dir, threads);
    return cmd_triples(cfgs, out_dir, threads);
  } catch (const rf::Error& e) {
    std::cerr << "error: " << e.what() << " [" << rf::errc_name(e.code())
              << "]\n";
    switch (e.code()) {
      case rf::Errc::step_budget_exceeded:
      case rf::Errc::window_too_small:
        return 3;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
