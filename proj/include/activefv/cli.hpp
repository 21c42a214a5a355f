#pragma once

// Command-line front end. run_cli() is the whole program; main() only forwards
// argc/argv and the standard streams so tests can drive it in-process.
//
//   activefv run --config FILE
//   activefv converge --config FILE [--meshes 16,32,64] [--ref 128]
//   activefv compare --config FILE [--lambdas 0.2,0.1,0.05]
//   activefv smoke3d [--output DIR]
//
// Exit status: 0 success, 1 runtime failure, 2 bad usage or configuration.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "activefv/config.hpp"
#include "activefv/diagnostics.hpp"
#include "activefv/errors.hpp"
#include "activefv/log.hpp"
#include "activefv/snapshot.hpp"
#include "activefv/stepper.hpp"

namespace activefv {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

// Thresholds checked after every step of a CLI run.
struct RunChecks {
  double mass_tol = 1e-10;
  double min_tol = 1e-12;
};

struct RunSummary {
  int steps = 0;
  bool completed = false;
  double max_mass_error = 0.0;
  double min_f = 0.0;
  std::vector<std::filesystem::path> snapshots;
  std::filesystem::path csv;
  std::optional<std::string> error;
};

namespace detail {

inline std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06d.bin", step);
  return buf;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string short_fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::scientific << std::setprecision(6) << v;
  return os.str();
}

inline const char* norm_name(NormKind k) {
  switch (k) {
    case NormKind::L1: return "L1";
    case NormKind::L2: return "L2";
    case NormKind::Linf: return "Linf";
  }
  return "?";
}

inline ExperimentConfig experiment_from(const RunConfig& cfg) {
  ExperimentConfig ex;
  ex.params = cfg.params;
  ex.options = cfg.solver;
  ex.options.stability_warnings = false;
  ex.dt = cfg.dt;
  ex.T = cfg.T;
  ex.y_invariant = cfg.ny == 1;
  ex.initial = make_initial(cfg.initial);
  return ex;
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'");
}

}  // namespace detail

// Runs one configuration, streaming the CSV and scheduled snapshots into the
// output directory as steps complete.
inline RunSummary execute_run(const RunConfig& cfg, std::ostream& log,
                              const RunChecks& checks = {}) {
  const GridSpec g = cfg.grid();
  const std::filesystem::path dir(cfg.output.directory);
  detail::ensure_directory(dir);

  std::vector<int> snap_steps;
  for (double t : cfg.output.snapshot_times) {
    const int s = static_cast<int>(std::lround(t / g.dt));
    if (s <= g.nt) snap_steps.push_back(s);
  }
  std::sort(snap_steps.begin(), snap_steps.end());

  RunSummary summary;
  std::optional<DiagnosticsWriter> csv;
  if (cfg.output.write_csv) {
    summary.csv = dir / "diagnostics.csv";
    csv.emplace(summary.csv);
  }
  summary.min_f = std::numeric_limits<double>::infinity();

  RunHooks hooks;
  hooks.on_step = [&](const StepDiagnostics& d, const DensityField& f) {
    if (csv) csv->append(d);
    summary.max_mass_error = std::max(summary.max_mass_error, std::abs(d.mass - 1.0));
    summary.min_f = std::min(summary.min_f, d.min_f);
    if (cfg.output.write_snapshots &&
        std::binary_search(snap_steps.begin(), snap_steps.end(), d.step)) {
      const auto path = dir / detail::snapshot_name(d.step);
      write_snapshot(f, {g, cfg.params, d.time, d.step}, path);
      summary.snapshots.push_back(path);
    }
  };

  const DensityField f0 = make_initial(cfg.initial)(g);
  const Trajectory tr = run_simulation(f0, cfg.params, cfg.solver, {}, hooks);
  summary.steps = tr.steps_taken;
  summary.completed = tr.completed;
  summary.error = tr.error;
  if (summary.completed) {
    if (summary.max_mass_error > checks.mass_tol)
      summary.error = "mass drifted by " + detail::short_fmt(summary.max_mass_error);
    else if (summary.min_f < -checks.min_tol)
      summary.error = "negative density " + detail::short_fmt(summary.min_f);
  }
  log << "steps " << summary.steps << "/" << g.nt << ", max |mass-1| "
      << detail::short_fmt(summary.max_mass_error) << ", min f "
      << detail::short_fmt(summary.min_f) << ", snapshots " << summary.snapshots.size()
      << "\n";
  return summary;
}

// Reduced-size x-y-theta configuration for the smoke3d subcommand. The
// initial state is a smooth perturbation of the uniform state.
inline RunConfig smoke3d_config(const std::string& directory) {
  RunConfig cfg;
  cfg.nx = 12;
  cfg.ny = 12;
  cfg.ntheta = 8;
  cfg.dt = 1e-3;
  cfg.T = 0.05;
  cfg.params.D_T = 1e-2;
  cfg.params.Pe = 3.0;
  cfg.params.gamma = 250.0;
  cfg.params.alpha = 1.0;
  cfg.params.kernel = KernelKind::btau(0.5);
  cfg.initial.preset = InitialPreset::custom;
  cfg.initial.expression = "1 + 0.5*cos(2*pi*x)*cos(2*pi*y) + 0.25*sin(2*pi*(x+y))*cos(theta)";
  cfg.initial.quadrature_order = 3;
  cfg.initial.normalize = true;
  cfg.output.directory = directory;
  cfg.output.snapshot_times = {0.0, 0.05};
  return cfg;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-volume solver for a nonlocal active-matter kinetic model"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  std::vector<int> meshes{16, 32, 64};
  int ref = 128;
  std::vector<double> lambdas{0.2, 0.1, 0.05};
  int compare_n = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run one simulation and write its outputs");
  run->add_option("--config", config_path, "configuration file")->required();
  run->add_option("--output", output_override, "override [output] directory");

  auto* converge = app.add_subcommand("converge", "mesh-convergence study against a reference");
  converge->add_option("--config", config_path, "configuration file")->required();
  converge->add_option("--meshes", meshes, "coarse meshes N")->delimiter(',');
  converge->add_option("--ref", ref, "reference mesh N");
  converge->add_option("--output", output_override, "override [output] directory");

  auto* compare = app.add_subcommand("compare", "B_lambda against B_tau for lambda = tau");
  compare->add_option("--config", config_path, "configuration file")->required();
  compare->add_option("--lambdas", lambdas, "lengths")->delimiter(',');
  compare->add_option("--n", compare_n, "mesh N (default: grid.nx)");
  compare->add_option("--output", output_override, "override [output] directory");

  auto* smoke = app.add_subcommand("smoke3d", "short run on a reduced 12x12x8 mesh");
  smoke->add_option("--output", output_override, "output directory");

  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0, anything else is a usage error.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  WarningSink saved = warning_sink();
  warning_sink() = quiet ? WarningSink{} : WarningSink{[&err](const std::string& m) {
    err << "warning: " << m << "\n";
  }};
  struct Restore {
    WarningSink& slot;
    WarningSink saved;
    ~Restore() { slot = std::move(saved); }
  } restore{warning_sink(), std::move(saved)};

  RunConfig cfg;
  try {
    if (smoke->parsed()) {
      cfg = smoke3d_config(output_override.empty() ? "smoke3d" : output_override);
    } else {
      cfg = load_config(config_path);
      if (!output_override.empty()) cfg.output.directory = output_override;
    }
  } catch (const ParseError& e) {
    err << "error: " << config_path << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (run->parsed() || smoke->parsed()) {
      const RunSummary s = execute_run(cfg, out);
      if (s.error) {
        err << "error: " << *s.error << " (outputs up to step " << s.steps << " kept in "
            << cfg.output.directory << ")\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    const std::filesystem::path dir(cfg.output.directory);
    detail::ensure_directory(dir);
    const ExperimentConfig ex = detail::experiment_from(cfg);

    if (converge->parsed()) {
      const std::vector<NormKind> norms{NormKind::L1, NormKind::L2, NormKind::Linf};
      const ConvergenceTable t = convergence_study(ex, meshes, ref, norms);
      std::ofstream csv(dir / "convergence.csv", std::ios::binary | std::ios::trunc);
      if (!csv) throw IoError("cannot write convergence.csv");
      csv << "N,h,e_L1,e_L2,e_Linf\n";
      out << "N      h             e_L1          e_L2          e_Linf\n";
      for (const ConvergenceRow& r : t.rows) {
        csv << r.n << ',' << detail::fmt(r.h);
        out << std::left << std::setw(7) << r.n << detail::short_fmt(r.h);
        for (double e : r.errors) {
          csv << ',' << detail::fmt(e);
          out << "  " << detail::short_fmt(e);
        }
        csv << '\n';
        out << "\n";
      }
      for (std::size_t m = 0; m < norms.size(); ++m) {
        out << "slope " << detail::norm_name(norms[m]) << ": ";
        if (t.slopes[m]) out << std::fixed << std::setprecision(4) << *t.slopes[m];
        else out << "undefined";
        out << std::defaultfloat << "\n";
      }
      if (t.error) {
        err << "error: " << *t.error << "\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    if (compare->parsed()) {
      const int n = compare_n > 0 ? compare_n : cfg.nx;
      std::ofstream csv(dir / "compare.csv", std::ios::binary | std::ios::trunc);
      if (!csv) throw IoError("cannot write compare.csv");
      csv << "length,e_L2\n";
      const auto rows = kernel_comparison(ex, n, lambdas, NormKind::L2);
      out << "lambda=tau    e_L2\n";
      for (const KernelComparisonRow& r : rows) {
        csv << detail::fmt(r.length) << ',' << detail::fmt(r.difference) << '\n';
        out << std::left << std::setw(12) << r.length << "  "
            << detail::short_fmt(r.difference) << "\n";
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace activefv
