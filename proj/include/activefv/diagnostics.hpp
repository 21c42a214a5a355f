#pragma once

// Cross-mesh errors, kernel comparisons and the mesh-convergence study.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "activefv/errors.hpp"
#include "activefv/grid.hpp"
#include "activefv/observables.hpp"
#include "activefv/stepper.hpp"

namespace activefv {

struct ObservableSeries {
  std::string label;
  std::vector<double> times;
  std::vector<double> values;

  void push(double t, double v) {
    if (!times.empty() && !(t > times.back()))
      throw InputError("observable times must be strictly increasing");
    times.push_back(t);
    values.push_back(v);
  }
};

// Copies every coarse cell value into the fine cells it contains.
inline DensityField inject_to_fine(const DensityField& coarse,
                                   const GridSpec& fine) {
  const GridSpec& g = coarse.grid();
  if (fine.nx % g.nx != 0 || fine.ny % g.ny != 0 || fine.ntheta % g.ntheta != 0) {
    std::ostringstream os;
    os << "fine mesh " << fine.nx << "x" << fine.ny << "x" << fine.ntheta
       << " is not a refinement of " << g.nx << "x" << g.ny << "x" << g.ntheta;
    throw ConfigError(os.str());
  }
  const int rx = fine.nx / g.nx, ry = fine.ny / g.ny, rt = fine.ntheta / g.ntheta;
  DensityField out(fine);
  for (int i = 0; i < fine.nx; ++i)
    for (int j = 0; j < fine.ny; ++j)
      for (int k = 0; k < fine.ntheta; ++k)
        out(i, j, k) = coarse(i / rx, j / ry, k / rt);
  return out;
}

// ||inject(f_h) - f_ref|| / ||f_ref|| on the reference mesh.
inline double relative_error(const DensityField& f_h, const DensityField& f_ref,
                             NormKind kind) {
  const DensityField fine = inject_to_fine(f_h, f_ref.grid());
  const double denom = norm(f_ref, kind);
  if (!(denom > 0.0)) throw InputError("reference field has zero norm");
  return norm(difference(fine, f_ref), kind) / denom;
}

// ||f_lambda - f_tau|| / ||f_lambda|| on a common mesh.
inline double kernel_difference(const DensityField& f_lambda,
                                const DensityField& f_tau, NormKind kind) {
  const double denom = norm(f_lambda, kind);
  if (!(denom > 0.0)) throw InputError("B_lambda solution has zero norm");
  return norm(difference(f_lambda, f_tau), kind) / denom;
}

// Ordinary least squares slope of log(e) against log(h). Returns nullopt when
// fewer than two points are usable or any error is zero.
inline std::optional<double> fit_loglog_slope(const std::vector<double>& h,
                                              const std::vector<double>& e) {
  if (h.size() != e.size() || h.size() < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t m = 0; m < h.size(); ++m) {
    if (!(e[m] > 0.0) || !(h[m] > 0.0) || !std::isfinite(e[m])) return std::nullopt;
    const double x = std::log(h[m]), y = std::log(e[m]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------
// Experiments

// A family of runs sharing parameters, time step and final time; only the mesh
// varies. With y_invariant the mesh is N x 1 x N, otherwise N x N x N.
struct ExperimentConfig {
  ModelParams params;
  StepOptions options;
  double dt = 1e-2;
  double T = 1.0;
  bool y_invariant = true;
  std::function<DensityField(const GridSpec&)> initial;

  GridSpec grid_for(int n) const {
    return build_grid(n, y_invariant ? 1 : n, n, dt, T);
  }
};

inline DensityField run_to_final(const ExperimentConfig& cfg, const GridSpec& g,
                                 const ModelParams& params) {
  if (!cfg.initial) throw ConfigError("experiment has no initial condition");
  const Trajectory tr = run_simulation(cfg.initial(g), params, cfg.options);
  if (!tr.completed) throw Error(tr.error.value_or("run failed"));
  return tr.final_f;
}

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  std::vector<double> errors;  // one per requested norm
};

struct ConvergenceTable {
  std::vector<NormKind> norms;
  std::vector<ConvergenceRow> rows;
  std::vector<std::optional<double>> slopes;  // nullopt: degenerate
  std::optional<std::string> error;
};

// Runs every mesh in n_list and the reference n_ref to the final time and
// reports e_{h,L} against the reference plus the fitted log-log slope.
inline ConvergenceTable convergence_study(const ExperimentConfig& cfg,
                                          const std::vector<int>& n_list, int n_ref,
                                          const std::vector<NormKind>& norms) {
  for (int n : n_list)
    if (n < 1 || n_ref % n != 0) {
      std::ostringstream os;
      os << "mesh " << n << " does not divide reference " << n_ref;
      throw ConfigError(os.str());
    }
  ConvergenceTable table;
  table.norms = norms;
  try {
    const DensityField ref = run_to_final(cfg, cfg.grid_for(n_ref), cfg.params);
    for (int n : n_list) {
      const GridSpec g = cfg.grid_for(n);
      const DensityField f = run_to_final(cfg, g, cfg.params);
      ConvergenceRow row{n, g.dx, {}};
      for (NormKind k : norms) row.errors.push_back(relative_error(f, ref, k));
      table.rows.push_back(std::move(row));
    }
  } catch (const Error& e) {
    table.error = e.what();
  }
  for (std::size_t m = 0; m < norms.size(); ++m) {
    std::vector<double> h, e;
    for (const ConvergenceRow& r : table.rows) {
      h.push_back(r.h);
      e.push_back(r.errors[m]);
    }
    table.slopes.push_back(fit_loglog_slope(h, e));
  }
  return table;
}

struct KernelComparisonRow {
  double length = 0.0;
  double difference = 0.0;
};

// e_{lambda,tau,L}(T) for lambda = tau over `lengths`, on the mesh N.
inline std::vector<KernelComparisonRow> kernel_comparison(
    const ExperimentConfig& cfg, int n, const std::vector<double>& lengths,
    NormKind kind) {
  std::vector<KernelComparisonRow> rows;
  const GridSpec g = cfg.grid_for(n);
  for (double len : lengths) {
    ModelParams pl = cfg.params, pt = cfg.params;
    pl.kernel = KernelKind::blambda(len);
    pt.kernel = KernelKind::btau(len);
    const DensityField fl = run_to_final(cfg, g, pl);
    const DensityField ft = run_to_final(cfg, g, pt);
    rows.push_back({len, kernel_difference(fl, ft, kind)});
  }
  return rows;
}

}  // namespace activefv
