#pragma once

// Backward-Euler finite-volume step for
//   d_t f = div_x(D_T grad_x f - Pe e_theta f) + d_theta(d_theta f - gamma B[c] f)
// with upwinded drift fluxes, coupled to the elliptic pheromone equation and
// resolved by Picard iteration on c.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "activefv/chemo.hpp"
#include "activefv/errors.hpp"
#include "activefv/grid.hpp"
#include "activefv/kernels.hpp"
#include "activefv/log.hpp"
#include "activefv/observables.hpp"

namespace activefv {

struct ModelParams {
  double D_T = 0.1;
  double Pe = 2.0;
  double gamma = 500.0;
  double alpha = 1.0;
  KernelKind kernel = KernelKind::b0();

  void validate() const {
    if (!(D_T > 0.0) || !std::isfinite(D_T)) throw ConfigError("D_T must be > 0");
    if (!(Pe >= 0.0) || !std::isfinite(Pe)) throw ConfigError("Pe must be >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw ConfigError("gamma must be >= 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw ConfigError("alpha must be > 0");
    if (!(kernel.length >= 0.0) || !std::isfinite(kernel.length))
      throw ConfigError("kernel length must be >= 0");
  }
};

enum class LinearMethod { direct, iterative };

struct LinearOptions {
  double rel_residual_tol = 1e-10;
  LinearMethod method = LinearMethod::direct;
  // Iterative method only; 0 means 10 * number of unknowns.
  int max_iterations = 0;
};

struct StepOptions {
  // L1 norm of the increment between Picard iterates.
  double picard_tol = 1e-10;
  // 1 reproduces the lagged scheme: B is evaluated once from f_prev.
  int picard_max_iters = 100;
  LinearOptions linear;
  EllipticOptions elliptic;
  bool stability_warnings = true;
};

struct StepResult {
  DensityField f_next;
  SpatialField c_next;
  int picard_iterations = 0;
  double picard_increment = 0.0;
  double linear_residual = 0.0;
  double mass_drift = 0.0;
};

// Thrown when a step violates conservation or positivity beyond round-off.
class InvariantError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kMassTolerance = 1e-10;
inline constexpr double kNegativityTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Flux form

struct UpwindVelocities {
  DualField U;
  DualField V;
  DualField W;
};

// U, V use the cell-centre angle theta_k; W uses B on the face k+1/2.
inline UpwindVelocities upwind_velocities(const DensityField& f,
                                          const KernelValues& B) {
  const GridSpec& g = f.grid();
  if (!g.same_mesh(B.grid())) throw InputError("f and B on different meshes");
  UpwindVelocities vel{DualField(g, Axis::x, false), DualField(g, Axis::y, false),
                       DualField(g, Axis::theta, false)};
  auto U = vel.U.values();
  auto V = vel.V.values();
  auto W = vel.W.values();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k) {
        const double co = std::cos(g.theta_center(k));
        const double si = std::sin(g.theta_center(k));
        const double b = B(i, j, k);
        const double fc = f(i, j, k);
        const std::size_t p = g.index(i, j, k);
        U[p] = std::max(co, 0.0) * fc + std::min(co, 0.0) * f.wrapped(i + 1, j, k);
        V[p] = std::max(si, 0.0) * fc + std::min(si, 0.0) * f.wrapped(i, j + 1, k);
        W[p] = std::max(b, 0.0) * fc + std::min(b, 0.0) * f.wrapped(i, j, k + 1);
      }
  return vel;
}

// Minus the divergence of the discrete fluxes, evaluated at (f, B).
inline DensityField apply_operator(const DensityField& f, const KernelValues& B,
                                   const ModelParams& params) {
  const GridSpec& g = f.grid();
  const UpwindVelocities vel = upwind_velocities(f, B);
  const DualField dfx = ddx(f), dfy = ddy(f), dft = ddtheta(f);
  const std::size_t n = g.num_cells();
  std::vector<double> Fx(n), Fy(n), Ft(n);
  for (std::size_t p = 0; p < n; ++p) {
    Fx[p] = -(params.D_T * dfx.values()[p] - params.Pe * vel.U.values()[p]);
    Fy[p] = -(params.D_T * dfy.values()[p] - params.Pe * vel.V.values()[p]);
    Ft[p] = -(dft.values()[p] - params.gamma * vel.W.values()[p]);
  }
  DensityField out(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k) {
        const std::size_t p = g.index(i, j, k);
        const std::size_t xm = g.index(wrap(i - 1, g.nx), j, k);
        const std::size_t ym = g.index(i, wrap(j - 1, g.ny), k);
        const std::size_t km = g.index(i, j, wrap(k - 1, g.ntheta));
        out.values()[p] = -(Fx[p] - Fx[xm]) / g.dx - (Fy[p] - Fy[ym]) / g.dy -
                          (Ft[p] - Ft[km]) / g.dtheta;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Implicit system I - dt L(B)

// Sparse matrix of I - dt L(B) with a fixed pattern; only values change
// between Picard iterates.
class ImplicitSystem {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  ImplicitSystem(const GridSpec& g, const ModelParams& params)
      : grid_(g), params_(params) {
    const std::size_t n = g.num_cells();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(kSlots * n);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.ntheta; ++k) {
          const auto row = static_cast<int>(g.index(i, j, k));
          for (int col : neighbours(i, j, k)) t.emplace_back(row, col, 1.0);
        }
    matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    matrix_.setFromTriplets(t.begin(), t.end());
    matrix_.makeCompressed();
    slot_.resize(kSlots * n);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.ntheta; ++k) {
          const std::size_t row = g.index(i, j, k);
          const auto cols = neighbours(i, j, k);
          for (int s = 0; s < kSlots; ++s)
            slot_[kSlots * row + s] = static_cast<std::size_t>(
                &matrix_.coeffRef(static_cast<Eigen::Index>(row), cols[s]) -
                matrix_.valuePtr());
        }

    // Constant transport part of L per angular index.
    const double D = params.D_T, Pe = params.Pe;
    const double idx = 1.0 / g.dx, idy = 1.0 / g.dy;
    transport_.resize(g.ntheta);
    for (int k = 0; k < g.ntheta; ++k) {
      const double co = std::cos(g.theta_center(k));
      const double si = std::sin(g.theta_center(k));
      Transport& tr = transport_[k];
      tr.xp = D * idx * idx - Pe * std::min(co, 0.0) * idx;
      tr.xm = D * idx * idx + Pe * std::max(co, 0.0) * idx;
      tr.yp = D * idy * idy - Pe * std::min(si, 0.0) * idy;
      tr.ym = D * idy * idy + Pe * std::max(si, 0.0) * idy;
      tr.center = -2.0 * D * idx * idx - Pe * std::abs(co) * idx -
                  2.0 * D * idy * idy - Pe * std::abs(si) * idy;
    }
  }

  const SparseMatrix& matrix() const noexcept { return matrix_; }

  // Rewrites the values for kernel B and time step dt.
  void update(const KernelValues& B, double dt) {
    const GridSpec& g = grid_;
    double* val = matrix_.valuePtr();
    std::fill(val, val + matrix_.nonZeros(), 0.0);
    const double idt2 = 1.0 / (g.dtheta * g.dtheta);
    const double gdt = params_.gamma / g.dtheta;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.ntheta; ++k) {
          const std::size_t row = g.index(i, j, k);
          const Transport& tr = transport_[k];
          const double b_up = B(i, j, k);
          const double b_dn = B(i, j, wrap(k - 1, g.ntheta));
          const double kp = idt2 - gdt * std::min(b_up, 0.0);
          const double km = idt2 + gdt * std::max(b_dn, 0.0);
          const double kc =
              -2.0 * idt2 - gdt * std::max(b_up, 0.0) + gdt * std::min(b_dn, 0.0);
          const std::size_t* s = &slot_[kSlots * row];
          // I - dt L
          val[s[0]] += 1.0 - dt * (tr.center + kc);
          val[s[1]] -= dt * tr.xp;
          val[s[2]] -= dt * tr.xm;
          val[s[3]] -= dt * tr.yp;
          val[s[4]] -= dt * tr.ym;
          val[s[5]] -= dt * kp;
          val[s[6]] -= dt * km;
        }
  }

 private:
  static constexpr int kSlots = 7;

  struct Transport {
    double center, xp, xm, yp, ym;
  };

  std::array<int, kSlots> neighbours(int i, int j, int k) const {
    const GridSpec& g = grid_;
    auto id = [&](int a, int b, int c) {
      return static_cast<int>(
          g.index(wrap(a, g.nx), wrap(b, g.ny), wrap(c, g.ntheta)));
    };
    return {id(i, j, k),     id(i + 1, j, k), id(i - 1, j, k), id(i, j + 1, k),
            id(i, j - 1, k), id(i, j, k + 1), id(i, j, k - 1)};
  }

  GridSpec grid_;
  ModelParams params_;
  SparseMatrix matrix_;
  std::vector<std::size_t> slot_;
  std::vector<Transport> transport_;
};

// ---------------------------------------------------------------------------
// Stepper

class Stepper {
 public:
  Stepper(const GridSpec& g, const ModelParams& params, const StepOptions& opts = {})
      : grid_(g),
        params_(params),
        opts_(opts),
        chem_(g, params.alpha, opts.elliptic),
        kernel_(params.kernel, g),
        system_(g, params) {
    params_.validate();
    if (!(opts.picard_tol > 0.0)) throw ConfigError("picard_tol must be > 0");
    if (opts.picard_max_iters < 1) throw ConfigError("picard_max_iters must be >= 1");
    if (!(opts.linear.rel_residual_tol > 0.0))
      throw ConfigError("linear tolerance must be > 0");
    if (!(g.dt > 0.0)) throw ConfigError("dt must be > 0");
    if (opts.stability_warnings) {
      if (params.Pe > 0.0 && !(g.dt < params.D_T / (2.0 * params.Pe * params.Pe))) {
        std::ostringstream os;
        os << "dt = " << g.dt << " violates dt < D_T/(2 Pe^2) = "
           << params.D_T / (2.0 * params.Pe * params.Pe);
        warn(os.str());
      }
      if (auto w = aspect_warning(g)) warn(*w);
      if (params.kernel.tag == KernelKind::Tag::Blambda)
        if (auto w = shift_span_warning(kernel_.shifts(), g)) warn(*w);
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const ModelParams& params() const noexcept { return params_; }
  const StepOptions& options() const noexcept { return opts_; }
  const ChemicalSolver& chemical_solver() const noexcept { return chem_; }
  const KernelEvaluator& kernel() const noexcept { return kernel_; }

  // c and B for a given density.
  SpatialField chemical(const DensityField& f) const {
    return chem_.solve(spatial_density(f));
  }
  KernelValues interaction(const DensityField& f) const {
    return kernel_(chemical(f));
  }

  // Solves (I - dt L(B)) f = rhs. The relative residual is measured against
  // `scale` when it is positive, otherwise against ||rhs||.
  DensityField solve_linear(const KernelValues& B, const DensityField& rhs,
                            const DensityField* guess, double* residual,
                            double scale = 0.0) {
    system_.update(B, grid_.dt);
    const auto n = static_cast<Eigen::Index>(grid_.num_cells());
    Eigen::Map<const Eigen::VectorXd> b(rhs.values().data(), n);
    DensityField out(grid_);
    Eigen::Map<Eigen::VectorXd> x(out.values().data(), n);
    const auto& A = system_.matrix();
    const double bn = b.norm();
    const double ref = scale > 0.0 ? scale : (bn > 0.0 ? bn : 1.0);
    if (opts_.linear.method == LinearMethod::direct) {
      if (!pattern_analyzed_) {
        lu_.analyzePattern(A);
        pattern_analyzed_ = true;
      }
      lu_.factorize(A);
      if (lu_.info() != Eigen::Success)
        throw ConvergenceError("sparse LU factorisation failed: " + lu_.lastErrorMessage(),
                               HUGE_VAL);
      x = lu_.solve(b);
    } else if (bn > 0.0) {
      Eigen::BiCGSTAB<ImplicitSystem::SparseMatrix, Eigen::IncompleteLUT<double>> it;
      it.preconditioner().setDroptol(1e-6);
      it.setTolerance(std::min(1.0, 0.01 * opts_.linear.rel_residual_tol * ref / bn));
      it.setMaxIterations(opts_.linear.max_iterations > 0 ? opts_.linear.max_iterations
                                                          : static_cast<int>(10 * n));
      it.compute(A);
      if (guess != nullptr) {
        Eigen::Map<const Eigen::VectorXd> x0(guess->values().data(), n);
        x = it.solveWithGuess(b, x0);
      } else {
        x = it.solve(b);
      }
    }
    const double rel = (A * x - b).norm() / ref;
    if (!(rel <= opts_.linear.rel_residual_tol)) {
      std::ostringstream os;
      os << "implicit solve reached relative residual " << rel;
      throw ConvergenceError(os.str(), rel);
    }
    if (residual != nullptr) *residual = rel;
    return out;
  }

  StepResult advance(const DensityField& f_prev) {
    if (!f_prev.grid().same_mesh(grid_)) throw InputError("f_prev on a different mesh");
    if (!all_finite(f_prev)) throw InputError("f_prev must be finite");

    StepResult r;
    DensityField current = f_prev;
    double increment = HUGE_VAL;
    double lin_res = 0.0;
    int it = 0;
    bool converged = false;
    // Increment form: f = f_prev + d with (I - dt L) d = dt L f_prev. An
    // exact discrete steady state then gives d = 0 without rounding noise.
    const double f_norm =
        Eigen::Map<const Eigen::VectorXd>(f_prev.values().data(),
                                          static_cast<Eigen::Index>(f_prev.size()))
            .norm();
    DensityField d_guess(grid_);
    while (it < opts_.picard_max_iters) {
      const KernelValues B = interaction(current);
      DensityField rhs = apply_operator(f_prev, B, params_);
      for (double& v : rhs.values()) v *= grid_.dt;
      for (std::size_t m = 0; m < d_guess.size(); ++m)
        d_guess.values()[m] = current.values()[m] - f_prev.values()[m];
      const DensityField d = solve_linear(B, rhs, &d_guess, &lin_res, f_norm);
      DensityField next(grid_);
      for (std::size_t m = 0; m < next.size(); ++m)
        next.values()[m] = f_prev.values()[m] + d.values()[m];
      ++it;
      increment = lp_norm(difference(next, current), 1.0);
      current = std::move(next);
      if (increment <= opts_.picard_tol || opts_.picard_max_iters == 1) {
        converged = true;
        break;
      }
      if (!std::isfinite(increment)) break;
    }
    if (!converged) {
      std::ostringstream os;
      os << "Picard iteration did not converge in " << it
         << " iterations (last L1 increment " << increment << ")";
      throw ConvergenceError(os.str(), increment);
    }

    r.picard_iterations = it;
    r.picard_increment = increment;
    r.linear_residual = lin_res;
    r.mass_drift = std::abs(mass(current) - mass(f_prev));
    const double min_f = min_value(current);
    if (r.mass_drift > kMassTolerance * std::max(1.0, std::abs(mass(f_prev)))) {
      std::ostringstream os;
      os << "mass drift " << r.mass_drift << " exceeds tolerance";
      throw InvariantError(os.str());
    }
    if (min_f < -kNegativityTolerance && min_value(f_prev) >= 0.0) {
      std::ostringstream os;
      os << "negative density " << min_f << " after step";
      throw InvariantError(os.str());
    }
    r.c_next = chemical(current);
    r.f_next = std::move(current);
    return r;
  }

 private:
  GridSpec grid_;
  ModelParams params_;
  StepOptions opts_;
  ChemicalSolver chem_;
  KernelEvaluator kernel_;
  ImplicitSystem system_;
  Eigen::SparseLU<ImplicitSystem::SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool pattern_analyzed_ = false;
};

inline StepResult advance_step(const DensityField& f_prev, const ModelParams& params,
                               const StepOptions& opts = {}) {
  Stepper stepper(f_prev.grid(), params, opts);
  return stepper.advance(f_prev);
}

// ---------------------------------------------------------------------------
// Time loop

struct StepDiagnostics {
  int step = 0;
  double time = 0.0;
  double mass = 0.0;
  double min_f = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double steady_l2 = 0.0;
  double steady_linf = 0.0;
  int picard_iters = 0;
};

struct SnapshotRecord {
  int step = 0;
  double time = 0.0;
  DensityField f;
};

struct Trajectory {
  std::vector<StepDiagnostics> diagnostics;
  std::vector<SnapshotRecord> snapshots;
  DensityField final_f;
  SpatialField final_c;
  int steps_taken = 0;
  bool completed = false;
  // Set when a step failed; everything above is the partial run.
  std::optional<std::string> error;
};

struct RunHooks {
  // Called after every accepted step (and once for step 0).
  std::function<void(const StepDiagnostics&, const DensityField&)> on_step;
};

inline StepDiagnostics measure_state(int step, double time, const DensityField& f,
                                     const DensityField* prev, double dt, int picard) {
  StepDiagnostics d;
  d.step = step;
  d.time = time;
  d.mass = mass(f);
  d.min_f = min_value(f);
  d.l2 = lp_norm(f, 2.0);
  d.linf = sup_norm(f);
  if (prev != nullptr) {
    d.steady_l2 = steady_state_metric(f, *prev, dt, NormKind::L2);
    d.steady_linf = steady_state_metric(f, *prev, dt, NormKind::Linf);
  }
  d.picard_iters = picard;
  return d;
}

// Steps are taken on f0.grid() (dt, nt). Snapshot times are rounded to the
// nearest step.
inline Trajectory run_simulation(const DensityField& f0, const ModelParams& params,
                                 const StepOptions& opts,
                                 const std::vector<double>& snapshot_times = {},
                                 const RunHooks& hooks = {}) {
  const GridSpec& g = f0.grid();
  if (!all_finite(f0)) throw InputError("initial data must be finite");
  if (min_value(f0) < 0.0) throw InputError("initial data must be nonnegative");

  std::vector<int> snap_steps;
  for (double t : snapshot_times) {
    if (!(t >= 0.0)) throw ConfigError("snapshot times must be >= 0");
    const int s = static_cast<int>(std::lround(t / g.dt));
    if (s <= g.nt) snap_steps.push_back(s);
  }
  std::sort(snap_steps.begin(), snap_steps.end());
  snap_steps.erase(std::unique(snap_steps.begin(), snap_steps.end()), snap_steps.end());
  auto wants = [&](int s) {
    return std::binary_search(snap_steps.begin(), snap_steps.end(), s);
  };

  Trajectory traj;
  traj.diagnostics.push_back(measure_state(0, 0.0, f0, nullptr, g.dt, 0));
  if (hooks.on_step) hooks.on_step(traj.diagnostics.back(), f0);
  if (wants(0)) traj.snapshots.push_back({0, 0.0, f0});

  Stepper stepper(g, params, opts);
  DensityField f = f0;
  try {
    for (int n = 1; n <= g.nt; ++n) {
      StepResult r = stepper.advance(f);
      traj.diagnostics.push_back(
          measure_state(n, n * g.dt, r.f_next, &f, g.dt, r.picard_iterations));
      f = std::move(r.f_next);
      traj.final_c = std::move(r.c_next);
      traj.steps_taken = n;
      if (hooks.on_step) hooks.on_step(traj.diagnostics.back(), f);
      if (wants(n)) traj.snapshots.push_back({n, n * g.dt, f});
    }
    traj.completed = true;
  } catch (const Error& e) {
    std::ostringstream os;
    os << "step " << traj.steps_taken + 1 << ": " << e.what();
    traj.error = os.str();
  }
  if (traj.steps_taken == 0) traj.final_c = stepper.chemical(f);
  traj.final_f = std::move(f);
  return traj;
}

}  // namespace activefv
