#pragma once

// Periodic screened Poisson problem for the pheromone field:
//   (d_x^2 + d_y^2) c - alpha c + rho = 0
// on the spatial part of a GridSpec.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <sstream>
#include <vector>

#include "activefv/errors.hpp"
#include "activefv/grid.hpp"

namespace activefv {

enum class EllipticMethod { direct, iterative, spectral };

struct EllipticOptions {
  double rel_residual_tol = 1e-10;
  // 0 means 10 * nx * ny.
  int max_iterations = 0;
  EllipticMethod method = EllipticMethod::direct;
};

// r = (d_x^2 + d_y^2) c - alpha c + rho
inline SpatialField chemical_residual(const SpatialField& c,
                                      const SpatialField& rho, double alpha) {
  const GridSpec& g = c.grid();
  SpatialField r(g);
  const double idx2 = 1.0 / (g.dx * g.dx);
  const double idy2 = 1.0 / (g.dy * g.dy);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double cc = c(i, j);
      const double lap =
          (c.wrapped(i + 1, j) - 2.0 * cc + c.wrapped(i - 1, j)) * idx2 +
          (c.wrapped(i, j + 1) - 2.0 * cc + c.wrapped(i, j - 1)) * idy2;
      r(i, j) = lap - alpha * cc + rho(i, j);
    }
  return r;
}

// Reusable solver for one (mesh, alpha) pair. The direct factorisation and
// the spectral symbol are computed once at construction.
class ChemicalSolver {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  ChemicalSolver(const GridSpec& g, double alpha, EllipticOptions opts = {})
      : grid_(g), alpha_(alpha), opts_(opts) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw ConfigError("chemical decay alpha must be > 0");
    if (!(opts.rel_residual_tol > 0.0))
      throw ConfigError("elliptic tolerance must be > 0");
    if (opts_.max_iterations <= 0)
      opts_.max_iterations = static_cast<int>(10 * g.num_spatial());
    switch (opts_.method) {
      case EllipticMethod::direct:
        assemble();
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(matrix_);
        if (ldlt_->info() != Eigen::Success)
          throw ConvergenceError("elliptic factorisation failed", HUGE_VAL);
        break;
      case EllipticMethod::iterative:
        assemble();
        break;
      case EllipticMethod::spectral:
        prepare_spectral();
        break;
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  double alpha() const noexcept { return alpha_; }
  const EllipticOptions& options() const noexcept { return opts_; }

  // The returned field meets ||residual||_2 <= tol * ||rho||_2, otherwise a
  // ConvergenceError carrying the achieved relative residual is thrown.
  // `guess` warm-starts the iterative method and is ignored otherwise.
  //
  // Solved as c = rho/alpha + w with (-lap + alpha) w = lap(rho)/alpha, so a
  // constant rho gives a bit-exactly constant c.
  SpatialField solve(const SpatialField& rho,
                     const SpatialField* guess = nullptr,
                     double* relative_residual = nullptr) const {
    if (!rho.grid().same_mesh(grid_))
      throw InputError("rho lives on a different mesh");
    if (!all_finite(rho)) throw InputError("rho must be finite");
    const GridSpec& g = grid_;
    const auto n = static_cast<Eigen::Index>(g.num_spatial());
    const double rho_norm = lp_norm(rho, 2.0);

    SpatialField base(g), rhs(g);
    const double idx2 = 1.0 / (g.dx * g.dx);
    const double idy2 = 1.0 / (g.dy * g.dy);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const double r = rho(i, j);
        base(i, j) = r / alpha_;
        rhs(i, j) = ((rho.wrapped(i + 1, j) - 2.0 * r + rho.wrapped(i - 1, j)) * idx2 +
                     (rho.wrapped(i, j + 1) - 2.0 * r + rho.wrapped(i, j - 1)) * idy2) /
                    alpha_;
      }

    SpatialField w(g);
    Eigen::Map<const Eigen::VectorXd> b(rhs.values().data(), n);
    Eigen::Map<Eigen::VectorXd> x(w.values().data(), n);
    switch (opts_.method) {
      case EllipticMethod::direct:
        x = ldlt_->solve(b);
        break;
      case EllipticMethod::iterative: {
        const double bn = b.norm();
        if (bn == 0.0) break;
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper>
            cg(matrix_);
        // the residual of the w problem is the residual of the c problem
        cg.setTolerance(std::min(1.0, 0.1 * opts_.rel_residual_tol * rho_norm / bn));
        cg.setMaxIterations(opts_.max_iterations);
        if (guess != nullptr) {
          Eigen::Map<const Eigen::VectorXd> c0(guess->values().data(), n);
          Eigen::Map<const Eigen::VectorXd> b0(base.values().data(), n);
          x = cg.solveWithGuess(b, Eigen::VectorXd(c0 - b0));
        } else {
          x = cg.solve(b);
        }
        break;
      }
      case EllipticMethod::spectral:
        solve_spectral(rhs, w);
        break;
    }
    SpatialField c(g);
    for (std::size_t m = 0; m < c.size(); ++m)
      c.values()[m] = base.values()[m] + w.values()[m];

    const double res = lp_norm(chemical_residual(c, rho, alpha_), 2.0);
    const double rel = rho_norm > 0.0 ? res / rho_norm : res;
    if (!(res <= opts_.rel_residual_tol * rho_norm) &&
        !(rho_norm == 0.0 && res == 0.0)) {
      std::ostringstream os;
      os << "elliptic solve reached relative residual " << rel
         << " (tolerance " << opts_.rel_residual_tol << ")";
      throw ConvergenceError(os.str(), rel);
    }
    if (relative_residual != nullptr) *relative_residual = rel;
    return c;
  }

 private:
  // -(d_x^2 + d_y^2) + alpha, symmetric positive definite.
  void assemble() {
    const GridSpec& g = grid_;
    const double idx2 = 1.0 / (g.dx * g.dx);
    const double idy2 = 1.0 / (g.dy * g.dy);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(5 * g.num_spatial());
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const auto row = static_cast<int>(g.spatial_index(i, j));
        t.emplace_back(row, row, 2.0 * idx2 + 2.0 * idy2 + alpha_);
        t.emplace_back(row, g.spatial_index(wrap(i + 1, g.nx), j), -idx2);
        t.emplace_back(row, g.spatial_index(wrap(i - 1, g.nx), j), -idx2);
        t.emplace_back(row, g.spatial_index(i, wrap(j + 1, g.ny)), -idy2);
        t.emplace_back(row, g.spatial_index(i, wrap(j - 1, g.ny)), -idy2);
      }
    const auto n = static_cast<Eigen::Index>(g.num_spatial());
    matrix_.resize(n, n);
    matrix_.setFromTriplets(t.begin(), t.end());
  }

  void prepare_spectral() {
    const GridSpec& g = grid_;
    auto twiddles = [](int n) {
      std::vector<std::complex<double>> w(n);
      for (int m = 0; m < n; ++m) w[m] = std::polar(1.0, -kTwoPi * m / n);
      return w;
    };
    wx_ = twiddles(g.nx);
    wy_ = twiddles(g.ny);
    symbol_.resize(g.num_spatial());
    for (int p = 0; p < g.nx; ++p)
      for (int q = 0; q < g.ny; ++q) {
        const double mx =
            2.0 * (1.0 - std::cos(kTwoPi * p / g.nx)) / (g.dx * g.dx);
        const double my =
            2.0 * (1.0 - std::cos(kTwoPi * q / g.ny)) / (g.dy * g.dy);
        symbol_[g.spatial_index(p, q)] = 1.0 / (mx + my + alpha_);
      }
  }

  // Separable DFT along x then y, divide by the symbol, invert.
  void solve_spectral(const SpatialField& rho, SpatialField& c) const {
    const GridSpec& g = grid_;
    const int nx = g.nx, ny = g.ny;
    using cd = std::complex<double>;
    std::vector<cd> a(rho.values().begin(), rho.values().end());
    std::vector<cd> tmp(a.size());
    auto transform = [&](bool inverse) {
      // along x
      for (int j = 0; j < ny; ++j)
        for (int p = 0; p < nx; ++p) {
          cd s = 0.0;
          for (int i = 0; i < nx; ++i) {
            const cd w = wx_[(static_cast<long>(p) * i) % nx];
            s += a[g.spatial_index(i, j)] * (inverse ? std::conj(w) : w);
          }
          tmp[g.spatial_index(p, j)] = s;
        }
      // along y
      for (int p = 0; p < nx; ++p)
        for (int q = 0; q < ny; ++q) {
          cd s = 0.0;
          for (int j = 0; j < ny; ++j) {
            const cd w = wy_[(static_cast<long>(q) * j) % ny];
            s += tmp[g.spatial_index(p, j)] * (inverse ? std::conj(w) : w);
          }
          a[g.spatial_index(p, q)] = s;
        }
    };
    transform(false);
    for (std::size_t m = 0; m < a.size(); ++m) a[m] *= symbol_[m];
    transform(true);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (std::size_t m = 0; m < a.size(); ++m) c.values()[m] = a[m].real() * scale;
  }

  GridSpec grid_;
  double alpha_;
  EllipticOptions opts_;
  SparseMatrix matrix_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
  std::vector<std::complex<double>> wx_, wy_;
  std::vector<double> symbol_;
};

inline SpatialField solve_chemical(const SpatialField& rho, double alpha,
                                   const EllipticOptions& opts = {}) {
  return ChemicalSolver(rho.grid(), alpha, opts).solve(rho);
}

}  // namespace activefv
