#pragma once

// Angular interaction term B[c] on the angular faces (i, j, k+1/2).
//
//   B0       n(theta) . D c(x)
//   Blambda  n(theta) . D c(x + lambda e(theta))   (nearest-neighbour lookup)
//   Btau     n(theta) . D c(x) + tau n(theta) . H c(x) e(theta)
//
// with n(theta) = (-sin theta, cos theta), e(theta) = (cos theta, sin theta).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "activefv/errors.hpp"
#include "activefv/grid.hpp"

namespace activefv {

struct KernelKind {
  enum class Tag { B0, Blambda, Btau };

  Tag tag = Tag::B0;
  // lambda for Blambda, tau for Btau, unused for B0.
  double length = 0.0;

  static KernelKind b0() { return {Tag::B0, 0.0}; }
  static KernelKind blambda(double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    return {Tag::Blambda, lambda};
  }
  static KernelKind btau(double tau) {
    if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
    return {Tag::Btau, tau};
  }

  friend bool operator==(const KernelKind&, const KernelKind&) = default;
};

inline std::string to_string(KernelKind::Tag t) {
  switch (t) {
    case KernelKind::Tag::B0: return "B0";
    case KernelKind::Tag::Blambda: return "Blambda";
    case KernelKind::Tag::Btau: return "Btau";
  }
  return "?";
}

// B values; entry (i, j, k) is the face (i, j, k+1/2) at angle (k+1) dtheta.
class KernelValues {
 public:
  KernelValues() = default;
  explicit KernelValues(const GridSpec& g) : grid_(g), values_(g.num_cells()) {}

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double measure() const noexcept { return grid_.cell_volume(); }

  double& operator()(int i, int j, int k) noexcept {
    return values_[grid_.index(i, j, k)];
  }
  double operator()(int i, int j, int k) const noexcept {
    return values_[grid_.index(i, j, k)];
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

struct CellShift {
  int sx = 0;
  int sy = 0;

  friend bool operator==(const CellShift&, const CellShift&) = default;
};

// Offsets of the cell containing x_{i,j} + lambda e(theta_{k+1/2}) relative
// to (i, j). Cells are half-open, so a point on a face belongs to the cell on
// its right/top.
class ShiftTable {
 public:
  ShiftTable() = default;
  ShiftTable(double lambda, const GridSpec& g) : lambda_(lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    shifts_.resize(g.ntheta);
    for (int k = 0; k < g.ntheta; ++k) {
      const double th = g.theta_face(k);
      shifts_[k].sx = nearest_cell(lambda * std::cos(th), g.dx);
      shifts_[k].sy = nearest_cell(lambda * std::sin(th), g.dy);
    }
  }

  double lambda() const noexcept { return lambda_; }
  const CellShift& operator[](int k) const noexcept { return shifts_[k]; }
  std::size_t size() const noexcept { return shifts_.size(); }

  // Largest change of offset between neighbouring angular faces.
  CellShift max_jump() const noexcept {
    CellShift m;
    const int n = static_cast<int>(shifts_.size());
    for (int k = 0; k < n; ++k) {
      const CellShift& a = shifts_[k];
      const CellShift& b = shifts_[wrap(k - 1, n)];
      m.sx = std::max(m.sx, std::abs(a.sx - b.sx));
      m.sy = std::max(m.sy, std::abs(a.sy - b.sy));
    }
    return m;
  }

  // s with offset in [(s - 1/2) h, (s + 1/2) h).
  static int nearest_cell(double offset, double h) noexcept {
    return static_cast<int>(std::floor(offset / h + 0.5));
  }

 private:
  double lambda_ = 0.0;
  std::vector<CellShift> shifts_;
};

inline ShiftTable build_shift_table(double lambda, const GridSpec& g) {
  return ShiftTable(lambda, g);
}

// Index-shift span condition |i(k+1/2) - 1 - i(k-1/2)| <= max{2 pi lambda
// dtheta/dx, 1} (and in y). Returns a message when it is violated.
inline std::optional<std::string> shift_span_warning(const ShiftTable& t,
                                                     const GridSpec& g) {
  const CellShift jump = t.max_jump();
  const double bx = std::max(kTwoPi * t.lambda() * g.dtheta / g.dx, 1.0);
  const double by = std::max(kTwoPi * t.lambda() * g.dtheta / g.dy, 1.0);
  if (jump.sx - 1 <= bx && jump.sy - 1 <= by) return std::nullopt;
  std::ostringstream os;
  os << "look-ahead shift jumps (" << jump.sx << ", " << jump.sy
     << ") exceed the span bound (" << bx << ", " << by << ")";
  return os.str();
}

namespace detail {

// n(theta_face) . (gx, gy); one expression shared by all kernels so that the
// zero-length variants reproduce B0 bit for bit.
inline double normal_dot(double s, double co, double gx, double gy) noexcept {
  return -s * gx + co * gy;
}

}  // namespace detail

inline KernelValues eval_B0(const SpatialField& c) {
  const GridSpec& g = c.grid();
  const Gradient grad = centered_gradient(c);
  KernelValues b(g);
  for (int k = 0; k < g.ntheta; ++k) {
    const double th = g.theta_face(k);
    const double s = std::sin(th), co = std::cos(th);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        b(i, j, k) = detail::normal_dot(s, co, grad.x(i, j), grad.y(i, j));
  }
  return b;
}

inline KernelValues eval_Blambda(const SpatialField& c,
                                 const ShiftTable& shifts) {
  const GridSpec& g = c.grid();
  if (shifts.size() != static_cast<std::size_t>(g.ntheta))
    throw InputError("shift table built for a different angular mesh");
  const Gradient grad = centered_gradient(c);
  KernelValues b(g);
  for (int k = 0; k < g.ntheta; ++k) {
    const double th = g.theta_face(k);
    const double s = std::sin(th), co = std::cos(th);
    const CellShift sh = shifts[k];
    for (int i = 0; i < g.nx; ++i) {
      const int is = wrap(i + sh.sx, g.nx);
      for (int j = 0; j < g.ny; ++j) {
        const int js = wrap(j + sh.sy, g.ny);
        b(i, j, k) = detail::normal_dot(s, co, grad.x(is, js), grad.y(is, js));
      }
    }
  }
  return b;
}

inline KernelValues eval_Blambda(const SpatialField& c, double lambda) {
  return eval_Blambda(c, ShiftTable(lambda, c.grid()));
}

inline KernelValues eval_Btau(const SpatialField& c, double tau) {
  if (!(tau >= 0.0)) throw InputError("tau must be >= 0");
  KernelValues b = eval_B0(c);
  if (tau == 0.0) return b;
  const GridSpec& g = c.grid();
  const Hessian h = discrete_hessian(c);
  for (int k = 0; k < g.ntheta; ++k) {
    const double th = g.theta_face(k);
    const double s = std::sin(th), co = std::cos(th);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        // n . H e with H symmetric
        const double he_x = h.xx(i, j) * co + h.xy(i, j) * s;
        const double he_y = h.xy(i, j) * co + h.yy(i, j) * s;
        b(i, j, k) += tau * detail::normal_dot(s, co, he_x, he_y);
      }
  }
  return b;
}

// d_theta B at cell centres: (B_{k+1/2} - B_{k-1/2}) / dtheta.
inline DensityField dtheta_B(const KernelValues& b) {
  const GridSpec& g = b.grid();
  DensityField d(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k)
        d(i, j, k) = (b(i, j, k) - b(i, j, wrap(k - 1, g.ntheta))) / g.dtheta;
  return d;
}

// Evaluates the configured kernel; the shift table is built once.
class KernelEvaluator {
 public:
  KernelEvaluator(const KernelKind& kind, const GridSpec& g) : kind_(kind) {
    if (!(kind.length >= 0.0)) throw ConfigError("kernel length must be >= 0");
    if (kind.tag == KernelKind::Tag::Blambda) shifts_ = ShiftTable(kind.length, g);
  }

  const KernelKind& kind() const noexcept { return kind_; }
  const ShiftTable& shifts() const noexcept { return shifts_; }

  KernelValues operator()(const SpatialField& c) const {
    switch (kind_.tag) {
      case KernelKind::Tag::B0: return eval_B0(c);
      case KernelKind::Tag::Blambda: return eval_Blambda(c, shifts_);
      case KernelKind::Tag::Btau: return eval_Btau(c, kind_.length);
    }
    return eval_B0(c);
  }

 private:
  KernelKind kind_;
  ShiftTable shifts_;
};

}  // namespace activefv
