#pragma once

// Uniform periodic discretisation of T^2 x T_{2pi}, cell-averaged fields,
// discrete difference operators and discrete norms.
//
// Indices are zero based throughout. Cell (i, j, k) covers
//   [x_{i-1/2}, x_{i+1/2}) x [y_{j-1/2}, y_{j+1/2}) x [k dtheta, (k+1) dtheta)
// with x_{i-1/2} = -1/2 + i dx. Face "k" in the angular direction is the
// upper face of cell k, at angle (k+1) dtheta. All index arithmetic wraps.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "activefv/errors.hpp"

namespace activefv {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr int wrap(int i, int n) noexcept {
  i %= n;
  return i < 0 ? i + n : i;
}

struct GridSpec {
  int nx = 1;
  int ny = 1;
  int ntheta = 1;
  double dx = 1.0;
  double dy = 1.0;
  double dtheta = kTwoPi;
  double dt = 1.0;
  int nt = 0;

  std::size_t num_cells() const noexcept {
    return static_cast<std::size_t>(nx) * ny * ntheta;
  }
  std::size_t num_spatial() const noexcept {
    return static_cast<std::size_t>(nx) * ny;
  }
  // Delta xi = dx dy dtheta
  double cell_volume() const noexcept { return dx * dy * dtheta; }
  double cell_area() const noexcept { return dx * dy; }
  double final_time() const noexcept { return nt * dt; }

  double x_center(int i) const noexcept { return -0.5 + (i + 0.5) * dx; }
  double y_center(int j) const noexcept { return -0.5 + (j + 0.5) * dy; }
  double theta_center(int k) const noexcept { return (k + 0.5) * dtheta; }
  double theta_face(int k) const noexcept { return (k + 1) * dtheta; }

  std::size_t index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(i) * ny + j) * ntheta + k;
  }
  std::size_t spatial_index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * ny + j;
  }

  // Same spatial/angular mesh; the time discretisation may differ.
  bool same_mesh(const GridSpec& o) const noexcept {
    return nx == o.nx && ny == o.ny && ntheta == o.ntheta;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline GridSpec make_mesh(int nx, int ny, int ntheta) {
  if (nx < 1 || ny < 1 || ntheta < 1) {
    std::ostringstream os;
    os << "cell counts must be >= 1 (got " << nx << ", " << ny << ", "
       << ntheta << ")";
    throw ConfigError(os.str());
  }
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.ntheta = ntheta;
  g.dx = 1.0 / nx;
  g.dy = 1.0 / ny;
  g.dtheta = kTwoPi / ntheta;
  return g;
}

// T/dt has to be an integer up to 4 ulp.
inline GridSpec build_grid(int nx, int ny, int ntheta, double dt, double T) {
  GridSpec g = make_mesh(nx, ny, ntheta);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("T must be >= 0");
  const double ratio = T / dt;
  const double steps = std::round(ratio);
  const double ulp = std::nextafter(steps, HUGE_VAL) - steps;
  if (std::abs(ratio - steps) > 4.0 * ulp) {
    std::ostringstream os;
    os.precision(17);
    os << "T/dt = " << ratio << " is not an integer step count";
    throw ConfigError(os.str());
  }
  g.dt = dt;
  g.nt = static_cast<int>(steps);
  return g;
}

// Returns a message when dtheta/dx or dtheta/dy drops below eps_c; the
// uniform-in-h estimates assume these ratios stay bounded away from zero.
// Directions with a single cell carry no differences and are skipped.
inline std::optional<std::string> aspect_warning(const GridSpec& g,
                                                 double eps_c = 0.1) {
  const double rx = g.dtheta / g.dx;
  const double ry = g.dtheta / g.dy;
  if ((g.nx == 1 || rx >= eps_c) && (g.ny == 1 || ry >= eps_c))
    return std::nullopt;
  std::ostringstream os;
  os << "grid aspect ratio dtheta/dx = " << rx << ", dtheta/dy = " << ry
     << " below " << eps_c;
  return os.str();
}

// ---------------------------------------------------------------------------
// Fields

class DensityField {
 public:
  DensityField() = default;
  explicit DensityField(const GridSpec& g, double fill = 0.0)
      : grid_(g), values_(g.num_cells(), fill) {}
  DensityField(const GridSpec& g, std::vector<double> values)
      : grid_(g), values_(std::move(values)) {
    if (values_.size() != grid_.num_cells())
      throw InputError("density payload size does not match grid");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }
  const std::vector<double>& storage() const noexcept { return values_; }
  double measure() const noexcept { return grid_.cell_volume(); }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int i, int j, int k) noexcept {
    return values_[grid_.index(i, j, k)];
  }
  double operator()(int i, int j, int k) const noexcept {
    return values_[grid_.index(i, j, k)];
  }
  double wrapped(int i, int j, int k) const noexcept {
    return values_[grid_.index(wrap(i, grid_.nx), wrap(j, grid_.ny),
                               wrap(k, grid_.ntheta))];
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

class SpatialField {
 public:
  SpatialField() = default;
  explicit SpatialField(const GridSpec& g, double fill = 0.0)
      : grid_(g), values_(g.num_spatial(), fill) {}
  SpatialField(const GridSpec& g, std::vector<double> values)
      : grid_(g), values_(std::move(values)) {
    if (values_.size() != grid_.num_spatial())
      throw InputError("spatial payload size does not match grid");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double measure() const noexcept { return grid_.cell_area(); }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int i, int j) noexcept {
    return values_[grid_.spatial_index(i, j)];
  }
  double operator()(int i, int j) const noexcept {
    return values_[grid_.spatial_index(i, j)];
  }
  double wrapped(int i, int j) const noexcept {
    return values_[grid_.spatial_index(wrap(i, grid_.nx), wrap(j, grid_.ny))];
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

enum class Axis { x, y, theta };

// Values on the dual mesh. Entry (i, j, k) along Axis::x is the face
// (i+1/2, j, k), i.e. the upper face of the cell with the same index.
class DualField {
 public:
  DualField(const GridSpec& g, Axis axis, bool spatial)
      : grid_(g),
        axis_(axis),
        spatial_(spatial),
        values_(spatial ? g.num_spatial() : g.num_cells(), 0.0) {}

  const GridSpec& grid() const noexcept { return grid_; }
  Axis axis() const noexcept { return axis_; }
  bool spatial() const noexcept { return spatial_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double measure() const noexcept {
    return spatial_ ? grid_.cell_area() : grid_.cell_volume();
  }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  GridSpec grid_;
  Axis axis_;
  bool spatial_;
  std::vector<double> values_;
};

template <class F>
concept GridFunction = requires(const F& f) {
  { f.values() } -> std::convertible_to<std::span<const double>>;
  { f.measure() } -> std::convertible_to<double>;
};

// Sum of f * cell measure.
template <GridFunction F>
double integral(const F& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.measure();
}

inline double mass(const DensityField& f) { return integral(f); }

template <GridFunction F>
double min_value(const F& f) {
  const auto v = f.values();
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

template <GridFunction F>
bool all_finite(const F& f) {
  for (double v : f.values())
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Initial data

// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(
    int order) {
  std::vector<double> nodes(order), weights(order);
  for (int n = 0; n < order; ++n) {
    double z = std::cos(kPi * (n + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int m = 1; m <= order; ++m) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p2) / m;
      }
      dp = order * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[n] = z;
    weights[n] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {nodes, weights};
}

inline DensityField normalized(DensityField f) {
  const double m = mass(f);
  if (!(m > 0.0)) throw InputError("cannot normalise data with zero mass");
  for (double& v : f.values()) v /= m;
  return f;
}

// Cell averages of a pointwise initial datum f0(x, y, theta).
// quadrature_order 1 is the midpoint rule, otherwise a tensor Gauss rule.
template <class Fn>
DensityField cell_average_init(Fn&& f0, const GridSpec& g,
                               int quadrature_order = 1,
                               bool normalize = false) {
  if (quadrature_order < 1) throw InputError("quadrature order must be >= 1");
  auto [nodes, weights] = gauss_legendre(quadrature_order);
  if (quadrature_order == 1) {
    nodes = {0.0};
    weights = {2.0};
  }
  DensityField f(g);
  const int q = quadrature_order;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k) {
        double acc = 0.0;
        for (int a = 0; a < q; ++a) {
          const double x = g.x_center(i) + 0.5 * g.dx * nodes[a];
          for (int b = 0; b < q; ++b) {
            const double y = g.y_center(j) + 0.5 * g.dy * nodes[b];
            for (int c = 0; c < q; ++c) {
              const double th = g.theta_center(k) + 0.5 * g.dtheta * nodes[c];
              const double v = f0(x, y, th);
              if (!(v >= 0.0) || !std::isfinite(v))
                throw InputError("initial datum must be finite and >= 0");
              acc += weights[a] * weights[b] * weights[c] * v;
            }
          }
        }
        f(i, j, k) = acc / 8.0;
      }
  return normalize ? normalized(std::move(f)) : f;
}

struct Interval {
  double lo;
  double hi;
};

// Exact cell averages of height * 1_{x in union of intervals} (independent of
// y and theta). Intervals are taken modulo the unit period.
inline DensityField x_indicator_init(const GridSpec& g,
                                     std::span<const Interval> intervals,
                                     double height) {
  if (!(height >= 0.0)) throw InputError("indicator height must be >= 0");
  // Unwrap onto [-1/2, 1/2) pieces, then merge.
  std::vector<Interval> pieces;
  for (const Interval& iv : intervals) {
    if (!(iv.hi >= iv.lo)) throw InputError("interval with hi < lo");
    if (iv.hi - iv.lo >= 1.0) {
      pieces.push_back({-0.5, 0.5});
      continue;
    }
    const double shift = std::floor(iv.lo + 0.5);
    const double lo = iv.lo - shift;
    const double hi = iv.hi - shift;
    if (hi <= 0.5) {
      pieces.push_back({lo, hi});
    } else {
      pieces.push_back({lo, 0.5});
      pieces.push_back({-0.5, hi - 1.0});
    }
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const Interval& p : pieces) {
    if (!merged.empty() && p.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, p.hi);
    else
      merged.push_back(p);
  }
  DensityField f(g);
  for (int i = 0; i < g.nx; ++i) {
    const double a = -0.5 + i * g.dx;
    const double b = -0.5 + (i + 1) * g.dx;
    double covered = 0.0;
    for (const Interval& m : merged)
      covered += std::max(0.0, std::min(b, m.hi) - std::max(a, m.lo));
    const double avg = height * std::min(1.0, covered / g.dx);
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k) f(i, j, k) = avg;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Difference operators

inline DualField ddx(const DensityField& f) {
  const GridSpec& g = f.grid();
  DualField d(g, Axis::x, false);
  auto out = d.values();
  for (int i = 0; i < g.nx; ++i) {
    const int ip = wrap(i + 1, g.nx);
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k)
        out[g.index(i, j, k)] = (f(ip, j, k) - f(i, j, k)) / g.dx;
  }
  return d;
}

inline DualField ddy(const DensityField& f) {
  const GridSpec& g = f.grid();
  DualField d(g, Axis::y, false);
  auto out = d.values();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const int jp = wrap(j + 1, g.ny);
      for (int k = 0; k < g.ntheta; ++k)
        out[g.index(i, j, k)] = (f(i, jp, k) - f(i, j, k)) / g.dy;
    }
  return d;
}

inline DualField ddtheta(const DensityField& f) {
  const GridSpec& g = f.grid();
  DualField d(g, Axis::theta, false);
  auto out = d.values();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.ntheta; ++k)
        out[g.index(i, j, k)] =
            (f(i, j, wrap(k + 1, g.ntheta)) - f(i, j, k)) / g.dtheta;
  return d;
}

inline DualField ddx(const SpatialField& c) {
  const GridSpec& g = c.grid();
  DualField d(g, Axis::x, true);
  auto out = d.values();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      out[g.spatial_index(i, j)] = (c.wrapped(i + 1, j) - c(i, j)) / g.dx;
  return d;
}

inline DualField ddy(const SpatialField& c) {
  const GridSpec& g = c.grid();
  DualField d(g, Axis::y, true);
  auto out = d.values();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      out[g.spatial_index(i, j)] = (c.wrapped(i, j + 1) - c(i, j)) / g.dy;
  return d;
}

struct Gradient {
  SpatialField x;
  SpatialField y;
};

// Centred differences D_x c, D_y c.
inline Gradient centered_gradient(const SpatialField& c) {
  const GridSpec& g = c.grid();
  Gradient grad{SpatialField(g), SpatialField(g)};
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      grad.x(i, j) = (c.wrapped(i + 1, j) - c.wrapped(i - 1, j)) / (2.0 * g.dx);
      grad.y(i, j) = (c.wrapped(i, j + 1) - c.wrapped(i, j - 1)) / (2.0 * g.dy);
    }
  return grad;
}

// Symmetric: the yx entry is the same field as xy.
struct Hessian {
  SpatialField xx;
  SpatialField xy;
  SpatialField yy;

  const SpatialField& yx() const noexcept { return xy; }
};

inline Hessian discrete_hessian(const SpatialField& c) {
  const GridSpec& g = c.grid();
  Hessian h{SpatialField(g), SpatialField(g), SpatialField(g)};
  const double dx2 = g.dx * g.dx;
  const double dy2 = g.dy * g.dy;
  const double dxy4 = 4.0 * g.dx * g.dy;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double center = c(i, j);
      h.xx(i, j) =
          (c.wrapped(i + 1, j) - 2.0 * center + c.wrapped(i - 1, j)) / dx2;
      h.yy(i, j) =
          (c.wrapped(i, j + 1) - 2.0 * center + c.wrapped(i, j - 1)) / dy2;
      h.xy(i, j) = (c.wrapped(i + 1, j + 1) - c.wrapped(i - 1, j + 1) -
                    c.wrapped(i + 1, j - 1) + c.wrapped(i - 1, j - 1)) /
                   dxy4;
    }
  return h;
}

// ---------------------------------------------------------------------------
// Norms

namespace detail {
// Sums in ascending order, so the result does not depend on storage order and
// norms are exactly invariant under periodic relabelling of cells.
inline double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

inline double power_sum(std::span<const double> v, double p) {
  std::vector<double> terms(v.size());
  for (std::size_t m = 0; m < v.size(); ++m) {
    const double a = std::abs(v[m]);
    terms[m] = p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p);
  }
  return ordered_sum(std::move(terms));
}
}  // namespace detail

template <GridFunction F>
double lp_norm(const F& f, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw InputError("Lp norm requires 1 <= p < infinity");
  const double s = detail::power_sum(f.values(), p) * f.measure();
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::pow(s, 1.0 / p);
}

template <GridFunction F>
double sup_norm(const F& f) {
  double s = 0.0;
  for (double v : f.values()) s = std::max(s, std::abs(v));
  return s;
}

// |f|_{1,p}. A direction with a single cell contributes exactly zero.
inline double sobolev_seminorm(const DensityField& f, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw InputError("seminorm requires 1 <= p < infinity");
  const double s = detail::power_sum(ddx(f).values(), p) +
                   detail::power_sum(ddy(f).values(), p) +
                   detail::power_sum(ddtheta(f).values(), p);
  return std::pow(s * f.measure(), 1.0 / p);
}

inline double sobolev_seminorm(const SpatialField& c, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw InputError("seminorm requires 1 <= p < infinity");
  const double s = detail::power_sum(ddx(c).values(), p) +
                   detail::power_sum(ddy(c).values(), p);
  return std::pow(s * c.measure(), 1.0 / p);
}

}  // namespace activefv
