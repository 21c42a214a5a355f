#pragma once

// Angular moments of a density and the steady-state metric.

#include <cmath>
#include <utility>

#include "activefv/grid.hpp"

namespace activefv {

// rho_{i,j} = sum_k f_{i,j,k} dtheta
inline SpatialField spatial_density(const DensityField& f) {
  const GridSpec& g = f.grid();
  SpatialField rho(g);
  const auto v = f.values();
  for (std::size_t s = 0; s < g.num_spatial(); ++s) {
    double acc = 0.0;
    const std::size_t base = s * g.ntheta;
    for (int k = 0; k < g.ntheta; ++k) acc += v[base + k];
    rho.values()[s] = acc * g.dtheta;
  }
  return rho;
}

// Weighted angular sum sum_k w(theta_k) f_{i,j,k} dtheta with cell-centre
// angles.
template <class Weight>
SpatialField angular_moment(const DensityField& f, Weight&& w) {
  const GridSpec& g = f.grid();
  std::vector<double> wk(g.ntheta);
  for (int k = 0; k < g.ntheta; ++k) wk[k] = w(g.theta_center(k));
  SpatialField m(g);
  const auto v = f.values();
  for (std::size_t s = 0; s < g.num_spatial(); ++s) {
    double acc = 0.0;
    const std::size_t base = s * g.ntheta;
    for (int k = 0; k < g.ntheta; ++k) acc += wk[k] * v[base + k];
    m.values()[s] = acc * g.dtheta;
  }
  return m;
}

struct Polarization {
  SpatialField x;
  SpatialField y;
};

inline Polarization polarization(const DensityField& f) {
  return {angular_moment(f, [](double th) { return std::cos(th); }),
          angular_moment(f, [](double th) { return std::sin(th); })};
}

// p2 = sum_k cos(2 theta_k) f dtheta
inline SpatialField second_polarization(const DensityField& f) {
  return angular_moment(f, [](double th) { return std::cos(2.0 * th); });
}

enum class NormKind { L1, L2, Linf };

template <GridFunction F>
double norm(const F& f, NormKind kind) {
  switch (kind) {
    case NormKind::L1: return lp_norm(f, 1.0);
    case NormKind::L2: return lp_norm(f, 2.0);
    case NormKind::Linf: return sup_norm(f);
  }
  return sup_norm(f);
}

inline DensityField difference(const DensityField& a, const DensityField& b) {
  if (!a.grid().same_mesh(b.grid()))
    throw InputError("fields live on different meshes");
  DensityField d(a.grid());
  for (std::size_t m = 0; m < a.size(); ++m)
    d.values()[m] = a.values()[m] - b.values()[m];
  return d;
}

// ||f_next - f_prev|| / dt
inline double steady_state_metric(const DensityField& f_next,
                                  const DensityField& f_prev, double dt,
                                  NormKind kind) {
  if (!(dt > 0.0)) throw InputError("dt must be > 0");
  return norm(difference(f_next, f_prev), kind) / dt;
}

}  // namespace activefv
