#include "cylqg/field.hpp"

#include <algorithm>
#include <cmath>

namespace cylqg {

double ScalarField3::max_abs() const {
  double m = 0;
  for (int k = 0; k < grid->nz; ++k) {
    const double* lv = level(k);
    for (int n : grid->fluid_nodes) m = std::max(m, std::abs(lv[n]));
  }
  return m;
}

double ScalarField3::volume_integral() const {
  double s = 0;
  for (int k = 0; k < grid->nz; ++k) {
    const double* lv = level(k);
    double ls = 0;
    for (int idx = 0; idx < grid->n_interior(); ++idx)
      ls += grid->weight[idx] * lv[grid->interior_nodes[idx]];
    s += grid->zw(k) * ls;
  }
  return s;
}

std::vector<double> ScalarField3::level_means() const {
  std::vector<double> m(grid->nz, 0.0);
  for (int k = 0; k < grid->nz; ++k) {
    const double* lv = level(k);
    double ls = 0;
    for (int idx = 0; idx < grid->n_interior(); ++idx)
      ls += grid->weight[idx] * lv[grid->interior_nodes[idx]];
    m[k] = ls / grid->area;
  }
  return m;
}

double VectorField3::max_speed() const {
  double m = 0;
  for (int k = 0; k < grid->nz; ++k) {
    const double* lu = u.level(k);
    const double* lv = v.level(k);
    for (int n : grid->fluid_nodes)
      m = std::max(m, std::hypot(lu[n], lv[n]));
  }
  return m;
}

CirculationData CirculationData::zero(int n_loops, int nz) {
  CirculationData d;
  d.c.assign(n_loops, std::vector<double>(nz, 0.0));
  return d;
}

CirculationData CirculationData::constant(const std::vector<double>& values,
                                          int nz) {
  CirculationData d;
  d.c.reserve(values.size());
  for (double v : values) d.c.emplace_back(nz, v);
  return d;
}

bool CirculationData::is_zero() const {
  for (const auto& cl : c)
    for (double v : cl)
      if (v != 0) return false;
  return true;
}

double CirculationData::max_abs() const {
  double m = 0;
  for (const auto& cl : c)
    for (double v : cl) m = std::max(m, std::abs(v));
  return m;
}

double CirculationData::z_integral(int l) const {
  const auto& cl = c[l];
  const int nz = static_cast<int>(cl.size());
  const double dz = 1.0 / (nz - 1);
  double s = 0.5 * (cl.front() + cl.back());
  for (int k = 1; k < nz - 1; ++k) s += cl[k];
  return s * dz;
}

double CirculationData::total_integral() const {
  double s = 0;
  for (int l = 0; l < n_loops(); ++l) s += z_integral(l);
  return s;
}

double LoopConstants::trace_at_level(int loop, int level) const {
  const double z = static_cast<double>(level) / (nz - 1);
  double v = 0;
  for (int k = 0; k < nz; ++k) v += at(loop, k) * std::cos(k * M_PI * z);
  return v;
}

} // namespace cylqg
