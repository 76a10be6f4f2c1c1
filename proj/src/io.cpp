#include "cylqg/io.hpp"

#include <cstdio>
#include <cstring>
#include <ostream>

namespace cylqg {

std::string fmt_double(double v) {
  char buf[40];
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(const ScalarField3& f, std::ostream& os) {
  const Grid& g = *f.grid;
  os << "x,y,z,value\n";
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z_level(k);
    const double* lv = f.level(k);
    for (int n : g.fluid_nodes) {
      const Vec2 p = g.xy(n);
      os << fmt_double(p.x) << ',' << fmt_double(p.y) << ',' << fmt_double(z)
         << ',' << fmt_double(lv[n]) << '\n';
    }
  }
}

void write_vector_csv(const VectorField3& f, std::ostream& os) {
  const Grid& g = *f.grid;
  os << "x,y,z,u,v\n";
  for (int k = 0; k < g.nz; ++k) {
    const double z = g.z_level(k);
    const double* lu = f.u.level(k);
    const double* lv = f.v.level(k);
    for (int n : g.fluid_nodes) {
      const Vec2 p = g.xy(n);
      os << fmt_double(p.x) << ',' << fmt_double(p.y) << ',' << fmt_double(z)
         << ',' << fmt_double(lu[n]) << ',' << fmt_double(lv[n]) << '\n';
    }
  }
}

void write_vtk(const ScalarField3& f, const std::string& name,
               std::ostream& os) {
  const Grid& g = *f.grid;
  os << "# vtk DataFile Version 2.0\n"
     << name << "\nASCII\nDATASET STRUCTURED_POINTS\n"
     << "DIMENSIONS " << g.nx << ' ' << g.ny << ' ' << g.nz << '\n'
     << "ORIGIN " << fmt_double(g.x0) << ' ' << fmt_double(g.y0) << " 0\n"
     << "SPACING " << fmt_double(g.h) << ' ' << fmt_double(g.h) << ' '
     << fmt_double(g.dz()) << '\n'
     << "POINT_DATA " << static_cast<long long>(g.nx) * g.ny * g.nz << '\n'
     << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < g.nz; ++k) {
    const double* lv = f.level(k);
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const int n = g.node(i, j);
        os << (g.mask[n] == NodeTag::exterior ? "0" : fmt_double(lv[n]));
        os << (i + 1 == g.nx ? '\n' : ' ');
      }
    }
  }
}

void write_flowmap_csv(const FlowMap& m, std::ostream& os) {
  const Grid& g = *m.grid;
  os << "level,seed_x,seed_y,t,x,y\n";
  for (int k = 0; k < g.nz; ++k) {
    for (int s = 0; s < m.nseeds; ++s) {
      const Vec2 a = g.xy(g.fluid_nodes[s]);
      const Vec2 p = m.at(k, s);
      os << k << ',' << fmt_double(a.x) << ',' << fmt_double(a.y) << ','
         << fmt_double(m.t) << ',' << fmt_double(p.x) << ',' << fmt_double(p.y)
         << '\n';
    }
  }
}

} // namespace cylqg
