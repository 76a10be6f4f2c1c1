#include "cylqg/greens.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <mutex>
#include <unordered_map>

#include "cylqg/errors.hpp"
#include "cylqg/solver.hpp"

namespace cylqg {

double fundamental(Vec3 source, Vec3 target) {
  const double dx = target.x - source.x;
  const double dy = target.y - source.y;
  const double dz = target.z - source.z;
  const double r3 = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (r3 < 1e-300)
    throw SingularityError("fundamental solution evaluated at its source");
  return -1.0 / (4.0 * M_PI * r3);
}

namespace {

// mollified sample: the lattice cannot resolve the 1/r singularity, so the
// source node takes the value at half a spacing
double phi_sample(Vec3 source, Vec3 target, double h) {
  const double dx = target.x - source.x;
  const double dy = target.y - source.y;
  const double dz = target.z - source.z;
  const double r3 = std::sqrt(dx * dx + dy * dy + dz * dz);
  return -1.0 / (4.0 * M_PI * std::max(r3, 0.5 * h));
}

} // namespace

std::size_t GreensKernel::bytes() const {
  std::size_t b = sizeof(GreensKernel) + G.data.size() * sizeof(double);
  for (const auto& t : trace) b += t.size() * sizeof(double);
  return b;
}

struct GreensEngine::Impl {
  // LRU kernel cache keyed by source node and level
  std::list<std::pair<long long, GreensKernel>> lru;
  std::unordered_map<long long, std::list<std::pair<long long, GreensKernel>>::iterator> index;
  std::size_t bytes = 0;
  std::mutex mu;
};

GreensEngine::GreensEngine(const EllipticSolver& ell, GreensOptions opt)
    : ell_(ell), opt_(opt), impl_(std::make_unique<Impl>()) {}

GreensEngine::~GreensEngine() = default;

const Grid& GreensEngine::grid() const { return ell_.grid(); }

std::vector<GreensKernel> GreensEngine::many_kernels(
    const std::vector<std::pair<int, int>>& node_level) const {
  const Grid& g = ell_.grid();
  const VerticalBasis& vb = ell_.basis();
  const int nz = g.nz;
  const int ni = g.n_interior();
  const int nl = g.n_loops;
  const int nc = static_cast<int>(node_level.size());
  const double inv_vol = 1.0 / g.fluid_volume();
  const auto& anal = vb.analysis_matrix();
  const auto& synth = vb.synthesis_matrix();

  // one bordered solve per vertical mode, all sources as columns; data is
  // the discrete delta minus the volume mean, circulations zero
  std::vector<std::vector<BorderedSolution>> per_mode(nz);
  for (int k = 0; k < nz; ++k) {
    std::vector<BorderedRhs> cols(nc);
    for (int c = 0; c < nc; ++c) {
      const auto [n0, j0] = node_level[c];
      const int m0 = g.interior_index[n0];
      if (m0 < 0) throw DomainError("kernel source must be an interior node");
      if (j0 < 0 || j0 >= nz) throw DomainError("kernel source level out of range");
      const double mass = 1.0 / (g.weight[m0] * g.zw(j0));
      BorderedRhs& r = cols[c];
      r.interior.assign(ni, k == 0 ? -inv_vol : 0.0);
      r.interior[m0] += mass * anal[static_cast<std::size_t>(k) * nz + j0];
      r.flux.assign(nl, 0.0);
    }
    per_mode[k] = ell_.solve_eigenvalue(vb.eigenvalue(k), cols);
  }

  std::vector<GreensKernel> out(nc);
  for (int c = 0; c < nc; ++c) {
    const auto [n0, j0] = node_level[c];
    GreensKernel& K = out[c];
    K.source_node = n0;
    K.source_level = j0;
    const Vec2 p = g.xy(n0);
    K.source = {p.x, p.y, g.z_level(j0)};
    K.G = ScalarField3(g);
    for (int j = 0; j < nz; ++j) {
      double* lv = K.G.level(j);
      for (int m = 0; m < ni; ++m) {
        double s = 0;
        for (int k = 0; k < nz; ++k)
          s += synth[static_cast<std::size_t>(j) * nz + k] * per_mode[k][c].interior[m];
        lv[g.interior_nodes[m]] = s;
      }
    }
    K.trace.assign(nl, std::vector<double>(nz, 0.0));
    for (int l = 0; l < nl; ++l)
      for (int j = 0; j < nz; ++j) {
        double s = 0;
        for (int k = 0; k < nz; ++k)
          s += synth[static_cast<std::size_t>(j) * nz + k] * per_mode[k][c].trace[l];
        K.trace[l][j] = s;
      }
    for (int j = 0; j < nz; ++j) {
      double* lv = K.G.level(j);
      for (int bn : g.boundary_nodes) lv[bn] = K.trace[g.loop_id[bn]][j];
    }
  }
  return out;
}

GreensKernel GreensEngine::build_kernel(int node, int level) const {
  return many_kernels({{node, level}})[0];
}

GreensKernel GreensEngine::greens_at(Vec3 source) {
  const Grid& g = ell_.grid();
  // snap to the nearest interior node and level
  int bi = -1;
  double best = std::numeric_limits<double>::max();
  const int ii = static_cast<int>(std::lround((source.x - g.x0) / g.h));
  const int jj = static_cast<int>(std::lround((source.y - g.y0) / g.h));
  if (ii >= 0 && jj >= 0 && ii < g.nx && jj < g.ny &&
      g.mask[g.node(ii, jj)] == NodeTag::interior) {
    bi = g.node(ii, jj);
  } else {
    for (int n : g.interior_nodes) {
      const Vec2 p = g.xy(n);
      const double d2 = (p.x - source.x) * (p.x - source.x) +
                        (p.y - source.y) * (p.y - source.y);
      if (d2 < best) {
        best = d2;
        bi = n;
      }
    }
  }
  if (bi < 0) throw DomainError("no interior node to snap the source to");
  int lev = static_cast<int>(std::lround(source.z * (g.nz - 1)));
  lev = std::clamp(lev, 0, g.nz - 1);

  const long long key = static_cast<long long>(bi) * g.nz + lev;
  {
    std::lock_guard<std::mutex> lk(impl_->mu);
    auto it = impl_->index.find(key);
    if (it != impl_->index.end()) {
      impl_->lru.splice(impl_->lru.begin(), impl_->lru, it->second);
      return impl_->lru.front().second;
    }
  }
  GreensKernel K = build_kernel(bi, lev);
  std::lock_guard<std::mutex> lk(impl_->mu);
  auto it = impl_->index.find(key);
  if (it != impl_->index.end()) return it->second->second;
  impl_->lru.emplace_front(key, K);
  impl_->index[key] = impl_->lru.begin();
  impl_->bytes += K.bytes();
  while (impl_->bytes > opt_.cache_budget && impl_->lru.size() > 1) {
    impl_->bytes -= impl_->lru.back().second.bytes();
    impl_->index.erase(impl_->lru.back().first);
    impl_->lru.pop_back();
  }
  return K;
}

std::size_t GreensEngine::cache_bytes() const {
  std::lock_guard<std::mutex> lk(impl_->mu);
  return impl_->bytes;
}

void GreensEngine::clear_cache() {
  std::lock_guard<std::mutex> lk(impl_->mu);
  impl_->lru.clear();
  impl_->index.clear();
  impl_->bytes = 0;
}

// ---------------------------------------------------------------------
// corrector on the extended cylinder M x (-1,1)
//
// The unknown actually solved for is the periodic part rho = phi - Phi,
// which satisfies lap3 rho = 1/|ext volume| - delta_source with
// loop-constant lateral trace, zero loop fluxes and zero mean; phi is then
// Phi + rho. This keeps the singular part analytic and makes the periodic
// trace/flux/mean conditions homogeneous. The vertical basis is the real
// Fourier basis on the 2(nz-1) periodic levels; its eigenvalues coincide
// with the cosine ones, so the factorization cache is shared.

CorrectorResult GreensEngine::corrector(Vec3 source) const {
  const Grid& g = ell_.grid();
  const VerticalBasis& vb = ell_.basis();
  const int J = g.nz - 1;
  const int nlev = 2 * J;
  const int ni = g.n_interior();
  const int nl = g.n_loops;
  const double dz = g.dz();

  const int ii = static_cast<int>(std::lround((source.x - g.x0) / g.h));
  const int jj = static_cast<int>(std::lround((source.y - g.y0) / g.h));
  if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny ||
      g.mask[g.node(ii, jj)] != NodeTag::interior)
    throw DomainError("corrector source must snap to an interior node");
  const int n0 = g.node(ii, jj);
  const int m0 = g.interior_index[n0];
  int lev = static_cast<int>(std::lround(source.z * J));
  lev = std::clamp(lev, 0, J);
  const Vec2 sp = g.xy(n0);
  const Vec3 src{sp.x, sp.y, g.z_level(lev)};
  // extended level index of the source: eta = z means i = J + lev, except
  // z = 1 wraps to eta = -1 (index 0)
  const int i0 = (lev == J) ? 0 : J + lev;

  const double ext_vol = 2.0 * g.fluid_volume();
  const double mass = 1.0 / (g.weight[m0] * dz);

  // modes 0..J are cos(pi m eta), J+1..2J-1 are sin(pi m eta) with
  // m = idx - J; eigenvalues -(pi m)^2 either way
  auto eta_of = [&](int i) { return static_cast<double>(i) / J - 1.0; };
  std::vector<std::vector<BorderedSolution>> sols(nlev);
  for (int m = 0; m <= J; ++m) {
    std::vector<BorderedRhs> cols;
    const double eta0 = eta_of(i0);
    {
      BorderedRhs r;
      const double norm = (m == 0 || m == J) ? 2.0 * J : 1.0 * J;
      r.interior.assign(ni, m == 0 ? 1.0 / ext_vol : 0.0);
      r.interior[m0] -= mass * std::cos(M_PI * m * eta0) / norm;
      r.flux.assign(nl, 0.0);
      cols.push_back(std::move(r));
    }
    if (m >= 1 && m <= J - 1) {
      BorderedRhs r;
      r.interior.assign(ni, 0.0);
      r.interior[m0] -= mass * std::sin(M_PI * m * eta0) / J;
      r.flux.assign(nl, 0.0);
      cols.push_back(std::move(r));
    }
    auto batch = ell_.solve_eigenvalue(vb.eigenvalue(m), cols);
    sols[m] = {batch[0]};
    if (batch.size() > 1) sols[J + m] = {batch[1]};
  }

  CorrectorResult out;
  out.source = src;
  out.phi = ExtendedField(g);
  out.trace.assign(nl, std::vector<double>(nlev, 0.0));
  out.mu = sols[0][0].mu;

  auto synth_at = [&](int i, const std::vector<double>& modal) {
    const double eta = eta_of(i);
    double s = 0;
    for (int m = 0; m <= J; ++m) s += modal[m] * std::cos(M_PI * m * eta);
    for (int m = 1; m <= J - 1; ++m) s += modal[J + m] * std::sin(M_PI * m * eta);
    return s;
  };

  std::vector<double> modal(nlev, 0.0);
  for (int m = 0; m < ni; ++m) {
    const int n = g.interior_nodes[m];
    for (int idx = 0; idx < nlev; ++idx)
      modal[idx] = sols[idx].empty() ? 0.0 : sols[idx][0].interior[m];
    const Vec2 p = g.xy(n);
    for (int i = 0; i < nlev; ++i) {
      const double rho = synth_at(i, modal);
      out.phi.at(n, i) = phi_sample(src, {p.x, p.y, eta_of(i)}, g.h) + rho;
    }
  }
  for (int l = 0; l < nl; ++l) {
    for (int idx = 0; idx < nlev; ++idx)
      modal[idx] = sols[idx].empty() ? 0.0 : sols[idx][0].trace[l];
    for (int i = 0; i < nlev; ++i) out.trace[l][i] = synth_at(i, modal);
  }
  for (int bn : g.boundary_nodes) {
    const Vec2 p = g.xy(bn);
    const int l = g.loop_id[bn];
    for (int i = 0; i < nlev; ++i)
      out.phi.at(bn, i) =
          phi_sample(src, {p.x, p.y, eta_of(i)}, g.h) + out.trace[l][i];
  }
  return out;
}

ExtendedField GreensEngine::periodized(const CorrectorResult& c) const {
  const Grid& g = ell_.grid();
  ExtendedField out(g);
  const int nlev = out.nlev;
  for (int n : g.fluid_nodes) {
    const Vec2 p = g.xy(n);
    for (int i = 0; i < nlev; ++i) {
      const double eta = out.eta(i);
      out.at(n, i) = phi_sample(c.source, {p.x, p.y, eta}, g.h) - c.phi.at(n, i);
    }
  }
  return out;
}

// ---------------------------------------------------------------------
// empirical bounds

EstimateReport GreensEngine::estimate_report(const std::vector<Vec3>& sources) {
  const Grid& g = ell_.grid();
  const int nz = g.nz;
  EstimateReport rep;

  // target nodes with two full rings of interior neighbors, so centered
  // first and second differences are uncut
  std::vector<int> targets;
  for (int n : g.interior_nodes) {
    const int i = n % g.nx, j = n / g.nx;
    bool ok = i >= 2 && j >= 2 && i < g.nx - 2 && j < g.ny - 2;
    for (int dj = -2; ok && dj <= 2; ++dj)
      for (int di = -2; ok && di <= 2; ++di)
        if (std::abs(di) + std::abs(dj) <= 2 &&
            g.mask[g.node(i + di, j + dj)] != NodeTag::interior)
          ok = false;
    if (ok) targets.push_back(n);
  }

  const double h = g.h, dzv = g.dz();
  for (const Vec3& s : sources) {
    const GreensKernel K = greens_at(s);
    for (int n : targets) {
      const int i = n % g.nx, j = n / g.nx;
      const Vec2 p = g.xy(n);
      for (int k = 1; k < nz - 1; ++k) {
        const double z = g.z_level(k);
        const double dx = p.x - K.source.x, dy = p.y - K.source.y,
                     dzz = z - K.source.z;
        const double r = std::sqrt(dx * dx + dy * dy + dzz * dzz);
        if (r < opt_.exclusion_factor * h) continue;
        auto G = [&](int di, int dj, int dk) {
          return K.G.at(g.node(i + di, j + dj), k + dk);
        };
        const double g0 = G(0, 0, 0);
        const double gx = (G(1, 0, 0) - G(-1, 0, 0)) / (2 * h);
        const double gy = (G(0, 1, 0) - G(0, -1, 0)) / (2 * h);
        const double gz = (G(0, 0, 1) - G(0, 0, -1)) / (2 * dzv);
        const double gxx = (G(1, 0, 0) - 2 * g0 + G(-1, 0, 0)) / (h * h);
        const double gyy = (G(0, 1, 0) - 2 * g0 + G(0, -1, 0)) / (h * h);
        const double gzz = (G(0, 0, 1) - 2 * g0 + G(0, 0, -1)) / (dzv * dzv);
        const double gxy =
            (G(1, 1, 0) - G(1, -1, 0) - G(-1, 1, 0) + G(-1, -1, 0)) / (4 * h * h);
        const double gxz =
            (G(1, 0, 1) - G(1, 0, -1) - G(-1, 0, 1) + G(-1, 0, -1)) / (4 * h * dzv);
        const double gyz =
            (G(0, 1, 1) - G(0, 1, -1) - G(0, -1, 1) + G(0, -1, -1)) / (4 * h * dzv);
        const double agrad = std::sqrt(gx * gx + gy * gy + gz * gz);
        const double ahess =
            std::sqrt(gxx * gxx + gyy * gyy + gzz * gzz +
                      2 * (gxy * gxy + gxz * gxz + gyz * gyz));
        rep.rows.push_back({r, std::abs(g0), agrad, ahess});
        rep.sup_G_r = std::max(rep.sup_G_r, std::abs(g0) * r);
        rep.sup_grad_r2 = std::max(rep.sup_grad_r2, agrad * r * r);
        rep.sup_hess_r3 = std::max(rep.sup_hess_r3, ahess * r * r * r);
      }
    }
  }
  rep.fitted_C = std::max({rep.sup_G_r, rep.sup_grad_r2, rep.sup_hess_r3});
  return rep;
}

QuasiLipschitzReport GreensEngine::quasi_lipschitz_report(
    const std::vector<std::pair<Vec3, Vec3>>& pairs) {
  const Grid& g = ell_.grid();
  const int nz = g.nz;
  QuasiLipschitzReport rep;

  auto node_of = [&](const Vec3& p) {
    const int i = static_cast<int>(std::lround((p.x - g.x0) / g.h));
    const int j = static_cast<int>(std::lround((p.y - g.y0) / g.h));
    if (i < 1 || j < 1 || i >= g.nx - 1 || j >= g.ny - 1)
      throw DomainError("pair point too close to the lattice edge");
    return g.node(i, j);
  };
  auto level_of = [&](const Vec3& p) {
    return std::clamp(static_cast<int>(std::lround(p.z * (nz - 1))), 0, nz - 1);
  };

  // source-side horizontal gradient by centered kernel differences: four
  // kernels per point (E,W,N,S neighbors at the same level)
  const int chunk = 8;
  for (std::size_t base = 0; base < pairs.size(); base += chunk) {
    const std::size_t end = std::min(pairs.size(), base + chunk);
    std::vector<std::pair<int, int>> req;
    for (std::size_t p = base; p < end; ++p) {
      for (const Vec3* pt : {&pairs[p].first, &pairs[p].second}) {
        const int n = node_of(*pt);
        const int lv = level_of(*pt);
        req.emplace_back(n + 1, lv);
        req.emplace_back(n - 1, lv);
        req.emplace_back(n + g.nx, lv);
        req.emplace_back(n - g.nx, lv);
      }
    }
    const auto kernels = many_kernels(req);
    for (std::size_t p = base; p < end; ++p) {
      const std::size_t o = (p - base) * 8;
      const GreensKernel& e1 = kernels[o + 0];
      const GreensKernel& w1 = kernels[o + 1];
      const GreensKernel& n1 = kernels[o + 2];
      const GreensKernel& s1 = kernels[o + 3];
      const GreensKernel& e2 = kernels[o + 4];
      const GreensKernel& w2 = kernels[o + 5];
      const GreensKernel& n2 = kernels[o + 6];
      const GreensKernel& s2 = kernels[o + 7];
      double integral = 0;
      for (int k = 0; k < nz; ++k) {
        const double zw = g.zw(k);
        double lvl = 0;
        for (int m = 0; m < g.n_interior(); ++m) {
          const int n = g.interior_nodes[m];
          const double d1x = (e1.G.at(n, k) - w1.G.at(n, k)) / (2 * g.h);
          const double d1y = (n1.G.at(n, k) - s1.G.at(n, k)) / (2 * g.h);
          const double d2x = (e2.G.at(n, k) - w2.G.at(n, k)) / (2 * g.h);
          const double d2y = (n2.G.at(n, k) - s2.G.at(n, k)) / (2 * g.h);
          lvl += g.weight[m] * std::hypot(d1x - d2x, d1y - d2y);
        }
        integral += zw * lvl;
      }
      const Vec3 a = pairs[p].first, b = pairs[p].second;
      const double d = std::sqrt((a.x - b.x) * (a.x - b.x) +
                                 (a.y - b.y) * (a.y - b.y) +
                                 (a.z - b.z) * (a.z - b.z));
      if (d <= 0) throw DomainError("coincident pair in the modulus sampling");
      rep.rows.push_back({d, integral, integral / lambda_modulus(d)});
    }
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rep.rows) {
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    const double x = std::log(1.0 / r.d);
    sx += x;
    sy += r.ratio;
    sxx += x * x;
    sxy += x * r.ratio;
  }
  const double n = static_cast<double>(rep.rows.size());
  const double den = n * sxx - sx * sx;
  rep.slope = den != 0 ? (n * sxy - sx * sy) / den : 0.0;
  return rep;
}

VectorField3 GreensEngine::velocity_via_green(const ScalarField3& q,
                                              const CirculationData& c) {
  const Grid& g = ell_.grid();
  const int nz = g.nz;
  VectorField3 out(g);

  // evaluation nodes: interior with a full one-ring, so the source-side
  // skew gradient can be taken by centered kernel differences
  std::vector<int> evals;
  for (int n : g.interior_nodes) {
    const int i = n % g.nx, j = n / g.nx;
    if (i < 1 || j < 1 || i >= g.nx - 1 || j >= g.ny - 1) continue;
    if (g.mask[n - 1] == NodeTag::interior && g.mask[n + 1] == NodeTag::interior &&
        g.mask[n - g.nx] == NodeTag::interior &&
        g.mask[n + g.nx] == NodeTag::interior)
      evals.push_back(n);
  }

  const bool with_c = !c.is_zero();
  auto stream_sum = [&](const GreensKernel& K) {
    double s = 0;
    for (int k = 0; k < nz; ++k) {
      const double zw = g.zw(k);
      double lvl = 0;
      for (int m = 0; m < g.n_interior(); ++m)
        lvl += g.weight[m] * K.G.at(g.interior_nodes[m], k) *
               q.at(g.interior_nodes[m], k);
      s += zw * lvl;
    }
    if (with_c)
      for (int l = 0; l < g.n_loops; ++l)
        for (int k = 0; k < nz; ++k) s -= g.zw(k) * c.c[l][k] * K.trace[l][k];
    return s;
  };

  const int chunk = 16;
  std::vector<std::pair<int, int>> work;
  for (int n : evals)
    for (int k = 0; k < nz; ++k) work.emplace_back(n, k);

  for (std::size_t base = 0; base < work.size(); base += chunk) {
    const std::size_t end = std::min(work.size(), base + chunk);
    std::vector<std::pair<int, int>> req;
    for (std::size_t w = base; w < end; ++w) {
      const auto [n, k] = work[w];
      req.emplace_back(n + 1, k);
      req.emplace_back(n - 1, k);
      req.emplace_back(n + g.nx, k);
      req.emplace_back(n - g.nx, k);
    }
    const auto kernels = many_kernels(req);
    for (std::size_t w = base; w < end; ++w) {
      const auto [n, k] = work[w];
      const std::size_t o = (w - base) * 4;
      const double se = stream_sum(kernels[o + 0]);
      const double sw = stream_sum(kernels[o + 1]);
      const double sn = stream_sum(kernels[o + 2]);
      const double ss = stream_sum(kernels[o + 3]);
      out.u.at(n, k) = -(sn - ss) / (2 * g.h);
      out.v.at(n, k) = (se - sw) / (2 * g.h);
    }
  }
  return out;
}

std::vector<std::pair<Vec3, Vec3>> sample_interior_pairs(const Grid& g,
                                                         int n_pairs, Rng& rng) {
  // candidates keep two full rings of interior nodes around them
  std::vector<int> cand;
  for (int n : g.interior_nodes) {
    const int i = n % g.nx, j = n / g.nx;
    bool ok = i >= 2 && j >= 2 && i < g.nx - 2 && j < g.ny - 2;
    for (int dj = -2; ok && dj <= 2; ++dj)
      for (int di = -2; ok && di <= 2; ++di)
        if (std::abs(di) + std::abs(dj) <= 2 &&
            g.mask[g.node(i + di, j + dj)] != NodeTag::interior)
          ok = false;
    if (ok) cand.push_back(n);
  }
  if (cand.size() < 2)
    throw ResolutionError("lattice too coarse to sample interior pairs");
  std::vector<char> is_cand(static_cast<std::size_t>(g.nx) * g.ny, 0);
  for (int n : cand) is_cand[n] = 1;

  auto point = [&](int n, int k) {
    const Vec2 p = g.xy(n);
    return Vec3{p.x, p.y, g.z_level(k)};
  };
  std::vector<std::pair<Vec3, Vec3>> out;
  out.reserve(n_pairs);
  int guard = 0;
  while (static_cast<int>(out.size()) < n_pairs && guard < 1000 * n_pairs) {
    ++guard;
    const int a = cand[static_cast<int>(rng.uniform() * cand.size()) % cand.size()];
    const int ka = static_cast<int>(rng.uniform() * g.nz) % g.nz;
    if (out.size() % 2 == 0) {
      // uniform pair
      const int b = cand[static_cast<int>(rng.uniform() * cand.size()) % cand.size()];
      const int kb = static_cast<int>(rng.uniform() * g.nz) % g.nz;
      if (a == b && ka == kb) continue;
      out.emplace_back(point(a, ka), point(b, kb));
    } else {
      // clustered pair at separation near s*h, same level, so the small-d
      // regime of the modulus is exercised
      const int s = 1 + static_cast<int>(rng.uniform() * 6) % 6;
      const double ang = rng.uniform(0, 2 * M_PI);
      const int di = static_cast<int>(std::lround(s * std::cos(ang)));
      const int dj = static_cast<int>(std::lround(s * std::sin(ang)));
      if (di == 0 && dj == 0) continue;
      const int i = a % g.nx + di, j = a / g.nx + dj;
      if (i < 2 || j < 2 || i >= g.nx - 2 || j >= g.ny - 2) continue;
      const int b = g.node(i, j);
      if (!is_cand[b]) continue;
      out.emplace_back(point(a, ka), point(b, ka));
    }
  }
  if (static_cast<int>(out.size()) < n_pairs)
    throw ResolutionError("could not sample the requested number of pairs");
  return out;
}

} // namespace cylqg
