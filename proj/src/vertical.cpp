#include "cylqg/vertical.hpp"

#include <cmath>

#include "cylqg/errors.hpp"

namespace cylqg {

VerticalBasis::VerticalBasis(int nz) : nz_(nz) {
  const int J = nz - 1;
  synth_.resize(static_cast<std::size_t>(nz) * nz);
  anal_.resize(static_cast<std::size_t>(nz) * nz);
  for (int j = 0; j < nz; ++j)
    for (int k = 0; k < nz; ++k)
      synth_[static_cast<std::size_t>(j) * nz + k] = std::cos(k * M_PI * j / double(J));
  // inverse from the discrete cosine orthogonality with half weights at
  // the interval ends
  for (int k = 0; k < nz; ++k) {
    const double nk = (k == 0 || k == J) ? J : J / 2.0;
    for (int j = 0; j < nz; ++j) {
      double w = (j == 0 || j == J) ? 0.5 : 1.0;
      anal_[static_cast<std::size_t>(k) * nz + j] =
          w * std::cos(k * M_PI * j / double(J)) / nk;
    }
  }
}

double VerticalBasis::eigenvalue(int k) const { return -(k * M_PI) * (k * M_PI); }

void VerticalBasis::synth_column(const double* coef, double* phys) const {
  for (int j = 0; j < nz_; ++j) {
    double s = 0;
    const double* row = synth_.data() + static_cast<std::size_t>(j) * nz_;
    for (int k = 0; k < nz_; ++k) s += row[k] * coef[k];
    phys[j] = s;
  }
}

void VerticalBasis::anal_column(const double* phys, double* coef) const {
  for (int k = 0; k < nz_; ++k) {
    double s = 0;
    const double* row = anal_.data() + static_cast<std::size_t>(k) * nz_;
    for (int j = 0; j < nz_; ++j) s += row[j] * phys[j];
    coef[k] = s;
  }
}

double VerticalBasis::synth_at(const double* coef, double z) const {
  double s = 0;
  for (int k = 0; k < nz_; ++k) s += coef[k] * std::cos(k * M_PI * z);
  return s;
}

double VerticalBasis::synth_dz_at(const double* coef, double z) const {
  double s = 0;
  for (int k = 1; k < nz_; ++k) s -= coef[k] * k * M_PI * std::sin(k * M_PI * z);
  return s;
}

static ScalarField3 apply_vertical(const ScalarField3& f, const VerticalBasis& b,
                                   bool forward) {
  ScalarField3 out(*f.grid, forward ? FieldRepr::mode : FieldRepr::physical);
  const int nz = f.grid->nz;
  const int nn = f.grid->nx * f.grid->ny;
  std::vector<double> in(nz), col(nz);
  for (int n = 0; n < nn; ++n) {
    if (f.grid->mask[n] == NodeTag::exterior) continue;
    for (int k = 0; k < nz; ++k) in[k] = f.data[static_cast<std::size_t>(k) * nn + n];
    if (forward)
      b.anal_column(in.data(), col.data());
    else
      b.synth_column(in.data(), col.data());
    for (int k = 0; k < nz; ++k) out.data[static_cast<std::size_t>(k) * nn + n] = col[k];
  }
  return out;
}

ScalarField3 VerticalBasis::forward(const ScalarField3& physical) const {
  if (physical.repr != FieldRepr::physical)
    throw Error("vertical forward: field is already in mode representation");
  return apply_vertical(physical, *this, true);
}

ScalarField3 VerticalBasis::inverse(const ScalarField3& modes) const {
  if (modes.repr != FieldRepr::mode)
    throw Error("vertical inverse: field is not in mode representation");
  return apply_vertical(modes, *this, false);
}

ScalarField3 vertical_forward(const ScalarField3& physical) {
  return VerticalBasis(physical.grid->nz).forward(physical);
}

ScalarField3 vertical_inverse(const ScalarField3& modes) {
  return VerticalBasis(modes.grid->nz).inverse(modes);
}

} // namespace cylqg
