#ifndef CYLQG_VERTICAL_HPP
#define CYLQG_VERTICAL_HPP

#include <vector>

#include "cylqg/field.hpp"

namespace cylqg {

// Vertical cosine collocation on levels z_j = j/(nz-1). Mode k is
// cos(k pi z) with vertical eigenvalue -(k pi)^2; the basis builds the
// Neumann conditions at z = 0,1 into the representation (it is the even
// periodic extension of the interval, discretized). Analysis/synthesis
// are explicit dense applications; nz stays small enough that a fast
// transform would be noise.
class VerticalBasis {
public:
  explicit VerticalBasis(int nz);

  int nz() const { return nz_; }
  double eigenvalue(int k) const; // -(k pi)^2

  // coefficients -> level samples and back, for one column of nz values
  void synth_column(const double* coef, double* phys) const;
  void anal_column(const double* phys, double* coef) const;

  // full-field transforms; repr tag is checked and flipped
  ScalarField3 forward(const ScalarField3& physical) const;
  ScalarField3 inverse(const ScalarField3& modes) const;

  // value and z-derivative of the cosine interpolant at arbitrary z
  double synth_at(const double* coef, double z) const;
  double synth_dz_at(const double* coef, double z) const;

  const std::vector<double>& synthesis_matrix() const { return synth_; }
  const std::vector<double>& analysis_matrix() const { return anal_; }

private:
  int nz_;
  std::vector<double> synth_; // [j*nz + k] = cos(k pi z_j)
  std::vector<double> anal_;  // exact inverse via cosine orthogonality
};

ScalarField3 vertical_forward(const ScalarField3& physical);
ScalarField3 vertical_inverse(const ScalarField3& modes);

} // namespace cylqg

#endif
