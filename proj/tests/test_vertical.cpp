#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cylqg/vertical.hpp"

using namespace cylqg;

TEST_CASE("analysis inverts synthesis") {
  for (int nz : {2, 5, 9, 16}) {
    const VerticalBasis vb(nz);
    std::vector<double> coef(nz), phys(nz), back(nz);
    for (int k = 0; k < nz; ++k) coef[k] = std::sin(1.7 * k + 0.3);
    vb.synth_column(coef.data(), phys.data());
    vb.anal_column(phys.data(), back.data());
    for (int k = 0; k < nz; ++k)
      CHECK(back[k] == doctest::Approx(coef[k]).epsilon(1e-12));
  }
}

TEST_CASE("eigenvalues and pure modes") {
  const int nz = 9;
  const VerticalBasis vb(nz);
  CHECK(vb.eigenvalue(0) == 0.0);
  CHECK(vb.eigenvalue(2) == doctest::Approx(-4.0 * M_PI * M_PI));

  // sampling cos(k pi z) analyzes to the unit vector e_k
  for (int k : {0, 1, 3, nz - 1}) {
    std::vector<double> phys(nz), coef(nz);
    for (int j = 0; j < nz; ++j)
      phys[j] = std::cos(k * M_PI * j / (nz - 1.0));
    vb.anal_column(phys.data(), coef.data());
    for (int kk = 0; kk < nz; ++kk)
      CHECK(coef[kk] == doctest::Approx(kk == k ? 1.0 : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("interpolant value and derivative") {
  const int nz = 7;
  const VerticalBasis vb(nz);
  std::vector<double> coef(nz, 0.0);
  coef[0] = 0.4;
  coef[2] = -1.25;
  for (double z : {0.0, 0.31, 0.5, 0.77, 1.0}) {
    const double want = 0.4 - 1.25 * std::cos(2 * M_PI * z);
    const double want_dz = 1.25 * 2 * M_PI * std::sin(2 * M_PI * z);
    CHECK(vb.synth_at(coef.data(), z) == doctest::Approx(want).epsilon(1e-12));
    CHECK(vb.synth_dz_at(coef.data(), z) ==
          doctest::Approx(want_dz).epsilon(1e-12));
  }
  // natural boundary conditions are structural: every mode has zero slope
  // at the ends
  std::vector<double> full(nz);
  for (int k = 0; k < nz; ++k) full[k] = 1.0 / (1 + k);
  CHECK(vb.synth_dz_at(full.data(), 0.0) == doctest::Approx(0.0));
  CHECK(vb.synth_dz_at(full.data(), 1.0) == doctest::Approx(0.0));
}

TEST_CASE("matrix layout matches the column transforms") {
  const int nz = 6;
  const VerticalBasis vb(nz);
  const std::vector<double>& S = vb.synthesis_matrix();
  const std::vector<double>& A = vb.analysis_matrix();
  REQUIRE(S.size() == static_cast<std::size_t>(nz) * nz);
  REQUIRE(A.size() == static_cast<std::size_t>(nz) * nz);
  for (int j = 0; j < nz; ++j)
    for (int k = 0; k < nz; ++k)
      CHECK(S[j * nz + k] ==
            doctest::Approx(std::cos(k * M_PI * j / (nz - 1.0))));
  // A S = I
  for (int r = 0; r < nz; ++r)
    for (int c = 0; c < nz; ++c) {
      double acc = 0;
      for (int m = 0; m < nz; ++m) acc += A[r * nz + m] * S[m * nz + c];
      CHECK(acc == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-12));
    }
}
