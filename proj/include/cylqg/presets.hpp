#ifndef CYLQG_PRESETS_HPP
#define CYLQG_PRESETS_HPP

#include <cstdint>
#include <string>

#include "cylqg/transport.hpp"

namespace cylqg {

// Built-in initial PV fields. Every preset subtracts its per-level
// weighted means after sampling, so the homogeneous constraint holds
// exactly on the grid.

// Antisymmetric pair of Gaussian lobes, mildly depth-dependent.
InitialPV pv_dipole(const Grid& g, double amplitude = 1.0);

// Radially symmetric ring bump (annulus-style domains): the induced flow
// rotates along its own level sets, so the exact solution is steady.
InitialPV pv_radial(const Grid& g, double amplitude = 1.0);

// Uniform draws in [-amplitude, amplitude], deterministic in the seed.
InitialPV pv_random(const Grid& g, std::uint64_t seed, double amplitude = 1.0);

// From a CSV of x,y,z,value rows matching the grid nodes.
InitialPV pv_from_csv(const Grid& g, const std::string& path);

// The manufactured inversion case on the annulus with inner radius 1 and
// outer radius 2: psi* = sin(pi (r-1)) cos(pi z).
struct ManufacturedCase {
  ScalarField3 q;
  ScalarField3 psi_exact;
  CirculationData c;
};
ManufacturedCase manufactured_annulus(const Grid& g);

InitialPV pv_preset(const Grid& g, const std::string& name,
                    std::uint64_t seed, double amplitude = 1.0);

} // namespace cylqg

#endif
