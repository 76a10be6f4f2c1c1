#ifndef CYLQG_ERRORS_HPP
#define CYLQG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cylqg {

// Base class for everything thrown by this library. CLI maps subtypes to
// exit codes, so keep the hierarchy flat and the names stable.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain construction: loops that cross, holes outside the outer loop,
// wrong orientation that cannot be repaired.
class TopologyError : public Error {
public:
  using Error::Error;
};

// Grid too coarse to resolve a loop or a gap between loops.
class ResolutionError : public Error {
public:
  using Error::Error;
};

// Circulation data inconsistent with the potential vorticity (solvability
// constraint violated, or boundary data with nonzero vertical slope at an
// end of the cylinder).
class CompatibilityError : public Error {
public:
  using Error::Error;
};

// Linear algebra failure: singular factorization, residual above tolerance.
class SolverError : public Error {
public:
  using Error::Error;
};

// Green's function evaluated at (or too close to) its own source.
class SingularityError : public Error {
public:
  using Error::Error;
};

// Picard iteration for the flow map failed to contract.
class ContractionError : public Error {
public:
  using Error::Error;
};

// Time stepping produced a non-finite position or left the domain by more
// than a step can explain.
class IntegrationError : public Error {
public:
  using Error::Error;
};

// Flow-map comparison with mismatched seed sets.
class SeedError : public Error {
public:
  using Error::Error;
};

// Scalar function evaluated outside its stated domain (for example the
// log-Lipschitz modulus at negative separation).
class DomainError : public Error {
public:
  using Error::Error;
};

// Test function handed to the weak-form residual does not satisfy the
// boundary requirements (loop-wise constant trace, zero mean).
class InvalidTestFunction : public Error {
public:
  using Error::Error;
};

// Interpolation query outside the cross-section.
class OutOfDomain : public Error {
public:
  using Error::Error;
};

// Malformed configuration file or option value.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace cylqg

#endif
