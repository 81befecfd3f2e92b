#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace abd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// All matrices in one computation share a single runtime dimension n.
inline constexpr int kMinDim = 1;
inline constexpr int kMaxDim = 8;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operands with incompatible sizes.
struct DimensionMismatch : Error {
  using Error::Error;
};

// Composition or transposition with incompatible variance tags.
struct TagMismatch : Error {
  using Error::Error;
};

// A map required to be invertible fails the scale-aware determinant test.
struct SingularMap : Error {
  using Error::Error;
};

// Principal matrix logarithm requested for a spectrum touching (-inf, 0].
struct LogUndefined : Error {
  using Error::Error;
};

// Degenerate kinetic-energy metric: the Legendre transform cannot be inverted.
struct SingularInertia : Error {
  using Error::Error;
};

// Fixed-point iteration failed to reach its residual target.
struct NonConvergence : Error {
  using Error::Error;
};

// A potential term references a body index outside the system.
struct BadPairIndex : Error {
  using Error::Error;
};

// Malformed or inconsistent external input (scenario files, CLI arguments).
struct ValidationError : Error {
  using Error::Error;
};

inline void require_dim(int n) {
  if (n < kMinDim || n > kMaxDim)
    throw ValidationError("dimension " + std::to_string(n) + " outside supported range 1..8");
}

inline void require_same_dim(int a, int b, const char* what) {
  if (a != b)
    throw DimensionMismatch(std::string(what) + ": dimensions " + std::to_string(a) + " and " + std::to_string(b) + " differ");
}

}  // namespace abd
