#pragma once

// Continuous 6-D rotation representation: two 3-vectors orthonormalized by
// Gram-Schmidt give columns 1 and 2 of R; column 3 is their cross product.

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "scenediff/mesh.hpp"

namespace scenediff {

using Rot6 = Eigen::Matrix<double, 6, 1>;

inline constexpr double kRot6Degeneracy = 1e-8;

namespace detail {
inline double scalar_value(double x) { return x; }
template <class J>
auto scalar_value(const J& x) -> decltype(x.a) { return x.a; }
}  // namespace detail

/// Gram-Schmidt decode usable with any scalar (double or an autodiff jet).
/// Returns false and writes identity when either 3-vector is near zero or
/// the pair is parallel.
template <class T>
bool decode_rot6d(const T* r, Eigen::Matrix<T, 3, 3>& out) {
  using std::sqrt;
  using V = Eigen::Matrix<T, 3, 1>;
  const V a1(r[0], r[1], r[2]);
  const V a2(r[3], r[4], r[5]);
  const T n1 = sqrt(a1.squaredNorm());
  if (!(detail::scalar_value(n1) > kRot6Degeneracy)) {
    out.setIdentity();
    return false;
  }
  const V b1 = a1 / n1;
  const V u2 = a2 - b1 * b1.dot(a2);
  const T n2 = sqrt(u2.squaredNorm());
  const double a2_norm = std::sqrt(detail::scalar_value(a2.squaredNorm()));
  if (!(a2_norm > kRot6Degeneracy) || !(detail::scalar_value(n2) > kRot6Degeneracy * std::max(1.0, a2_norm))) {
    out.setIdentity();
    return false;
  }
  const V b2 = u2 / n2;
  out.col(0) = b1;
  out.col(1) = b2;
  out.col(2) = b1.cross(b2);
  return true;
}

/// Throws DegenerateRotation for parallel or near-zero inputs.
Mat3 rot6d_to_matrix(const Rot6& r);

/// Identity fallback for degenerate inputs, with a logged warning. Used on
/// noisy diffusion states, which must never abort the chain.
Mat3 rot6d_to_matrix_or_identity(const Rot6& r);

/// First two columns of R. Throws NotARotation unless R is in SO(3) within 1e-6.
Rot6 matrix_to_rot6d(const Mat3& rotation);

/// Rotation about +Y (right-handed); Y is up.
Mat3 yaw_matrix(double angle);

/// Infinity-norm of R^T R - I.
double orthonormality_error(const Mat3& rotation);

}  // namespace scenediff
