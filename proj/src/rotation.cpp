#include "scenediff/rotation.hpp"

#include <sstream>

#include "scenediff/errors.hpp"
#include "scenediff/log.hpp"

namespace scenediff {

Mat3 rot6d_to_matrix(const Rot6& r) {
  Mat3 out;
  if (!decode_rot6d(r.data(), out)) {
    std::ostringstream msg;
    msg << "degenerate 6-D rotation [" << r.transpose() << "]";
    throw DegenerateRotation(msg.str());
  }
  return out;
}

Mat3 rot6d_to_matrix_or_identity(const Rot6& r) {
  Mat3 out;
  if (!decode_rot6d(r.data(), out)) {
    std::ostringstream msg;
    msg << "degenerate 6-D rotation [" << r.transpose() << "], using identity";
    log_warn(msg.str());
  }
  return out;
}

double orthonormality_error(const Mat3& rotation) {
  return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Rot6 matrix_to_rot6d(const Mat3& rotation) {
  if (!rotation.allFinite() || orthonormality_error(rotation) > 1e-6 ||
      rotation.determinant() <= 0.0) {
    throw NotARotation("matrix is not in SO(3)");
  }
  Rot6 r;
  r << rotation.col(0), rotation.col(1);
  return r;
}

Mat3 yaw_matrix(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

}  // namespace scenediff
