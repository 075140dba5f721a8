#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "priorslam/types.hpp"

namespace priorslam {

/// Camera-to-world rigid transform as a unit quaternion (w, x, y, z) plus translation.
struct PoseParams {
  Vec4 q{1.0, 0.0, 0.0, 0.0};
  Vec3 t = Vec3::Zero();

  static PoseParams identity() { return {}; }

  [[nodiscard]] Mat3 rotation() const;
  [[nodiscard]] Mat4 matrix() const;
  [[nodiscard]] Vec3 transform(const Vec3& p) const { return rotation() * p + t; }
  [[nodiscard]] PoseParams inverse() const;

  friend PoseParams operator*(const PoseParams& a, const PoseParams& b);
  friend bool operator==(const PoseParams& a, const PoseParams& b) { return a.q == b.q && a.t == b.t; }
};

/// Rotation matrix of q, using the unit-quaternion polynomial. The formula is
/// evaluated as-is for non-unit q, which keeps it differentiable in all four
/// coordinates.
Mat3 quat_to_rotation(const Vec4& q);

/// Vector-Jacobian product of quat_to_rotation: accumulates dL/dq given dL/dR.
Vec4 quat_to_rotation_backward(const Vec4& q, const Mat3& dR);

Vec4 rotation_to_quat(const Mat3& R);

PoseParams to_pose(const Mat3& R, const Vec3& t);

/// Inverse of PoseParams::matrix. Throws InputError if the rotation block is
/// not orthonormal with det 1 (tolerance 1e-6) or the last row is not (0,0,0,1).
PoseParams from_matrix(const Mat4& T);

/// Scales q to unit norm. Throws InputError on a zero quaternion.
PoseParams normalize(const PoseParams& p);

/// Flips the quaternion sign so that w >= 0.
PoseParams canonicalize(const PoseParams& p);

/// Constant-velocity prediction T_prev * (T_prev2^-1 * T_prev).
PoseParams constant_velocity_init(const PoseParams& prev, const PoseParams& prev2);

/// Initial pose for frame `history.size()` given the poses already estimated.
PoseParams predict_next_pose(const std::vector<PoseParams>& history);

/// One line of a TUM trajectory file.
struct StampedPose {
  double timestamp = 0.0;
  PoseParams pose;
};

/// Reads `timestamp tx ty tz qx qy qz qw` lines; `#` starts a comment.
std::vector<StampedPose> read_tum_trajectory(const std::filesystem::path& path);
void write_tum_trajectory(const std::filesystem::path& path, const std::vector<StampedPose>& poses);
/// Shortest decimal form of each value that parses back to the same double.
std::string format_tum_line(const StampedPose& pose);

}  // namespace priorslam
