#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace priorslam {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Seeded generator shared by every stochastic operation.
using Rng = std::mt19937_64;

/// Raised on malformed input: bad files, invalid configuration, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input error caused by a missing or unloadable dataset.
class DatasetError : public InputError {
 public:
  using InputError::InputError;
};

/// Raised when a differentiable op produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box in world meters.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  [[nodiscard]] Vec3 extent() const { return max - min; }
  [[nodiscard]] bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  [[nodiscard]] Aabb inflated(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }
};

}  // namespace priorslam
