#include "priorslam/pose.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

namespace priorslam {

Mat3 quat_to_rotation(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Vec4 quat_to_rotation_backward(const Vec4& q, const Mat3& g) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 d;
  d[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0) +
              w * g(2, 1) - 2 * x * g(2, 2));
  d[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) +
              z * g(2, 1) - 2 * y * g(2, 2));
  d[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) + y * g(1, 2) +
              x * g(2, 0) + y * g(2, 1));
  return d;
}

Vec4 rotation_to_quat(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  return {q.w(), q.x(), q.y(), q.z()};
}

PoseParams to_pose(const Mat3& R, const Vec3& t) { return canonicalize({rotation_to_quat(R), t}); }

Mat3 PoseParams::rotation() const { return quat_to_rotation(q); }

Mat4 PoseParams::matrix() const {
  Mat4 T = Mat4::Identity();
  T.topLeftCorner<3, 3>() = rotation();
  T.topRightCorner<3, 1>() = t;
  return T;
}

PoseParams PoseParams::inverse() const {
  const Vec4 qi{q[0], -q[1], -q[2], -q[3]};
  return {qi, -(quat_to_rotation(qi) * t)};
}

PoseParams operator*(const PoseParams& a, const PoseParams& b) {
  const double aw = a.q[0], ax = a.q[1], ay = a.q[2], az = a.q[3];
  const double bw = b.q[0], bx = b.q[1], by = b.q[2], bz = b.q[3];
  Vec4 q{aw * bw - ax * bx - ay * by - az * bz, aw * bx + ax * bw + ay * bz - az * by,
         aw * by - ax * bz + ay * bw + az * bx, aw * bz + ax * by - ay * bx + az * bw};
  return {q / q.norm(), a.rotation() * b.t + a.t};
}

PoseParams from_matrix(const Mat4& T) {
  const Mat3 R = T.topLeftCorner<3, 3>();
  if (!T.allFinite()) throw InputError("from_matrix: non-finite entries");
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || std::abs(R.determinant() - 1.0) > 1e-6) {
    throw InputError("from_matrix: rotation block is not orthonormal with det 1");
  }
  if ((T.bottomRows<1>() - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-6) {
    throw InputError("from_matrix: last row must be (0, 0, 0, 1)");
  }
  return to_pose(R, T.topRightCorner<3, 1>());
}

PoseParams normalize(const PoseParams& p) {
  const double n = p.q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InputError("normalize: zero or non-finite quaternion");
  return {p.q / n, p.t};
}

PoseParams canonicalize(const PoseParams& p) {
  return p.q[0] < 0.0 ? PoseParams{-p.q, p.t} : p;
}

PoseParams constant_velocity_init(const PoseParams& prev, const PoseParams& prev2) {
  return prev * (prev2.inverse() * prev);
}

PoseParams predict_next_pose(const std::vector<PoseParams>& history) {
  if (history.empty()) return PoseParams::identity();
  if (history.size() == 1) return history.back();
  return constant_velocity_init(history[history.size() - 1], history[history.size() - 2]);
}

std::vector<StampedPose> read_tum_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trajectory file: " + path.string());
  std::vector<StampedPose> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    StampedPose sp;
    double qx, qy, qz, qw;
    if (!(ss >> sp.timestamp >> sp.pose.t[0] >> sp.pose.t[1] >> sp.pose.t[2] >> qx >> qy >> qz >> qw)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 8 numbers");
    }
    sp.pose.q = Vec4{qw, qx, qy, qz};
    // Files written by this library are already unit; keep their values bit-exact.
    if (std::abs(sp.pose.q.norm() - 1.0) > 1e-12) sp.pose = normalize(sp.pose);
    out.push_back(sp);
  }
  return out;
}

std::string format_tum_line(const StampedPose& sp) {
  const auto& p = sp.pose;
  std::string line;
  char buf[32];
  for (double v : {sp.timestamp, p.t[0], p.t[1], p.t[2], p.q[1], p.q[2], p.q[3], p.q[0]}) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (!line.empty()) line += ' ';
    line.append(buf, res.ptr);
  }
  return line;
}

void write_tum_trajectory(const std::filesystem::path& path, const std::vector<StampedPose>& poses) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trajectory file: " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& sp : poses) out << format_tum_line(sp) << '\n';
  if (!out) throw InputError("failed writing trajectory file: " + path.string());
}

}  // namespace priorslam
