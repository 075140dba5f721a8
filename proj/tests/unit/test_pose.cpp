#include <cmath>

#include "helpers.hpp"

using namespace priorslam;
using namespace testutil;

namespace {

Mat3 rz(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(); }

bool same_up_to_sign(const PoseParams& a, const PoseParams& b, double tol) {
  const double dq = std::min((a.q - b.q).norm(), (a.q + b.q).norm());
  return dq < tol && (a.t - b.t).norm() < tol;
}

}  // namespace

TEST_CASE("identity quaternion gives identity matrix") {
  CHECK(PoseParams::identity().matrix() == Mat4::Identity());
}

TEST_CASE("to_matrix and from_matrix are inverse up to quaternion sign") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const PoseParams p = random_pose(rng);
    CHECK(same_up_to_sign(from_matrix(p.matrix()), p, 1e-12));
    PoseParams flipped = p;
    flipped.q = -p.q;
    CHECK(same_up_to_sign(from_matrix(flipped.matrix()), p, 1e-12));
  }
}

TEST_CASE("90 degrees about z maps x to y") {
  const PoseParams p = to_pose(rz(M_PI / 2), Vec3::Zero());
  CHECK((p.rotation() * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-15);
  const double h = std::sqrt(0.5);
  CHECK((canonicalize(p).q - Vec4(h, 0, 0, h)).norm() < 1e-15);
}

TEST_CASE("pose matrices are rigid and invertible") {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const PoseParams p = random_pose(rng, 3.0);
    const Mat3 R = p.rotation();
    CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-9);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-9);
    const Vec3 x = random_vec(rng, -5, 5);
    CHECK((p.inverse().transform(p.transform(x)) - x).norm() < 1e-9);
    const Mat4 M = p.matrix();
    const Vec4 xh = M.inverse() * (M * x.homogeneous());
    CHECK((xh.head<3>() - x).norm() < 1e-9);
  }
}

TEST_CASE("composition matches matrix product") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const PoseParams a = random_pose(rng), b = random_pose(rng);
    CHECK(((a * b).matrix() - a.matrix() * b.matrix()).norm() < 1e-12);
  }
}

TEST_CASE("from_matrix rejects non-rigid input") {
  Mat4 M = Mat4::Identity();
  M(0, 0) = 1.1;
  CHECK_THROWS_AS(from_matrix(M), InputError);
  M = Mat4::Identity();
  M(0, 0) = -1;  // reflection
  CHECK_THROWS_AS(from_matrix(M), InputError);
  M = Mat4::Identity();
  M(3, 0) = 0.5;
  CHECK_THROWS_AS(from_matrix(M), InputError);
}

TEST_CASE("constant velocity initialization") {
  Rng rng(8);
  const PoseParams a = random_pose(rng);
  CHECK(same_up_to_sign(constant_velocity_init(a, a), a, 1e-12));

  PoseParams p2 = a, p1 = a;
  const Vec3 delta(0.01, -0.02, 0.03);
  p1.t = a.t + delta;
  const PoseParams init = constant_velocity_init(p1, p2);
  CHECK((init.t - (p2.t + 2 * delta)).norm() < 1e-12);
  CHECK(same_up_to_sign(init, PoseParams{a.q, a.t + 2 * delta}, 1e-12));

  const PoseParams id = PoseParams::identity();
  CHECK(same_up_to_sign(constant_velocity_init(id, id), id, 1e-15));
}

TEST_CASE("constant velocity repeats a rotation step") {
  const PoseParams p2 = to_pose(rz(0.1), Vec3(0, 0, 0));
  const PoseParams p1 = to_pose(rz(0.2), Vec3(0, 0, 0));
  const PoseParams init = constant_velocity_init(p1, p2);
  CHECK((init.rotation() - rz(0.3)).norm() < 1e-12);
}

TEST_CASE("predict_next_pose follows the motion model") {
  CHECK(predict_next_pose({}) == PoseParams::identity());
  PoseParams a;
  a.t = Vec3(1, 2, 3);
  CHECK(predict_next_pose({a}) == a);
  PoseParams b = a;
  b.t = Vec3(1.5, 2, 3);
  CHECK((predict_next_pose({a, b}).t - Vec3(2, 2, 3)).norm() < 1e-12);
}

TEST_CASE("normalize examples") {
  PoseParams p;
  p.q = Vec4(2, 0, 0, 0);
  p.t = Vec3(1, 2, 3);
  const PoseParams n = normalize(p);
  CHECK(n.q == Vec4(1, 0, 0, 0));
  CHECK(n.t == p.t);

  Rng rng(9);
  const Vec4 u = random_quat(rng);
  CHECK((normalize(PoseParams{u, Vec3::Zero()}).q - u).norm() < 1e-15);
  for (int i = 0; i < 100; ++i) {
    const Vec4 q = random_quat(rng) * uniform(rng, 0.1, 10.0);
    CHECK(std::abs(normalize(PoseParams{q, Vec3::Zero()}).q.norm() - 1.0) < 1e-12);
  }
  PoseParams zero;
  zero.q = Vec4::Zero();
  CHECK_THROWS_AS(normalize(zero), InputError);
}

TEST_CASE("canonicalize makes w non-negative and keeps the rotation") {
  PoseParams p;
  p.q = Vec4(-0.5, 0.5, 0.5, 0.5);
  const PoseParams c = canonicalize(p);
  CHECK(c.q[0] >= 0);
  CHECK((c.rotation() - p.rotation()).norm() < 1e-15);
}

TEST_CASE("rotation_to_quat inverts quat_to_rotation") {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const Vec4 q = random_quat(rng);
    const Vec4 r = rotation_to_quat(quat_to_rotation(q));
    CHECK(std::min((q - r).norm(), (q + r).norm()) < 1e-12);
  }
}

TEST_CASE("quaternion-to-rotation gradient passes finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x = random_vec(rng, -2, 2);
    const Vec3 g = random_vec(rng);
    const Vec4 q0 = random_quat(rng);
    GradientFunction fn = [&](std::span<const double> v, std::span<double> grad) {
      const Vec4 q(v[0], v[1], v[2], v[3]);
      const Vec3 y = quat_to_rotation(q) * x;
      if (!grad.empty()) {
        const Mat3 dR = g * x.transpose();
        const Vec4 dq = quat_to_rotation_backward(q, dR);
        for (int i = 0; i < 4; ++i) grad[i] = dq[i];
      }
      return g.dot(y);
    };
    const std::vector<double> pt(q0.data(), q0.data() + 4);
    CHECK(finite_difference_check(fn, pt) < 1e-6);
  }
}

TEST_CASE("tum line round trips exactly") {
  Rng rng(12);
  const auto dir = temp_dir("tumio");
  std::vector<StampedPose> poses;
  for (int i = 0; i < 10; ++i) poses.push_back({1305031102.175304 + i / 30.0, random_pose(rng)});
  write_tum_trajectory(dir / "traj.txt", poses);
  const auto back = read_tum_trajectory(dir / "traj.txt");
  REQUIRE(back.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(back[i].timestamp == poses[i].timestamp);
    CHECK(back[i].pose == poses[i].pose);
  }
}

TEST_CASE("tum reader skips comments and rejects malformed lines") {
  const auto dir = temp_dir("tumbad");
  {
    std::ofstream f(dir / "a.txt");
    f << "# header\n\n1.0 0 0 0 0 0 0 1\n";
  }
  CHECK(read_tum_trajectory(dir / "a.txt").size() == 1);
  {
    std::ofstream f(dir / "b.txt");
    f << "1.0 0 0 0 0 0\n";
  }
  CHECK_THROWS_AS(read_tum_trajectory(dir / "b.txt"), InputError);
}
