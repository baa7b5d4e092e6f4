// Copyright 2026 The kinpred Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "kinpred/kinematics.hpp"
#include "test_util.hpp"

namespace kinpred {
namespace {

using testing::humanoid;
using testing::small_model;

// Central-difference Jacobian of FK. Base angular columns perturb the base
// rotation on the left (world frame); angular rows use the log of the
// rotation increment.
LinkJacobian fd_jacobian(const RigidBodyModel& m, const Configuration& q, int link, double h) {
  const int n = m.num_joints();
  LinkJacobian jac(6, 6 + n);
  auto column = [&](const Configuration& qp, const Configuration& qm) {
    const LinkPose a = forward_kinematics(m, qp)[link];
    const LinkPose b = forward_kinematics(m, qm)[link];
    Vec6 c;
    c << (a.position - b.position) / (2 * h), log_so3(a.rotation * b.rotation.transpose()) / (2 * h);
    return c;
  };
  for (int k = 0; k < 3; ++k) {
    Configuration qp = q, qm = q;
    qp.base_position[k] += h;
    qm.base_position[k] -= h;
    jac.col(k) = column(qp, qm);
    qp = q;
    qm = q;
    qp.base_rotation = exp_so3(h * Vec3::Unit(k)) * q.base_rotation;
    qm.base_rotation = exp_so3(-h * Vec3::Unit(k)) * q.base_rotation;
    jac.col(3 + k) = column(qp, qm);
  }
  for (int j = 0; j < n; ++j) {
    Configuration qp = q, qm = q;
    qp.joint_positions[j] += h;
    qm.joint_positions[j] -= h;
    jac.col(6 + j) = column(qp, qm);
  }
  return jac;
}

// q (+) t*nu with the SO(3) retraction on the base rotation.
Configuration retract(const Configuration& q, const SystemVelocity& nu, double t) {
  return {q.base_position + t * nu.base_linear, exp_so3(t * nu.base_angular) * q.base_rotation,
          q.joint_positions + t * nu.joint_velocities};
}

Vec6 fd_twist(const RigidBodyModel& m, const Configuration& q, const SystemVelocity& nu, int link,
              double h) {
  const LinkPose a = forward_kinematics(m, retract(q, nu, h))[link];
  const LinkPose b = forward_kinematics(m, retract(q, nu, -h))[link];
  Vec6 v;
  v << (a.position - b.position) / (2 * h), log_so3(a.rotation * b.rotation.transpose()) / (2 * h);
  return v;
}

TEST(ForwardKinematics, NeutralComposesChainOrigins) {
  const RigidBodyModel& m = humanoid();
  const auto poses = forward_kinematics(m, neutral_configuration(m));
  ASSERT_EQ(static_cast<int>(poses.size()), m.num_links());
  // pelvis -> torso (0,0,0.1) -> shoulder (0,0.18,0.3) -> elbow (0,0,-0.3).
  const LinkPose& forearm = poses[m.link_index("l_forearm")];
  EXPECT_LT((forearm.position - Vec3(0, 0.18, 0.1)).norm(), 1e-15);
  EXPECT_LT((forearm.rotation - Mat3::Identity()).norm(), 1e-15);
  // pelvis -> hip (0,-0.09,-0.08) -> knee (0,0,-0.42).
  const LinkPose& shank = poses[m.link_index("r_lower_leg")];
  EXPECT_LT((shank.position - Vec3(0, -0.09, -0.5)).norm(), 1e-15);
}

TEST(ForwardKinematics, BaseLinkIsBasePoseExactly) {
  std::mt19937_64 rng(1);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const LinkPose base = forward_kinematics(humanoid(), q)[humanoid().base_link()];
  EXPECT_EQ(base.position, q.base_position);
  EXPECT_EQ(base.rotation, q.base_rotation);
}

TEST(ForwardKinematics, BaseTranslationShiftsEveryLink) {
  std::mt19937_64 rng(2);
  Configuration q = testing::random_configuration(humanoid(), rng);
  const auto before = forward_kinematics(humanoid(), q);
  q.base_position += Vec3(1, 2, 3);
  const auto after = forward_kinematics(humanoid(), q);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_LT((after[i].position - before[i].position - Vec3(1, 2, 3)).norm(), 1e-12);
    EXPECT_EQ(after[i].rotation, before[i].rotation);
  }
}

TEST(ForwardKinematics, KneeQuarterTurnIsAxisAngle) {
  const RigidBodyModel& m = humanoid();
  std::mt19937_64 rng(3);
  Configuration q = testing::random_configuration(m, rng);
  const int knee = m.joint_index("l_knee");
  q.joint_positions[knee] = std::numbers::pi / 2;
  const auto poses = forward_kinematics(m, q);
  const Mat3 parent = poses[m.joint(knee).parent].rotation;
  const Mat3 child = poses[m.joint(knee).child].rotation;
  // The knee origin has no rotation offset.
  EXPECT_LT((child - parent * axis_angle(m.joint(knee).axis, std::numbers::pi / 2)).norm(), 1e-14);
}

TEST(ForwardKinematics, RotationsStayOrthonormal) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Configuration q = testing::random_configuration(humanoid(), rng);
    for (const LinkPose& p : forward_kinematics(humanoid(), q)) {
      EXPECT_TRUE(is_rotation(p.rotation, 1e-8));
    }
  }
}

TEST(ForwardKinematics, DimensionMismatchThrows) {
  Configuration q = neutral_configuration(humanoid());
  q.joint_positions = VecX::Zero(19);
  EXPECT_THROW(forward_kinematics(humanoid(), q), std::invalid_argument);
}

TEST(LinkJacobian, FloatingBaseBlocks) {
  const RigidBodyModel& m = humanoid();
  std::mt19937_64 rng(5);
  const Configuration q = testing::random_configuration(m, rng);
  const auto poses = forward_kinematics(m, q);
  for (int link = 0; link < m.num_links(); ++link) {
    const LinkJacobian j = link_jacobian(m, q, link);
    ASSERT_EQ(j.rows(), 6);
    ASSERT_EQ(j.cols(), 26);
    EXPECT_EQ(Mat3(j.block<3, 3>(0, 0)), Mat3::Identity());
    EXPECT_LT((Mat3(j.block<3, 3>(0, 3)) + skew(poses[link].position - q.base_position)).norm(),
              1e-14);
    EXPECT_EQ(Mat3(j.block<3, 3>(3, 0)), Mat3::Zero());
    EXPECT_EQ(Mat3(j.block<3, 3>(3, 3)), Mat3::Identity());
  }
}

TEST(LinkJacobian, OffChainColumnsAreExactlyZero) {
  const RigidBodyModel& m = humanoid();
  std::mt19937_64 rng(6);
  const Configuration q = testing::random_configuration(m, rng);
  for (int link = 0; link < m.num_links(); ++link) {
    const LinkJacobian j = link_jacobian(m, q, link);
    std::vector<bool> on(m.num_joints(), false);
    for (int k : m.chain(link)) on[k] = true;
    for (int k = 0; k < m.num_joints(); ++k) {
      if (!on[k]) {
        EXPECT_TRUE(j.col(6 + k).isZero(0.0)) << "link " << link << " joint " << k;
      } else {
        EXPECT_FALSE(j.col(6 + k).isZero(0.0));
      }
    }
  }
}

TEST(LinkJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (const RigidBodyModel* m : {&humanoid(), &small_model()}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Configuration q = testing::random_configuration(*m, rng);
      for (int link = 0; link < m->num_links(); ++link) {
        const LinkJacobian j = link_jacobian(*m, q, link);
        EXPECT_LT((j - fd_jacobian(*m, q, link, 1e-6)).cwiseAbs().maxCoeff(), 1e-6);
      }
    }
  }
}

TEST(LinkJacobian, BadIndexThrows) {
  const Configuration q = neutral_configuration(humanoid());
  EXPECT_THROW(link_jacobian(humanoid(), q, -1), std::out_of_range);
  EXPECT_THROW(link_jacobian(humanoid(), q, 21), std::out_of_range);
}

TEST(DifferentialKinematics, ZeroVelocityGivesZeroTwist) {
  std::mt19937_64 rng(8);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity nu{Vec3::Zero(), Vec3::Zero(), VecX::Zero(20)};
  for (int link = 0; link < humanoid().num_links(); ++link) {
    EXPECT_EQ(differential_kinematics(humanoid(), q, nu, link).stacked(), Vec6::Zero());
  }
}

TEST(DifferentialKinematics, PureBaseTranslation) {
  std::mt19937_64 rng(9);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity nu{Vec3(0.3, -1.2, 0.5), Vec3::Zero(), VecX::Zero(20)};
  for (int link = 0; link < humanoid().num_links(); ++link) {
    const LinkTwist v = differential_kinematics(humanoid(), q, nu, link);
    EXPECT_LT((v.linear - nu.base_linear).norm(), 1e-15);
    EXPECT_EQ(v.angular, Vec3::Zero());
  }
}

TEST(DifferentialKinematics, EqualsJacobianTimesVelocity) {
  std::mt19937_64 rng(10);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity nu = testing::random_velocity(humanoid(), rng);
  VecX stacked(26);
  stacked << nu.base_linear, nu.base_angular, nu.joint_velocities;
  for (int link = 0; link < humanoid().num_links(); ++link) {
    const Vec6 expected = link_jacobian(humanoid(), q, link) * stacked;
    EXPECT_LT((differential_kinematics(humanoid(), q, nu, link).stacked() - expected).norm(),
              1e-13);
  }
}

TEST(DifferentialKinematics, MatchesRetractionFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Configuration q = testing::random_configuration(humanoid(), rng);
    const SystemVelocity nu = testing::random_velocity(humanoid(), rng);
    for (int link : humanoid().instrumented_links()) {
      const Vec6 v = differential_kinematics(humanoid(), q, nu, link).stacked();
      EXPECT_LT((v - fd_twist(humanoid(), q, nu, link, 1e-6)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(DifferentialKinematics, LinearInVelocity) {
  std::mt19937_64 rng(12);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity a = testing::random_velocity(humanoid(), rng);
  const SystemVelocity b = testing::random_velocity(humanoid(), rng);
  const double ca = 1.7, cb = -0.4;
  const SystemVelocity mix{ca * a.base_linear + cb * b.base_linear,
                           ca * a.base_angular + cb * b.base_angular,
                           ca * a.joint_velocities + cb * b.joint_velocities};
  for (int link = 0; link < humanoid().num_links(); ++link) {
    const Vec6 lhs = differential_kinematics(humanoid(), q, mix, link).stacked();
    const Vec6 rhs = ca * differential_kinematics(humanoid(), q, a, link).stacked() +
                     cb * differential_kinematics(humanoid(), q, b, link).stacked();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(TwistPositionJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity nu = testing::random_velocity(humanoid(), rng);
  for (int link : humanoid().instrumented_links()) {
    const KinematicsState state(humanoid(), q);
    const MatX analytic = twist_position_jacobian(humanoid(), state, nu, link);
    MatX numeric(6, 20);
    const double h = 1e-6;
    for (int k = 0; k < 20; ++k) {
      Configuration qp = q, qm = q;
      qp.joint_positions[k] += h;
      qm.joint_positions[k] -= h;
      numeric.col(k) = (differential_kinematics(humanoid(), qp, nu, link).stacked() -
                        differential_kinematics(humanoid(), qm, nu, link).stacked()) /
                       (2 * h);
    }
    EXPECT_LT(testing::max_rel_error(analytic, numeric), 1e-7);
  }
}

TEST(VjpFk, ZeroCotangentGivesZero) {
  std::mt19937_64 rng(14);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  EXPECT_EQ(vjp_fk(humanoid(), q, 7, Vec3::Zero(), Mat3::Zero()), VecX::Zero(20));
}

TEST(VjpFk, BaseLinkHasNoJointGradient) {
  std::mt19937_64 rng(15);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const Mat3 c = testing::random_rotation(rng);
  EXPECT_EQ(vjp_fk(humanoid(), q, humanoid().base_link(), Vec3(1, 2, 3), c), VecX::Zero(20));
}

TEST(VjpFk, SquaredPositionErrorMatchesFiniteDifferences) {
  std::mt19937_64 rng(16);
  const RigidBodyModel& m = humanoid();
  for (int trial = 0; trial < 20; ++trial) {
    const Configuration q = testing::random_configuration(m, rng);
    const Vec3 target = testing::random_vector(rng, 3);
    for (int link : m.instrumented_links()) {
      const Vec3 p = forward_kinematics(m, q)[link].position;
      const VecX analytic = vjp_fk(m, q, link, 2.0 * (p - target), Mat3::Zero());
      const VecX numeric = testing::numeric_gradient(
          [&](const VecX& s) {
            return (forward_kinematics(m, {q.base_position, q.base_rotation, s})[link].position -
                    target)
                .squaredNorm();
          },
          q.joint_positions);
      EXPECT_LT(testing::max_rel_error(analytic, numeric), 1e-5);
    }
  }
}

TEST(VjpFk, RandomCotangentsMatchFiniteDifferences) {
  std::mt19937_64 rng(17);
  const RigidBodyModel& m = humanoid();
  for (int trial = 0; trial < 100; ++trial) {
    const Configuration q = testing::random_configuration(m, rng);
    const int link = m.instrumented_links()[trial % 5];
    const Vec3 cp = testing::random_vector(rng, 3);
    const Mat3 cr = Eigen::Map<const Mat3>(testing::random_vector(rng, 9).data());
    const VecX analytic = vjp_fk(m, q, link, cp, cr);
    const VecX numeric = testing::numeric_gradient(
        [&](const VecX& s) {
          const LinkPose p = forward_kinematics(m, {q.base_position, q.base_rotation, s})[link];
          return cp.dot(p.position) + (cr.array() * p.rotation.array()).sum();
        },
        q.joint_positions);
    EXPECT_LT(testing::max_rel_error(analytic, numeric), 1e-5);
  }
}

TEST(VjpFk, AccumulateAddsToExisting) {
  std::mt19937_64 rng(18);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const KinematicsState state(humanoid(), q);
  VecX grad = VecX::Ones(20);
  accumulate_vjp_fk(humanoid(), state, 7, Vec3(1, 0, 0), Mat3::Zero(), grad);
  EXPECT_LT((grad - VecX::Ones(20) - vjp_fk(humanoid(), q, 7, Vec3(1, 0, 0), Mat3::Zero())).norm(),
            1e-15);
}

TEST(VjpDk, ZeroCotangentGivesZero) {
  std::mt19937_64 rng(19);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity nu = testing::random_velocity(humanoid(), rng);
  const DkGradient g = vjp_dk(humanoid(), q, nu, 7, Vec6::Zero());
  EXPECT_EQ(g.positions, VecX::Zero(20));
  EXPECT_EQ(g.velocities, VecX::Zero(20));
}

TEST(VjpDk, VelocityGradientIsJacobianTranspose) {
  std::mt19937_64 rng(20);
  const Configuration q = testing::random_configuration(humanoid(), rng);
  const SystemVelocity nu = testing::random_velocity(humanoid(), rng);
  const Vec6 c = testing::random_vector(rng, 6);
  for (int link : humanoid().instrumented_links()) {
    const DkGradient g = vjp_dk(humanoid(), q, nu, link, c);
    const VecX expected = link_jacobian(humanoid(), q, link).rightCols(20).transpose() * c;
    EXPECT_LT((g.velocities - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(VjpDk, PositionGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  const RigidBodyModel& m = humanoid();
  for (int trial = 0; trial < 100; ++trial) {
    const Configuration q = testing::random_configuration(m, rng);
    const SystemVelocity nu = testing::random_velocity(m, rng);
    const Vec6 c = testing::random_vector(rng, 6);
    const int link = m.instrumented_links()[trial % 5];
    const DkGradient g = vjp_dk(m, q, nu, link, c);
    const VecX numeric = testing::numeric_gradient(
        [&](const VecX& s) {
          return c.dot(
              differential_kinematics(m, {q.base_position, q.base_rotation, s}, nu, link).stacked());
        },
        q.joint_positions);
    EXPECT_LT(testing::max_rel_error(g.positions, numeric), 1e-5);
  }
}

TEST(VjpDk, BadIndexThrows) {
  const Configuration q = neutral_configuration(humanoid());
  const SystemVelocity nu{Vec3::Zero(), Vec3::Zero(), VecX::Zero(20)};
  EXPECT_THROW(vjp_dk(humanoid(), q, nu, 99, Vec6::Zero()), std::out_of_range);
  EXPECT_THROW(vjp_fk(humanoid(), q, 99, Vec3::Zero(), Mat3::Zero()), std::out_of_range);
  EXPECT_THROW(differential_kinematics(humanoid(), q, nu, 99), std::out_of_range);
}

TEST(OrientationDistance, Examples) {
  const Mat3 a = rpy_to_rotation(0.1, 0.2, 0.3);
  EXPECT_EQ(orientation_distance(a, a), 0.0);
  // I - Rz(pi) = diag(2, 2, 0): squared Frobenius norm 8.
  EXPECT_NEAR(orientation_distance(Mat3::Identity(), axis_angle(Vec3::UnitZ(), std::numbers::pi)),
              8.0, 1e-14);
  const Mat3 b = rpy_to_rotation(-0.5, 0.4, 1.0);
  EXPECT_EQ(orientation_distance(a, b), orientation_distance(b, a));
  const FlatRotation fa = flatten(a), fb = flatten(b);
  EXPECT_DOUBLE_EQ(orientation_distance(fa, fb), orientation_distance(a, b));
}

}  // namespace
}  // namespace kinpred
