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

// Forward and differential kinematics of a floating-base tree.
//
// Twists use the mixed representation: linear velocity of the link origin
// and angular velocity, both in the inertial frame. Jacobian columns are
// ordered (base linear, base angular, joints); rows (linear, angular).
//
// All derivatives are closed form. With u_k = a_k x (p_i - o_k) the linear
// Jacobian column of joint k (world axis a_k, world joint origin o_k), the
// position derivative of the twist of link i along its chain is
//
//   d(linear)/ds_k  = w_{<=k} x u_k + a_k x sum_{j>k} sdot_j u_j
//   d(angular)/ds_k = a_k x sum_{j>k} sdot_j a_j
//
// where w_{<=k} is the base angular velocity plus the chain joint rates up to
// and including k.

#ifndef KINPRED_KINEMATICS_HPP_
#define KINPRED_KINEMATICS_HPP_

#include <vector>

#include "kinpred/model.hpp"

namespace kinpred {

struct LinkPose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  bool operator==(const LinkPose&) const = default;
};

struct LinkTwist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 v;
    v << linear, angular;
    return v;
  }
  static LinkTwist FromStacked(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }

  bool operator==(const LinkTwist&) const = default;
};

using LinkJacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

// World-frame quantities of every link and joint for one configuration.
class KinematicsState {
 public:
  KinematicsState(const RigidBodyModel& model, const Configuration& q);

  const LinkPose& link(int index) const { return links_[index]; }
  const std::vector<LinkPose>& links() const { return links_; }
  const Vec3& joint_origin(int joint) const { return joint_origins_[joint]; }
  const Vec3& joint_axis(int joint) const { return joint_axes_[joint]; }
  const Vec3& base_position() const { return base_position_; }

 private:
  std::vector<LinkPose> links_;
  std::vector<Vec3> joint_origins_;
  std::vector<Vec3> joint_axes_;
  Vec3 base_position_;
};

std::vector<LinkPose> forward_kinematics(const RigidBodyModel& model,
                                         const Configuration& q);

LinkJacobian link_jacobian(const RigidBodyModel& model, const Configuration& q,
                           int link);
LinkJacobian link_jacobian(const RigidBodyModel& model,
                           const KinematicsState& state, int link);

LinkTwist differential_kinematics(const RigidBodyModel& model,
                                  const Configuration& q,
                                  const SystemVelocity& nu, int link);
LinkTwist differential_kinematics(const RigidBodyModel& model,
                                  const KinematicsState& state,
                                  const SystemVelocity& nu, int link);

// 6 x n derivative of J_i(q) nu with respect to the joint positions.
Eigen::Matrix<double, 6, Eigen::Dynamic> twist_position_jacobian(
    const RigidBodyModel& model, const KinematicsState& state,
    const SystemVelocity& nu, int link);

// Gradient w.r.t. joint positions of <cot_position, p_i> + <cot_rotation, R_i>,
// the rotation entries treated as 9 independent scalars.
VecX vjp_fk(const RigidBodyModel& model, const Configuration& q, int link,
            const Vec3& cot_position, const Mat3& cot_rotation);
// Accumulates into `grad` (size n) instead of allocating.
void accumulate_vjp_fk(const RigidBodyModel& model, const KinematicsState& state,
                       int link, const Vec3& cot_position,
                       const Mat3& cot_rotation, VecX& grad);

struct DkGradient {
  VecX positions;
  VecX velocities;
};

// Gradients of <cotangent, J_i(q) nu> w.r.t. joint positions and velocities.
DkGradient vjp_dk(const RigidBodyModel& model, const Configuration& q,
                  const SystemVelocity& nu, int link, const Vec6& cotangent);
void accumulate_vjp_dk(const RigidBodyModel& model, const KinematicsState& state,
                       const SystemVelocity& nu, int link, const Vec6& cotangent,
                       VecX& grad_positions, VecX& grad_velocities);

// Squared Frobenius distance of two flattened rotation matrices.
double orientation_distance(std::span<const double, 9> a,
                            std::span<const double, 9> b);
double orientation_distance(const Mat3& a, const Mat3& b);

}  // namespace kinpred

#endif  // KINPRED_KINEMATICS_HPP_
