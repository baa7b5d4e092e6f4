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

#include "kinpred/kinematics.hpp"

#include <stdexcept>

namespace kinpred {
namespace {

void check_configuration(const RigidBodyModel& model, const Configuration& q) {
  if (q.joint_positions.size() != model.num_joints()) {
    throw std::invalid_argument("configuration has " +
                                std::to_string(q.joint_positions.size()) +
                                " joint positions, model has " +
                                std::to_string(model.num_joints()));
  }
}

void check_velocity(const RigidBodyModel& model, const SystemVelocity& nu) {
  if (nu.joint_velocities.size() != model.num_joints()) {
    throw std::invalid_argument("velocity has " +
                                std::to_string(nu.joint_velocities.size()) +
                                " joint velocities, model has " +
                                std::to_string(model.num_joints()));
  }
}

void check_link(const RigidBodyModel& model, int link) {
  if (link < 0 || link >= model.num_links()) {
    throw std::out_of_range("link index " + std::to_string(link) + " out of range");
  }
}

}  // namespace

KinematicsState::KinematicsState(const RigidBodyModel& model, const Configuration& q)
    : links_(model.num_links()),
      joint_origins_(model.num_joints()),
      joint_axes_(model.num_joints()),
      base_position_(q.base_position) {
  check_configuration(model, q);
  links_[model.base_link()] = {q.base_position, q.base_rotation};
  for (int j : model.traversal_order()) {
    const JointSpec& spec = model.joint(j);
    const LinkPose& parent = links_[spec.parent];
    const Mat3 frame = parent.rotation * spec.origin.rotation;
    joint_origins_[j] = parent.position + parent.rotation * spec.origin.position;
    joint_axes_[j] = frame * spec.axis;
    links_[spec.child] = {joint_origins_[j],
                          frame * axis_angle(spec.axis, q.joint_positions[j])};
  }
}

std::vector<LinkPose> forward_kinematics(const RigidBodyModel& model,
                                         const Configuration& q) {
  return KinematicsState(model, q).links();
}

LinkJacobian link_jacobian(const RigidBodyModel& model, const Configuration& q,
                           int link) {
  check_link(model, link);
  return link_jacobian(model, KinematicsState(model, q), link);
}

LinkJacobian link_jacobian(const RigidBodyModel& model,
                           const KinematicsState& state, int link) {
  check_link(model, link);
  LinkJacobian jac = LinkJacobian::Zero(6, 6 + model.num_joints());
  const Vec3& p = state.link(link).position;
  jac.block<3, 3>(0, 0).setIdentity();
  jac.block<3, 3>(0, 3) = -skew(p - state.base_position());
  jac.block<3, 3>(3, 3).setIdentity();
  for (int j : model.chain(link)) {
    const Vec3& a = state.joint_axis(j);
    jac.block<3, 1>(0, 6 + j) = a.cross(p - state.joint_origin(j));
    jac.block<3, 1>(3, 6 + j) = a;
  }
  return jac;
}

LinkTwist differential_kinematics(const RigidBodyModel& model,
                                  const Configuration& q,
                                  const SystemVelocity& nu, int link) {
  check_link(model, link);
  return differential_kinematics(model, KinematicsState(model, q), nu, link);
}

LinkTwist differential_kinematics(const RigidBodyModel& model,
                                  const KinematicsState& state,
                                  const SystemVelocity& nu, int link) {
  check_link(model, link);
  check_velocity(model, nu);
  const Vec3& p = state.link(link).position;
  LinkTwist twist;
  twist.linear = nu.base_linear + nu.base_angular.cross(p - state.base_position());
  twist.angular = nu.base_angular;
  for (int j : model.chain(link)) {
    const double rate = nu.joint_velocities[j];
    const Vec3& a = state.joint_axis(j);
    twist.linear += rate * a.cross(p - state.joint_origin(j));
    twist.angular += rate * a;
  }
  return twist;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> twist_position_jacobian(
    const RigidBodyModel& model, const KinematicsState& state,
    const SystemVelocity& nu, int link) {
  check_link(model, link);
  check_velocity(model, nu);
  Eigen::Matrix<double, 6, Eigen::Dynamic> out =
      Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, model.num_joints());
  const auto& chain = model.chain(link);
  const int length = static_cast<int>(chain.size());
  const Vec3& p = state.link(link).position;

  std::vector<Vec3> u(length);
  for (int c = 0; c < length; ++c) {
    u[c] = state.joint_axis(chain[c]).cross(p - state.joint_origin(chain[c]));
  }
  // Suffix sums over strict descendants along the chain.
  Vec3 lin_after = Vec3::Zero();
  Vec3 ang_after = Vec3::Zero();
  std::vector<Vec3> lin_suffix(length), ang_suffix(length);
  for (int c = length - 1; c >= 0; --c) {
    lin_suffix[c] = lin_after;
    ang_suffix[c] = ang_after;
    const double rate = nu.joint_velocities[chain[c]];
    lin_after += rate * u[c];
    ang_after += rate * state.joint_axis(chain[c]);
  }
  Vec3 omega = nu.base_angular;
  for (int c = 0; c < length; ++c) {
    const int j = chain[c];
    const Vec3& a = state.joint_axis(j);
    omega += nu.joint_velocities[j] * a;
    out.block<3, 1>(0, j) = omega.cross(u[c]) + a.cross(lin_suffix[c]);
    out.block<3, 1>(3, j) = a.cross(ang_suffix[c]);
  }
  return out;
}

void accumulate_vjp_fk(const RigidBodyModel& model, const KinematicsState& state,
                       int link, const Vec3& cot_position,
                       const Mat3& cot_rotation, VecX& grad) {
  check_link(model, link);
  const LinkPose& pose = state.link(link);
  // <C, skew(a) R> = a . axial(C R^T)
  const Mat3 m = cot_rotation * pose.rotation.transpose();
  const Vec3 axial(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  for (int j : model.chain(link)) {
    const Vec3& a = state.joint_axis(j);
    grad[j] += cot_position.dot(a.cross(pose.position - state.joint_origin(j))) + a.dot(axial);
  }
}

VecX vjp_fk(const RigidBodyModel& model, const Configuration& q, int link,
            const Vec3& cot_position, const Mat3& cot_rotation) {
  check_link(model, link);
  VecX grad = VecX::Zero(model.num_joints());
  accumulate_vjp_fk(model, KinematicsState(model, q), link, cot_position, cot_rotation,
                    grad);
  return grad;
}

void accumulate_vjp_dk(const RigidBodyModel& model, const KinematicsState& state,
                       const SystemVelocity& nu, int link, const Vec6& cotangent,
                       VecX& grad_positions, VecX& grad_velocities) {
  check_link(model, link);
  check_velocity(model, nu);
  const auto& chain = model.chain(link);
  const int length = static_cast<int>(chain.size());
  const Vec3& p = state.link(link).position;
  const Vec3 c_lin = cotangent.head<3>();
  const Vec3 c_ang = cotangent.tail<3>();

  // Same recurrences as twist_position_jacobian, contracted with the cotangent.
  std::vector<Vec3> u(length);
  for (int c = 0; c < length; ++c) {
    const int j = chain[c];
    const Vec3& a = state.joint_axis(j);
    u[c] = a.cross(p - state.joint_origin(j));
    grad_velocities[j] += c_lin.dot(u[c]) + c_ang.dot(a);
  }
  Vec3 lin_after = Vec3::Zero();
  Vec3 ang_after = Vec3::Zero();
  std::vector<Vec3> lin_suffix(length), ang_suffix(length);
  for (int c = length - 1; c >= 0; --c) {
    lin_suffix[c] = lin_after;
    ang_suffix[c] = ang_after;
    const double rate = nu.joint_velocities[chain[c]];
    lin_after += rate * u[c];
    ang_after += rate * state.joint_axis(chain[c]);
  }
  Vec3 omega = nu.base_angular;
  for (int c = 0; c < length; ++c) {
    const int j = chain[c];
    const Vec3& a = state.joint_axis(j);
    omega += nu.joint_velocities[j] * a;
    grad_positions[j] += c_lin.dot(omega.cross(u[c]) + a.cross(lin_suffix[c])) +
                         c_ang.dot(a.cross(ang_suffix[c]));
  }
}

DkGradient vjp_dk(const RigidBodyModel& model, const Configuration& q,
                  const SystemVelocity& nu, int link, const Vec6& cotangent) {
  check_link(model, link);
  DkGradient out{VecX::Zero(model.num_joints()), VecX::Zero(model.num_joints())};
  accumulate_vjp_dk(model, KinematicsState(model, q), nu, link, cotangent, out.positions,
                    out.velocities);
  return out;
}

double orientation_distance(std::span<const double, 9> a, std::span<const double, 9> b) {
  double sum = 0.0;
  for (int k = 0; k < 9; ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return sum;
}

double orientation_distance(const Mat3& a, const Mat3& b) {
  return (a - b).squaredNorm();
}

}  // namespace kinpred
