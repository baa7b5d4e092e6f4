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

#include "kinpred/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace kinpred {

void LossWeights::validate() const {
  for (double w : {position, velocity, fk, dk}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("loss weights must be finite and non-negative");
    }
  }
}

DataLoss data_loss(const PredictionWindow& prediction, const PredictionWindow& target) {
  if (prediction.steps() != target.steps() || prediction.joints() != target.joints()) {
    throw std::invalid_argument("data_loss: prediction and target shapes differ");
  }
  const double k = prediction.steps();
  DataLoss out;
  const MatX dp = prediction.positions - target.positions;
  const MatX dv = prediction.velocities - target.velocities;
  out.position = dp.squaredNorm() / (2.0 * k);
  out.velocity = dv.squaredNorm() / (2.0 * k);
  out.grad_positions = dp / k;
  out.grad_velocities = dv / k;
  return out;
}

namespace {

void check_refs(const RigidBodyModel& model, const LinkReferenceWindow& refs, int steps,
                int joints) {
  if (refs.links != model.instrumented_links()) {
    throw std::invalid_argument("references must cover exactly the instrumented links");
  }
  if (joints != model.num_joints()) {
    throw std::invalid_argument("prediction joint count does not match model");
  }
  const std::size_t k = static_cast<std::size_t>(steps);
  if (refs.base_position.size() != k || refs.base_rotation.size() != k ||
      refs.base_linear.size() != k || refs.base_angular.size() != k ||
      refs.poses.size() != k || refs.twists.size() != k) {
    throw std::invalid_argument("reference window length does not match prediction");
  }
  for (std::size_t t = 0; t < k; ++t) {
    if (refs.poses[t].size() != refs.links.size() || refs.twists[t].size() != refs.links.size()) {
      throw std::invalid_argument("reference window is missing link entries");
    }
  }
}

}  // namespace

FkLoss fk_loss(const RigidBodyModel& model, const MatX& predicted_positions,
               const LinkReferenceWindow& refs) {
  const int steps = static_cast<int>(predicted_positions.rows());
  check_refs(model, refs, steps, static_cast<int>(predicted_positions.cols()));
  const int links = static_cast<int>(refs.links.size());
  const double scale = 1.0 / (static_cast<double>(links) * steps);
  FkLoss out;
  out.grad_positions = MatX::Zero(steps, model.num_joints());
  VecX grad(model.num_joints());
  for (int t = 0; t < steps; ++t) {
    const KinematicsState state(model,
                                refs.configuration(t, predicted_positions.row(t).transpose()));
    grad.setZero();
    for (int d = 0; d < links; ++d) {
      const LinkPose& pose = state.link(refs.links[d]);
      const LinkPose& ref = refs.poses[t][d];
      const Vec3 dp = pose.position - ref.position;
      const Mat3 dr = pose.rotation - ref.rotation;
      out.value += scale * (dp.squaredNorm() + orientation_distance(pose.rotation, ref.rotation));
      accumulate_vjp_fk(model, state, refs.links[d], 2.0 * scale * dp, 2.0 * scale * dr, grad);
    }
    out.grad_positions.row(t) = grad.transpose();
  }
  return out;
}

DkLoss dk_loss(const RigidBodyModel& model, const PredictionWindow& prediction,
               const LinkReferenceWindow& refs) {
  const int steps = prediction.steps();
  check_refs(model, refs, steps, prediction.joints());
  const int links = static_cast<int>(refs.links.size());
  const double scale = 1.0 / (static_cast<double>(links) * steps);
  DkLoss out;
  out.grad_positions = MatX::Zero(steps, model.num_joints());
  out.grad_velocities = MatX::Zero(steps, model.num_joints());
  VecX grad_s(model.num_joints()), grad_sdot(model.num_joints());
  for (int t = 0; t < steps; ++t) {
    const KinematicsState state(model,
                                refs.configuration(t, prediction.positions.row(t).transpose()));
    const SystemVelocity nu = refs.velocity(t, prediction.velocities.row(t).transpose());
    grad_s.setZero();
    grad_sdot.setZero();
    for (int d = 0; d < links; ++d) {
      const Vec6 residual = differential_kinematics(model, state, nu, refs.links[d]).stacked() -
                            refs.twists[t][d].stacked();
      out.value += scale * residual.squaredNorm();
      accumulate_vjp_dk(model, state, nu, refs.links[d], 2.0 * scale * residual, grad_s,
                        grad_sdot);
    }
    out.grad_positions.row(t) = grad_s.transpose();
    out.grad_velocities.row(t) = grad_sdot.transpose();
  }
  return out;
}

TotalLoss total_loss(const LossWeights& weights, const LossComponents& components) {
  weights.validate();
  const DataLoss& data = components.data;
  TotalLoss out;
  out.value = weights.position * data.position + weights.velocity * data.velocity;
  out.gradient.positions = weights.position * data.grad_positions;
  out.gradient.velocities = weights.velocity * data.grad_velocities;
  if (weights.fk > 0.0) {
    if (!components.fk) throw std::invalid_argument("total_loss: FK term missing");
    if (components.fk->grad_positions.rows() != data.grad_positions.rows()) {
      throw std::invalid_argument("total_loss: FK gradient shape mismatch");
    }
    out.value += weights.fk * components.fk->value;
    out.gradient.positions += weights.fk * components.fk->grad_positions;
  }
  if (weights.dk > 0.0) {
    if (!components.dk) throw std::invalid_argument("total_loss: DK term missing");
    if (components.dk->grad_positions.rows() != data.grad_positions.rows()) {
      throw std::invalid_argument("total_loss: DK gradient shape mismatch");
    }
    out.value += weights.dk * components.dk->value;
    out.gradient.positions += weights.dk * components.dk->grad_positions;
    out.gradient.velocities += weights.dk * components.dk->grad_velocities;
  }
  return out;
}

LossComponents evaluate_losses(const RigidBodyModel& model, const LossWeights& weights,
                               const PredictionWindow& prediction,
                               const PredictionWindow& target,
                               const LinkReferenceWindow& refs, bool all_terms) {
  LossComponents c;
  c.data = data_loss(prediction, target);
  if (all_terms || weights.fk > 0.0) c.fk = fk_loss(model, prediction.positions, refs);
  if (all_terms || weights.dk > 0.0) c.dk = dk_loss(model, prediction, refs);
  return c;
}

}  // namespace kinpred
