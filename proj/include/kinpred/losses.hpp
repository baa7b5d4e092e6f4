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

// Training losses over one K-step prediction window.
//
//   L_pos = 1/(2K) sum_t |s~_t - s_t|^2
//   L_vel = 1/(2K) sum_t |sdot~_t - sdot_t|^2
//   L_FK  = 1/(DK) sum_i sum_t |p_i(q~_t) - p_i,t|^2 + |R_i(q~_t) - R_i,t|_F^2
//   L_DK  = 1/(DK) sum_i sum_t |J_i(q~_t) nu~_t - v_i,t|^2
//
// q~_t and nu~_t combine the predicted joint states with the reference base
// pose and twist. Every loss returns its gradient w.r.t. the predicted joint
// states.

#ifndef KINPRED_LOSSES_HPP_
#define KINPRED_LOSSES_HPP_

#include <optional>
#include <vector>

#include "kinpred/kinematics.hpp"
#include "kinpred/window.hpp"

namespace kinpred {

struct LossWeights {
  double position = 1.0;
  double velocity = 1.0;
  double fk = 0.1;
  double dk = 0.1;

  // Throws std::invalid_argument on a negative or non-finite weight.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

// Base state and instrumented-link references over a window of K steps.
struct LinkReferenceWindow {
  std::vector<int> links;  // D instrumented link indices
  std::vector<Vec3> base_position;
  std::vector<Mat3> base_rotation;
  std::vector<Vec3> base_linear;
  std::vector<Vec3> base_angular;
  std::vector<std::vector<LinkPose>> poses;    // [t][d]
  std::vector<std::vector<LinkTwist>> twists;  // [t][d]

  int steps() const { return static_cast<int>(base_position.size()); }

  Configuration configuration(int t, const VecX& joint_positions) const {
    return {base_position[t], base_rotation[t], joint_positions};
  }
  SystemVelocity velocity(int t, const VecX& joint_velocities) const {
    return {base_linear[t], base_angular[t], joint_velocities};
  }
};

struct DataLoss {
  double position = 0.0;
  double velocity = 0.0;
  MatX grad_positions;  // K x n, of `position`
  MatX grad_velocities;  // K x n, of `velocity`

  double value() const { return position + velocity; }
};

struct FkLoss {
  double value = 0.0;
  MatX grad_positions;
};

struct DkLoss {
  double value = 0.0;
  MatX grad_positions;
  MatX grad_velocities;
};

DataLoss data_loss(const PredictionWindow& prediction, const PredictionWindow& target);

// Throws std::invalid_argument when refs do not cover exactly the model's
// instrumented links or lengths disagree.
FkLoss fk_loss(const RigidBodyModel& model, const MatX& predicted_positions,
               const LinkReferenceWindow& refs);

DkLoss dk_loss(const RigidBodyModel& model, const PredictionWindow& prediction,
               const LinkReferenceWindow& refs);

struct LossComponents {
  DataLoss data;
  // Absent terms count as zero; they must be present when their weight is > 0.
  std::optional<FkLoss> fk;
  std::optional<DkLoss> dk;
};

struct TotalLoss {
  double value = 0.0;
  PredictionWindow gradient;
};

TotalLoss total_loss(const LossWeights& weights, const LossComponents& components);

// Evaluates only the terms with a positive weight unless `all_terms` is set.
LossComponents evaluate_losses(const RigidBodyModel& model, const LossWeights& weights,
                               const PredictionWindow& prediction,
                               const PredictionWindow& target,
                               const LinkReferenceWindow& refs, bool all_terms);

}  // namespace kinpred

#endif  // KINPRED_LOSSES_HPP_
