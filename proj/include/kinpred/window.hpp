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

// Tensors exchanged between the data pipeline, the network and the runtime.
//
// Flattened joint-state tensors use the layout [step][channel][joint] with
// channel 0 = position and 1 = velocity: index = step*2n + channel*n + joint.

#ifndef KINPRED_WINDOW_HPP_
#define KINPRED_WINDOW_HPP_

#include "kinpred/so3.hpp"

namespace kinpred {

inline constexpr int kHistory = 10;   // M
inline constexpr int kImus = 5;       // N
inline constexpr int kFeatures = 12;  // F: 3 acceleration + 9 rotation
inline constexpr int kHorizon = 60;   // K

// M x N x F inertial readings, oldest step first.
struct InputWindow {
  int history = kHistory;
  int imus = kImus;
  int features = kFeatures;
  VecX data;

  static InputWindow Zero(int history = kHistory, int imus = kImus,
                          int features = kFeatures) {
    return {history, imus, features, VecX::Zero(history * imus * features)};
  }
  double& at(int step, int imu, int feature) {
    return data[(step * imus + imu) * features + feature];
  }
  double at(int step, int imu, int feature) const {
    return data[(step * imus + imu) * features + feature];
  }
};

// Sequence of joint states, one row per step. Used for the (M-1)-long buffer
// snapshot (oldest first) and for the K-step prediction window.
struct JointTrajectory {
  MatX positions;
  MatX velocities;

  static JointTrajectory Zero(int steps, int joints) {
    return {MatX::Zero(steps, joints), MatX::Zero(steps, joints)};
  }
  int steps() const { return static_cast<int>(positions.rows()); }
  int joints() const { return static_cast<int>(positions.cols()); }

  VecX flatten() const;
  static JointTrajectory Unflatten(const Eigen::Ref<const VecX>& flat, int steps,
                                   int joints);

  bool operator==(const JointTrajectory& o) const {
    return positions == o.positions && velocities == o.velocities;
  }
};

using BufferSnapshot = JointTrajectory;
using PredictionWindow = JointTrajectory;

inline VecX JointTrajectory::flatten() const {
  const int n = joints();
  VecX out(steps() * 2 * n);
  for (int t = 0; t < steps(); ++t) {
    out.segment(t * 2 * n, n) = positions.row(t).transpose();
    out.segment(t * 2 * n + n, n) = velocities.row(t).transpose();
  }
  return out;
}

inline JointTrajectory JointTrajectory::Unflatten(const Eigen::Ref<const VecX>& flat,
                                                  int steps, int joints) {
  JointTrajectory out = Zero(steps, joints);
  for (int t = 0; t < steps; ++t) {
    out.positions.row(t) = flat.segment(t * 2 * joints, joints).transpose();
    out.velocities.row(t) = flat.segment(t * 2 * joints + joints, joints).transpose();
  }
  return out;
}

}  // namespace kinpred

#endif  // KINPRED_WINDOW_HPP_
