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

// Synthetic whole-body motion and simulated IMUs.

#ifndef KINPRED_MOTION_HPP_
#define KINPRED_MOTION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kinpred/kinematics.hpp"

namespace kinpred {

enum class MotionKind {
  kForwardWalk,
  kBackwardWalk,
  kSideStep,
  kWalkLiftArms,
  kWalkWaveArms,
  kStand,
};

std::string_view to_string(MotionKind kind);
std::optional<MotionKind> parse_motion_kind(std::string_view name);
const std::vector<MotionKind>& all_motion_kinds();

// Accelerometer (sensor frame) and sensor-to-inertial orientation.
struct ImuReading {
  Vec3 acceleration = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();

  bool operator==(const ImuReading&) const = default;
};

// One timestep. Per-link vectors follow model.instrumented_links().
struct Frame {
  Configuration q;
  SystemVelocity nu;
  std::vector<LinkPose> link_poses;
  std::vector<LinkTwist> link_twists;
  std::vector<ImuReading> imus;
};

struct RecordedSequence {
  double rate = 60.0;
  std::uint64_t model_hash = 0;
  std::vector<Frame> frames;

  int size() const { return static_cast<int>(frames.size()); }
  double dt() const { return 1.0 / rate; }
};

bool operator==(const Frame& a, const Frame& b);
bool operator==(const RecordedSequence& a, const RecordedSequence& b);

// Builds a sequence from configurations and velocities, filling the
// instrumented-link poses and twists. IMU readings are left at identity/zero.
RecordedSequence make_sequence(const RigidBodyModel& model, double rate,
                               std::vector<Configuration> configurations,
                               std::vector<SystemVelocity> velocities);

// Phase-locked sinusoidal gait primitives with stand/walk phases joined by
// C2 smootherstep ramps. Joint velocities and the base twist are analytic
// derivatives of the stored trajectories. Joints are addressed by the names
// used in data/humanoid20.model; joints the model lacks are left at rest.
// Throws std::invalid_argument if duration * rate < min_frames.
RecordedSequence generate_motion(const RigidBodyModel& model, MotionKind kind,
                                 double duration, double rate, std::uint64_t seed,
                                 int min_frames = 70);

struct ImuOptions {
  bool include_gravity = true;
  double accel_noise = 0.0;        // m/s^2, per axis
  double orientation_noise = 0.0;  // rad, per axis of a random small rotation
  std::uint64_t seed = 0;
};

inline constexpr double kGravity = 9.81;

// Orientation = instrumented-link rotation. Acceleration = R^T (a + g) with
// g = (0, 0, 9.81) (or R^T a when gravity is excluded), a from second-order
// central differences of the link origin; the end frames reuse their
// neighbor's stencil. Throws std::invalid_argument for fewer than 3 frames.
RecordedSequence simulate_imus(const RigidBodyModel& model, RecordedSequence sequence,
                               const ImuOptions& options = {});

}  // namespace kinpred

#endif  // KINPRED_MOTION_HPP_
