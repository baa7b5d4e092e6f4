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

// Closed-loop inference: joint state buffer, first-step refinement and the
// per-step driver.

#ifndef KINPRED_RUNTIME_HPP_
#define KINPRED_RUNTIME_HPP_

#include <utility>
#include <vector>

#include "kinpred/metrics.hpp"
#include "kinpred/motion.hpp"
#include "kinpred/network.hpp"

namespace kinpred {

struct JointState {
  VecX positions;
  VecX velocities;
};

// Fixed-capacity FIFO. Empty until init(); afterwards always full.
class JointStateBuffer {
 public:
  explicit JointStateBuffer(int capacity = kHistory - 1);

  // Throws std::invalid_argument unless exactly capacity() equally sized states.
  void init(const std::vector<JointState>& states);
  // Evicts the oldest entry. Throws std::logic_error before init() and
  // std::invalid_argument on a dimension change.
  void push(const JointState& state);

  bool initialized() const { return joints_ > 0; }
  int capacity() const { return capacity_; }
  int joints() const { return joints_; }
  // Oldest first.
  BufferSnapshot snapshot() const;

 private:
  int capacity_;
  int joints_ = 0;
  int head_ = 0;  // slot of the oldest entry
  MatX positions_;
  MatX velocities_;
};

struct RefinementProblem {
  VecX positions;   // network guess s~
  VecX velocities;  // network guess sdot~
  Vec3 base_position = Vec3::Zero();
  Mat3 base_rotation = Mat3::Identity();
  Vec3 base_linear = Vec3::Zero();
  Vec3 base_angular = Vec3::Zero();
  std::vector<LinkTwist> targets;  // one per instrumented link
  double epsilon = 1e-4;           // bound on each squared twist residual
  int max_outer = 10;
  int max_inner = 20;
};

struct RefinementReport {
  bool feasible = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double objective = 0.0;          // |s* - s~|^2 + |sdot* - sdot~|^2
  std::vector<double> residuals;   // squared, per instrumented link
};

struct RefinementResult {
  JointState state;
  RefinementReport report;
};

// Squared twist residual per instrumented link at (s, sdot).
std::vector<double> twist_residuals(const RigidBodyModel& model, const RefinementProblem& problem,
                                    const VecX& positions, const VecX& velocities);

// Augmented Lagrangian over damped Gauss-Newton with joint positions clamped
// to limits at every iterate. A guess that is within limits and feasible is
// returned unchanged. On hitting the caps the least-violating iterate is
// returned with report.feasible = false. Throws std::invalid_argument on
// non-finite inputs or mismatched sizes.
RefinementResult refine_first_step(const RigidBodyModel& model, const RefinementProblem& problem);

struct RuntimeOptions {
  bool refine = true;
  double epsilon = 1e-4;
  int max_outer = 10;
  int max_inner = 20;
};

// Ground-truth channels for one timestep.
struct StepInput {
  InputWindow window;
  Vec3 base_position = Vec3::Zero();
  Mat3 base_rotation = Mat3::Identity();
  Vec3 base_linear = Vec3::Zero();
  Vec3 base_angular = Vec3::Zero();
  std::vector<LinkTwist> link_twists;
};

struct StepOutput {
  PredictionWindow prediction;  // index 0 holds the refined state
  RefinementReport report;
};

class InferenceRuntime {
 public:
  // Throws std::invalid_argument if params do not fit the model.
  InferenceRuntime(const RigidBodyModel& model, const PredictorParams& params,
                   RuntimeOptions options = {});

  void init_buffer(const std::vector<JointState>& states) { buffer_.init(states); }
  const JointStateBuffer& buffer() const { return buffer_; }

  // Forward pass, refinement of index 0, push of the refined state.
  // With refine off, index 0 is only clamped to joint limits.
  StepOutput step(const StepInput& input);

 private:
  const RigidBodyModel* model_;
  const PredictorParams* params_;
  RuntimeOptions options_;
  JointStateBuffer buffer_;
};

StepInput step_input(const RecordedSequence& seq, int m, int history);

struct ClosedLoopResult {
  std::vector<int> steps;  // window end step m of each record
  std::vector<PredictionWindow> predictions;
  std::vector<RefinementReport> reports;
  std::vector<double> step_seconds;
};

// Buffer seeded with ground truth at steps 0..M-2, then one step per frame
// m = M-1 .. L-1.
ClosedLoopResult run_closed_loop(const RigidBodyModel& model, const PredictorParams& params,
                                 const RecordedSequence& seq, const RuntimeOptions& options = {});

// Pairs closed-loop predictions whose full horizon lies inside the sequence
// with ground truth, for compute_metrics.
std::vector<EvalSample> closed_loop_samples(const RigidBodyModel& model,
                                            const RecordedSequence& seq,
                                            const ClosedLoopResult& run);

}  // namespace kinpred

#endif  // KINPRED_RUNTIME_HPP_
