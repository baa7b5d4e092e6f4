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

#include "kinpred/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kinpred/training.hpp"

namespace kinpred {

JointStateBuffer::JointStateBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
}

void JointStateBuffer::init(const std::vector<JointState>& states) {
  if (static_cast<int>(states.size()) != capacity_) {
    throw std::invalid_argument("buffer init needs " + std::to_string(capacity_) +
                                " states, got " + std::to_string(states.size()));
  }
  const Eigen::Index n = states.front().positions.size();
  if (n == 0) throw std::invalid_argument("buffer init: empty joint state");
  positions_.resize(capacity_, n);
  velocities_.resize(capacity_, n);
  for (int k = 0; k < capacity_; ++k) {
    if (states[k].positions.size() != n || states[k].velocities.size() != n) {
      throw std::invalid_argument("buffer init: joint state sizes differ");
    }
    positions_.row(k) = states[k].positions.transpose();
    velocities_.row(k) = states[k].velocities.transpose();
  }
  joints_ = static_cast<int>(n);
  head_ = 0;
}

void JointStateBuffer::push(const JointState& state) {
  if (!initialized()) throw std::logic_error("push on an uninitialized buffer");
  if (state.positions.size() != joints_ || state.velocities.size() != joints_) {
    throw std::invalid_argument("push: joint state size does not match buffer");
  }
  positions_.row(head_) = state.positions.transpose();
  velocities_.row(head_) = state.velocities.transpose();
  head_ = (head_ + 1) % capacity_;
}

BufferSnapshot JointStateBuffer::snapshot() const {
  if (!initialized()) throw std::logic_error("snapshot of an uninitialized buffer");
  BufferSnapshot out = BufferSnapshot::Zero(capacity_, joints_);
  for (int k = 0; k < capacity_; ++k) {
    const int slot = (head_ + k) % capacity_;
    out.positions.row(k) = positions_.row(slot);
    out.velocities.row(k) = velocities_.row(slot);
  }
  return out;
}

namespace {

void check_problem(const RigidBodyModel& model, const RefinementProblem& p) {
  const int n = model.num_joints();
  if (p.positions.size() != n || p.velocities.size() != n) {
    throw std::invalid_argument("refinement: joint state size does not match model");
  }
  if (p.targets.size() != model.instrumented_links().size()) {
    throw std::invalid_argument("refinement: need one target twist per instrumented link");
  }
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("refinement: epsilon must be positive");
  if (p.max_outer < 1 || p.max_inner < 1) {
    throw std::invalid_argument("refinement: iteration caps must be >= 1");
  }
  bool finite = p.positions.allFinite() && p.velocities.allFinite() &&
                p.base_position.allFinite() && p.base_rotation.allFinite() &&
                p.base_linear.allFinite() && p.base_angular.allFinite();
  for (const auto& t : p.targets) finite = finite && t.linear.allFinite() && t.angular.allFinite();
  if (!finite) throw std::invalid_argument("refinement: non-finite input");
}

// Twist residuals and their Jacobians w.r.t. (s, sdot) at one iterate.
struct Linearization {
  std::vector<Vec6> residuals;
  std::vector<Eigen::Matrix<double, 6, Eigen::Dynamic>> jacobians;
};

Linearization linearize(const RigidBodyModel& model, const RefinementProblem& p, const VecX& s,
                        const VecX& sdot, bool with_jacobians) {
  const int n = model.num_joints();
  const Configuration q{p.base_position, p.base_rotation, s};
  const SystemVelocity nu{p.base_linear, p.base_angular, sdot};
  const KinematicsState state(model, q);
  const auto& links = model.instrumented_links();
  Linearization out;
  for (std::size_t d = 0; d < links.size(); ++d) {
    out.residuals.push_back(differential_kinematics(model, state, nu, links[d]).stacked() -
                            p.targets[d].stacked());
    if (with_jacobians) {
      Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, 2 * n);
      jac.leftCols(n) = twist_position_jacobian(model, state, nu, links[d]);
      jac.rightCols(n) = link_jacobian(model, state, links[d]).rightCols(n);
      out.jacobians.push_back(std::move(jac));
    }
  }
  return out;
}

// Constraints enter the penalty once their squared residual exceeds this
// fraction of epsilon; the margin stops them toggling at the boundary.
constexpr double kActivate = 0.25;

double max_violation(const std::vector<Vec6>& r, double eps) {
  double worst = 0.0;
  for (const auto& v : r) worst = std::max(worst, v.squaredNorm() - eps);
  return worst;
}

}  // namespace

std::vector<double> twist_residuals(const RigidBodyModel& model, const RefinementProblem& problem,
                                    const VecX& positions, const VecX& velocities) {
  const Linearization lin = linearize(model, problem, positions, velocities, false);
  std::vector<double> out;
  for (const auto& r : lin.residuals) out.push_back(r.squaredNorm());
  return out;
}

RefinementResult refine_first_step(const RigidBodyModel& model, const RefinementProblem& p) {
  check_problem(model, p);
  const int n = model.num_joints();
  const double eps = p.epsilon;
  const std::size_t nc = p.targets.size();

  VecX x(2 * n), guess(2 * n);
  guess << p.positions, p.velocities;
  x << clamp_to_limits(model, p.positions), p.velocities;

  auto finish = [&](const VecX& at, bool feasible, int outer, int inner) {
    RefinementResult r;
    r.state.positions = at.head(n);
    r.state.velocities = at.tail(n);
    r.report.feasible = feasible;
    r.report.outer_iterations = outer;
    r.report.inner_iterations = inner;
    r.report.objective = (at - guess).squaredNorm();
    r.report.residuals = twist_residuals(model, p, r.state.positions, r.state.velocities);
    return r;
  };

  Linearization lin = linearize(model, p, x.head(n), x.tail(n), true);
  if (max_violation(lin.residuals, eps) <= 0.0) return finish(x, true, 0, 0);

  std::vector<Vec6> y(nc, Vec6::Zero());
  std::vector<bool> active(nc, false);
  double mu = 1000.0;
  double lambda = 1e-6;
  VecX best = x;
  double best_violation = max_violation(lin.residuals, eps);
  int inner_total = 0;

  // Shifted penalty over the active set; constant across one inner step.
  auto merit = [&](const VecX& at, const std::vector<Vec6>& r) {
    double v = (at - guess).squaredNorm();
    for (std::size_t i = 0; i < nc; ++i) {
      if (active[i]) v += 0.5 * mu * (r[i] + y[i] / mu).squaredNorm();
    }
    return v;
  };
  auto update_active = [&](const std::vector<Vec6>& r) {
    for (std::size_t i = 0; i < nc; ++i) {
      active[i] = r[i].squaredNorm() > kActivate * eps || !y[i].isZero();
    }
  };

  for (int outer = 1; outer <= p.max_outer; ++outer) {
    const double start_violation = max_violation(lin.residuals, eps);
    update_active(lin.residuals);
    for (int inner = 0; inner < p.max_inner; ++inner) {
      ++inner_total;
      const double f0 = merit(x, lin.residuals);
      VecX grad = 2.0 * (x - guess);
      MatX hess = 2.0 * MatX::Identity(2 * n, 2 * n);
      for (std::size_t i = 0; i < nc; ++i) {
        if (!active[i]) continue;
        grad += mu * lin.jacobians[i].transpose() * (lin.residuals[i] + y[i] / mu);
        hess.noalias() += mu * lin.jacobians[i].transpose() * lin.jacobians[i];
      }
      hess.diagonal().array() += lambda * hess.diagonal().array().maxCoeff();
      const VecX step = hess.ldlt().solve(-grad);
      VecX trial = x + step;
      trial.head(n) = clamp_to_limits(model, trial.head(n));
      Linearization trial_lin = linearize(model, p, trial.head(n), trial.tail(n), true);
      const double f1 = merit(trial, trial_lin.residuals);
      if (!(f1 < f0)) {
        lambda = std::min(lambda * 10.0, 1e6);
        if (step.norm() < 1e-14) break;
        continue;
      }
      lambda = std::max(lambda / 3.0, 1e-9);
      x = std::move(trial);
      lin = std::move(trial_lin);
      const double violation = max_violation(lin.residuals, eps);
      if (violation < best_violation) {
        best_violation = violation;
        best = x;
      }
      if (violation <= 0.0) return finish(x, true, outer, inner_total);
      update_active(lin.residuals);
      if (f0 - f1 < 1e-8 * (1.0 + f0)) break;
    }
    // Multiplier update; constraints that are satisfied release theirs.
    for (std::size_t i = 0; i < nc; ++i) {
      if (lin.residuals[i].squaredNorm() > kActivate * eps) {
        y[i] += mu * lin.residuals[i];
      } else {
        y[i].setZero();
      }
    }
    if (max_violation(lin.residuals, eps) > 0.25 * start_violation) mu = std::min(mu * 10.0, 1e10);
  }
  return finish(best, false, p.max_outer, inner_total);
}

InferenceRuntime::InferenceRuntime(const RigidBodyModel& model, const PredictorParams& params,
                                   RuntimeOptions options)
    : model_(&model), params_(&params), options_(options), buffer_(params.arch.history - 1) {
  params.arch.check_compatible(model);
}

StepOutput InferenceRuntime::step(const StepInput& input) {
  StepOutput out;
  auto [prediction, cache] = forward(*params_, input.window, buffer_.snapshot());
  out.prediction = std::move(prediction);
  RefinementProblem problem;
  problem.positions = out.prediction.positions.row(0).transpose();
  problem.velocities = out.prediction.velocities.row(0).transpose();
  problem.base_position = input.base_position;
  problem.base_rotation = input.base_rotation;
  problem.base_linear = input.base_linear;
  problem.base_angular = input.base_angular;
  problem.targets = input.link_twists;
  problem.max_outer = options_.max_outer;
  problem.max_inner = options_.max_inner;
  JointState refined;
  if (options_.refine) {
    problem.epsilon = options_.epsilon;
    RefinementResult r = refine_first_step(*model_, problem);
    refined = std::move(r.state);
    out.report = std::move(r.report);
  } else {
    refined.positions = clamp_to_limits(*model_, problem.positions);
    refined.velocities = problem.velocities;
    out.report.feasible = false;
    out.report.objective = (refined.positions - problem.positions).squaredNorm();
  }
  out.prediction.positions.row(0) = refined.positions.transpose();
  out.prediction.velocities.row(0) = refined.velocities.transpose();
  buffer_.push(refined);
  return out;
}

StepInput step_input(const RecordedSequence& seq, int m, int history) {
  StepInput in;
  in.window = input_window(seq, m, history);
  const Frame& f = seq.frames[m];
  in.base_position = f.q.base_position;
  in.base_rotation = f.q.base_rotation;
  in.base_linear = f.nu.base_linear;
  in.base_angular = f.nu.base_angular;
  in.link_twists = f.link_twists;
  return in;
}

ClosedLoopResult run_closed_loop(const RigidBodyModel& model, const PredictorParams& params,
                                 const RecordedSequence& seq, const RuntimeOptions& options) {
  const int history = params.arch.history;
  if (seq.size() < history) {
    throw std::invalid_argument("closed loop needs at least " + std::to_string(history) +
                                " frames");
  }
  InferenceRuntime runtime(model, params, options);
  std::vector<JointState> seed;
  for (int k = 0; k < history - 1; ++k) {
    seed.push_back({seq.frames[k].q.joint_positions, seq.frames[k].nu.joint_velocities});
  }
  runtime.init_buffer(seed);
  ClosedLoopResult out;
  for (int m = history - 1; m < seq.size(); ++m) {
    const StepInput in = step_input(seq, m, history);
    const auto t0 = std::chrono::steady_clock::now();
    StepOutput o = runtime.step(in);
    const auto t1 = std::chrono::steady_clock::now();
    out.steps.push_back(m);
    out.predictions.push_back(std::move(o.prediction));
    out.reports.push_back(std::move(o.report));
    out.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return out;
}

std::vector<EvalSample> closed_loop_samples(const RigidBodyModel& model,
                                            const RecordedSequence& seq,
                                            const ClosedLoopResult& run) {
  std::vector<EvalSample> out;
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    const int m = run.steps[k];
    const int horizon = run.predictions[k].steps();
    if (m + horizon > seq.size()) continue;
    out.push_back({run.predictions[k], target_window(seq, m, horizon),
                   reference_window(model, seq, m, horizon)});
  }
  return out;
}

}  // namespace kinpred
