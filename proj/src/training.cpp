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

#include "kinpred/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "kinpred/detail/fnv1a.hpp"

namespace kinpred {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (lr_step_epochs < 1) fail("lr_step_epochs must be >= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) fail("lr0 must be positive");
  if (!(lr_gamma > 0.0 && lr_gamma <= 1.0)) fail("lr_gamma must be in (0, 1]");
  if (history < 2 || horizon < 1) fail("history must be >= 2 and horizon >= 1");
  if (stride < 1) fail("stride must be >= 1");
  weights.validate();
}

std::uint64_t TrainConfig::hash() const {
  const nlohmann::json j = {{"epochs", epochs},
                            {"batch_size", batch_size},
                            {"lr0", lr0},
                            {"lr_step_epochs", lr_step_epochs},
                            {"lr_gamma", lr_gamma},
                            {"weights", {weights.position, weights.velocity, weights.fk, weights.dk}},
                            {"seed", seed},
                            {"history", history},
                            {"horizon", horizon},
                            {"stride", stride}};
  return detail::fnv1a(j.dump());
}

double lr_at_epoch(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
  return config.lr0 * std::pow(config.lr_gamma, epoch / config.lr_step_epochs);
}

InputWindow input_window(const RecordedSequence& seq, int m, int history) {
  if (m - history + 1 < 0 || m >= seq.size()) {
    throw std::out_of_range("input_window: step " + std::to_string(m) + " out of range");
  }
  const int imus = static_cast<int>(seq.frames[m].imus.size());
  InputWindow w = InputWindow::Zero(history, imus, kFeatures);
  for (int k = 0; k < history; ++k) {
    const Frame& f = seq.frames[m - history + 1 + k];
    for (int i = 0; i < imus; ++i) {
      const ImuReading& r = f.imus[i];
      for (int a = 0; a < 3; ++a) w.at(k, i, a) = r.acceleration[a];
      const FlatRotation flat = flatten(r.orientation);
      for (int e = 0; e < 9; ++e) w.at(k, i, 3 + e) = flat[e];
    }
  }
  return w;
}

BufferSnapshot buffer_snapshot(const RecordedSequence& seq, int m, int history) {
  if (m - history + 1 < 0 || m > seq.size()) {
    throw std::out_of_range("buffer_snapshot: step " + std::to_string(m) + " out of range");
  }
  const int n = static_cast<int>(seq.frames[m - history + 1].q.joint_positions.size());
  BufferSnapshot b = BufferSnapshot::Zero(history - 1, n);
  for (int k = 0; k < history - 1; ++k) {
    const Frame& f = seq.frames[m - history + 1 + k];
    b.positions.row(k) = f.q.joint_positions.transpose();
    b.velocities.row(k) = f.nu.joint_velocities.transpose();
  }
  return b;
}

PredictionWindow target_window(const RecordedSequence& seq, int m, int horizon) {
  if (m < 0 || m + horizon > seq.size()) {
    throw std::out_of_range("target_window: steps " + std::to_string(m) + "+" +
                            std::to_string(horizon) + " exceed the sequence");
  }
  const int n = static_cast<int>(seq.frames[m].q.joint_positions.size());
  PredictionWindow t = PredictionWindow::Zero(horizon, n);
  for (int k = 0; k < horizon; ++k) {
    t.positions.row(k) = seq.frames[m + k].q.joint_positions.transpose();
    t.velocities.row(k) = seq.frames[m + k].nu.joint_velocities.transpose();
  }
  return t;
}

LinkReferenceWindow reference_window(const RigidBodyModel& model, const RecordedSequence& seq,
                                     int m, int horizon) {
  if (m < 0 || m + horizon > seq.size()) {
    throw std::out_of_range("reference_window: steps exceed the sequence");
  }
  LinkReferenceWindow r;
  r.links = model.instrumented_links();
  for (int k = 0; k < horizon; ++k) {
    const Frame& f = seq.frames[m + k];
    if (f.link_poses.size() != r.links.size() || f.link_twists.size() != r.links.size()) {
      throw std::invalid_argument("reference_window: frame does not match model links");
    }
    r.base_position.push_back(f.q.base_position);
    r.base_rotation.push_back(f.q.base_rotation);
    r.base_linear.push_back(f.nu.base_linear);
    r.base_angular.push_back(f.nu.base_angular);
    r.poses.push_back(f.link_poses);
    r.twists.push_back(f.link_twists);
  }
  return r;
}

TrainingSample make_sample(const RigidBodyModel& model, const RecordedSequence& seq, int m,
                           int history, int horizon) {
  return {input_window(seq, m, history), buffer_snapshot(seq, m, history),
          target_window(seq, m, horizon), reference_window(model, seq, m, horizon)};
}

std::vector<int> window_steps(int length, const TrainConfig& config) {
  const int first = config.history - 1;
  const int last = length - config.horizon - 1;
  if (length < config.history + config.horizon) {
    throw std::invalid_argument("sequence of " + std::to_string(length) +
                                " frames is shorter than M + K = " +
                                std::to_string(config.history + config.horizon));
  }
  std::vector<int> out;
  for (int m = first; m <= last; m += config.stride) out.push_back(m);
  return out;
}

std::vector<TrainingSample> make_windows(const RigidBodyModel& model, const RecordedSequence& seq,
                                         const TrainConfig& config) {
  std::vector<TrainingSample> out;
  for (int m : window_steps(seq.size(), config)) {
    out.push_back(make_sample(model, seq, m, config.history, config.horizon));
  }
  return out;
}

SampleSet::SampleSet(const RigidBodyModel& model, const std::vector<RecordedSequence>& sequences,
                     const TrainConfig& config)
    : model_(&model),
      sequences_(&sequences),
      history_(config.history),
      horizon_(config.horizon) {
  for (int s = 0; s < static_cast<int>(sequences.size()); ++s) {
    for (int m : window_steps(sequences[s].size(), config)) index_.emplace_back(s, m);
  }
}

TrainingSample SampleSet::sample(std::size_t i) const {
  const auto [s, m] = index_.at(i);
  return make_sample(*model_, (*sequences_)[s], m, history_, horizon_);
}

void adam_step(VecX& params, const VecX& grads, AdamState& state, double lr) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: shape mismatch");
  if (state.m.size() == 0 && state.v.size() == 0) {
    state.m = VecX::Zero(params.size());
    state.v = VecX::Zero(params.size());
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

Normalization compute_normalization(const Architecture& arch,
                                    const std::vector<RecordedSequence>& sequences) {
  Normalization norm = Normalization::Identity(arch);
  const int nf = arch.imus * arch.features;
  const int n = arch.num_joints();
  VecX sum_i = VecX::Zero(nf), sq_i = VecX::Zero(nf);
  VecX sum_b = VecX::Zero(2 * n), sq_b = VecX::Zero(2 * n);
  double frames = 0.0;
  VecX feat(nf), joint(2 * n);
  for (const auto& seq : sequences) {
    for (const Frame& f : seq.frames) {
      if (static_cast<int>(f.imus.size()) != arch.imus ||
          f.q.joint_positions.size() != n) {
        throw std::invalid_argument("compute_normalization: frame does not match architecture");
      }
      for (int i = 0; i < arch.imus; ++i) {
        feat.segment<3>(i * arch.features) = f.imus[i].acceleration;
        const FlatRotation flat = flatten(f.imus[i].orientation);
        for (int e = 0; e < 9; ++e) feat[i * arch.features + 3 + e] = flat[e];
      }
      joint << f.q.joint_positions, f.nu.joint_velocities;
      sum_i += feat;
      sq_i += feat.cwiseProduct(feat);
      sum_b += joint;
      sq_b += joint.cwiseProduct(joint);
      frames += 1.0;
    }
  }
  if (frames == 0.0) return norm;
  auto finish = [frames](const VecX& sum, const VecX& sq, VecX& mean, VecX& stddev) {
    mean = sum / frames;
    stddev.resize(sum.size());
    for (Eigen::Index k = 0; k < sum.size(); ++k) {
      const double var = std::max(sq[k] / frames - mean[k] * mean[k], 0.0);
      const double s = std::sqrt(var);
      stddev[k] = s > 1e-6 ? s : 1.0;
    }
  };
  finish(sum_i, sq_i, norm.inertial_mean, norm.inertial_std);
  finish(sum_b, sq_b, norm.buffer_mean, norm.buffer_std);
  return norm;
}

namespace {

struct BatchEval {
  std::vector<LossBreakdown> losses;
  MatX cotangent;  // output_size x B, of the batch-mean total loss
  ActivationCache cache;
};

BatchEval eval_batch(const RigidBodyModel& model, const PredictorParams& params,
                     const std::vector<TrainingSample>& batch, const LossWeights& weights,
                     bool all_terms) {
  const Architecture& arch = params.arch;
  const int b = static_cast<int>(batch.size());
  MatX inertial(arch.inertial_size(), b);
  MatX buffer(arch.use_buffer ? arch.buffer_size() : 0, b);
  for (int k = 0; k < b; ++k) {
    inertial.col(k) = batch[k].window.data;
    if (arch.use_buffer) buffer.col(k) = batch[k].buffer.flatten();
  }
  BatchEval out;
  const MatX pred = forward_batch(params, inertial, buffer, &out.cache);
  out.losses.resize(b);
  out.cotangent.resize(pred.rows(), b);
  const int n = arch.num_joints();
  // Per-sample results land in fixed slots; the caller reduces in index order.
  std::vector<std::exception_ptr> errors(b);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < b; ++k) {
    try {
      const PredictionWindow p = PredictionWindow::Unflatten(pred.col(k), arch.horizon, n);
      const LossComponents c =
          evaluate_losses(model, weights, p, batch[k].target, batch[k].link_refs, all_terms);
      const TotalLoss total = total_loss(weights, c);
      LossBreakdown& l = out.losses[k];
      l.position = c.data.position;
      l.velocity = c.data.velocity;
      l.fk = c.fk ? c.fk->value : 0.0;
      l.dk = c.dk ? c.dk->value : 0.0;
      l.total = total.value;
      out.cotangent.col(k) = total.gradient.flatten() / static_cast<double>(b);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void accumulate(LossBreakdown& acc, const LossBreakdown& l, double w) {
  acc.position += w * l.position;
  acc.velocity += w * l.velocity;
  acc.fk += w * l.fk;
  acc.dk += w * l.dk;
  acc.total += w * l.total;
}

std::vector<TrainingSample> gather(const SampleSet& set, const std::vector<std::size_t>& order,
                                   std::size_t begin, std::size_t end) {
  std::vector<TrainingSample> batch(end - begin);
  for (std::size_t k = begin; k < end; ++k) batch[k - begin] = set.sample(order[k]);
  return batch;
}

}  // namespace

LossBreakdown evaluate_dataset(const RigidBodyModel& model, const PredictorParams& params,
                               const SampleSet& samples, const LossWeights& weights,
                               int batch_size, bool all_terms) {
  if (batch_size < 1) throw std::invalid_argument("evaluate_dataset: batch_size must be >= 1");
  LossBreakdown acc;
  if (samples.empty()) return acc;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const double w = 1.0 / static_cast<double>(samples.size());
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    const BatchEval e =
        eval_batch(model, params, gather(samples, order, begin, end), weights, all_terms);
    for (const auto& l : e.losses) accumulate(acc, l, w);
  }
  return acc;
}

TrainResult train(const RigidBodyModel& model, const std::vector<RecordedSequence>& train_set,
                  const std::vector<RecordedSequence>& validation_set, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  const std::uint64_t mhash = model_hash(model);
  for (const auto& s : train_set) {
    if (s.model_hash != mhash) {
      throw std::invalid_argument("train: training sequence was generated for another model");
    }
  }

  const SampleSet samples(model, train_set, config);
  const SampleSet validation(model, validation_set, config);
  if (samples.empty()) throw std::invalid_argument("train: no training windows");

  PredictorParams params;
  if (options.initial) {
    params = *options.initial;
  } else {
    Architecture arch = options.architecture.value_or(Architecture::ForModel(model));
    arch.history = config.history;
    arch.horizon = config.horizon;
    params = init_params(arch, config.seed);
    params.norm = compute_normalization(arch, train_set);
  }
  params.arch.check_compatible(model);

  TrainResult result;
  AdamState adam;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const bool all_terms = config.log_all_terms;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at_epoch(config, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_loss;
    const double w = 1.0 / static_cast<double>(order.size());
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const BatchEval e =
          eval_batch(model, params, gather(samples, order, begin, end), config.weights, all_terms);
      for (std::size_t k = 0; k < e.losses.size(); ++k) {
        const LossBreakdown& l = e.losses[k];
        if (!std::isfinite(l.total) || !std::isfinite(l.fk) || !std::isfinite(l.dk)) {
          const auto [s, m] = samples.location(order[begin + k]);
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index
              << " (sequence " << s << ", window ending at step " << m << "): L_pos="
              << l.position << " L_vel=" << l.velocity << " L_FK=" << l.fk << " L_DK=" << l.dk;
          throw NonFiniteLossError(msg.str(), epoch, batch_index, order[begin + k]);
        }
        accumulate(epoch_loss, l, w);
      }
      const BackwardResult grads = backward_batch(params, e.cache, e.cotangent);
      if (!grads.param_grads.allFinite()) {
        throw NonFiniteLossError("non-finite gradient at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batch_index),
                                 epoch, batch_index, order[begin]);
      }
      adam_step(params.values, grads.param_grads, adam, lr);
      ++params.version;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.train = epoch_loss;
    entry.val_total = validation.empty()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : evaluate_dataset(model, params, validation, config.weights,
                                             config.batch_size, all_terms)
                                .total;
    if (options.on_epoch) options.on_epoch(entry);
    result.log.push_back(entry);
  }

  result.checkpoint.params = std::move(params);
  result.checkpoint.model_hash = mhash;
  result.checkpoint.config_hash = config.hash();
  return result;
}

std::string loss_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,lr,L_pos,L_vel,L_FK,L_DK,L_total,val_total\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.lr << ',' << e.train.position << ',' << e.train.velocity << ','
        << e.train.fk << ',' << e.train.dk << ',' << e.train.total << ',' << e.val_total << '\n';
  }
  return out.str();
}

}  // namespace kinpred
