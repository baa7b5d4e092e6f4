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

// Windowing, Adam, the step learning-rate schedule and the training loop.

#ifndef KINPRED_TRAINING_HPP_
#define KINPRED_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinpred/checkpoint.hpp"
#include "kinpred/losses.hpp"
#include "kinpred/motion.hpp"

namespace kinpred {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double lr0 = 1e-3;
  int lr_step_epochs = 5;
  double lr_gamma = 0.5;
  LossWeights weights;
  std::uint64_t seed = 0;
  int history = kHistory;
  int horizon = kHorizon;
  int stride = 1;
  // Evaluate L_FK and L_DK for the log even when their weight is zero.
  bool log_all_terms = true;

  // Throws std::invalid_argument. epochs may be 0.
  void validate() const;
  std::uint64_t hash() const;
};

double lr_at_epoch(const TrainConfig& config, int epoch);

// Window ending at step m: IMUs over m-M+1..m, buffer over m-M+1..m-1,
// targets and link references over m..m+K-1.
struct TrainingSample {
  InputWindow window;
  BufferSnapshot buffer;
  PredictionWindow target;
  LinkReferenceWindow link_refs;
};

InputWindow input_window(const RecordedSequence& seq, int m, int history);
BufferSnapshot buffer_snapshot(const RecordedSequence& seq, int m, int history);
PredictionWindow target_window(const RecordedSequence& seq, int m, int horizon);
LinkReferenceWindow reference_window(const RigidBodyModel& model, const RecordedSequence& seq,
                                     int m, int horizon);
TrainingSample make_sample(const RigidBodyModel& model, const RecordedSequence& seq, int m,
                           int history, int horizon);

// Valid window end steps m = M-1, M-1+stride, ... while m + K <= L - 1;
// L - M - K + 1 windows at stride 1. Throws std::invalid_argument if L < M + K.
std::vector<int> window_steps(int length, const TrainConfig& config);
std::vector<TrainingSample> make_windows(const RigidBodyModel& model,
                                         const RecordedSequence& seq, const TrainConfig& config);

// Samples addressed lazily by (sequence, m). Holds a pointer to `sequences`,
// which must outlive the set.
class SampleSet {
 public:
  SampleSet(const RigidBodyModel& model, const std::vector<RecordedSequence>& sequences,
            const TrainConfig& config);

  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }
  TrainingSample sample(std::size_t i) const;
  std::pair<int, int> location(std::size_t i) const { return index_[i]; }

 private:
  const RigidBodyModel* model_;
  const std::vector<RecordedSequence>* sequences_;
  int history_;
  int horizon_;
  std::vector<std::pair<int, int>> index_;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  VecX m;
  VecX v;
};

// In-place update with bias correction. Zero-sized moments are initialized
// on first use. Throws std::invalid_argument on a shape mismatch.
void adam_step(VecX& params, const VecX& grads, AdamState& state, double lr);

// Per-sample input normalization: mean/std per IMU feature over all frames,
// and per joint over positions and velocities. Tiny std is replaced by 1.
Normalization compute_normalization(const Architecture& arch,
                                    const std::vector<RecordedSequence>& sequences);

struct LossBreakdown {
  double position = 0.0;
  double velocity = 0.0;
  double fk = 0.0;
  double dk = 0.0;
  double total = 0.0;
};

// Batch-mean losses with ground-truth buffers.
LossBreakdown evaluate_dataset(const RigidBodyModel& model, const PredictorParams& params,
                               const SampleSet& samples, const LossWeights& weights,
                               int batch_size = 256, bool all_terms = true);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown train;
  double val_total = 0.0;  // NaN without a validation set
};

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string& message, int epoch, int batch, std::size_t sample)
      : std::runtime_error(message), epoch_(epoch), batch_(batch), sample_(sample) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }
  std::size_t sample() const { return sample_; }

 private:
  int epoch_;
  int batch_;
  std::size_t sample_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

struct TrainOptions {
  // Starting point; init_params(arch, config.seed) with dataset
  // normalization when absent.
  std::optional<PredictorParams> initial;
  std::optional<Architecture> architecture;  // default Architecture::ForModel
  std::function<void(const EpochLog&)> on_epoch;
};

// Throws std::invalid_argument for an empty training set and
// NonFiniteLossError when a batch loss is not finite.
TrainResult train(const RigidBodyModel& model, const std::vector<RecordedSequence>& train_set,
                  const std::vector<RecordedSequence>& validation_set, const TrainConfig& config,
                  const TrainOptions& options = {});

std::string loss_log_csv(const std::vector<EpochLog>& log);

}  // namespace kinpred

#endif  // KINPRED_TRAINING_HPP_
