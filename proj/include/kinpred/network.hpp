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

// Dual-branch fully connected predictor.
//
//   inertial window (M*N*F) --FC+elu--> inertial_width --+
//                                                        +-- concat
//   joint buffer ((M-1)*2n) --FC+elu--> buffer_width  ---+
//     --FC+elu--> shared_width0 --FC+elu--> shared_width1
//     +--> upper head: FC+elu -> head_width, FC -> K*2*n_upper
//     +--> lower head: FC+elu -> head_width, FC -> K*2*n_lower
//
// Head outputs are scattered to the canonical [step][channel][joint] layout
// through the model's upper/lower joint lists. With use_buffer == false the
// buffer branch is absent and the shared trunk sees only the inertial
// features.
//
// All parameters live in one flat vector, layer by layer in the order above,
// each layer as its weight (out x in, column-major) followed by its bias.
// Parameter count = sum over layers of out*in + out.

#ifndef KINPRED_NETWORK_HPP_
#define KINPRED_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "kinpred/model.hpp"
#include "kinpred/window.hpp"

namespace kinpred {

struct Architecture {
  int history = kHistory;
  int imus = kImus;
  int features = kFeatures;
  int horizon = kHorizon;
  std::vector<int> upper_joints;
  std::vector<int> lower_joints;
  bool use_buffer = true;
  int inertial_width = 256;
  int buffer_width = 256;
  int shared_width0 = 512;
  int shared_width1 = 512;
  int head_width = 256;

  static Architecture ForModel(const RigidBodyModel& model);

  int num_joints() const {
    return static_cast<int>(upper_joints.size() + lower_joints.size());
  }
  int inertial_size() const { return history * imus * features; }
  int buffer_size() const { return (history - 1) * 2 * num_joints(); }
  int output_size() const { return horizon * 2 * num_joints(); }

  // Throws std::invalid_argument.
  void validate() const;
  // Throws std::invalid_argument if incompatible with the model.
  void check_compatible(const RigidBodyModel& model) const;

  bool operator==(const Architecture&) const = default;
};

enum class LayerId {
  kInertial = 0,
  kBuffer,
  kShared0,
  kShared1,
  kUpperHidden,
  kUpperOut,
  kLowerHidden,
  kLowerOut,
};
inline constexpr int kNumLayers = 8;

struct LayerShape {
  int inputs = 0;
  int outputs = 0;
  std::size_t offset = 0;  // into the flat parameter vector
  bool present = true;

  std::size_t size() const {
    return present ? static_cast<std::size_t>(outputs) * (inputs + 1) : 0;
  }
};

std::array<LayerShape, kNumLayers> layer_shapes(const Architecture& arch);
std::size_t parameter_count(const Architecture& arch);

// Per-feature affine input normalization, x_hat = (x - mean) / std.
// Inertial stats have N*F entries (shared over time steps); buffer stats 2n
// entries laid out [channel][joint].
struct Normalization {
  VecX inertial_mean;
  VecX inertial_std;
  VecX buffer_mean;
  VecX buffer_std;

  static Normalization Identity(const Architecture& arch);
  bool operator==(const Normalization& o) const {
    return inertial_mean == o.inertial_mean && inertial_std == o.inertial_std &&
           buffer_mean == o.buffer_mean && buffer_std == o.buffer_std;
  }
};

struct PredictorParams {
  Architecture arch;
  Normalization norm;
  VecX values;
  // Bumped on every in-place update; caches remember the version they saw.
  std::uint64_t version = 0;

  Eigen::Map<const MatX> weight(LayerId id) const;
  Eigen::Map<const VecX> bias(LayerId id) const;
  Eigen::Map<MatX> weight(LayerId id);
  Eigen::Map<VecX> bias(LayerId id);
};

// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)), biases zero, identity
// normalization. Deterministic in `seed`.
PredictorParams init_params(const Architecture& arch, std::uint64_t seed);

// Wraps existing values (e.g. from a checkpoint). Throws on size mismatch.
PredictorParams make_params(const Architecture& arch, Normalization norm, VecX values);

// Activations retained by forward for backward.
struct ActivationCache {
  std::uint64_t params_version = 0;
  const void* params_identity = nullptr;
  int batch = 0;
  MatX inertial_in;  // normalized
  MatX buffer_in;    // normalized
  MatX inertial_pre, buffer_pre;
  MatX trunk_in;
  MatX shared0_pre, shared0_post;
  MatX shared1_pre, shared1_post;
  MatX upper_pre, upper_post;
  MatX lower_pre, lower_post;
};

// Batched forward. `inertial` is inertial_size x B, `buffer` buffer_size x B
// (ignored, may be empty, when the architecture has no buffer branch).
// Returns output_size x B in canonical layout.
MatX forward_batch(const PredictorParams& params, const MatX& inertial,
                   const MatX& buffer, ActivationCache* cache);

struct BackwardResult {
  VecX param_grads;
  MatX buffer_grads;  // w.r.t. the raw (unnormalized) buffer input
};

// Gradients of sum over samples of <cotangent, output>. Throws
// std::logic_error on a stale or mismatched cache.
BackwardResult backward_batch(const PredictorParams& params,
                              const ActivationCache& cache, const MatX& cotangent);

std::pair<PredictionWindow, ActivationCache> forward(const PredictorParams& params,
                                                     const InputWindow& window,
                                                     const BufferSnapshot& buffer);

struct SampleGradients {
  VecX param_grads;
  BufferSnapshot buffer_grads;
};

SampleGradients backward(const PredictorParams& params, const ActivationCache& cache,
                         const PredictionWindow& cotangent);

}  // namespace kinpred

#endif  // KINPRED_NETWORK_HPP_
