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

#include "kinpred/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "kinpred/kernels.hpp"

namespace kinpred {

Architecture Architecture::ForModel(const RigidBodyModel& model) {
  Architecture arch;
  arch.upper_joints = model.upper_joints();
  arch.lower_joints = model.lower_joints();
  return arch;
}

void Architecture::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("architecture: " + msg);
  };
  if (history < 2) fail("history must be >= 2");
  if (imus < 1 || features < 1 || horizon < 1) fail("imus, features and horizon must be >= 1");
  if (upper_joints.empty() || lower_joints.empty()) fail("both joint partitions must be non-empty");
  if (inertial_width < 1 || shared_width0 < 1 || shared_width1 < 1 || head_width < 1 ||
      (use_buffer && buffer_width < 1)) {
    fail("layer widths must be >= 1");
  }
  const int n = num_joints();
  std::vector<int> seen(n, 0);
  for (int j : upper_joints) {
    if (j < 0 || j >= n) fail("partition index out of range");
    ++seen[j];
  }
  for (int j : lower_joints) {
    if (j < 0 || j >= n) fail("partition index out of range");
    ++seen[j];
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    fail("upper/lower joints must partition 0..n-1");
  }
}

void Architecture::check_compatible(const RigidBodyModel& model) const {
  validate();
  if (num_joints() != model.num_joints() || upper_joints != model.upper_joints() ||
      lower_joints != model.lower_joints()) {
    throw std::invalid_argument("architecture joint partition does not match model '" +
                                model.name() + "'");
  }
  if (imus != static_cast<int>(model.instrumented_links().size())) {
    throw std::invalid_argument("architecture expects " + std::to_string(imus) +
                                " IMUs, model instruments " +
                                std::to_string(model.instrumented_links().size()) + " links");
  }
}

std::array<LayerShape, kNumLayers> layer_shapes(const Architecture& arch) {
  const int nu = static_cast<int>(arch.upper_joints.size());
  const int nl = static_cast<int>(arch.lower_joints.size());
  const int trunk_in = arch.inertial_width + (arch.use_buffer ? arch.buffer_width : 0);
  std::array<LayerShape, kNumLayers> shapes{{
      {arch.inertial_size(), arch.inertial_width, 0, true},
      {arch.buffer_size(), arch.buffer_width, 0, arch.use_buffer},
      {trunk_in, arch.shared_width0, 0, true},
      {arch.shared_width0, arch.shared_width1, 0, true},
      {arch.shared_width1, arch.head_width, 0, true},
      {arch.head_width, arch.horizon * 2 * nu, 0, true},
      {arch.shared_width1, arch.head_width, 0, true},
      {arch.head_width, arch.horizon * 2 * nl, 0, true},
  }};
  std::size_t offset = 0;
  for (auto& s : shapes) {
    s.offset = offset;
    offset += s.size();
  }
  return shapes;
}

std::size_t parameter_count(const Architecture& arch) {
  const auto shapes = layer_shapes(arch);
  return shapes.back().offset + shapes.back().size();
}

Normalization Normalization::Identity(const Architecture& arch) {
  const int nf = arch.imus * arch.features;
  const int nb = 2 * arch.num_joints();
  return {VecX::Zero(nf), VecX::Ones(nf), VecX::Zero(nb), VecX::Ones(nb)};
}

Eigen::Map<const MatX> PredictorParams::weight(LayerId id) const {
  const LayerShape s = layer_shapes(arch)[static_cast<int>(id)];
  return {values.data() + s.offset, s.outputs, s.inputs};
}

Eigen::Map<const VecX> PredictorParams::bias(LayerId id) const {
  const LayerShape s = layer_shapes(arch)[static_cast<int>(id)];
  return {values.data() + s.offset + static_cast<std::size_t>(s.outputs) * s.inputs,
          s.outputs};
}

Eigen::Map<MatX> PredictorParams::weight(LayerId id) {
  const LayerShape s = layer_shapes(arch)[static_cast<int>(id)];
  return {values.data() + s.offset, s.outputs, s.inputs};
}

Eigen::Map<VecX> PredictorParams::bias(LayerId id) {
  const LayerShape s = layer_shapes(arch)[static_cast<int>(id)];
  return {values.data() + s.offset + static_cast<std::size_t>(s.outputs) * s.inputs,
          s.outputs};
}

PredictorParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  PredictorParams params;
  params.arch = arch;
  params.norm = Normalization::Identity(arch);
  params.values = VecX::Zero(static_cast<Eigen::Index>(parameter_count(arch)));
  std::mt19937_64 rng(seed);
  for (const LayerShape& s : layer_shapes(arch)) {
    if (!s.present) continue;
    const double bound = std::sqrt(1.0 / s.inputs);
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t count = static_cast<std::size_t>(s.outputs) * s.inputs;
    for (std::size_t k = 0; k < count; ++k) params.values[s.offset + k] = dist(rng);
  }
  return params;
}

PredictorParams make_params(const Architecture& arch, Normalization norm, VecX values) {
  arch.validate();
  if (static_cast<std::size_t>(values.size()) != parameter_count(arch)) {
    throw std::invalid_argument("parameter vector has " + std::to_string(values.size()) +
                                " entries, architecture needs " +
                                std::to_string(parameter_count(arch)));
  }
  const int nf = arch.imus * arch.features;
  const int nb = 2 * arch.num_joints();
  if (norm.inertial_mean.size() != nf || norm.inertial_std.size() != nf ||
      norm.buffer_mean.size() != nb || norm.buffer_std.size() != nb) {
    throw std::invalid_argument("normalization sizes do not match architecture");
  }
  PredictorParams params;
  params.arch = arch;
  params.norm = std::move(norm);
  params.values = std::move(values);
  return params;
}

namespace {

// Normalizes column-wise with stats indexed by row % stats.size().
MatX normalize(const MatX& raw, const VecX& mean, const VecX& stddev) {
  MatX out(raw.rows(), raw.cols());
  const Eigen::Index period = mean.size();
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      const Eigen::Index f = r % period;
      out(r, c) = (raw(r, c) - mean[f]) / stddev[f];
    }
  }
  return out;
}

// Maps head-local output rows to canonical rows.
std::vector<int> scatter_rows(const Architecture& arch, const std::vector<int>& joints) {
  const int n = arch.num_joints();
  const int local = static_cast<int>(joints.size());
  std::vector<int> rows(static_cast<std::size_t>(arch.horizon) * 2 * local);
  for (int t = 0; t < arch.horizon; ++t) {
    for (int c = 0; c < 2; ++c) {
      for (int j = 0; j < local; ++j) {
        rows[(t * 2 + c) * local + j] = t * 2 * n + c * n + joints[j];
      }
    }
  }
  return rows;
}

void check_cache(const PredictorParams& params, const ActivationCache& cache) {
  if (cache.params_identity != &params || cache.params_version != params.version) {
    throw std::logic_error("activation cache is stale or belongs to other parameters");
  }
}

}  // namespace

MatX forward_batch(const PredictorParams& params, const MatX& inertial, const MatX& buffer,
                   ActivationCache* cache) {
  const Architecture& arch = params.arch;
  const auto shapes = layer_shapes(arch);
  const int batch = static_cast<int>(inertial.cols());
  if (inertial.rows() != arch.inertial_size()) {
    throw std::invalid_argument("inertial input has " + std::to_string(inertial.rows()) +
                                " rows, expected " + std::to_string(arch.inertial_size()));
  }
  if (arch.use_buffer && (buffer.rows() != arch.buffer_size() || buffer.cols() != batch)) {
    throw std::invalid_argument("buffer input shape mismatch");
  }

  ActivationCache local;
  ActivationCache& c = cache ? *cache : local;
  c.params_identity = &params;
  c.params_version = params.version;
  c.batch = batch;

  auto layer = [&](LayerId id, const MatX& in, MatX& pre) {
    pre.resize(shapes[static_cast<int>(id)].outputs, batch);
    kernels::affine_forward(params.weight(id), params.bias(id), in, pre);
  };
  auto layer_elu = [&](LayerId id, const MatX& in, MatX& pre, MatX& post) {
    layer(id, in, pre);
    post.resize(pre.rows(), pre.cols());
    kernels::elu_forward(pre, post);
  };

  c.inertial_in = normalize(inertial, params.norm.inertial_mean, params.norm.inertial_std);
  MatX inertial_post;
  layer_elu(LayerId::kInertial, c.inertial_in, c.inertial_pre, inertial_post);
  if (arch.use_buffer) {
    c.buffer_in = normalize(buffer, params.norm.buffer_mean, params.norm.buffer_std);
    MatX buffer_post;
    layer_elu(LayerId::kBuffer, c.buffer_in, c.buffer_pre, buffer_post);
    c.trunk_in.resize(arch.inertial_width + arch.buffer_width, batch);
    c.trunk_in.topRows(arch.inertial_width) = inertial_post;
    c.trunk_in.bottomRows(arch.buffer_width) = buffer_post;
  } else {
    c.buffer_in.resize(0, batch);
    c.trunk_in = std::move(inertial_post);
  }
  layer_elu(LayerId::kShared0, c.trunk_in, c.shared0_pre, c.shared0_post);
  layer_elu(LayerId::kShared1, c.shared0_post, c.shared1_pre, c.shared1_post);
  layer_elu(LayerId::kUpperHidden, c.shared1_post, c.upper_pre, c.upper_post);
  layer_elu(LayerId::kLowerHidden, c.shared1_post, c.lower_pre, c.lower_post);
  MatX upper_out, lower_out;
  layer(LayerId::kUpperOut, c.upper_post, upper_out);
  layer(LayerId::kLowerOut, c.lower_post, lower_out);

  MatX out(arch.output_size(), batch);
  const auto upper_rows = scatter_rows(arch, arch.upper_joints);
  const auto lower_rows = scatter_rows(arch, arch.lower_joints);
  for (std::size_t r = 0; r < upper_rows.size(); ++r) out.row(upper_rows[r]) = upper_out.row(r);
  for (std::size_t r = 0; r < lower_rows.size(); ++r) out.row(lower_rows[r]) = lower_out.row(r);
  return out;
}

BackwardResult backward_batch(const PredictorParams& params, const ActivationCache& cache,
                              const MatX& cotangent) {
  check_cache(params, cache);
  const Architecture& arch = params.arch;
  const int batch = cache.batch;
  if (cotangent.rows() != arch.output_size() || cotangent.cols() != batch) {
    throw std::invalid_argument("cotangent shape mismatch");
  }
  const auto shapes = layer_shapes(arch);
  BackwardResult result;
  result.param_grads = VecX::Zero(params.values.size());

  auto grad_weight = [&](LayerId id) {
    const LayerShape& s = shapes[static_cast<int>(id)];
    return Eigen::Map<MatX>(result.param_grads.data() + s.offset, s.outputs, s.inputs);
  };
  auto grad_bias = [&](LayerId id) {
    const LayerShape& s = shapes[static_cast<int>(id)];
    return Eigen::Map<VecX>(
        result.param_grads.data() + s.offset + static_cast<std::size_t>(s.outputs) * s.inputs,
        s.outputs);
  };
  auto affine_back = [&](LayerId id, const MatX& in, const MatX& grad_out, MatX* grad_in) {
    kernels::affine_backward(params.weight(id), in, grad_out, grad_weight(id), grad_bias(id),
                             grad_in);
  };
  auto elu_back = [](const MatX& pre, const MatX& grad_post) {
    MatX grad_pre(pre.rows(), pre.cols());
    kernels::elu_backward(pre, grad_post, grad_pre);
    return grad_pre;
  };

  const auto upper_rows = scatter_rows(arch, arch.upper_joints);
  const auto lower_rows = scatter_rows(arch, arch.lower_joints);
  MatX d_upper_out(upper_rows.size(), batch), d_lower_out(lower_rows.size(), batch);
  for (std::size_t r = 0; r < upper_rows.size(); ++r) d_upper_out.row(r) = cotangent.row(upper_rows[r]);
  for (std::size_t r = 0; r < lower_rows.size(); ++r) d_lower_out.row(r) = cotangent.row(lower_rows[r]);

  MatX d_upper_post, d_lower_post, d_shared1_post, d_lower_shared;
  affine_back(LayerId::kUpperOut, cache.upper_post, d_upper_out, &d_upper_post);
  affine_back(LayerId::kLowerOut, cache.lower_post, d_lower_out, &d_lower_post);
  affine_back(LayerId::kUpperHidden, cache.shared1_post, elu_back(cache.upper_pre, d_upper_post),
              &d_shared1_post);
  affine_back(LayerId::kLowerHidden, cache.shared1_post, elu_back(cache.lower_pre, d_lower_post),
              &d_lower_shared);
  d_shared1_post += d_lower_shared;

  MatX d_shared0_post, d_trunk;
  affine_back(LayerId::kShared1, cache.shared0_post, elu_back(cache.shared1_pre, d_shared1_post),
              &d_shared0_post);
  affine_back(LayerId::kShared0, cache.trunk_in, elu_back(cache.shared0_pre, d_shared0_post),
              &d_trunk);

  const MatX d_inertial_pre = elu_back(cache.inertial_pre, d_trunk.topRows(arch.inertial_width));
  affine_back(LayerId::kInertial, cache.inertial_in, d_inertial_pre, nullptr);

  if (arch.use_buffer) {
    const MatX d_buffer_pre = elu_back(cache.buffer_pre, d_trunk.bottomRows(arch.buffer_width));
    MatX d_buffer_in;
    affine_back(LayerId::kBuffer, cache.buffer_in, d_buffer_pre, &d_buffer_in);
    const Eigen::Index period = params.norm.buffer_std.size();
    for (Eigen::Index r = 0; r < d_buffer_in.rows(); ++r) {
      d_buffer_in.row(r) /= params.norm.buffer_std[r % period];
    }
    result.buffer_grads = std::move(d_buffer_in);
  } else {
    result.buffer_grads = MatX::Zero(arch.buffer_size(), batch);
  }
  return result;
}

std::pair<PredictionWindow, ActivationCache> forward(const PredictorParams& params,
                                                     const InputWindow& window,
                                                     const BufferSnapshot& buffer) {
  const Architecture& arch = params.arch;
  if (window.history != arch.history || window.imus != arch.imus ||
      window.features != arch.features || window.data.size() != arch.inertial_size()) {
    throw std::invalid_argument("input window shape does not match architecture");
  }
  if (buffer.steps() != arch.history - 1 || buffer.joints() != arch.num_joints()) {
    throw std::invalid_argument("buffer snapshot shape does not match architecture");
  }
  std::pair<PredictionWindow, ActivationCache> out;
  const MatX flat = forward_batch(params, window.data, buffer.flatten(), &out.second);
  out.first = PredictionWindow::Unflatten(flat.col(0), arch.horizon, arch.num_joints());
  return out;
}

SampleGradients backward(const PredictorParams& params, const ActivationCache& cache,
                         const PredictionWindow& cotangent) {
  const Architecture& arch = params.arch;
  if (cache.batch != 1) throw std::logic_error("cache holds a batch, not a single sample");
  if (cotangent.steps() != arch.horizon || cotangent.joints() != arch.num_joints()) {
    throw std::invalid_argument("cotangent shape does not match architecture");
  }
  BackwardResult r = backward_batch(params, cache, cotangent.flatten());
  return {std::move(r.param_grads),
          BufferSnapshot::Unflatten(r.buffer_grads.col(0), arch.history - 1, arch.num_joints())};
}

}  // namespace kinpred
