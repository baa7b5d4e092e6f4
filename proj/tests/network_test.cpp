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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kinpred/kernels.hpp"
#include "kinpred/network.hpp"
#include "test_util.hpp"

namespace kinpred {
namespace {

// Widths <= 8, n = 4, K = 3, M = 3.
Architecture shrunken(bool use_buffer = true) {
  Architecture a;
  a.history = 3;
  a.imus = 2;
  a.features = 3;
  a.horizon = 3;
  a.upper_joints = {0, 2};
  a.lower_joints = {3, 1};
  a.use_buffer = use_buffer;
  a.inertial_width = 5;
  a.buffer_width = 4;
  a.shared_width0 = 8;
  a.shared_width1 = 6;
  a.head_width = 4;
  return a;
}

// Non-trivial normalization so its chain rule is exercised.
PredictorParams random_params(const Architecture& arch, std::uint64_t seed) {
  PredictorParams p = init_params(arch, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (VecX* v : {&p.norm.inertial_std, &p.norm.buffer_std}) {
    for (auto& x : *v) x = u(rng);
  }
  p.norm.inertial_mean = testing::random_vector(rng, p.norm.inertial_mean.size(), 0.3);
  p.norm.buffer_mean = testing::random_vector(rng, p.norm.buffer_mean.size(), 0.3);
  // Nonzero biases so every bias gradient path matters.
  p.values += testing::random_vector(rng, p.values.size(), 0.05);
  return p;
}

InputWindow random_window(const Architecture& a, std::mt19937_64& rng) {
  InputWindow w = InputWindow::Zero(a.history, a.imus, a.features);
  w.data = testing::random_vector(rng, w.data.size());
  return w;
}

BufferSnapshot random_buffer(const Architecture& a, std::mt19937_64& rng) {
  return BufferSnapshot::Unflatten(testing::random_vector(rng, a.buffer_size()), a.history - 1,
                                   a.num_joints());
}

PredictionWindow random_cotangent(const Architecture& a, std::mt19937_64& rng) {
  return PredictionWindow::Unflatten(testing::random_vector(rng, a.output_size()), a.horizon,
                                     a.num_joints());
}

std::size_t expected_count(const Architecture& a) {
  auto layer = [](std::size_t in, std::size_t out) { return out * in + out; };
  const std::size_t n = a.num_joints(), nu = a.upper_joints.size(), nl = a.lower_joints.size();
  const std::size_t trunk_in = a.inertial_width + (a.use_buffer ? a.buffer_width : 0);
  std::size_t c = layer(a.history * a.imus * a.features, a.inertial_width);
  if (a.use_buffer) c += layer((a.history - 1) * 2 * n, a.buffer_width);
  c += layer(trunk_in, a.shared_width0) + layer(a.shared_width0, a.shared_width1);
  c += layer(a.shared_width1, a.head_width) + layer(a.head_width, a.horizon * 2 * nu);
  c += layer(a.shared_width1, a.head_width) + layer(a.head_width, a.horizon * 2 * nl);
  return c;
}

TEST(Elu, Values) {
  EXPECT_EQ(kernels::elu(0.0), 0.0);
  EXPECT_EQ(kernels::elu(2.0), 2.0);
  const double tail = kernels::elu(-40.0);
  // expm1(-40) = -1 + 4.2e-18 rounds to -1 in float64, so the bound is closed.
  EXPECT_GE(tail, -1.0);
  EXPECT_LT(tail, -1.0 + 1e-15);
  EXPECT_GT(kernels::elu(-30.0), -1.0);
  EXPECT_DOUBLE_EQ(kernels::elu(-1.0), std::exp(-1.0) - 1.0);
  EXPECT_EQ(kernels::elu_prime(3.0), 1.0);
  EXPECT_DOUBLE_EQ(kernels::elu_prime(-2.0), std::exp(-2.0));
  EXPECT_EQ(kernels::elu_prime(0.0), 1.0);
}

TEST(Architecture, ReferenceModelOutputWidths) {
  const Architecture a = Architecture::ForModel(testing::humanoid());
  const auto shapes = layer_shapes(a);
  const int upper = shapes[static_cast<int>(LayerId::kUpperOut)].outputs;
  const int lower = shapes[static_cast<int>(LayerId::kLowerOut)].outputs;
  EXPECT_EQ(upper, 60 * 2 * 12);
  EXPECT_EQ(lower, 60 * 2 * 8);
  EXPECT_EQ(upper + lower, 2400);
  EXPECT_EQ(shapes[static_cast<int>(LayerId::kInertial)].inputs, 600);
  EXPECT_EQ(shapes[static_cast<int>(LayerId::kBuffer)].inputs, 9 * 2 * 20);
  EXPECT_EQ(shapes[static_cast<int>(LayerId::kShared0)].inputs, 512);
}

TEST(Architecture, ParameterCountFormula) {
  Architecture wide = Architecture::ForModel(testing::humanoid());
  Architecture lean = wide;
  lean.inertial_width = 64;
  lean.shared_width1 = 100;
  lean.horizon = 7;
  for (const Architecture& a : {wide, lean, shrunken(), shrunken(false)}) {
    EXPECT_EQ(parameter_count(a), expected_count(a));
    EXPECT_EQ(static_cast<std::size_t>(init_params(a, 0).values.size()), expected_count(a));
  }
  EXPECT_EQ(parameter_count(wide), 1651040u);
}

TEST(Architecture, LayerOffsetsAreContiguous) {
  const auto shapes = layer_shapes(shrunken(false));
  std::size_t offset = 0;
  for (const LayerShape& s : shapes) {
    EXPECT_EQ(s.offset, offset);
    offset += s.size();
  }
  EXPECT_FALSE(shapes[static_cast<int>(LayerId::kBuffer)].present);
}

TEST(Architecture, ValidationErrors) {
  Architecture a = shrunken();
  a.upper_joints = {0, 2, 1};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = shrunken();
  a.lower_joints = {};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = shrunken();
  a.history = 1;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = shrunken();
  a.head_width = 0;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  EXPECT_THROW(init_params(a, 0), std::invalid_argument);
  EXPECT_THROW(shrunken().check_compatible(testing::humanoid()), std::invalid_argument);
  EXPECT_NO_THROW(Architecture::ForModel(testing::humanoid()).check_compatible(testing::humanoid()));
}

TEST(InitParams, DeterministicInSeed) {
  const Architecture a = shrunken();
  const PredictorParams p1 = init_params(a, 5), p2 = init_params(a, 5), p3 = init_params(a, 6);
  EXPECT_EQ(p1.values, p2.values);
  EXPECT_NE(p1.values, p3.values);
}

TEST(InitParams, UniformFanInBoundsAndZeroBias) {
  const Architecture a = shrunken();
  const PredictorParams p = init_params(a, 9);
  for (int l = 0; l < kNumLayers; ++l) {
    const auto id = static_cast<LayerId>(l);
    const double bound = std::sqrt(1.0 / layer_shapes(a)[l].inputs);
    EXPECT_LE(p.weight(id).cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(p.weight(id).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(p.bias(id).isZero(0.0));
  }
  EXPECT_TRUE(p.norm == Normalization::Identity(a));
}

TEST(MakeParams, RejectsWrongSizes) {
  const Architecture a = shrunken();
  EXPECT_THROW(make_params(a, Normalization::Identity(a), VecX::Zero(3)), std::invalid_argument);
  Normalization bad = Normalization::Identity(a);
  bad.buffer_mean = VecX::Zero(1);
  EXPECT_THROW(make_params(a, bad, VecX::Zero(parameter_count(a))), std::invalid_argument);
}

TEST(Forward, ZeroParamsGiveZeroPrediction) {
  const Architecture a = Architecture::ForModel(testing::humanoid());
  const PredictorParams p = make_params(a, Normalization::Identity(a), VecX::Zero(parameter_count(a)));
  std::mt19937_64 rng(1);
  const auto [pred, cache] = forward(p, random_window(a, rng), random_buffer(a, rng));
  EXPECT_EQ(pred.steps(), 60);
  EXPECT_EQ(pred.joints(), 20);
  EXPECT_TRUE(pred.positions.isZero(0.0));
  EXPECT_TRUE(pred.velocities.isZero(0.0));
}

TEST(Forward, PureAndDeterministic) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 2);
  std::mt19937_64 rng(2);
  const InputWindow w = random_window(a, rng);
  const BufferSnapshot b = random_buffer(a, rng);
  const VecX before = p.values;
  const auto r1 = forward(p, w, b);
  const auto r2 = forward(p, w, b);
  EXPECT_TRUE(r1.first == r2.first);
  EXPECT_EQ(p.values, before);
}

TEST(Forward, PartitionPermutationPermutesOutputs) {
  Architecture a = shrunken();
  Architecture b = a;
  b.upper_joints = {2, 0};
  b.lower_joints = {1, 3};
  const PredictorParams pa = random_params(a, 3);
  const PredictorParams pb = make_params(b, pa.norm, pa.values);
  std::mt19937_64 rng(3);
  const InputWindow w = random_window(a, rng);
  const BufferSnapshot buf = random_buffer(a, rng);
  const PredictionWindow ya = forward(pa, w, buf).first;
  const PredictionWindow yb = forward(pb, w, buf).first;
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(yb.positions.col(b.upper_joints[k]), ya.positions.col(a.upper_joints[k]));
    EXPECT_EQ(yb.velocities.col(b.upper_joints[k]), ya.velocities.col(a.upper_joints[k]));
    EXPECT_EQ(yb.positions.col(b.lower_joints[k]), ya.positions.col(a.lower_joints[k]));
    EXPECT_EQ(yb.velocities.col(b.lower_joints[k]), ya.velocities.col(a.lower_joints[k]));
  }
}

TEST(Forward, NormalizationIsAppliedInside) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 4);
  const PredictorParams plain = make_params(a, Normalization::Identity(a), p.values);
  std::mt19937_64 rng(4);
  const InputWindow w = random_window(a, rng);
  const BufferSnapshot b = random_buffer(a, rng);
  InputWindow wn = w;
  const int nf = a.imus * a.features;
  for (int i = 0; i < wn.data.size(); ++i) {
    wn.data[i] = (w.data[i] - p.norm.inertial_mean[i % nf]) / p.norm.inertial_std[i % nf];
  }
  VecX bflat = b.flatten();
  const int nb = 2 * a.num_joints();
  for (int i = 0; i < bflat.size(); ++i) {
    bflat[i] = (bflat[i] - p.norm.buffer_mean[i % nb]) / p.norm.buffer_std[i % nb];
  }
  const BufferSnapshot bn = BufferSnapshot::Unflatten(bflat, a.history - 1, a.num_joints());
  const PredictionWindow y1 = forward(p, w, b).first;
  const PredictionWindow y2 = forward(plain, wn, bn).first;
  EXPECT_LT((y1.flatten() - y2.flatten()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Forward, NoBufferVariantIgnoresBuffer) {
  const Architecture a = shrunken(false);
  const PredictorParams p = random_params(a, 5);
  std::mt19937_64 rng(5);
  const InputWindow w = random_window(a, rng);
  const auto y1 = forward(p, w, random_buffer(a, rng)).first;
  const auto y2 = forward(p, w, random_buffer(a, rng)).first;
  EXPECT_TRUE(y1 == y2);
}

TEST(Forward, BatchMatchesSingleSamples) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 6);
  std::mt19937_64 rng(6);
  MatX in(a.inertial_size(), 5), buf(a.buffer_size(), 5);
  std::vector<PredictionWindow> singles;
  for (int i = 0; i < 5; ++i) {
    const InputWindow w = random_window(a, rng);
    const BufferSnapshot b = random_buffer(a, rng);
    in.col(i) = w.data;
    buf.col(i) = b.flatten();
    singles.push_back(forward(p, w, b).first);
  }
  const MatX out = forward_batch(p, in, buf, nullptr);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LT((out.col(i) - singles[i].flatten()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Forward, ShapeMismatchThrows) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 7);
  std::mt19937_64 rng(7);
  EXPECT_THROW(forward(p, InputWindow::Zero(), random_buffer(a, rng)), std::invalid_argument);
  EXPECT_THROW(forward(p, random_window(a, rng), BufferSnapshot::Zero(3, 4)), std::invalid_argument);
}

TEST(Backward, ZeroCotangentGivesZeroGradients) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 8);
  std::mt19937_64 rng(8);
  const auto [y, cache] = forward(p, random_window(a, rng), random_buffer(a, rng));
  const SampleGradients g = backward(p, cache, PredictionWindow::Zero(a.horizon, a.num_joints()));
  EXPECT_TRUE(g.param_grads.isZero(0.0));
  EXPECT_TRUE(g.buffer_grads.positions.isZero(0.0));
  EXPECT_TRUE(g.buffer_grads.velocities.isZero(0.0));
}

class BackwardFiniteDifference : public ::testing::TestWithParam<bool> {};

TEST_P(BackwardFiniteDifference, EveryParameterAndBufferEntry) {
  const Architecture a = shrunken(GetParam());
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const PredictorParams p = random_params(a, seed);
    std::mt19937_64 rng(seed);
    const InputWindow w = random_window(a, rng);
    const BufferSnapshot b = random_buffer(a, rng);
    const PredictionWindow cot = random_cotangent(a, rng);
    const VecX cflat = cot.flatten();
    const auto [y, cache] = forward(p, w, b);
    const SampleGradients g = backward(p, cache, cot);

    const VecX numeric = testing::numeric_gradient(
        [&](const VecX& values) {
          const PredictorParams q = make_params(a, p.norm, values);
          return cflat.dot(forward(q, w, b).first.flatten());
        },
        p.values);
    ASSERT_EQ(numeric.size(), g.param_grads.size());
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      const double scale = std::max({std::abs(numeric[i]), std::abs(g.param_grads[i]), 1e-3});
      EXPECT_LT(std::abs(numeric[i] - g.param_grads[i]) / scale, 1e-4) << "parameter " << i;
    }

    const VecX numeric_buffer = testing::numeric_gradient(
        [&](const VecX& flat) {
          const BufferSnapshot bb = BufferSnapshot::Unflatten(flat, a.history - 1, a.num_joints());
          return cflat.dot(forward(p, w, bb).first.flatten());
        },
        b.flatten());
    const VecX analytic_buffer = g.buffer_grads.flatten();
    for (Eigen::Index i = 0; i < numeric_buffer.size(); ++i) {
      const double scale =
          std::max({std::abs(numeric_buffer[i]), std::abs(analytic_buffer[i]), 1e-3});
      EXPECT_LT(std::abs(numeric_buffer[i] - analytic_buffer[i]) / scale, 1e-4) << "buffer " << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(WithAndWithoutBuffer, BackwardFiniteDifference, ::testing::Bool());

TEST(Backward, UpperOnlyCotangentLeavesLowerBlockZero) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 10);
  std::mt19937_64 rng(10);
  const auto [y, cache] = forward(p, random_window(a, rng), random_buffer(a, rng));
  PredictionWindow cot = random_cotangent(a, rng);
  for (int j : a.lower_joints) {
    cot.positions.col(j).setZero();
    cot.velocities.col(j).setZero();
  }
  const SampleGradients g = backward(p, cache, cot);
  const auto shapes = layer_shapes(a);
  for (LayerId id : {LayerId::kLowerHidden, LayerId::kLowerOut}) {
    const LayerShape& s = shapes[static_cast<int>(id)];
    EXPECT_TRUE(g.param_grads.segment(s.offset, s.size()).isZero(0.0));
  }
  for (LayerId id : {LayerId::kUpperHidden, LayerId::kUpperOut}) {
    const LayerShape& s = shapes[static_cast<int>(id)];
    EXPECT_FALSE(g.param_grads.segment(s.offset, s.size()).isZero(0.0));
  }
}

TEST(Backward, StaleCacheThrows) {
  const Architecture a = shrunken();
  PredictorParams p = random_params(a, 11);
  std::mt19937_64 rng(11);
  const auto [y, cache] = forward(p, random_window(a, rng), random_buffer(a, rng));
  const PredictionWindow cot = random_cotangent(a, rng);
  EXPECT_NO_THROW(backward(p, cache, cot));
  ++p.version;
  EXPECT_THROW(backward(p, cache, cot), std::logic_error);
  const PredictorParams other = random_params(a, 11);
  EXPECT_THROW(backward(other, cache, cot), std::logic_error);
}

TEST(Backward, CotangentShapeMismatchThrows) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 12);
  std::mt19937_64 rng(12);
  const auto [y, cache] = forward(p, random_window(a, rng), random_buffer(a, rng));
  EXPECT_THROW(backward(p, cache, PredictionWindow::Zero(2, 4)), std::invalid_argument);
}

TEST(Backward, BatchGradientIsSumOfSamples) {
  const Architecture a = shrunken();
  const PredictorParams p = random_params(a, 13);
  std::mt19937_64 rng(13);
  MatX in(a.inertial_size(), 3), buf(a.buffer_size(), 3), cot(a.output_size(), 3);
  VecX sum = VecX::Zero(parameter_count(a));
  for (int i = 0; i < 3; ++i) {
    const InputWindow w = random_window(a, rng);
    const BufferSnapshot b = random_buffer(a, rng);
    const PredictionWindow c = random_cotangent(a, rng);
    in.col(i) = w.data;
    buf.col(i) = b.flatten();
    cot.col(i) = c.flatten();
    const auto [y, cache] = forward(p, w, b);
    sum += backward(p, cache, c).param_grads;
  }
  ActivationCache cache;
  forward_batch(p, in, buf, &cache);
  const BackwardResult r = backward_batch(p, cache, cot);
  EXPECT_LT((r.param_grads - sum).cwiseAbs().maxCoeff(), 1e-12);
}

// OpenMP kernels against the serial reference.

TEST(Kernels, AffineMatchesReference) {
  std::mt19937_64 rng(14);
  for (auto [out, in, batch] : {std::tuple{7, 5, 1}, {300, 129, 37}, {64, 600, 256}}) {
    const MatX w = MatX::Random(out, in);
    const VecX b = VecX::Random(out);
    const MatX x = MatX::Random(in, batch);
    MatX y1(out, batch), y2(out, batch);
    kernels::affine_forward(w, b, x, y1);
    kernels::reference::affine_forward(w, b, x, y2);
    EXPECT_LT((y1 - y2).cwiseAbs().maxCoeff(), 1e-12);

    const MatX dz = MatX::Random(out, batch);
    MatX gw1(out, in), gw2(out, in), gx1, gx2;
    VecX gb1(out), gb2(out);
    kernels::affine_backward(w, x, dz, gw1, gb1, &gx1);
    kernels::reference::affine_backward(w, x, dz, gw2, gb2, &gx2);
    EXPECT_LT((gw1 - gw2).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT((gb1 - gb2).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT((gx1 - gx2).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Kernels, EluMatchesReference) {
  const MatX pre = 3.0 * MatX::Random(40, 33);
  const MatX gpost = MatX::Random(40, 33);
  MatX a(40, 33), b(40, 33), ga(40, 33), gb(40, 33);
  kernels::elu_forward(pre, a);
  kernels::reference::elu_forward(pre, b);
  EXPECT_EQ(a, b);
  kernels::elu_backward(pre, gpost, ga);
  kernels::reference::elu_backward(pre, gpost, gb);
  EXPECT_EQ(ga, gb);
}

}  // namespace
}  // namespace kinpred
