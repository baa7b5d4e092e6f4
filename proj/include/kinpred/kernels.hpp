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

// Dense-layer kernels over a batch stored column-per-sample.
//
// The kinpred::kernels functions split work into fixed-size blocks and run
// the blocks under OpenMP. Block boundaries do not depend on the thread
// count, so results are bitwise identical for any OMP_NUM_THREADS. The
// kinpred::kernels::reference functions are plain serial loops kept as the
// test oracle and the benchmark baseline.

#ifndef KINPRED_KERNELS_HPP_
#define KINPRED_KERNELS_HPP_

#include <cmath>

#include "kinpred/so3.hpp"

namespace kinpred::kernels {

using ConstMatRef = Eigen::Ref<const MatX>;
using ConstVecRef = Eigen::Ref<const VecX>;
using MatRef = Eigen::Ref<MatX>;
using VecRef = Eigen::Ref<VecX>;

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_prime(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

// z = W x + b for every column x of `input`.
void affine_forward(ConstMatRef weight, ConstVecRef bias, ConstMatRef input,
                    MatRef output);

// Given dZ: grad_weight = dZ X^T, grad_bias = dZ 1, and, when grad_input is
// non-null, *grad_input = W^T dZ. Gradients are overwritten, not accumulated.
void affine_backward(ConstMatRef weight, ConstMatRef input, ConstMatRef grad_output,
                     MatRef grad_weight, VecRef grad_bias, MatX* grad_input);

void elu_forward(ConstMatRef pre, MatRef post);

// grad_pre = grad_post .* elu'(pre)
void elu_backward(ConstMatRef pre, ConstMatRef grad_post, MatRef grad_pre);

namespace reference {

void affine_forward(ConstMatRef weight, ConstVecRef bias, ConstMatRef input,
                    MatRef output);
void affine_backward(ConstMatRef weight, ConstMatRef input, ConstMatRef grad_output,
                     MatRef grad_weight, VecRef grad_bias, MatX* grad_input);
void elu_forward(ConstMatRef pre, MatRef post);
void elu_backward(ConstMatRef pre, ConstMatRef grad_post, MatRef grad_pre);

}  // namespace reference

int max_threads();

}  // namespace kinpred::kernels

#endif  // KINPRED_KERNELS_HPP_
