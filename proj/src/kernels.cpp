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

#include "kinpred/kernels.hpp"

#include <algorithm>
#include <cassert>

#include <omp.h>

namespace kinpred::kernels {
namespace {

constexpr int kColumnBlock = 32;
constexpr int kRowBlock = 64;

int num_blocks(int extent, int block) { return (extent + block - 1) / block; }

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void affine_forward(ConstMatRef weight, ConstVecRef bias, ConstMatRef input,
                    MatRef output) {
  assert(weight.cols() == input.rows());
  assert(output.rows() == weight.rows() && output.cols() == input.cols());
  const int batch = static_cast<int>(input.cols());
  const int rows = static_cast<int>(weight.rows());
  if (batch >= kColumnBlock) {
    const int blocks = num_blocks(batch, kColumnBlock);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
      const int c0 = b * kColumnBlock;
      const int nc = std::min(kColumnBlock, batch - c0);
      output.middleCols(c0, nc).noalias() = weight * input.middleCols(c0, nc);
      output.middleCols(c0, nc).colwise() += bias;
    }
  } else {
    // Few samples (inference): split the output rows instead.
    const int blocks = num_blocks(rows, kRowBlock);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
      const int r0 = b * kRowBlock;
      const int nr = std::min(kRowBlock, rows - r0);
      output.middleRows(r0, nr).noalias() = weight.middleRows(r0, nr) * input;
      output.middleRows(r0, nr).colwise() += bias.segment(r0, nr);
    }
  }
}

void affine_backward(ConstMatRef weight, ConstMatRef input, ConstMatRef grad_output,
                     MatRef grad_weight, VecRef grad_bias, MatX* grad_input) {
  assert(grad_output.rows() == weight.rows() && grad_output.cols() == input.cols());
  const int rows = static_cast<int>(weight.rows());
  const int row_blocks = num_blocks(rows, kRowBlock);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < row_blocks; ++b) {
    const int r0 = b * kRowBlock;
    const int nr = std::min(kRowBlock, rows - r0);
    grad_weight.middleRows(r0, nr).noalias() =
        grad_output.middleRows(r0, nr) * input.transpose();
    grad_bias.segment(r0, nr) = grad_output.middleRows(r0, nr).rowwise().sum();
  }
  if (grad_input == nullptr) return;
  const int batch = static_cast<int>(input.cols());
  grad_input->resize(weight.cols(), batch);
  if (batch >= kColumnBlock) {
    const int blocks = num_blocks(batch, kColumnBlock);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
      const int c0 = b * kColumnBlock;
      const int nc = std::min(kColumnBlock, batch - c0);
      grad_input->middleCols(c0, nc).noalias() =
          weight.transpose() * grad_output.middleCols(c0, nc);
    }
  } else {
    grad_input->noalias() = weight.transpose() * grad_output;
  }
}

void elu_forward(ConstMatRef pre, MatRef post) {
  const int cols = static_cast<int>(pre.cols());
  const int rows = static_cast<int>(pre.rows());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) post(r, c) = elu(pre(r, c));
  }
}

void elu_backward(ConstMatRef pre, ConstMatRef grad_post, MatRef grad_pre) {
  const int cols = static_cast<int>(pre.cols());
  const int rows = static_cast<int>(pre.rows());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) grad_pre(r, c) = grad_post(r, c) * elu_prime(pre(r, c));
  }
}

namespace reference {

void affine_forward(ConstMatRef weight, ConstVecRef bias, ConstMatRef input,
                    MatRef output) {
  for (Eigen::Index c = 0; c < input.cols(); ++c) {
    for (Eigen::Index r = 0; r < weight.rows(); ++r) {
      double sum = bias[r];
      for (Eigen::Index k = 0; k < weight.cols(); ++k) sum += weight(r, k) * input(k, c);
      output(r, c) = sum;
    }
  }
}

void affine_backward(ConstMatRef weight, ConstMatRef input, ConstMatRef grad_output,
                     MatRef grad_weight, VecRef grad_bias, MatX* grad_input) {
  for (Eigen::Index r = 0; r < weight.rows(); ++r) {
    double db = 0.0;
    for (Eigen::Index c = 0; c < input.cols(); ++c) db += grad_output(r, c);
    grad_bias[r] = db;
    for (Eigen::Index k = 0; k < weight.cols(); ++k) {
      double dw = 0.0;
      for (Eigen::Index c = 0; c < input.cols(); ++c) dw += grad_output(r, c) * input(k, c);
      grad_weight(r, k) = dw;
    }
  }
  if (grad_input == nullptr) return;
  grad_input->resize(weight.cols(), input.cols());
  for (Eigen::Index c = 0; c < input.cols(); ++c) {
    for (Eigen::Index k = 0; k < weight.cols(); ++k) {
      double sum = 0.0;
      for (Eigen::Index r = 0; r < weight.rows(); ++r) sum += weight(r, k) * grad_output(r, c);
      (*grad_input)(k, c) = sum;
    }
  }
}

void elu_forward(ConstMatRef pre, MatRef post) {
  for (Eigen::Index c = 0; c < pre.cols(); ++c) {
    for (Eigen::Index r = 0; r < pre.rows(); ++r) post(r, c) = elu(pre(r, c));
  }
}

void elu_backward(ConstMatRef pre, ConstMatRef grad_post, MatRef grad_pre) {
  for (Eigen::Index c = 0; c < pre.cols(); ++c) {
    for (Eigen::Index r = 0; r < pre.rows(); ++r) {
      grad_pre(r, c) = grad_post(r, c) * elu_prime(pre(r, c));
    }
  }
}

}  // namespace reference
}  // namespace kinpred::kernels
