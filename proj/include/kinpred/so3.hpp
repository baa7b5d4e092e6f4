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

#ifndef KINPRED_SO3_HPP_
#define KINPRED_SO3_HPP_

#include <array>
#include <span>

#include <Eigen/Dense>

namespace kinpred {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Flattened 3x3 rotation, row-major.
using FlatRotation = std::array<double, 9>;

Mat3 skew(const Vec3& v);

// Rodrigues formula; `axis` must be unit length.
Mat3 axis_angle(const Vec3& axis, double angle);

// Exponential map of a rotation vector.
Mat3 exp_so3(const Vec3& rotation_vector);

// Inverse of exp_so3, angle in [0, pi].
Vec3 log_so3(const Mat3& rotation);

// URDF convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rpy_to_rotation(double roll, double pitch, double yaw);

// Rotation angle of Ra^T Rb in radians.
double geodesic_angle(const Mat3& a, const Mat3& b);

bool is_rotation(const Mat3& r, double tolerance);

FlatRotation flatten(const Mat3& r);
Mat3 unflatten(std::span<const double, 9> flat);

}  // namespace kinpred

#endif  // KINPRED_SO3_HPP_
