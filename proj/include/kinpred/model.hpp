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

// Floating-base kinematic tree with revolute joints.
//
// Models are read from a small line-oriented text format (see
// docs/formats.md). Joint order is declaration order and is the single
// index space used by every joint-space vector in the library.

#ifndef KINPRED_MODEL_HPP_
#define KINPRED_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kinpred/so3.hpp"

namespace kinpred {

struct RigidTransform {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  bool operator==(const RigidTransform&) const = default;
};

struct LinkSpec {
  std::string name;

  bool operator==(const LinkSpec&) const = default;
};

struct JointLimits {
  double lower = 0.0;
  double upper = 0.0;

  bool operator==(const JointLimits&) const = default;
};

struct JointSpec {
  std::string name;
  int parent = -1;
  int child = -1;
  // Parent link frame -> joint frame at zero joint angle.
  RigidTransform origin;
  // Unit rotation axis in the joint frame.
  Vec3 axis = Vec3::UnitZ();
  JointLimits limits;

  bool operator==(const JointSpec&) const = default;
};

// q = (base position, base rotation, joint positions).
struct Configuration {
  Vec3 base_position = Vec3::Zero();
  Mat3 base_rotation = Mat3::Identity();
  VecX joint_positions;
};

// nu = (base linear velocity, base angular velocity, joint velocities), all
// base quantities expressed in the inertial frame.
struct SystemVelocity {
  Vec3 base_linear = Vec3::Zero();
  Vec3 base_angular = Vec3::Zero();
  VecX joint_velocities;
};

class ModelError : public std::runtime_error {
 public:
  enum class Kind {
    kSyntax,
    kNotATree,
    kUnknownLink,
    kUnknownJoint,
    kNonUnitAxis,
    kBadLimits,
    kMissingPartition,
    kBadPartition,
    kBadInstrumentation,
    kDuplicateName,
  };

  ModelError(Kind kind, const std::string& message, int line = 0,
             int column = 0);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

class RigidBodyModel {
 public:
  // Validates and builds a model. Throws ModelError.
  static RigidBodyModel Create(std::string name, std::vector<LinkSpec> links,
                               std::vector<JointSpec> joints, int base_link,
                               std::vector<int> instrumented_links,
                               std::vector<int> upper_joints,
                               std::vector<int> lower_joints);

  const std::string& name() const { return name_; }
  int num_links() const { return static_cast<int>(links_.size()); }
  int num_joints() const { return static_cast<int>(joints_.size()); }
  const std::vector<LinkSpec>& links() const { return links_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const JointSpec& joint(int index) const { return joints_[index]; }
  int base_link() const { return base_link_; }
  const std::vector<int>& instrumented_links() const { return instrumented_; }
  const std::vector<int>& upper_joints() const { return upper_; }
  const std::vector<int>& lower_joints() const { return lower_; }

  // Joint whose child is `link`; -1 for the base link.
  int parent_joint(int link) const { return parent_joint_[link]; }
  // Joints in an order where every joint follows the joint of its parent.
  const std::vector<int>& traversal_order() const { return traversal_; }
  // Joints on the path base -> link, root first.
  const std::vector<int>& chain(int link) const { return chains_[link]; }

  // -1 when absent.
  int link_index(std::string_view name) const;
  int joint_index(std::string_view name) const;

  bool operator==(const RigidBodyModel& other) const;

 private:
  RigidBodyModel() = default;

  std::string name_;
  std::vector<LinkSpec> links_;
  std::vector<JointSpec> joints_;
  int base_link_ = 0;
  std::vector<int> instrumented_;
  std::vector<int> upper_;
  std::vector<int> lower_;

  std::vector<int> parent_joint_;
  std::vector<int> traversal_;
  std::vector<std::vector<int>> chains_;
};

RigidBodyModel parse_model(std::string_view text);
RigidBodyModel load_model(const std::filesystem::path& path);

// Canonical text form; parse_model(serialize_model(m)) == m.
std::string serialize_model(const RigidBodyModel& model);

// FNV-1a over the canonical text form.
std::uint64_t model_hash(const RigidBodyModel& model);

Configuration neutral_configuration(const RigidBodyModel& model);

VecX clamp_to_limits(const RigidBodyModel& model, const VecX& joint_positions);

}  // namespace kinpred

#endif  // KINPRED_MODEL_HPP_
