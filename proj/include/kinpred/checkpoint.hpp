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

// Predictor checkpoints. Byte layout in docs/formats.md.

#ifndef KINPRED_CHECKPOINT_HPP_
#define KINPRED_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "kinpred/network.hpp"

namespace kinpred {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kVersion, kCorrupt, kModelMismatch };

  CheckpointError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Checkpoint {
  PredictorParams params;
  std::uint64_t model_hash = 0;
  std::uint64_t config_hash = 0;
};

// JSON text of the architecture descriptor, also used in run manifests.
std::string architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const std::string& text);

std::string encode_checkpoint(const Checkpoint& checkpoint);
// Throws CheckpointError.
Checkpoint decode_checkpoint(const std::string& bytes,
                             std::optional<std::uint64_t> expected_model_hash = {});

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_model_hash = {});

}  // namespace kinpred

#endif  // KINPRED_CHECKPOINT_HPP_
