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

// Dataset files: versioned columnar binary with a JSON header. Byte layout
// is described in docs/formats.md.

#ifndef KINPRED_DATASET_HPP_
#define KINPRED_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinpred/motion.hpp"

namespace kinpred {

inline constexpr std::uint32_t kDatasetVersion = 1;

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kVersion, kCorrupt, kModelMismatch, kShape };

  DatasetError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct DatasetColumn {
  std::string name;
  int width = 0;  // doubles per frame
};

// Column manifest for a sequence with n joints and D instrumented links.
std::vector<DatasetColumn> dataset_columns(int joints, int links);

std::string encode_dataset(const RecordedSequence& sequence);
// Throws DatasetError. If `expected_model_hash` is set and differs from the
// file's, throws kModelMismatch.
RecordedSequence decode_dataset(const std::string& bytes,
                                std::optional<std::uint64_t> expected_model_hash = {});

// Writes through a temporary file and rename.
void write_dataset(const RecordedSequence& sequence, const std::filesystem::path& path);
RecordedSequence read_dataset(const std::filesystem::path& path,
                              std::optional<std::uint64_t> expected_model_hash = {});

// One frame as a JSON object (the streaming record format):
//   {"t": index, "q": {...}, "nu": {...}, "links": [...], "imus": [...]}
// Rotations are 9 row-major entries.
std::string frame_to_json(const Frame& frame, int index);
// Throws DatasetError(kShape) naming `record` when the frame does not have
// `joints` joint entries and `links` link/IMU entries.
Frame frame_from_json(const std::string& line, int joints, int links, long record);

std::string hash_to_hex(std::uint64_t hash);

}  // namespace kinpred

#endif  // KINPRED_DATASET_HPP_
