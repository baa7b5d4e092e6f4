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

#include "kinpred/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kinpred/dataset.hpp"
#include "kinpred/detail/fnv1a.hpp"

namespace kinpred {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

using json = nlohmann::json;
using K = CheckpointError::Kind;

namespace {

constexpr char kMagic[4] = {'K', 'P', 'C', 'K'};

json arch_json(const Architecture& a) {
  return {{"history", a.history},
          {"imus", a.imus},
          {"features", a.features},
          {"horizon", a.horizon},
          {"upper_joints", a.upper_joints},
          {"lower_joints", a.lower_joints},
          {"use_buffer", a.use_buffer},
          {"inertial_width", a.inertial_width},
          {"buffer_width", a.buffer_width},
          {"shared_width0", a.shared_width0},
          {"shared_width1", a.shared_width1},
          {"head_width", a.head_width}};
}

Architecture arch_from(const json& j) {
  Architecture a;
  a.history = j.at("history").get<int>();
  a.imus = j.at("imus").get<int>();
  a.features = j.at("features").get<int>();
  a.horizon = j.at("horizon").get<int>();
  a.upper_joints = j.at("upper_joints").get<std::vector<int>>();
  a.lower_joints = j.at("lower_joints").get<std::vector<int>>();
  a.use_buffer = j.at("use_buffer").get<bool>();
  a.inertial_width = j.at("inertial_width").get<int>();
  a.buffer_width = j.at("buffer_width").get<int>();
  a.shared_width0 = j.at("shared_width0").get<int>();
  a.shared_width1 = j.at("shared_width1").get<int>();
  a.head_width = j.at("head_width").get<int>();
  return a;
}

void put_block(std::string& out, const VecX& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

}  // namespace

std::string architecture_to_json(const Architecture& arch) { return arch_json(arch).dump(); }

Architecture architecture_from_json(const std::string& text) {
  try {
    return arch_from(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad architecture descriptor: ") + e.what());
  }
}

std::string encode_checkpoint(const Checkpoint& ck) {
  const PredictorParams& p = ck.params;
  json header;
  header["format_version"] = kCheckpointVersion;
  header["architecture"] = arch_json(p.arch);
  header["model_hash"] = hash_to_hex(ck.model_hash);
  header["config_hash"] = hash_to_hex(ck.config_hash);
  header["parameter_count"] = p.values.size();
  header["inertial_stats"] = p.norm.inertial_mean.size();
  header["buffer_stats"] = p.norm.buffer_mean.size();
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint32_t len = static_cast<std::uint32_t>(text.size());
  out.append(reinterpret_cast<const char*>(&version), 4);
  out.append(reinterpret_cast<const char*>(&len), 4);
  out += text;
  put_block(out, p.norm.inertial_mean);
  put_block(out, p.norm.inertial_std);
  put_block(out, p.norm.buffer_mean);
  put_block(out, p.norm.buffer_std);
  put_block(out, p.values);
  detail::Fnv1a h;
  h.update(out.data(), out.size());
  const std::uint64_t digest = h.digest();
  out.append(reinterpret_cast<const char*>(&digest), 8);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes,
                             std::optional<std::uint64_t> expected_model_hash) {
  if (bytes.size() < 20) throw CheckpointError(K::kCorrupt, "checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(K::kBadMagic, "not a checkpoint file");
  }
  std::uint32_t version, len;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&len, bytes.data() + 8, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(K::kVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t body = bytes.size() - 8;
  {
    detail::Fnv1a h;
    h.update(bytes.data(), body);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, 8);
    if (stored != h.digest()) throw CheckpointError(K::kCorrupt, "checkpoint checksum mismatch");
  }
  if (12 + static_cast<std::size_t>(len) > body) {
    throw CheckpointError(K::kCorrupt, "checkpoint header overruns file");
  }

  Checkpoint ck;
  Architecture arch;
  std::size_t nparams = 0, ni = 0, nb = 0;
  try {
    const json header = json::parse(bytes.substr(12, len));
    arch = arch_from(header.at("architecture"));
    ck.model_hash = std::stoull(header.at("model_hash").get<std::string>(), nullptr, 16);
    ck.config_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
    nparams = header.at("parameter_count").get<std::size_t>();
    ni = header.at("inertial_stats").get<std::size_t>();
    nb = header.at("buffer_stats").get<std::size_t>();
  } catch (const json::exception& e) {
    throw CheckpointError(K::kCorrupt, std::string("bad checkpoint header: ") + e.what());
  } catch (const std::logic_error& e) {
    throw CheckpointError(K::kCorrupt, std::string("bad checkpoint header: ") + e.what());
  }
  if (expected_model_hash && *expected_model_hash != ck.model_hash) {
    throw CheckpointError(K::kModelMismatch,
                          "checkpoint was trained for model " + hash_to_hex(ck.model_hash) +
                              ", expected " + hash_to_hex(*expected_model_hash));
  }
  const std::size_t doubles = 2 * ni + 2 * nb + nparams;
  if (body - 12 - len != doubles * sizeof(double)) {
    throw CheckpointError(K::kCorrupt, "checkpoint body size does not match header");
  }
  const char* p = bytes.data() + 12 + len;
  auto take = [&](std::size_t n) {
    VecX v(static_cast<Eigen::Index>(n));
    std::memcpy(v.data(), p, n * sizeof(double));
    p += n * sizeof(double);
    return v;
  };
  Normalization norm;
  norm.inertial_mean = take(ni);
  norm.inertial_std = take(ni);
  norm.buffer_mean = take(nb);
  norm.buffer_std = take(nb);
  VecX values = take(nparams);
  try {
    ck.params = make_params(arch, std::move(norm), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(K::kCorrupt, e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(K::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(K::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(K::kIo, "cannot rename to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_model_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(K::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str(), expected_model_hash);
}

}  // namespace kinpred
