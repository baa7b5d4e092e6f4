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

#include "kinpred/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kinpred/detail/fnv1a.hpp"

namespace kinpred {

static_assert(std::endian::native == std::endian::little,
              "dataset I/O assumes a little-endian host");

using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'K', 'P', 'D', 'S'};

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

// Bounds-checked reader over the raw file contents.
class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}

  void read(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw DatasetError(DatasetError::Kind::kCorrupt,
                         "dataset truncated at byte " + std::to_string(pos_));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    read(&v, sizeof v);
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void append_rotation(std::vector<double>& col, const Mat3& r) {
  const FlatRotation f = flatten(r);
  col.insert(col.end(), f.begin(), f.end());
}
void append_vec(std::vector<double>& col, const Vec3& v) {
  col.insert(col.end(), v.data(), v.data() + 3);
}

Vec3 vec_at(const double* p) { return Eigen::Map<const Vec3>(p); }
Mat3 rotation_at(const double* p) { return unflatten(std::span<const double, 9>(p, 9)); }

}  // namespace

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<DatasetColumn> dataset_columns(int joints, int links) {
  return {
      {"base_position", 3},          {"base_rotation", 9},
      {"joint_positions", joints},   {"base_linear", 3},
      {"base_angular", 3},           {"joint_velocities", joints},
      {"link_position", 3 * links},  {"link_rotation", 9 * links},
      {"link_linear", 3 * links},    {"link_angular", 3 * links},
      {"imu_acceleration", 3 * links}, {"imu_orientation", 9 * links},
  };
}

std::string encode_dataset(const RecordedSequence& seq) {
  const int frames = seq.size();
  const int n = frames ? static_cast<int>(seq.frames[0].q.joint_positions.size()) : 0;
  const int d = frames ? static_cast<int>(seq.frames[0].link_poses.size()) : 0;
  const auto columns = dataset_columns(n, d);

  std::vector<std::vector<double>> data(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    data[c].reserve(static_cast<std::size_t>(columns[c].width) * frames);
  }
  for (int t = 0; t < frames; ++t) {
    const Frame& f = seq.frames[t];
    if (f.q.joint_positions.size() != n || f.nu.joint_velocities.size() != n ||
        static_cast<int>(f.link_poses.size()) != d ||
        static_cast<int>(f.link_twists.size()) != d || static_cast<int>(f.imus.size()) != d) {
      throw DatasetError(DatasetError::Kind::kShape,
                         "frame " + std::to_string(t) + " has inconsistent sizes");
    }
    append_vec(data[0], f.q.base_position);
    append_rotation(data[1], f.q.base_rotation);
    data[2].insert(data[2].end(), f.q.joint_positions.data(), f.q.joint_positions.data() + n);
    append_vec(data[3], f.nu.base_linear);
    append_vec(data[4], f.nu.base_angular);
    data[5].insert(data[5].end(), f.nu.joint_velocities.data(),
                   f.nu.joint_velocities.data() + n);
    for (int i = 0; i < d; ++i) {
      append_vec(data[6], f.link_poses[i].position);
      append_rotation(data[7], f.link_poses[i].rotation);
      append_vec(data[8], f.link_twists[i].linear);
      append_vec(data[9], f.link_twists[i].angular);
      append_vec(data[10], f.imus[i].acceleration);
      append_rotation(data[11], f.imus[i].orientation);
    }
  }

  json header;
  header["format_version"] = kDatasetVersion;
  header["rate"] = seq.rate;
  header["model_hash"] = hash_to_hex(seq.model_hash);
  header["joints"] = n;
  header["links"] = d;
  header["frames"] = frames;
  json manifest = json::array();
  for (const auto& c : columns) manifest.push_back({{"name", c.name}, {"width", c.width}});
  header["columns"] = manifest;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& col : data) {
    out.append(reinterpret_cast<const char*>(col.data()), col.size() * sizeof(double));
  }
  detail::Fnv1a h;
  h.update(out.data(), out.size());
  put_u64(out, h.digest());
  return out;
}

RecordedSequence decode_dataset(const std::string& bytes,
                                std::optional<std::uint64_t> expected_model_hash) {
  using K = DatasetError::Kind;
  Cursor cur(bytes);
  char magic[4];
  cur.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DatasetError(K::kBadMagic, "not a dataset file");
  const std::uint32_t version = cur.u32();
  if (version != kDatasetVersion) {
    throw DatasetError(K::kVersion, "unsupported dataset version " + std::to_string(version));
  }
  if (bytes.size() < sizeof(std::uint64_t) + cur.pos()) {
    throw DatasetError(K::kCorrupt, "dataset truncated");
  }
  // Checksum first: a truncated or damaged body never yields partial data.
  {
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    detail::Fnv1a h;
    h.update(bytes.data(), body);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, sizeof stored);
    if (stored != h.digest()) throw DatasetError(K::kCorrupt, "dataset checksum mismatch");
  }
  const std::uint32_t header_len = cur.u32();
  std::string text(header_len, '\0');
  cur.read(text.data(), header_len);
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw DatasetError(K::kCorrupt, std::string("bad dataset header: ") + e.what());
  }

  RecordedSequence seq;
  int n = 0, d = 0, frames = 0;
  try {
    seq.rate = header.at("rate").get<double>();
    seq.model_hash = std::stoull(header.at("model_hash").get<std::string>(), nullptr, 16);
    n = header.at("joints").get<int>();
    d = header.at("links").get<int>();
    frames = header.at("frames").get<int>();
    const auto expected = dataset_columns(n, d);
    const json& manifest = header.at("columns");
    if (manifest.size() != expected.size()) throw DatasetError(K::kCorrupt, "column manifest");
    for (std::size_t c = 0; c < expected.size(); ++c) {
      if (manifest[c].at("name").get<std::string>() != expected[c].name ||
          manifest[c].at("width").get<int>() != expected[c].width) {
        throw DatasetError(K::kCorrupt, "unexpected column '" +
                                            manifest[c].at("name").get<std::string>() + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DatasetError(K::kCorrupt, std::string("bad dataset header: ") + e.what());
  } catch (const std::logic_error& e) {
    throw DatasetError(K::kCorrupt, std::string("bad dataset header: ") + e.what());
  }
  if (n < 0 || d < 0 || frames < 0) throw DatasetError(K::kCorrupt, "negative dimensions");
  if (expected_model_hash && *expected_model_hash != seq.model_hash) {
    throw DatasetError(K::kModelMismatch,
                       "dataset was written for model " + hash_to_hex(seq.model_hash) +
                           ", expected " + hash_to_hex(*expected_model_hash));
  }

  const auto columns = dataset_columns(n, d);
  std::size_t total = 0;
  for (const auto& c : columns) total += static_cast<std::size_t>(c.width) * frames;
  if (cur.remaining() != total * sizeof(double) + sizeof(std::uint64_t)) {
    throw DatasetError(K::kCorrupt, "dataset body size does not match header");
  }
  std::vector<std::vector<double>> data(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    data[c].resize(static_cast<std::size_t>(columns[c].width) * frames);
    cur.read(data[c].data(), data[c].size() * sizeof(double));
  }

  seq.frames.resize(frames);
  for (int t = 0; t < frames; ++t) {
    Frame& f = seq.frames[t];
    f.q.base_position = vec_at(&data[0][3 * t]);
    f.q.base_rotation = rotation_at(&data[1][9 * t]);
    f.q.joint_positions = Eigen::Map<const VecX>(&data[2][static_cast<std::size_t>(n) * t], n);
    f.nu.base_linear = vec_at(&data[3][3 * t]);
    f.nu.base_angular = vec_at(&data[4][3 * t]);
    f.nu.joint_velocities =
        Eigen::Map<const VecX>(&data[5][static_cast<std::size_t>(n) * t], n);
    f.link_poses.resize(d);
    f.link_twists.resize(d);
    f.imus.resize(d);
    for (int i = 0; i < d; ++i) {
      const std::size_t k = static_cast<std::size_t>(t) * d + i;
      f.link_poses[i].position = vec_at(&data[6][3 * k]);
      f.link_poses[i].rotation = rotation_at(&data[7][9 * k]);
      f.link_twists[i].linear = vec_at(&data[8][3 * k]);
      f.link_twists[i].angular = vec_at(&data[9][3 * k]);
      f.imus[i].acceleration = vec_at(&data[10][3 * k]);
      f.imus[i].orientation = rotation_at(&data[11][9 * k]);
    }
  }
  return seq;
}

void write_dataset(const RecordedSequence& sequence, const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(sequence);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(DatasetError::Kind::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DatasetError(DatasetError::Kind::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DatasetError(DatasetError::Kind::kIo, "cannot rename to " + path.string());
}

RecordedSequence read_dataset(const std::filesystem::path& path,
                              std::optional<std::uint64_t> expected_model_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_dataset(ss.str(), expected_model_hash);
}

namespace {

json vec_json(const double* p, int n) { return json(std::vector<double>(p, p + n)); }
json rot_json(const Mat3& r) {
  const FlatRotation f = flatten(r);
  return json(std::vector<double>(f.begin(), f.end()));
}

std::vector<double> numbers(const json& j, std::size_t expect, const char* what, long record) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != expect) {
    throw DatasetError(DatasetError::Kind::kShape,
                       "record " + std::to_string(record) + ": '" + what + "' has " +
                           std::to_string(v.size()) + " entries, expected " +
                           std::to_string(expect));
  }
  return v;
}

}  // namespace

std::string frame_to_json(const Frame& f, int index) {
  json j;
  j["t"] = index;
  j["q"] = {{"base_position", vec_json(f.q.base_position.data(), 3)},
            {"base_rotation", rot_json(f.q.base_rotation)},
            {"joints", vec_json(f.q.joint_positions.data(),
                                static_cast<int>(f.q.joint_positions.size()))}};
  j["nu"] = {{"base_linear", vec_json(f.nu.base_linear.data(), 3)},
             {"base_angular", vec_json(f.nu.base_angular.data(), 3)},
             {"joints", vec_json(f.nu.joint_velocities.data(),
                                 static_cast<int>(f.nu.joint_velocities.size()))}};
  json links = json::array();
  for (std::size_t i = 0; i < f.link_poses.size(); ++i) {
    links.push_back({{"position", vec_json(f.link_poses[i].position.data(), 3)},
                     {"rotation", rot_json(f.link_poses[i].rotation)},
                     {"linear", vec_json(f.link_twists[i].linear.data(), 3)},
                     {"angular", vec_json(f.link_twists[i].angular.data(), 3)}});
  }
  j["links"] = links;
  json imus = json::array();
  for (const ImuReading& r : f.imus) {
    imus.push_back({{"acceleration", vec_json(r.acceleration.data(), 3)},
                    {"orientation", rot_json(r.orientation)}});
  }
  j["imus"] = imus;
  return j.dump();
}

Frame frame_from_json(const std::string& line, int joints, int links, long record) {
  using K = DatasetError::Kind;
  const std::string where = "record " + std::to_string(record);
  Frame f;
  try {
    const json j = json::parse(line);
    auto vec3 = [&](const json& v, const char* what) {
      const auto x = numbers(v, 3, what, record);
      return Vec3(x[0], x[1], x[2]);
    };
    auto rot = [&](const json& v, const char* what) {
      const auto x = numbers(v, 9, what, record);
      return unflatten(std::span<const double, 9>(x.data(), 9));
    };
    auto vecn = [&](const json& v, const char* what) {
      const auto x = numbers(v, static_cast<std::size_t>(joints), what, record);
      return VecX(Eigen::Map<const VecX>(x.data(), joints));
    };
    const json& q = j.at("q");
    f.q.base_position = vec3(q.at("base_position"), "q.base_position");
    f.q.base_rotation = rot(q.at("base_rotation"), "q.base_rotation");
    f.q.joint_positions = vecn(q.at("joints"), "q.joints");
    const json& nu = j.at("nu");
    f.nu.base_linear = vec3(nu.at("base_linear"), "nu.base_linear");
    f.nu.base_angular = vec3(nu.at("base_angular"), "nu.base_angular");
    f.nu.joint_velocities = vecn(nu.at("joints"), "nu.joints");
    const json& ls = j.at("links");
    const json& is = j.at("imus");
    if (static_cast<int>(ls.size()) != links) {
      throw DatasetError(K::kShape, where + ": " + std::to_string(ls.size()) +
                                        " links, expected " + std::to_string(links));
    }
    if (static_cast<int>(is.size()) != links) {
      throw DatasetError(K::kShape, where + ": " + std::to_string(is.size()) +
                                        " IMUs, expected " + std::to_string(links));
    }
    for (const json& l : ls) {
      f.link_poses.push_back({vec3(l.at("position"), "position"), rot(l.at("rotation"), "rotation")});
      f.link_twists.push_back({vec3(l.at("linear"), "linear"), vec3(l.at("angular"), "angular")});
    }
    for (const json& r : is) {
      f.imus.push_back(
          {vec3(r.at("acceleration"), "acceleration"), rot(r.at("orientation"), "orientation")});
    }
  } catch (const json::exception& e) {
    throw DatasetError(K::kShape, where + ": " + e.what());
  }
  return f;
}

}  // namespace kinpred
