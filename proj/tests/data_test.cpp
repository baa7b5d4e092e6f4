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
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "kinpred/dataset.hpp"
#include "kinpred/motion.hpp"
#include "test_util.hpp"

namespace kinpred {
namespace {

using testing::humanoid;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("kinpred_data_test_" + name);
}

const Vec3 kG(0, 0, kGravity);

// Motion kinds

TEST(MotionKind, NamesRoundTrip) {
  EXPECT_EQ(all_motion_kinds().size(), 6u);
  for (MotionKind k : all_motion_kinds()) EXPECT_EQ(parse_motion_kind(to_string(k)), k);
  EXPECT_EQ(to_string(MotionKind::kSideStep), "side_step");
  EXPECT_EQ(parse_motion_kind("forward_walk"), MotionKind::kForwardWalk);
  EXPECT_FALSE(parse_motion_kind("moonwalk").has_value());
}

// Generation

TEST(GenerateMotion, StandIsStill) {
  const RecordedSequence seq = generate_motion(humanoid(), MotionKind::kStand, 2.0, 60.0, 3);
  ASSERT_EQ(seq.size(), 120);
  for (const Frame& f : seq.frames) {
    EXPECT_TRUE(f.nu.joint_velocities.isZero(0.0));
    EXPECT_TRUE(f.nu.base_linear.isZero(0.0));
    EXPECT_TRUE(f.nu.base_angular.isZero(0.0));
    EXPECT_EQ(f.q.base_position, seq.frames[0].q.base_position);
    EXPECT_EQ(f.q.base_rotation, seq.frames[0].q.base_rotation);
    EXPECT_EQ(f.q.joint_positions, seq.frames[0].q.joint_positions);
  }
}

TEST(GenerateMotion, FrameCountAndRate) {
  const RecordedSequence seq = generate_motion(humanoid(), MotionKind::kForwardWalk, 3.0, 50.0, 1);
  EXPECT_EQ(seq.size(), 150);
  EXPECT_EQ(seq.rate, 50.0);
  EXPECT_EQ(seq.model_hash, model_hash(humanoid()));
}

TEST(GenerateMotion, TooShortThrows) {
  EXPECT_THROW(generate_motion(humanoid(), MotionKind::kForwardWalk, 1.0, 60.0, 1),
               std::invalid_argument);
  EXPECT_NO_THROW(generate_motion(humanoid(), MotionKind::kForwardWalk, 1.0, 60.0, 1, 60));
}

TEST(GenerateMotion, SameSeedSameSequence) {
  for (MotionKind k : all_motion_kinds()) {
    const RecordedSequence a = generate_motion(humanoid(), k, 2.0, 60.0, 11);
    const RecordedSequence b = generate_motion(humanoid(), k, 2.0, 60.0, 11);
    EXPECT_TRUE(a == b) << to_string(k);
    if (k != MotionKind::kStand) {
      EXPECT_FALSE(a == generate_motion(humanoid(), k, 2.0, 60.0, 12)) << to_string(k);
    }
  }
}

TEST(GenerateMotion, VelocitiesMatchCentralDifferences) {
  for (MotionKind k : all_motion_kinds()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RecordedSequence seq = generate_motion(humanoid(), k, 12.0, 60.0, seed);
      const double h = seq.dt();
      double worst_joint = 0.0, worst_base = 0.0, worst_omega = 0.0;
      for (int t = 1; t + 1 < seq.size(); ++t) {
        const Frame& a = seq.frames[t - 1];
        const Frame& b = seq.frames[t + 1];
        const Frame& f = seq.frames[t];
        const VecX fd = (b.q.joint_positions - a.q.joint_positions) / (2 * h);
        worst_joint = std::max(worst_joint, (fd - f.nu.joint_velocities).cwiseAbs().maxCoeff());
        const Vec3 fdp = (b.q.base_position - a.q.base_position) / (2 * h);
        worst_base = std::max(worst_base, (fdp - f.nu.base_linear).cwiseAbs().maxCoeff());
        const Vec3 fdw = log_so3(b.q.base_rotation * a.q.base_rotation.transpose()) / (2 * h);
        worst_omega = std::max(worst_omega, (fdw - f.nu.base_angular).cwiseAbs().maxCoeff());
      }
      EXPECT_LT(worst_joint, 1e-3) << to_string(k) << " seed " << seed;
      EXPECT_LT(worst_base, 1e-3) << to_string(k) << " seed " << seed;
      EXPECT_LT(worst_omega, 1e-3) << to_string(k) << " seed " << seed;
    }
  }
}

TEST(GenerateMotion, RespectsJointLimits) {
  for (MotionKind k : all_motion_kinds()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      for (const Frame& f : generate_motion(humanoid(), k, 10.0, 60.0, seed).frames) {
        EXPECT_EQ(clamp_to_limits(humanoid(), f.q.joint_positions), f.q.joint_positions);
      }
    }
  }
}

TEST(GenerateMotion, KinematicallySelfConsistent) {
  for (MotionKind k : all_motion_kinds()) {
    const RecordedSequence seq = generate_motion(humanoid(), k, 2.0, 60.0, 5);
    for (const Frame& f : seq.frames) {
      const auto poses = forward_kinematics(humanoid(), f.q);
      const auto& links = humanoid().instrumented_links();
      ASSERT_EQ(f.link_poses.size(), links.size());
      for (std::size_t d = 0; d < links.size(); ++d) {
        EXPECT_LT((f.link_poses[d].position - poses[links[d]].position).norm(), 1e-9);
        EXPECT_LT((f.link_poses[d].rotation - poses[links[d]].rotation).norm(), 1e-9);
        const LinkTwist v = differential_kinematics(humanoid(), f.q, f.nu, links[d]);
        EXPECT_LT((f.link_twists[d].stacked() - v.stacked()).norm(), 1e-9);
      }
      EXPECT_TRUE(is_rotation(f.q.base_rotation, 1e-8));
    }
  }
}

TEST(GenerateMotion, WalkingMovesTheLegsInAntiphase) {
  const RecordedSequence seq = generate_motion(humanoid(), MotionKind::kForwardWalk, 12.0, 60.0, 2);
  const int l = humanoid().joint_index("l_hip_pitch"), r = humanoid().joint_index("r_hip_pitch");
  double dot = 0.0, ll = 0.0, rr = 0.0;
  for (const Frame& f : seq.frames) {
    dot += f.nu.joint_velocities[l] * f.nu.joint_velocities[r];
    ll += f.nu.joint_velocities[l] * f.nu.joint_velocities[l];
    rr += f.nu.joint_velocities[r] * f.nu.joint_velocities[r];
  }
  EXPECT_LT(dot / std::sqrt(ll * rr), -0.8);
}

// IMU simulation

TEST(SimulateImus, StandReadsGravity) {
  const RecordedSequence seq =
      simulate_imus(humanoid(), generate_motion(humanoid(), MotionKind::kStand, 2.0, 60.0, 1));
  for (const Frame& f : seq.frames) {
    ASSERT_EQ(f.imus.size(), 5u);
    for (std::size_t d = 0; d < 5; ++d) {
      const Mat3& r = f.link_poses[d].rotation;
      EXPECT_EQ(f.imus[d].orientation, r);
      EXPECT_LT((f.imus[d].acceleration - r.transpose() * kG).norm(), 1e-9);
      EXPECT_NEAR(f.imus[d].acceleration.norm(), 9.81, 1e-9);
    }
  }
}

TEST(SimulateImus, GravityFreeStandReadsZero) {
  ImuOptions o;
  o.include_gravity = false;
  const RecordedSequence seq = simulate_imus(
      humanoid(), generate_motion(humanoid(), MotionKind::kStand, 2.0, 60.0, 1), o);
  for (const Frame& f : seq.frames) {
    for (const ImuReading& r : f.imus) EXPECT_LT(r.acceleration.norm(), 1e-9);
  }
}

TEST(SimulateImus, StaticPoseNormIsGravityForAnyPose) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Configuration q = testing::random_configuration(humanoid(), rng);
    const SystemVelocity nu{Vec3::Zero(), Vec3::Zero(), VecX::Zero(20)};
    const RecordedSequence seq = simulate_imus(
        humanoid(), make_sequence(humanoid(), 60.0, {q, q, q, q}, {nu, nu, nu, nu}));
    for (const Frame& f : seq.frames) {
      for (const ImuReading& r : f.imus) EXPECT_NEAR(r.acceleration.norm(), 9.81, 1e-12);
    }
  }
}

TEST(SimulateImus, ConstantVelocityBaseMatchesStand) {
  std::mt19937_64 rng(3);
  const Configuration q0 = testing::random_configuration(humanoid(), rng);
  const Vec3 v(0.7, -0.3, 0.1);
  std::vector<Configuration> qs;
  std::vector<SystemVelocity> nus;
  for (int t = 0; t < 30; ++t) {
    Configuration q = q0;
    q.base_position += v * t / 60.0;
    qs.push_back(q);
    nus.push_back({v, Vec3::Zero(), VecX::Zero(20)});
  }
  const RecordedSequence seq = simulate_imus(humanoid(), make_sequence(humanoid(), 60.0, qs, nus));
  for (const Frame& f : seq.frames) {
    for (std::size_t d = 0; d < 5; ++d) {
      EXPECT_LT((f.imus[d].acceleration - f.link_poses[d].rotation.transpose() * kG).norm(), 1e-9);
    }
  }
}

TEST(SimulateImus, SingleJointSinusoidMatchesAnalyticAcceleration) {
  // The sensor link sits L = 0.4 m from a vertical revolute axis:
  // p = L (cos s, sin s, 0) with s = A sin(w t). The simulator differences
  // positions twice, so the rate is high enough to keep truncation small.
  const RigidBodyModel m = parse_model(R"(robot pendulum
link base
link arm
link sensor
joint swing revolute parent=base child=arm xyz=0,0,0 rpy=0,0,0 axis=0,0,1 limit=-3,3
joint wrist revolute parent=arm child=sensor xyz=0.4,0,0 rpy=0,0,0 axis=0,1,0 limit=-3,3
base base
instrumented sensor
upper swing
lower wrist
)");
  const double amp = 0.8, w = 2.0 * std::numbers::pi * 1.0, rate = 240.0, len = 0.4;
  std::vector<Configuration> qs;
  std::vector<SystemVelocity> nus;
  for (int t = 0; t < 480; ++t) {
    const double time = t / rate;
    VecX s(2), sd(2);
    s << amp * std::sin(w * time), 0.0;
    sd << amp * w * std::cos(w * time), 0.0;
    qs.push_back({Vec3::Zero(), Mat3::Identity(), s});
    nus.push_back({Vec3::Zero(), Vec3::Zero(), sd});
  }
  const RecordedSequence seq = simulate_imus(m, make_sequence(m, rate, qs, nus));
  double worst = 0.0;
  for (int t = 1; t + 1 < 480; ++t) {
    const double time = t / rate;
    const double s = amp * std::sin(w * time);
    const double sd = amp * w * std::cos(w * time);
    const double sdd = -amp * w * w * std::sin(w * time);
    const Vec3 a(len * (-std::sin(s) * sdd - std::cos(s) * sd * sd),
                 len * (std::cos(s) * sdd - std::sin(s) * sd * sd), 0.0);
    const Mat3 r = axis_angle(Vec3::UnitZ(), s);
    const Vec3 expected = r.transpose() * (a + kG);
    worst = std::max(worst, (seq.frames[t].imus[0].acceleration - expected).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-2);
}

TEST(SimulateImus, NoiseIsSeededAndKeepsRotations) {
  const RecordedSequence clean =
      simulate_imus(humanoid(), generate_motion(humanoid(), MotionKind::kSideStep, 2.0, 60.0, 1));
  ImuOptions o;
  o.accel_noise = 0.1;
  o.orientation_noise = 0.01;
  o.seed = 4;
  const RecordedSequence a = simulate_imus(humanoid(), clean, o);
  const RecordedSequence b = simulate_imus(humanoid(), clean, o);
  EXPECT_TRUE(a == b);
  o.seed = 5;
  EXPECT_FALSE(a == simulate_imus(humanoid(), clean, o));
  double accel_sq = 0.0, count = 0.0;
  for (int t = 0; t < a.size(); ++t) {
    for (std::size_t d = 0; d < 5; ++d) {
      const ImuReading& r = a.frames[t].imus[d];
      EXPECT_TRUE(is_rotation(r.orientation, 1e-6));
      EXPECT_LT(geodesic_angle(r.orientation, clean.frames[t].imus[d].orientation), 0.1);
      accel_sq += (r.acceleration - clean.frames[t].imus[d].acceleration).squaredNorm();
      count += 3.0;
    }
  }
  EXPECT_NEAR(std::sqrt(accel_sq / count), 0.1, 0.01);
}

TEST(SimulateImus, TooShortThrows) {
  RecordedSequence seq = generate_motion(humanoid(), MotionKind::kStand, 2.0, 60.0, 1);
  seq.frames.resize(2);
  EXPECT_THROW(simulate_imus(humanoid(), seq), std::invalid_argument);
}

// Dataset files

TEST(Dataset, ColumnManifest) {
  const auto cols = dataset_columns(20, 5);
  ASSERT_EQ(cols.size(), 12u);
  int width = 0;
  for (const auto& c : cols) width += c.width;
  EXPECT_EQ(width, 3 + 9 + 20 + 3 + 3 + 20 + 5 * (3 + 9 + 3 + 3 + 3 + 9));
  EXPECT_EQ(cols[2].name, "joint_positions");
}

TEST(Dataset, RoundTripIsBitwiseForEveryKind) {
  for (MotionKind k : all_motion_kinds()) {
    ImuOptions o;
    o.accel_noise = 0.05;
    o.orientation_noise = 0.01;
    const RecordedSequence seq =
        simulate_imus(humanoid(), generate_motion(humanoid(), k, 1.5, 60.0, 9, 10), o);
    const auto path = temp_file(std::string(to_string(k)) + ".kpds");
    write_dataset(seq, path);
    const RecordedSequence back = read_dataset(path, model_hash(humanoid()));
    std::filesystem::remove(path);
    EXPECT_TRUE(back == seq) << to_string(k);
    EXPECT_EQ(encode_dataset(back), encode_dataset(seq));
  }
}

TEST(Dataset, EmptySequenceRoundTrips) {
  RecordedSequence seq;
  seq.rate = 30.0;
  seq.model_hash = 42;
  EXPECT_TRUE(decode_dataset(encode_dataset(seq)) == seq);
}

TEST(Dataset, TruncationIsCorruption) {
  const RecordedSequence seq =
      simulate_imus(humanoid(), generate_motion(humanoid(), MotionKind::kStand, 0.5, 60.0, 1, 10));
  const std::string bytes = encode_dataset(seq);
  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{10}, std::size_t{100},
                           bytes.size() / 2, bytes.size() - 9, bytes.size() - 1}) {
    try {
      decode_dataset(bytes.substr(0, keep));
      FAIL() << "decoded a file truncated to " << keep << " bytes";
    } catch (const DatasetError& e) {
      EXPECT_TRUE(e.kind() == DatasetError::Kind::kCorrupt ||
                  (keep < 4 && e.kind() == DatasetError::Kind::kBadMagic))
          << keep;
    }
  }
}

TEST(Dataset, FlippedByteIsCorruption) {
  const RecordedSequence seq =
      generate_motion(humanoid(), MotionKind::kForwardWalk, 0.5, 60.0, 1, 10);
  std::string bytes = encode_dataset(seq);
  bytes[bytes.size() / 2] ^= 0x10;
  try {
    decode_dataset(bytes);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), DatasetError::Kind::kCorrupt);
  }
}

TEST(Dataset, BadMagicAndVersion) {
  const std::string bytes =
      encode_dataset(generate_motion(humanoid(), MotionKind::kStand, 0.5, 60.0, 1, 10));
  std::string bad = bytes;
  bad[0] = 'X';
  try {
    decode_dataset(bad);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), DatasetError::Kind::kBadMagic);
  }
  bad = bytes;
  bad[4] = 7;  // little-endian version field
  try {
    decode_dataset(bad);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), DatasetError::Kind::kVersion);
  }
}

TEST(Dataset, ModelHashMismatch) {
  const RecordedSequence seq =
      generate_motion(humanoid(), MotionKind::kStand, 0.5, 60.0, 1, 10);
  const std::string bytes = encode_dataset(seq);
  EXPECT_NO_THROW(decode_dataset(bytes, model_hash(humanoid())));
  try {
    decode_dataset(bytes, model_hash(testing::small_model()));
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), DatasetError::Kind::kModelMismatch);
    EXPECT_NE(std::string(e.what()).find(hash_to_hex(model_hash(humanoid()))), std::string::npos);
  }
}

TEST(Dataset, MissingFileIsIoError) {
  try {
    read_dataset(temp_file("missing.kpds"));
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), DatasetError::Kind::kIo);
  }
  EXPECT_THROW(write_dataset(RecordedSequence{}, "/nonexistent_dir/x.kpds"), DatasetError);
}

TEST(Dataset, HeaderIsReadableJson) {
  const std::string bytes =
      encode_dataset(generate_motion(humanoid(), MotionKind::kStand, 0.5, 60.0, 1, 10));
  EXPECT_EQ(bytes.substr(0, 4), "KPDS");
  EXPECT_NE(bytes.find("\"model_hash\":\"" + hash_to_hex(model_hash(humanoid())) + "\""),
            std::string::npos);
  EXPECT_NE(bytes.find("\"rate\":60"), std::string::npos);
}

// Streaming records

TEST(FrameJson, RoundTrip) {
  const RecordedSequence seq = simulate_imus(
      humanoid(), generate_motion(humanoid(), MotionKind::kWalkLiftArms, 1.0, 60.0, 2, 10));
  for (int t : {0, 17, 59}) {
    const std::string line = frame_to_json(seq.frames[t], t);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    const Frame back = frame_from_json(line, 20, 5, t);
    EXPECT_TRUE(back == seq.frames[t]);
  }
}

TEST(FrameJson, WrongImuCountNamesTheRecord) {
  const RecordedSequence seq =
      simulate_imus(humanoid(), generate_motion(humanoid(), MotionKind::kStand, 1.0, 60.0, 2, 10));
  Frame f = seq.frames[0];
  f.imus.pop_back();
  const std::string line = frame_to_json(f, 0);
  try {
    frame_from_json(line, 20, 5, 137);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), DatasetError::Kind::kShape);
    EXPECT_NE(std::string(e.what()).find("137"), std::string::npos);
  }
}

TEST(FrameJson, MalformedRecordNamesTheRecord) {
  try {
    frame_from_json("{\"t\": 0, \"q\": ", 20, 5, 12);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
  }
}

}  // namespace
}  // namespace kinpred
