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

#include "kinpred/motion.hpp"

#include <deque>
#include <cmath>
#include <random>
#include <stdexcept>

namespace kinpred {

std::string_view to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::kForwardWalk: return "forward_walk";
    case MotionKind::kBackwardWalk: return "backward_walk";
    case MotionKind::kSideStep: return "side_step";
    case MotionKind::kWalkLiftArms: return "walk_lift_arms";
    case MotionKind::kWalkWaveArms: return "walk_wave_arms";
    case MotionKind::kStand: return "stand";
  }
  return "unknown";
}

const std::vector<MotionKind>& all_motion_kinds() {
  static const std::vector<MotionKind> kinds = {
      MotionKind::kForwardWalk,  MotionKind::kBackwardWalk, MotionKind::kSideStep,
      MotionKind::kWalkLiftArms, MotionKind::kWalkWaveArms, MotionKind::kStand};
  return kinds;
}

std::optional<MotionKind> parse_motion_kind(std::string_view name) {
  for (MotionKind k : all_motion_kinds()) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool operator==(const Frame& a, const Frame& b) {
  return a.q.base_position == b.q.base_position && a.q.base_rotation == b.q.base_rotation &&
         a.q.joint_positions == b.q.joint_positions && a.nu.base_linear == b.nu.base_linear &&
         a.nu.base_angular == b.nu.base_angular &&
         a.nu.joint_velocities == b.nu.joint_velocities && a.link_poses == b.link_poses &&
         a.link_twists == b.link_twists && a.imus == b.imus;
}

bool operator==(const RecordedSequence& a, const RecordedSequence& b) {
  return a.rate == b.rate && a.model_hash == b.model_hash && a.frames == b.frames;
}

RecordedSequence make_sequence(const RigidBodyModel& model, double rate,
                               std::vector<Configuration> configurations,
                               std::vector<SystemVelocity> velocities) {
  if (configurations.size() != velocities.size()) {
    throw std::invalid_argument("make_sequence: configuration/velocity counts differ");
  }
  if (!(rate > 0.0)) throw std::invalid_argument("make_sequence: rate must be positive");
  RecordedSequence seq;
  seq.rate = rate;
  seq.model_hash = model_hash(model);
  seq.frames.resize(configurations.size());
  const auto& links = model.instrumented_links();
  for (std::size_t t = 0; t < configurations.size(); ++t) {
    Frame& f = seq.frames[t];
    f.q = std::move(configurations[t]);
    f.nu = std::move(velocities[t]);
    const KinematicsState state(model, f.q);
    for (int link : links) {
      f.link_poses.push_back(state.link(link));
      f.link_twists.push_back(differential_kinematics(model, state, f.nu, link));
    }
    f.imus.assign(links.size(), ImuReading{});
  }
  return seq;
}

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// C2 smootherstep and its antiderivative on [0, 1].
double smooth(double x) { return x * x * x * (x * (6.0 * x - 15.0) + 10.0); }
double smooth_prime(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
double smooth_integral(double x) {
  const double x4 = x * x * x * x;
  return x4 * (x * (x - 3.0) + 2.5);
}

// Walking intensity a(t) in [0, 1]: stand (0), ramp up, walk (1), ramp down.
class Envelope {
 public:
  struct Value {
    double level;
    double rate;
    double integral;
  };

  Envelope(double duration, bool active, std::mt19937_64& rng) {
    if (!active) return;
    std::uniform_real_distribution<double> first_stand(0.3, 1.0);
    std::uniform_real_distribution<double> stand(1.0, 2.5);
    std::uniform_real_distribution<double> walk(3.0, 6.0);
    double t = first_stand(rng);
    segments_.push_back({0.0, t, Segment::kLow});
    while (t < duration) {
      segments_.push_back({t, t + kRamp, Segment::kRampUp});
      t += kRamp;
      const double w = walk(rng);
      segments_.push_back({t, t + w, Segment::kHigh});
      t += w;
      segments_.push_back({t, t + kRamp, Segment::kRampDown});
      t += kRamp;
      const double s = stand(rng);
      segments_.push_back({t, t + s, Segment::kLow});
      t += s;
    }
  }

  Value at(double t) const {
    double integral = 0.0;
    for (const Segment& seg : segments_) {
      const double len = seg.end - seg.start;
      if (t >= seg.end) {
        integral += full_integral(seg.type, len);
        continue;
      }
      const double x = (t - seg.start) / len;
      switch (seg.type) {
        case Segment::kLow: return {0.0, 0.0, integral};
        case Segment::kHigh: return {1.0, 0.0, integral + (t - seg.start)};
        case Segment::kRampUp:
          return {smooth(x), smooth_prime(x) / len, integral + len * smooth_integral(x)};
        case Segment::kRampDown:
          return {1.0 - smooth(x), -smooth_prime(x) / len,
                  integral + len * (x - smooth_integral(x))};
      }
    }
    return {0.0, 0.0, integral};
  }

 private:
  static constexpr double kRamp = 2.5;
  struct Segment {
    double start;
    double end;
    enum Type { kLow, kRampUp, kHigh, kRampDown } type;
  };
  static double full_integral(Segment::Type type, double len) {
    switch (type) {
      case Segment::kLow: return 0.0;
      case Segment::kHigh: return len;
      case Segment::kRampUp:
      case Segment::kRampDown: return 0.5 * len;
    }
    return 0.0;
  }
  std::vector<Segment> segments_;
};

// One periodic joint channel: offset + envelope * (a1 sin(h1 p + f1) + a2 sin(h2 p + f2)),
// with p the phase of the channel's oscillator. `rectified` replaces the sum
// with amplitude * (1 + sin(p + f1)) / 2, which stays non-negative.
struct Channel {
  int joint = -1;
  double offset = 0.0;
  double amp1 = 0.0, harmonic1 = 1.0, phase1 = 0.0;
  double amp2 = 0.0, harmonic2 = 2.0, phase2 = 0.0;
  bool rectified = false;
  bool gated = true;  // multiplied by the walking envelope
  int oscillator = 0;
};

struct Oscillator {
  double frequency;  // rad/s
  double phase;
};

class GaitBuilder {
 public:
  GaitBuilder(const RigidBodyModel& model, std::mt19937_64& rng) : model_(model), rng_(rng) {}

  double jitter(double scale) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    return 1.0 + scale * d(rng_);
  }
  double phase_noise() {
    std::uniform_real_distribution<double> d(-0.3, 0.3);
    return d(rng_);
  }

  Channel& add(std::string_view joint, double offset, double amp, double phase,
               int oscillator = 0) {
    Channel c;
    c.joint = model_.joint_index(joint);
    c.offset = offset;
    c.amp1 = amp * jitter(0.15);
    c.phase1 = phase + phase_noise();
    c.oscillator = oscillator;
    channels_.push_back(c);
    return channels_.back();
  }

  std::vector<Channel> take() {
    std::vector<Channel> out;
    for (auto& c : channels_) {
      if (c.joint >= 0) out.push_back(c);
    }
    return out;
  }

 private:
  const RigidBodyModel& model_;
  std::mt19937_64& rng_;
  std::deque<Channel> channels_;  // stable references across add()
};

}  // namespace

RecordedSequence generate_motion(const RigidBodyModel& model, MotionKind kind,
                                 double duration, double rate, std::uint64_t seed,
                                 int min_frames) {
  if (!(rate > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("generate_motion: duration and rate must be positive");
  }
  const int frames = static_cast<int>(std::llround(duration * rate));
  if (frames < min_frames) {
    throw std::invalid_argument("generate_motion: duration * rate = " + std::to_string(frames) +
                                " frames, need at least " + std::to_string(min_frames));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool moving = kind != MotionKind::kStand;

  const Envelope envelope(duration, moving, rng);
  GaitBuilder gait(model, rng);

  // Oscillator 0 drives the gait, 1 the slow arm patterns.
  std::vector<Oscillator> osc = {
      {kTwoPi * 0.4 * gait.jitter(0.1), kTwoPi * unit(rng)},
      {kTwoPi * 0.2 * gait.jitter(0.1), kTwoPi * unit(rng)},
  };

  // Resting posture, present in every kind.
  auto posture = [&](std::string_view joint, double center, double spread) {
    Channel& c = gait.add(joint, center + spread * (unit(rng) - 0.5), 0.0, 0.0);
    c.gated = false;
  };
  posture("torso_pitch", 0.05, 0.06);
  posture("torso_roll", 0.0, 0.04);
  posture("l_shoulder_roll", 0.12, 0.08);
  posture("r_shoulder_roll", -0.12, 0.08);
  posture("l_elbow_flex", 0.3, 0.2);
  posture("r_elbow_flex", 0.3, 0.2);
  posture("l_elbow_pronation", 0.0, 0.2);
  posture("r_elbow_pronation", 0.0, 0.2);
  posture("l_hip_yaw", 0.0, 0.06);
  posture("r_hip_yaw", 0.0, 0.06);
  posture("l_knee", 0.06, 0.04);
  posture("r_knee", 0.06, 0.04);

  double speed = 0.0;
  double heading_offset = 0.0;
  const double pi = M_PI;
  switch (kind) {
    case MotionKind::kStand:
      break;
    case MotionKind::kForwardWalk:
    case MotionKind::kWalkLiftArms:
    case MotionKind::kWalkWaveArms:
    case MotionKind::kBackwardWalk: {
      const bool backward = kind == MotionKind::kBackwardWalk;
      speed = (backward ? 0.7 : 1.1) * gait.jitter(0.1);
      heading_offset = backward ? pi : 0.0;
      const double dir = backward ? -1.0 : 1.0;
      gait.add("l_hip_pitch", -0.05, 0.42, 0.0);
      gait.add("r_hip_pitch", -0.05, 0.42, pi);
      Channel& lk = gait.add("l_knee", 0.0, 1.0, dir * 0.9);
      lk.rectified = true;
      Channel& rk = gait.add("r_knee", 0.0, 1.0, pi + dir * 0.9);
      rk.rectified = true;
      gait.add("l_hip_roll", 0.0, 0.05, 0.5);
      gait.add("r_hip_roll", 0.0, 0.05, pi + 0.5);
      gait.add("torso_roll", 0.0, 0.04, 0.0);
      gait.add("torso_pitch", 0.0, 0.03, 0.0).harmonic1 = 2.0;
      if (kind != MotionKind::kWalkLiftArms) {
        gait.add("l_shoulder_pitch", 0.0, 0.35, pi);
        gait.add("r_shoulder_pitch", 0.0, 0.35, 0.0);
      }
      Channel& le = gait.add("l_elbow_flex", 0.0, 0.25, pi);
      le.rectified = true;
      if (kind != MotionKind::kWalkWaveArms) {
        Channel& re = gait.add("r_elbow_flex", 0.0, 0.25, 0.0);
        re.rectified = true;
      }
      if (kind == MotionKind::kWalkLiftArms) {
        // Slow forward lifts of both arms.
        Channel& l = gait.add("l_shoulder_pitch", 0.0, -1.4, 0.0, 1);
        l.rectified = true;
        Channel& r = gait.add("r_shoulder_pitch", 0.0, -1.4, 0.3, 1);
        r.rectified = true;
        gait.add("l_shoulder_roll", 0.0, 0.3, 0.0, 1);
        gait.add("r_shoulder_roll", 0.0, -0.3, 0.0, 1);
      }
      if (kind == MotionKind::kWalkWaveArms) {
        // Right arm raised sideways, waving from the elbow.
        // harmonic 0 with phase pi/2 turns the channel into a gated constant.
        Channel& raise = gait.add("r_shoulder_roll", 0.0, -1.3, 0.0);
        raise.harmonic1 = 0.0;
        raise.phase1 = pi / 2.0;
        osc[1].frequency = kTwoPi * 0.4 * gait.jitter(0.1);
        gait.add("r_elbow_flex", 0.6, 0.4, 0.0, 1);
        gait.add("r_shoulder_yaw", 0.0, 0.3, 0.5, 1);
        gait.add("r_shoulder_pitch", 0.0, 0.15, 0.0);
      }
      break;
    }
    case MotionKind::kSideStep: {
      speed = 0.45 * gait.jitter(0.1);
      heading_offset = -pi / 2.0;
      Channel& la = gait.add("l_hip_roll", 0.0, 0.35, 0.0);
      la.rectified = true;
      Channel& ra = gait.add("r_hip_roll", 0.0, -0.35, pi);
      ra.rectified = true;
      gait.add("l_hip_pitch", -0.1, 0.12, 0.0);
      gait.add("r_hip_pitch", -0.1, 0.12, pi);
      Channel& lk = gait.add("l_knee", 0.1, 0.6, 0.6);
      lk.rectified = true;
      Channel& rk = gait.add("r_knee", 0.1, 0.6, pi + 0.6);
      rk.rectified = true;
      gait.add("torso_roll", 0.0, 0.06, 0.0);
      gait.add("l_shoulder_roll", 0.0, 0.15, 0.0);
      gait.add("r_shoulder_roll", 0.0, -0.15, 0.0);
      break;
    }
  }

  const std::vector<Channel> channels = gait.take();

  // Base path: arc of signed curvature kappa, arc length speed * integral(a).
  const double radius = 5.0 + 4.0 * unit(rng);
  const double kappa = (unit(rng) < 0.5 ? -1.0 : 1.0) / radius;
  const double path_angle0 = kTwoPi * unit(rng);
  const Vec3 start(4.0 * (unit(rng) - 0.5), 4.0 * (unit(rng) - 0.5), 0.95);
  const double bob = moving ? 0.02 : 0.0;
  const double roll_amp = moving ? 0.04 : 0.0;
  const double pitch_amp = moving ? 0.03 : 0.0;

  const int n = model.num_joints();
  std::vector<Configuration> qs(frames);
  std::vector<SystemVelocity> nus(frames);
  for (int k = 0; k < frames; ++k) {
    const double t = k / rate;
    const Envelope::Value env = envelope.at(t);
    Configuration& q = qs[k];
    SystemVelocity& nu = nus[k];
    q.joint_positions = VecX::Zero(n);
    nu.joint_velocities = VecX::Zero(n);

    for (const Channel& c : channels) {
      const Oscillator& o = osc[c.oscillator];
      const double p = o.frequency * t + o.phase;
      double g = 0.0, dg = 0.0;
      if (c.rectified) {
        g = c.amp1 * 0.5 * (1.0 + std::sin(p + c.phase1));
        dg = c.amp1 * 0.5 * o.frequency * std::cos(p + c.phase1);
      } else {
        g = c.amp1 * std::sin(c.harmonic1 * p + c.phase1) +
            c.amp2 * std::sin(c.harmonic2 * p + c.phase2);
        dg = c.amp1 * c.harmonic1 * o.frequency * std::cos(c.harmonic1 * p + c.phase1) +
             c.amp2 * c.harmonic2 * o.frequency * std::cos(c.harmonic2 * p + c.phase2);
      }
      const double level = c.gated ? env.level : 1.0;
      const double level_rate = c.gated ? env.rate : 0.0;
      q.joint_positions[c.joint] += c.offset + level * g;
      nu.joint_velocities[c.joint] += level_rate * g + level * dg;
    }

    // Base pose and twist.
    const double gait_phase = osc[0].frequency * t + osc[0].phase;
    const double w = osc[0].frequency;
    const double arc = speed * env.integral;
    const double path_angle = path_angle0 + kappa * arc;
    const double path_rate = kappa * speed * env.level;
    q.base_position = start + Vec3((std::sin(path_angle) - std::sin(path_angle0)) / kappa,
                                   -(std::cos(path_angle) - std::cos(path_angle0)) / kappa,
                                   env.level * bob * std::cos(2.0 * gait_phase));
    nu.base_linear = Vec3(speed * env.level * std::cos(path_angle),
                          speed * env.level * std::sin(path_angle),
                          env.rate * bob * std::cos(2.0 * gait_phase) -
                              env.level * bob * 2.0 * w * std::sin(2.0 * gait_phase));

    const double yaw = path_angle + heading_offset;
    const double roll = env.level * roll_amp * std::sin(gait_phase);
    const double roll_rate =
        env.rate * roll_amp * std::sin(gait_phase) + env.level * roll_amp * w * std::cos(gait_phase);
    const double pitch = env.level * pitch_amp * std::sin(2.0 * gait_phase);
    const double pitch_rate = env.rate * pitch_amp * std::sin(2.0 * gait_phase) +
                              env.level * pitch_amp * 2.0 * w * std::cos(2.0 * gait_phase);
    const Mat3 rz = rpy_to_rotation(0.0, 0.0, yaw);
    const Mat3 rzy = rpy_to_rotation(0.0, pitch, yaw);
    q.base_rotation = rpy_to_rotation(roll, pitch, yaw);
    nu.base_angular = path_rate * Vec3::UnitZ() + pitch_rate * (rz * Vec3::UnitY()) +
                      roll_rate * (rzy * Vec3::UnitX());

    for (int j = 0; j < n; ++j) {
      const auto& lim = model.joint(j).limits;
      if (q.joint_positions[j] < lim.lower || q.joint_positions[j] > lim.upper) {
        throw std::logic_error("generate_motion: joint '" + model.joint(j).name +
                               "' left its limits (" + std::to_string(q.joint_positions[j]) +
                               ")");
      }
    }
  }
  return make_sequence(model, rate, std::move(qs), std::move(nus));
}

RecordedSequence simulate_imus(const RigidBodyModel& model, RecordedSequence sequence,
                               const ImuOptions& options) {
  const int frames = sequence.size();
  if (frames < 3) throw std::invalid_argument("simulate_imus: need at least 3 frames");
  const std::size_t links = model.instrumented_links().size();
  const double inv_dt2 = sequence.rate * sequence.rate;
  const Vec3 gravity = options.include_gravity ? Vec3(0.0, 0.0, kGravity) : Vec3::Zero();
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int t = 0; t < frames; ++t) {
    Frame& f = sequence.frames[t];
    if (f.link_poses.size() != links) {
      throw std::invalid_argument("simulate_imus: frame link count does not match model");
    }
    const int c = std::clamp(t, 1, frames - 2);
    f.imus.resize(links);
    for (std::size_t d = 0; d < links; ++d) {
      const Vec3 accel = (sequence.frames[c + 1].link_poses[d].position -
                          2.0 * sequence.frames[c].link_poses[d].position +
                          sequence.frames[c - 1].link_poses[d].position) *
                         inv_dt2;
      const Mat3& r = f.link_poses[d].rotation;
      ImuReading& imu = f.imus[d];
      imu.acceleration = r.transpose() * (accel + gravity);
      imu.orientation = r;
      if (options.accel_noise > 0.0) {
        imu.acceleration += options.accel_noise * Vec3(normal(rng), normal(rng), normal(rng));
      }
      if (options.orientation_noise > 0.0) {
        const Vec3 tilt = options.orientation_noise * Vec3(normal(rng), normal(rng), normal(rng));
        imu.orientation = r * exp_so3(tilt);
      }
    }
  }
  return sequence;
}

}  // namespace kinpred
