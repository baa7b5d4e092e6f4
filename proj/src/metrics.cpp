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

#include "kinpred/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace kinpred {

namespace {

constexpr double kDeg = 180.0 / M_PI;

void check_sample(const RigidBodyModel& model, const EvalSample& s, int steps) {
  const int n = model.num_joints();
  if (s.prediction.steps() != steps || s.reference.steps() != steps ||
      s.links.steps() != steps) {
    throw std::invalid_argument("compute_metrics: samples have different horizons");
  }
  if (s.prediction.joints() != n || s.reference.joints() != n ||
      s.prediction.velocities.rows() != steps || s.reference.velocities.rows() != steps) {
    throw std::invalid_argument("compute_metrics: joint dimension mismatch");
  }
  if (s.links.links != model.instrumented_links() ||
      s.links.poses.size() != static_cast<std::size_t>(steps) ||
      s.links.twists.size() != static_cast<std::size_t>(steps)) {
    throw std::invalid_argument("compute_metrics: link references misaligned");
  }
}

}  // namespace

const StepMetrics& MetricsReport::at_step(int step) const {
  for (const auto& s : steps) {
    if (s.step == step) return s;
  }
  throw std::out_of_range("no metrics for step " + std::to_string(step));
}

MetricsReport compute_metrics(const RigidBodyModel& model, const std::vector<EvalSample>& samples,
                              const std::vector<int>& subset, const std::vector<int>& steps) {
  if (samples.empty()) throw std::invalid_argument("compute_metrics: no samples");
  if (subset.empty()) throw std::invalid_argument("compute_metrics: empty joint subset");
  for (int j : subset) {
    if (j < 0 || j >= model.num_joints()) {
      throw std::invalid_argument("compute_metrics: joint index out of range");
    }
  }
  const int horizon = samples.front().prediction.steps();
  for (int step : steps) {
    if (step < 1 || step > horizon) {
      throw std::invalid_argument("compute_metrics: step " + std::to_string(step) +
                                  " outside the horizon");
    }
  }
  for (const auto& s : samples) check_sample(model, s, horizon);

  MetricsReport report;
  report.joint_subset = subset;
  report.samples = static_cast<int>(samples.size());
  const auto& links = model.instrumented_links();
  const double joint_count = static_cast<double>(samples.size() * subset.size());
  const double link_count = static_cast<double>(samples.size() * links.size());

  for (int step : steps) {
    const int t = step - 1;
    double abs_p = 0.0, abs_v = 0.0, sq_p = 0.0, sq_o = 0.0, sq_vl = 0.0, sq_va = 0.0;
    for (const auto& s : samples) {
      for (int j : subset) {
        abs_p += std::abs(s.prediction.positions(t, j) - s.reference.positions(t, j));
        abs_v += std::abs(s.prediction.velocities(t, j) - s.reference.velocities(t, j));
      }
      const VecX sp = s.prediction.positions.row(t).transpose();
      const VecX sv = s.prediction.velocities.row(t).transpose();
      const KinematicsState state(model, s.links.configuration(t, sp));
      const SystemVelocity nu = s.links.velocity(t, sv);
      for (std::size_t d = 0; d < links.size(); ++d) {
        const LinkPose& pose = state.link(links[d]);
        const LinkPose& ref = s.links.poses[t][d];
        sq_p += (pose.position - ref.position).squaredNorm();
        const double angle = geodesic_angle(pose.rotation, ref.rotation);
        sq_o += angle * angle;
        const LinkTwist tw = differential_kinematics(model, state, nu, links[d]);
        sq_vl += (tw.linear - s.links.twists[t][d].linear).squaredNorm();
        sq_va += (tw.angular - s.links.twists[t][d].angular).squaredNorm();
      }
    }
    StepMetrics m;
    m.step = step;
    m.pmae = kDeg * abs_p / joint_count;
    m.vmae = kDeg * abs_v / joint_count;
    m.prmse = std::sqrt(sq_p / link_count);
    m.ormse = kDeg * std::sqrt(sq_o / link_count);
    m.vrmse_linear = std::sqrt(sq_vl / link_count);
    m.vrmse_angular = kDeg * std::sqrt(sq_va / link_count);
    report.steps.push_back(m);
  }
  return report;
}

std::vector<int> joint_subset(const RigidBodyModel& model, const std::string& name) {
  if (name == "lower") return model.lower_joints();
  if (name == "upper") return model.upper_joints();
  if (name == "all") {
    std::vector<int> all(model.num_joints());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  throw std::invalid_argument("unknown joint subset '" + name + "' (lower, upper, all)");
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["samples"] = report.samples;
  j["joint_subset"] = report.joint_subset;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : report.steps) {
    rows.push_back({{"step", s.step},
                    {"pMAE_deg", s.pmae},
                    {"vMAE_deg_s", s.vmae},
                    {"pRMSE_m", s.prmse},
                    {"oRMSE_deg", s.ormse},
                    {"vRMSE_linear_m_s", s.vrmse_linear},
                    {"vRMSE_angular_deg_s", s.vrmse_angular}});
  }
  j["steps"] = rows;
  return j.dump(2);
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "step,pMAE_deg,vMAE_deg_s,pRMSE_m,oRMSE_deg,vRMSE_linear_m_s,vRMSE_angular_deg_s\n";
  for (const auto& s : report.steps) {
    out << s.step << ',' << s.pmae << ',' << s.vmae << ',' << s.prmse << ',' << s.ormse << ','
        << s.vrmse_linear << ',' << s.vrmse_angular << '\n';
  }
  return out.str();
}

}  // namespace kinpred
