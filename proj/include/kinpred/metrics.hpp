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

// Prediction error metrics at selected horizon steps.

#ifndef KINPRED_METRICS_HPP_
#define KINPRED_METRICS_HPP_

#include <string>
#include <vector>

#include "kinpred/losses.hpp"

namespace kinpred {

// Horizon steps are 1-based: step 1 is the first predicted frame.
inline const std::vector<int> kDefaultEvalSteps = {1, 30, 60};

struct StepMetrics {
  int step = 0;
  double pmae = 0.0;           // deg
  double vmae = 0.0;           // deg/s
  double prmse = 0.0;          // m
  double ormse = 0.0;          // deg, geodesic
  double vrmse_linear = 0.0;   // m/s
  double vrmse_angular = 0.0;  // deg/s
};

struct MetricsReport {
  std::vector<int> joint_subset;
  int samples = 0;
  std::vector<StepMetrics> steps;

  const StepMetrics& at_step(int step) const;  // throws std::out_of_range
};

// One evaluated window: network output, ground-truth joint states and the
// ground-truth base/link references over the same K steps.
struct EvalSample {
  PredictionWindow prediction;
  PredictionWindow reference;
  LinkReferenceWindow links;
};

// Link metrics use FK/DK of the predicted joint states with the reference
// base. Throws std::invalid_argument for an empty subset or sample list,
// misaligned shapes, or steps outside [1, K].
MetricsReport compute_metrics(const RigidBodyModel& model, const std::vector<EvalSample>& samples,
                              const std::vector<int>& joint_subset,
                              const std::vector<int>& steps = kDefaultEvalSteps);

// Named joint subsets: "lower", "upper", "all".
std::vector<int> joint_subset(const RigidBodyModel& model, const std::string& name);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_csv(const MetricsReport& report);

}  // namespace kinpred

#endif  // KINPRED_METRICS_HPP_
