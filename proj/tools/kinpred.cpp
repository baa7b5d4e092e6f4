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

// kinpred: generate | train | eval | predict
//
// Exit codes: 0 success, 2 usage, 3 numeric failure, 4 I/O or model mismatch.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kinpred/checkpoint.hpp"
#include "kinpred/dataset.hpp"
#include "kinpred/metrics.hpp"
#include "kinpred/runtime.hpp"
#include "kinpred/training.hpp"

#ifndef KINPRED_VERSION
#define KINPRED_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace kinpred;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Manifest {
  json doc;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Manifest(const std::string& command, const std::vector<std::string>& argv,
           const CLI::App& app) {
    doc["command"] = command;
    doc["argv"] = argv;
    doc["config"] = app.config_to_str(true, false);
    doc["version"] = KINPRED_VERSION;
    doc["started_utc"] = utc_now();
    doc["threads"] = omp_get_max_threads();
  }
  void write(const fs::path& path) {
    doc["seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file_atomic(path, doc.dump(2) + "\n");
  }
};

fs::path manifest_path(const fs::path& output) {
  fs::path p = output;
  p += ".manifest.json";
  return p;
}

RigidBodyModel load_model_or_throw(const std::string& path) {
  if (path.empty()) throw UsageError("no model file: pass --model or set KINPRED_MODEL");
  if (!fs::is_regular_file(path)) throw IoError("cannot open model file " + path);
  return load_model(path);
}

std::vector<RecordedSequence> load_datasets(const std::vector<std::string>& paths,
                                            const RigidBodyModel& model) {
  std::vector<RecordedSequence> out;
  const std::uint64_t hash = model_hash(model);
  for (const auto& p : paths) out.push_back(read_dataset(p, hash));
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string model;
  std::vector<std::string> kinds{"forward_walk"};
  double duration = 60.0;
  double rate = 60.0;
  std::uint64_t seed = 1;
  int count = 1;
  double noise = 0.0;
  double orientation_noise = 0.0;
  bool gravity_free = false;
  std::string out_dir = ".";
  bool jsonl = false;
};

int cmd_generate(const GenerateArgs& a, Manifest& manifest) {
  const RigidBodyModel model = load_model_or_throw(a.model);
  std::vector<MotionKind> kinds;
  for (const auto& k : a.kinds) {
    if (k == "all") {
      kinds = all_motion_kinds();
      break;
    }
    const auto parsed = parse_motion_kind(k);
    if (!parsed) throw UsageError("unknown motion kind '" + k + "'");
    kinds.push_back(*parsed);
  }
  if (a.count < 1) throw UsageError("--count must be >= 1");
  fs::create_directories(a.out_dir);
  json outputs = json::array();
  for (MotionKind kind : kinds) {
    for (int c = 0; c < a.count; ++c) {
      const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(c);
      RecordedSequence seq = generate_motion(model, kind, a.duration, a.rate, seed);
      ImuOptions imu;
      imu.include_gravity = !a.gravity_free;
      imu.accel_noise = a.noise;
      imu.orientation_noise = a.orientation_noise;
      imu.seed = seed ^ 0x5bd1e995ULL;
      seq = simulate_imus(model, std::move(seq), imu);
      const std::string stem = std::string(to_string(kind)) + "_s" + std::to_string(seed);
      fs::path path = fs::path(a.out_dir) / (stem + (a.jsonl ? ".jsonl" : ".kpds"));
      if (a.jsonl) {
        std::string text;
        for (int t = 0; t < seq.size(); ++t) text += frame_to_json(seq.frames[t], t) + "\n";
        write_file_atomic(path, text);
      } else {
        write_dataset(seq, path);
      }
      outputs.push_back({{"path", path.string()},
                         {"kind", to_string(kind)},
                         {"seed", seed},
                         {"frames", seq.size()}});
      std::cout << path.string() << " (" << seq.size() << " frames)\n";
    }
  }
  manifest.doc["inputs"] = {a.model};
  manifest.doc["outputs"] = outputs;
  manifest.doc["seeds"] = {a.seed};
  manifest.doc["model_hash"] = hash_to_hex(model_hash(model));
  manifest.write(fs::path(a.out_dir) / "generate.manifest.json");
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string model;
  std::vector<std::string> data;
  std::vector<std::string> val;
  std::string out = "model.kpck";
  std::string log;
  std::string ablate;
  bool no_buffer = false;
  TrainConfig config;
};

int cmd_train(TrainArgs a, Manifest& manifest) {
  const RigidBodyModel model = load_model_or_throw(a.model);
  if (!a.ablate.empty()) {
    // Names the kinematic losses that stay on.
    const double fk = a.config.weights.fk > 0.0 ? a.config.weights.fk : 0.1;
    const double dk = a.config.weights.dk > 0.0 ? a.config.weights.dk : 0.1;
    if (a.ablate == "none") {
      a.config.weights.fk = a.config.weights.dk = 0.0;
    } else if (a.ablate == "fk") {
      a.config.weights.fk = fk;
      a.config.weights.dk = 0.0;
    } else if (a.ablate == "dk") {
      a.config.weights.fk = 0.0;
      a.config.weights.dk = dk;
    } else if (a.ablate == "fkdk") {
      a.config.weights.fk = fk;
      a.config.weights.dk = dk;
    } else {
      throw UsageError("--ablate must be one of none, fk, dk, fkdk");
    }
  }
  try {
    a.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto train_set = load_datasets(a.data, model);
  const auto val_set = load_datasets(a.val, model);
  TrainOptions opts;
  Architecture arch = Architecture::ForModel(model);
  arch.use_buffer = !a.no_buffer;
  opts.architecture = arch;
  opts.on_epoch = [](const EpochLog& e) {
    std::fprintf(stderr, "epoch %3d  lr %.3g  L_total %.6g  (pos %.4g vel %.4g fk %.4g dk %.4g)  val %.6g\n",
                 e.epoch, e.lr, e.train.total, e.train.position, e.train.velocity, e.train.fk,
                 e.train.dk, e.val_total);
  };
  const TrainResult result = train(model, train_set, val_set, a.config, opts);
  save_checkpoint(result.checkpoint, a.out);
  const fs::path log = a.log.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.log);
  write_file_atomic(log, loss_log_csv(result.log));
  manifest.doc["inputs"] = {{"model", a.model}, {"data", a.data}, {"val", a.val}};
  manifest.doc["outputs"] = {a.out, log.string()};
  manifest.doc["seeds"] = {a.config.seed};
  manifest.doc["weights"] = {a.config.weights.position, a.config.weights.velocity,
                             a.config.weights.fk, a.config.weights.dk};
  manifest.doc["config_hash"] = hash_to_hex(a.config.hash());
  manifest.doc["model_hash"] = hash_to_hex(model_hash(model));
  manifest.write(manifest_path(a.out));
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string checkpoint;
  std::vector<std::string> data;
  bool no_refine = false;
  std::string subset = "all";
  double epsilon = 1e-4;
  std::string out = "report";
};

int cmd_eval(const EvalArgs& a, Manifest& manifest) {
  const RigidBodyModel model = load_model_or_throw(a.model);
  const std::uint64_t hash = model_hash(model);
  const Checkpoint ck = load_checkpoint(a.checkpoint, hash);
  const auto sequences = load_datasets(a.data, model);
  std::vector<int> subset;
  try {
    subset = joint_subset(model, a.subset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  RuntimeOptions opts;
  opts.refine = !a.no_refine;
  opts.epsilon = a.epsilon;
  std::vector<EvalSample> samples;
  std::vector<double> latency;
  int feasible = 0, steps = 0;
  for (const auto& seq : sequences) {
    const ClosedLoopResult run = run_closed_loop(model, ck.params, seq, opts);
    auto s = closed_loop_samples(model, seq, run);
    samples.insert(samples.end(), std::make_move_iterator(s.begin()),
                   std::make_move_iterator(s.end()));
    latency.insert(latency.end(), run.step_seconds.begin(), run.step_seconds.end());
    for (const auto& r : run.reports) feasible += r.feasible ? 1 : 0;
    steps += static_cast<int>(run.reports.size());
  }
  if (samples.empty()) throw UsageError("no evaluation windows: sequences shorter than M + K");
  const MetricsReport report = compute_metrics(model, samples, subset);
  const fs::path json_path = a.out + ".json";
  const fs::path csv_path = a.out + ".csv";
  write_file_atomic(json_path, metrics_to_json(report) + "\n");
  write_file_atomic(csv_path, metrics_to_csv(report));
  std::cout << metrics_to_csv(report);
  std::sort(latency.begin(), latency.end());
  const double median_ms = latency.empty() ? 0.0 : 1e3 * latency[latency.size() / 2];
  std::fprintf(stderr, "%d closed-loop steps, %d refined feasible, median step %.3f ms\n", steps,
               feasible, median_ms);
  manifest.doc["inputs"] = {{"model", a.model}, {"checkpoint", a.checkpoint}, {"data", a.data}};
  manifest.doc["outputs"] = {json_path.string(), csv_path.string()};
  manifest.doc["refine"] = opts.refine;
  manifest.doc["closed_loop_steps"] = steps;
  manifest.doc["feasible_refinements"] = feasible;
  manifest.doc["median_step_ms"] = median_ms;
  manifest.write(manifest_path(json_path));
  return kExitOk;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
  std::string model;
  std::string checkpoint;
  std::string input = "-";
  std::string format = "auto";
  std::string output = "-";
  std::string output_format = "csv";
  int horizon_dump = 0;
  int horizon_stride = 0;
  bool no_refine = false;
  double epsilon = 1e-4;
  std::string manifest;
};

// Frame source over a dataset file or a JSON-lines stream.
class FrameReader {
 public:
  FrameReader(const PredictArgs& a, const RigidBodyModel& model)
      : joints_(model.num_joints()), links_(static_cast<int>(model.instrumented_links().size())) {
    if (a.input != "-") {
      file_.open(a.input, std::ios::binary);
      if (!file_) throw IoError("cannot open " + a.input);
    }
    std::istream& in = a.input == "-" ? std::cin : file_;
    in_ = &in;
    std::string format = a.format;
    if (format == "auto") {
      format = in.peek() == 'K' ? "dataset" : "jsonl";
    }
    if (format == "dataset") {
      std::ostringstream ss;
      ss << in.rdbuf();
      if (ss.str().empty()) {
        dataset_mode_ = true;
        return;
      }
      sequence_ = decode_dataset(ss.str(), model_hash(model));
      dataset_mode_ = true;
    } else if (format != "jsonl") {
      throw UsageError("--format must be auto, dataset or jsonl");
    }
  }

  bool next(Frame& frame) {
    if (dataset_mode_) {
      if (index_ >= sequence_.size()) return false;
      frame = sequence_.frames[index_++];
      if (static_cast<int>(frame.imus.size()) != links_) {
        throw DatasetError(DatasetError::Kind::kShape,
                           "record " + std::to_string(index_ - 1) + ": wrong IMU count");
      }
      return true;
    }
    std::string line;
    while (std::getline(*in_, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      frame = frame_from_json(line, joints_, links_, index_++);
      return true;
    }
    return false;
  }

 private:
  int joints_;
  int links_;
  std::ifstream file_;
  std::istream* in_ = nullptr;
  bool dataset_mode_ = false;
  RecordedSequence sequence_;
  long index_ = 0;
};

std::string join(const VecX& v) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << (k ? "," : "") << v[k];
  return out.str();
}

int cmd_predict(const PredictArgs& a, Manifest& manifest) {
  const RigidBodyModel model = load_model_or_throw(a.model);
  const Checkpoint ck = load_checkpoint(a.checkpoint, model_hash(model));
  const int history = ck.params.arch.history;
  const int horizon = ck.params.arch.horizon;
  const int n = model.num_joints();
  if (a.horizon_dump < 0 || a.horizon_dump > horizon) {
    throw UsageError("--horizon-dump must be in [1, " + std::to_string(horizon) + "]");
  }
  if (a.output_format != "csv" && a.output_format != "jsonl") {
    throw UsageError("--output-format must be csv or jsonl");
  }
  RuntimeOptions opts;
  opts.refine = !a.no_refine;
  opts.epsilon = a.epsilon;
  InferenceRuntime runtime(model, ck.params, opts);
  FrameReader reader(a, model);

  std::ofstream file;
  if (a.output != "-") {
    file.open(a.output, std::ios::trunc);
    if (!file) throw IoError("cannot write " + a.output);
  }
  std::ostream& out = a.output == "-" ? std::cout : file;
  out.precision(17);
  if (a.output_format == "csv") {
    out << "t";
    for (int j = 0; j < n; ++j) out << ",s" << j;
    for (int j = 0; j < n; ++j) out << ",sdot" << j;
    if (a.horizon_dump > 0) {
      for (int j = 0; j < n; ++j) out << ",h" << a.horizon_dump << "_s" << j;
      for (int j = 0; j < n; ++j) out << ",h" << a.horizon_dump << "_sdot" << j;
    }
    out << '\n';
  }

  RecordedSequence recent;
  recent.rate = 60.0;
  std::vector<JointState> seed;
  long record = 0, emitted = 0;
  Frame frame;
  while (reader.next(frame)) {
    if (frame.q.joint_positions.size() != n) {
      throw DatasetError(DatasetError::Kind::kShape,
                         "record " + std::to_string(record) + ": wrong joint count");
    }
    recent.frames.push_back(frame);
    if (recent.size() > history) recent.frames.erase(recent.frames.begin());
    if (record < history - 1) {
      seed.push_back({frame.q.joint_positions, frame.nu.joint_velocities});
      if (static_cast<int>(seed.size()) == history - 1) runtime.init_buffer(seed);
      ++record;
      continue;
    }
    const StepOutput o = runtime.step(step_input(recent, history - 1, history));
    const VecX s = o.prediction.positions.row(0).transpose();
    const VecX sd = o.prediction.velocities.row(0).transpose();
    if (a.output_format == "csv") {
      out << record << ',' << join(s) << ',' << join(sd);
      if (a.horizon_dump > 0) {
        out << ',' << join(o.prediction.positions.row(a.horizon_dump - 1).transpose()) << ','
            << join(o.prediction.velocities.row(a.horizon_dump - 1).transpose());
      }
      out << '\n';
    } else {
      json j;
      j["t"] = record;
      j["s"] = std::vector<double>(s.data(), s.data() + n);
      j["sdot"] = std::vector<double>(sd.data(), sd.data() + n);
      j["feasible"] = o.report.feasible;
      if (a.horizon_dump > 0) {
        const VecX hs = o.prediction.positions.row(a.horizon_dump - 1).transpose();
        const VecX hv = o.prediction.velocities.row(a.horizon_dump - 1).transpose();
        j["horizon_step"] = a.horizon_dump;
        j["horizon_s"] = std::vector<double>(hs.data(), hs.data() + n);
        j["horizon_sdot"] = std::vector<double>(hv.data(), hv.data() + n);
      }
      if (a.horizon_stride > 0) {
        json h = json::array();
        for (int t = 0; t < horizon; t += a.horizon_stride) {
          const VecX hs = o.prediction.positions.row(t).transpose();
          h.push_back({{"step", t + 1}, {"s", std::vector<double>(hs.data(), hs.data() + n)}});
        }
        j["horizon"] = h;
      }
      out << j.dump() << '\n';
    }
    ++record;
    ++emitted;
  }
  out.flush();
  if (!out) throw IoError("write failed");
  manifest.doc["inputs"] = {{"model", a.model}, {"checkpoint", a.checkpoint}, {"input", a.input}};
  manifest.doc["outputs"] = {a.output};
  manifest.doc["records_in"] = record;
  manifest.doc["records_out"] = emitted;
  if (!a.manifest.empty()) {
    manifest.write(a.manifest);
  } else if (a.output != "-") {
    manifest.write(manifest_path(a.output));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed whole-body kinematics prediction from sparse IMUs"};
  app.set_version_flag("--version", std::string(KINPRED_VERSION));
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP worker threads (0 = runtime default)");

  auto add_model = [](CLI::App* sub, std::string& target) {
    sub->add_option("--model", target, "Kinematic model file")->envname("KINPRED_MODEL");
  };

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand("generate", "Synthesize motion sequences with simulated IMUs");
  add_model(g, gen.model);
  g->add_option("--kind", gen.kinds, "Motion kind(s), or 'all'")->capture_default_str();
  g->add_option("--duration", gen.duration, "Seconds per sequence")->capture_default_str();
  g->add_option("--rate", gen.rate, "Sample rate in Hz")->capture_default_str();
  g->add_option("--seed", gen.seed, "First seed")->capture_default_str();
  g->add_option("--count", gen.count, "Sequences per kind (seeds seed, seed+1, ...)")
      ->capture_default_str();
  g->add_option("--noise", gen.noise, "Accelerometer noise std, m/s^2")->capture_default_str();
  g->add_option("--orientation-noise", gen.orientation_noise, "Orientation noise std, rad")
      ->capture_default_str();
  g->add_flag("--gravity-free", gen.gravity_free, "Report free acceleration without gravity");
  g->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();
  g->add_flag("--jsonl", gen.jsonl, "Write the streaming JSON-lines format instead");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train a predictor checkpoint");
  add_model(t, tr.model);
  t->add_option("--data", tr.data, "Training dataset files")->required();
  t->add_option("--val", tr.val, "Validation dataset files (split by sequence)");
  t->add_option("--out", tr.out, "Checkpoint path")->capture_default_str();
  t->add_option("--log", tr.log, "Loss log CSV (default <out>.loss.csv)");
  t->add_option("--epochs", tr.config.epochs)->capture_default_str();
  t->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  t->add_option("--lr", tr.config.lr0)->capture_default_str();
  t->add_option("--lr-step", tr.config.lr_step_epochs, "Epochs per learning-rate decay")
      ->capture_default_str();
  t->add_option("--lr-gamma", tr.config.lr_gamma)->capture_default_str();
  t->add_option("--lambda-pos", tr.config.weights.position)->capture_default_str();
  t->add_option("--lambda-vel", tr.config.weights.velocity)->capture_default_str();
  t->add_option("--lambda-fk", tr.config.weights.fk)->capture_default_str();
  t->add_option("--lambda-dk", tr.config.weights.dk)->capture_default_str();
  t->add_option("--ablate", tr.ablate, "Kinematic losses kept: none, fk, dk, fkdk");
  t->add_flag("--no-buffer", tr.no_buffer, "Drop the joint state buffer branch");
  t->add_option("--stride", tr.config.stride, "Window stride")->capture_default_str();
  t->add_option("--seed", tr.config.seed)->capture_default_str();

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "Closed-loop evaluation with metrics report");
  add_model(e, ev.model);
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--data", ev.data, "Held-out dataset files")->required();
  e->add_flag("--no-refine", ev.no_refine, "Skip first-step refinement");
  e->add_option("--subset", ev.subset, "Joint subset for pMAE/vMAE: lower, upper, all")
      ->capture_default_str();
  e->add_option("--epsilon", ev.epsilon, "Refinement tolerance")->capture_default_str();
  e->add_option("--out", ev.out, "Report path stem (.json and .csv)")->capture_default_str();

  PredictArgs pr;
  CLI::App* p = app.add_subcommand("predict", "Stream per-step predictions");
  add_model(p, pr.model);
  p->add_option("--checkpoint", pr.checkpoint)->required();
  p->add_option("--input", pr.input, "Dataset or JSON-lines file, '-' for stdin")
      ->capture_default_str();
  p->add_option("--format", pr.format, "auto, dataset or jsonl")->capture_default_str();
  p->add_option("--output", pr.output, "Output path, '-' for stdout")->capture_default_str();
  p->add_option("--output-format", pr.output_format, "csv or jsonl")->capture_default_str();
  p->add_option("--horizon-dump", pr.horizon_dump, "Also emit the k-step-ahead prediction");
  p->add_option("--horizon-stride", pr.horizon_stride,
                "JSON lines: include every d-th horizon step");
  p->add_flag("--no-refine", pr.no_refine, "Skip first-step refinement");
  p->add_option("--epsilon", pr.epsilon, "Refinement tolerance")->capture_default_str();
  p->add_option("--manifest", pr.manifest, "Manifest path (default <output>.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }
  if (threads > 0) omp_set_num_threads(threads);

  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (*g) {
      Manifest m("generate", args, app);
      return cmd_generate(gen, m);
    }
    if (*t) {
      Manifest m("train", args, app);
      return cmd_train(tr, m);
    }
    if (*e) {
      Manifest m("eval", args, app);
      return cmd_eval(ev, m);
    }
    if (*p) {
      Manifest m("predict", args, app);
      return cmd_predict(pr, m);
    }
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const NonFiniteLossError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const ModelError& err) {
    std::cerr << "error: model: " << err.what() << "\n";
    return kExitIo;
  } catch (const DatasetError& err) {
    std::cerr << "error: dataset: " << err.what() << "\n";
    return kExitIo;
  } catch (const CheckpointError& err) {
    std::cerr << "error: checkpoint: " << err.what() << "\n";
    return kExitIo;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
