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

#include "kinpred/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "kinpred/detail/fnv1a.hpp"

namespace kinpred {

ModelError::ModelError(Kind kind, const std::string& message, int line,
                       int column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ": " + message
                                  : message),
      kind_(kind),
      line_(line),
      column_(column) {}

RigidBodyModel RigidBodyModel::Create(std::string name,
                                      std::vector<LinkSpec> links,
                                      std::vector<JointSpec> joints,
                                      int base_link,
                                      std::vector<int> instrumented_links,
                                      std::vector<int> upper_joints,
                                      std::vector<int> lower_joints) {
  using Kind = ModelError::Kind;
  const int num_links = static_cast<int>(links.size());
  const int num_joints = static_cast<int>(joints.size());

  if (num_links == 0) throw ModelError(Kind::kNotATree, "model has no links");
  if (base_link < 0 || base_link >= num_links) {
    throw ModelError(Kind::kUnknownLink, "base link index out of range");
  }
  {
    std::set<std::string> names;
    for (const auto& l : links) {
      if (!names.insert(l.name).second) {
        throw ModelError(Kind::kDuplicateName, "duplicate link '" + l.name + "'");
      }
    }
    names.clear();
    for (const auto& j : joints) {
      if (!names.insert(j.name).second) {
        throw ModelError(Kind::kDuplicateName, "duplicate joint '" + j.name + "'");
      }
    }
  }

  std::vector<int> parent_joint(num_links, -1);
  for (int j = 0; j < num_joints; ++j) {
    const JointSpec& spec = joints[j];
    if (spec.parent < 0 || spec.parent >= num_links || spec.child < 0 ||
        spec.child >= num_links) {
      throw ModelError(Kind::kUnknownLink,
                       "joint '" + spec.name + "' references an unknown link");
    }
    if (spec.parent == spec.child) {
      throw ModelError(Kind::kNotATree,
                       "joint '" + spec.name + "' connects a link to itself");
    }
    if (spec.child == base_link) {
      throw ModelError(Kind::kNotATree,
                       "joint '" + spec.name + "' has the base link as child");
    }
    if (parent_joint[spec.child] != -1) {
      throw ModelError(Kind::kNotATree, "link '" + links[spec.child].name +
                                            "' has more than one parent joint");
    }
    parent_joint[spec.child] = j;
    if (std::abs(spec.axis.norm() - 1.0) > 1e-9) {
      throw ModelError(Kind::kNonUnitAxis,
                       "joint '" + spec.name + "' axis is not unit length");
    }
    if (!(spec.limits.lower < spec.limits.upper)) {
      throw ModelError(Kind::kBadLimits,
                       "joint '" + spec.name + "' needs lower < upper");
    }
    if (!is_rotation(spec.origin.rotation, 1e-9)) {
      throw ModelError(Kind::kSyntax,
                       "joint '" + spec.name + "' origin is not a rotation");
    }
  }

  // Breadth-first from the base: every link must be reached exactly once.
  std::vector<std::vector<int>> child_joints(num_links);
  for (int j = 0; j < num_joints; ++j) child_joints[joints[j].parent].push_back(j);
  std::vector<int> traversal;
  std::vector<std::vector<int>> chains(num_links);
  std::vector<char> reached(num_links, 0);
  std::deque<int> queue{base_link};
  reached[base_link] = 1;
  while (!queue.empty()) {
    const int link = queue.front();
    queue.pop_front();
    for (int j : child_joints[link]) {
      const int child = joints[j].child;
      if (reached[child]) {
        throw ModelError(Kind::kNotATree, "cycle through joint '" + joints[j].name + "'");
      }
      reached[child] = 1;
      traversal.push_back(j);
      chains[child] = chains[link];
      chains[child].push_back(j);
      queue.push_back(child);
    }
  }
  for (int l = 0; l < num_links; ++l) {
    if (!reached[l]) {
      throw ModelError(Kind::kNotATree,
                       "link '" + links[l].name + "' is not connected to the base");
    }
  }

  if (instrumented_links.empty()) {
    throw ModelError(Kind::kBadInstrumentation, "no instrumented links declared");
  }
  {
    std::set<int> seen;
    for (int l : instrumented_links) {
      if (l < 0 || l >= num_links) {
        throw ModelError(Kind::kUnknownLink, "instrumented link out of range");
      }
      if (!seen.insert(l).second) {
        throw ModelError(Kind::kBadInstrumentation, "instrumented link listed twice");
      }
    }
  }

  std::vector<int> owner(num_joints, 0);
  for (int j : upper_joints) {
    if (j < 0 || j >= num_joints) throw ModelError(Kind::kUnknownJoint, "partition joint out of range");
    ++owner[j];
  }
  for (int j : lower_joints) {
    if (j < 0 || j >= num_joints) throw ModelError(Kind::kUnknownJoint, "partition joint out of range");
    ++owner[j];
  }
  for (int j = 0; j < num_joints; ++j) {
    if (owner[j] != 1) {
      throw ModelError(Kind::kBadPartition,
                       "joint '" + joints[j].name +
                           "' must appear in exactly one of upper/lower");
    }
  }

  RigidBodyModel model;
  model.name_ = std::move(name);
  model.links_ = std::move(links);
  model.joints_ = std::move(joints);
  model.base_link_ = base_link;
  model.instrumented_ = std::move(instrumented_links);
  model.upper_ = std::move(upper_joints);
  model.lower_ = std::move(lower_joints);
  model.parent_joint_ = std::move(parent_joint);
  model.traversal_ = std::move(traversal);
  model.chains_ = std::move(chains);
  return model;
}

int RigidBodyModel::link_index(std::string_view name) const {
  for (int i = 0; i < num_links(); ++i) {
    if (links_[i].name == name) return i;
  }
  return -1;
}

int RigidBodyModel::joint_index(std::string_view name) const {
  for (int i = 0; i < num_joints(); ++i) {
    if (joints_[i].name == name) return i;
  }
  return -1;
}

bool RigidBodyModel::operator==(const RigidBodyModel& other) const {
  return name_ == other.name_ && links_ == other.links_ &&
         joints_ == other.joints_ && base_link_ == other.base_link_ &&
         instrumented_ == other.instrumented_ && upper_ == other.upper_ &&
         lower_ == other.lower_;
}

namespace {

struct Token {
  std::string_view text;
  int column;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] == '#') break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    tokens.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  RigidBodyModel Run();

 private:
  using Kind = ModelError::Kind;

  [[noreturn]] void Fail(Kind kind, const std::string& msg, int column) const {
    throw ModelError(kind, msg, line_, column);
  }

  std::vector<double> Numbers(const Token& tok, std::string_view value,
                              std::size_t expected) const {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
      const std::size_t comma = value.find(',', pos);
      const std::string_view item =
          value.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - pos);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
        Fail(Kind::kSyntax, "malformed number '" + std::string(item) + "'", tok.column);
      }
      out.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (out.size() != expected) {
      Fail(Kind::kSyntax,
           "expected " + std::to_string(expected) + " numbers in '" +
               std::string(tok.text) + "'",
           tok.column);
    }
    return out;
  }

  int LinkRef(const Token& tok, std::string_view name) const {
    const auto it = link_ids_.find(std::string(name));
    if (it == link_ids_.end()) {
      Fail(Kind::kUnknownLink, "unknown link '" + std::string(name) + "'", tok.column);
    }
    return it->second;
  }

  void ParseJoint(const std::vector<Token>& tokens);

  std::string_view text_;
  int line_ = 0;
  std::string name_ = "model";
  std::vector<LinkSpec> links_;
  std::vector<JointSpec> joints_;
  std::unordered_map<std::string, int> link_ids_;
  std::unordered_map<std::string, int> joint_ids_;
  // Partition/instrumentation reference joints/links by name; resolved at end
  // so declarations may appear in any order.
  struct NameRef {
    std::string name;
    int line;
    int column;
  };
  std::optional<NameRef> base_;
  std::optional<std::vector<NameRef>> instrumented_;
  std::optional<std::vector<NameRef>> upper_;
  std::optional<std::vector<NameRef>> lower_;
};

void Parser::ParseJoint(const std::vector<Token>& tokens) {
  if (tokens.size() < 3) Fail(Kind::kSyntax, "joint needs a name and a type", tokens[0].column);
  JointSpec spec;
  spec.name = std::string(tokens[1].text);
  if (tokens[2].text != "revolute") {
    Fail(Kind::kSyntax, "unsupported joint type '" + std::string(tokens[2].text) + "'",
         tokens[2].column);
  }
  bool have_parent = false, have_child = false, have_axis = false, have_limit = false;
  bool have_rpy = false, have_rot = false;
  for (std::size_t i = 3; i < tokens.size(); ++i) {
    const Token& tok = tokens[i];
    const std::size_t eq = tok.text.find('=');
    if (eq == std::string_view::npos) {
      Fail(Kind::kSyntax, "expected key=value, got '" + std::string(tok.text) + "'", tok.column);
    }
    const std::string_view key = tok.text.substr(0, eq);
    const std::string_view value = tok.text.substr(eq + 1);
    if (key == "parent") {
      spec.parent = LinkRef(tok, value);
      have_parent = true;
    } else if (key == "child") {
      spec.child = LinkRef(tok, value);
      have_child = true;
    } else if (key == "xyz") {
      const auto v = Numbers(tok, value, 3);
      spec.origin.position = Vec3(v[0], v[1], v[2]);
    } else if (key == "rpy") {
      const auto v = Numbers(tok, value, 3);
      spec.origin.rotation = rpy_to_rotation(v[0], v[1], v[2]);
      have_rpy = true;
    } else if (key == "rot") {
      const auto v = Numbers(tok, value, 9);
      spec.origin.rotation = unflatten(std::span<const double, 9>(v.data(), 9));
      if (!is_rotation(spec.origin.rotation, 1e-9)) {
        Fail(Kind::kSyntax, "rot= is not a rotation matrix", tok.column);
      }
      have_rot = true;
    } else if (key == "axis") {
      const auto v = Numbers(tok, value, 3);
      spec.axis = Vec3(v[0], v[1], v[2]);
      if (std::abs(spec.axis.norm() - 1.0) > 1e-9) {
        Fail(Kind::kNonUnitAxis, "axis is not unit length", tok.column);
      }
      have_axis = true;
    } else if (key == "limit") {
      const auto v = Numbers(tok, value, 2);
      spec.limits = {v[0], v[1]};
      if (!(spec.limits.lower < spec.limits.upper)) {
        Fail(Kind::kBadLimits, "limit needs lower < upper", tok.column);
      }
      have_limit = true;
    } else {
      Fail(Kind::kSyntax, "unknown joint attribute '" + std::string(key) + "'", tok.column);
    }
  }
  if (have_rpy && have_rot) Fail(Kind::kSyntax, "give either rpy= or rot=, not both", tokens[0].column);
  if (!have_parent || !have_child || !have_axis || !have_limit) {
    Fail(Kind::kSyntax, "joint '" + spec.name + "' needs parent=, child=, axis= and limit=",
         tokens[0].column);
  }
  if (spec.parent == spec.child) {
    Fail(Kind::kNotATree, "joint '" + spec.name + "' connects a link to itself", tokens[0].column);
  }
  if (!joint_ids_.emplace(spec.name, static_cast<int>(joints_.size())).second) {
    Fail(Kind::kDuplicateName, "duplicate joint '" + spec.name + "'", tokens[1].column);
  }
  joints_.push_back(std::move(spec));
}

RigidBodyModel Parser::Run() {
  std::size_t pos = 0;
  while (pos <= text_.size()) {
    const std::size_t nl = text_.find('\n', pos);
    const std::string_view line =
        text_.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_;
    const auto tokens = tokenize(line);
    if (!tokens.empty()) {
      const std::string_view directive = tokens[0].text;
      auto names = [&]() {
        std::vector<NameRef> out;
        for (std::size_t i = 1; i < tokens.size(); ++i) {
          out.push_back({std::string(tokens[i].text), line_, tokens[i].column});
        }
        return out;
      };
      if (directive == "robot") {
        if (tokens.size() != 2) Fail(Kind::kSyntax, "robot takes one name", tokens[0].column);
        name_ = std::string(tokens[1].text);
      } else if (directive == "link") {
        if (tokens.size() != 2) Fail(Kind::kSyntax, "link takes one name", tokens[0].column);
        const std::string link(tokens[1].text);
        if (!link_ids_.emplace(link, static_cast<int>(links_.size())).second) {
          Fail(Kind::kDuplicateName, "duplicate link '" + link + "'", tokens[1].column);
        }
        links_.push_back({link});
      } else if (directive == "joint") {
        ParseJoint(tokens);
      } else if (directive == "base") {
        if (tokens.size() != 2) Fail(Kind::kSyntax, "base takes one link name", tokens[0].column);
        if (base_) Fail(Kind::kSyntax, "base declared twice", tokens[0].column);
        base_ = NameRef{std::string(tokens[1].text), line_, tokens[1].column};
      } else if (directive == "instrumented") {
        if (instrumented_) Fail(Kind::kSyntax, "instrumented declared twice", tokens[0].column);
        instrumented_ = names();
      } else if (directive == "upper") {
        if (upper_) Fail(Kind::kSyntax, "upper declared twice", tokens[0].column);
        upper_ = names();
      } else if (directive == "lower") {
        if (lower_) Fail(Kind::kSyntax, "lower declared twice", tokens[0].column);
        lower_ = names();
      } else {
        Fail(Kind::kSyntax, "unknown directive '" + std::string(directive) + "'",
             tokens[0].column);
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  if (!base_) throw ModelError(Kind::kSyntax, "missing base declaration");
  if (!instrumented_) throw ModelError(Kind::kBadInstrumentation, "missing instrumented declaration");
  if (!upper_ || !lower_) throw ModelError(Kind::kMissingPartition, "missing upper/lower partition");

  auto resolve_link = [&](const NameRef& ref) {
    const auto it = link_ids_.find(ref.name);
    if (it == link_ids_.end()) {
      throw ModelError(Kind::kUnknownLink, "unknown link '" + ref.name + "'", ref.line, ref.column);
    }
    return it->second;
  };
  auto resolve_joints = [&](const std::vector<NameRef>& refs) {
    std::vector<int> out;
    for (const auto& ref : refs) {
      const auto it = joint_ids_.find(ref.name);
      if (it == joint_ids_.end()) {
        throw ModelError(Kind::kUnknownJoint, "unknown joint '" + ref.name + "'", ref.line,
                         ref.column);
      }
      out.push_back(it->second);
    }
    return out;
  };

  const int base = resolve_link(*base_);
  std::vector<int> instrumented;
  for (const auto& ref : *instrumented_) instrumented.push_back(resolve_link(ref));
  return RigidBodyModel::Create(name_, std::move(links_), std::move(joints_), base,
                                std::move(instrumented), resolve_joints(*upper_),
                                resolve_joints(*lower_));
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

RigidBodyModel parse_model(std::string_view text) { return Parser(text).Run(); }

RigidBodyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string serialize_model(const RigidBodyModel& model) {
  std::ostringstream out;
  out << "robot " << model.name() << "\n";
  for (const auto& l : model.links()) out << "link " << l.name << "\n";
  for (const auto& j : model.joints()) {
    const auto& p = j.origin.position;
    const auto r = flatten(j.origin.rotation);
    out << "joint " << j.name << " revolute parent=" << model.links()[j.parent].name
        << " child=" << model.links()[j.child].name << " xyz=" << format_number(p.x()) << ","
        << format_number(p.y()) << "," << format_number(p.z()) << " rot=";
    for (int k = 0; k < 9; ++k) out << (k ? "," : "") << format_number(r[k]);
    out << " axis=" << format_number(j.axis.x()) << "," << format_number(j.axis.y()) << ","
        << format_number(j.axis.z()) << " limit=" << format_number(j.limits.lower) << ","
        << format_number(j.limits.upper) << "\n";
  }
  out << "base " << model.links()[model.base_link()].name << "\n";
  out << "instrumented";
  for (int l : model.instrumented_links()) out << " " << model.links()[l].name;
  out << "\nupper";
  for (int j : model.upper_joints()) out << " " << model.joints()[j].name;
  out << "\nlower";
  for (int j : model.lower_joints()) out << " " << model.joints()[j].name;
  out << "\n";
  return out.str();
}

std::uint64_t model_hash(const RigidBodyModel& model) {
  return detail::fnv1a(serialize_model(model));
}

Configuration neutral_configuration(const RigidBodyModel& model) {
  Configuration q;
  q.joint_positions = clamp_to_limits(model, VecX::Zero(model.num_joints()));
  return q;
}

VecX clamp_to_limits(const RigidBodyModel& model, const VecX& joint_positions) {
  if (joint_positions.size() != model.num_joints()) {
    throw std::invalid_argument("clamp_to_limits: dimension mismatch");
  }
  VecX out = joint_positions;
  for (int j = 0; j < model.num_joints(); ++j) {
    const auto& lim = model.joint(j).limits;
    out[j] = std::clamp(out[j], lim.lower, lim.upper);
  }
  return out;
}

}  // namespace kinpred
