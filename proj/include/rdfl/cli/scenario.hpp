#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/ring.hpp"
#include "rdfl/sync.hpp"

namespace rdfl::cli {

enum class TrainerKind { LeastSquares, ToyGan };
enum class PartitionKind { Iid, Dirichlet };
enum class Behavior { Honest, Poison };

struct ScenarioNode {
  NodeDescriptor descriptor;
  Behavior behavior = Behavior::Honest;
};

struct TrainerSpec {
  TrainerKind kind = TrainerKind::LeastSquares;
  double lr_d = 0.01;
  double lr_g = 0.01;
  std::size_t batch_size = 32;
  // least squares
  std::size_t dim = 10;
  double noise = 0.1;
  // toy GAN
  double target_mean = 3.0;
  double target_std = 1.5;
  std::size_t eval_samples = 2000;
  // adversarial nodes
  double poison_scale = 100.0;
};

struct DataSpec {
  PartitionKind partition = PartitionKind::Iid;
  double alpha = 0.5;
  double fraction = 0.5;
  std::size_t samples = 2000;
  /// Dirichlet partitioning bins the regression target (or the sample value) into this many classes.
  std::size_t classes = 10;
  std::optional<std::filesystem::path> file;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 100;   ///< T
  std::uint64_t interval = 10;   ///< K
  std::size_t virtual_count = 0;
  WeightMode weights = WeightMode::BySize;
  std::optional<std::filesystem::path> output;
  TrainerSpec trainer;
  DataSpec data;
  std::vector<ScenarioNode> nodes;

  std::vector<NodeDescriptor> descriptors() const {
    std::vector<NodeDescriptor> out;
    for (const auto& n : nodes) out.push_back(n.descriptor);
    return out;
  }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  fail(ErrorCode::ConfigError, (path.empty() ? std::string("config") : path) + ": " + what);
}

inline void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) config_fail(path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (allowed.count(key) == 0) config_fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) config_fail(path, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_fail(path, "cannot read '" + node.Scalar() + "'");
  }
}

template <typename T>
void read_opt(const YAML::Node& parent, const std::string& key, const std::string& prefix, T& out) {
  if (const auto n = parent[key]) out = scalar<T>(n, prefix.empty() ? key : prefix + "." + key);
}

/// Non-negative integer read through a signed type so "-1" is rejected instead of wrapping.
template <typename T>
void read_count(const YAML::Node& parent, const std::string& key, const std::string& prefix, T& out) {
  const auto path = prefix.empty() ? key : prefix + "." + key;
  if (const auto n = parent[key]) {
    const auto v = scalar<long long>(n, path);
    if (v < 0) config_fail(path, "must be non-negative");
    out = static_cast<T>(v);
  }
}

template <typename E>
E read_enum(const YAML::Node& node, const std::string& path, std::initializer_list<std::pair<const char*, E>> names) {
  const auto text = scalar<std::string>(node, path);
  std::string options;
  for (const auto& [name, value] : names) {
    if (text == name) return value;
    options += options.empty() ? name : std::string("|") + name;
  }
  config_fail(path, "expected one of " + options + ", got '" + text + "'");
}

inline void positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) config_fail(path, "must be positive");
}

}  // namespace detail

/// Parses a YAML scenario. Relative data file paths resolve against `base_dir`.
inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: malformed YAML: ") + e.what());
  }
  check_keys(root, "",
             {"name", "seed", "T", "K", "virtual_count", "weights", "output", "trainer", "data", "nodes"});

  Scenario s;
  read_opt(root, "name", "", s.name);
  read_count(root, "seed", "", s.seed);
  read_count(root, "T", "", s.horizon);
  read_count(root, "K", "", s.interval);
  read_count(root, "virtual_count", "", s.virtual_count);
  if (s.horizon < 1) config_fail("T", "must be at least 1");
  if (s.interval < 1) config_fail("K", "must be at least 1");
  if (const auto w = root["weights"]) {
    s.weights = read_enum<WeightMode>(w, "weights", {{"uniform", WeightMode::Uniform}, {"by_size", WeightMode::BySize}});
  }
  if (const auto o = root["output"]) s.output = scalar<std::string>(o, "output");

  const auto trainer = root["trainer"];
  if (!trainer) config_fail("trainer", "missing");
  check_keys(trainer, "trainer",
             {"kind", "lr_d", "lr_g", "batch_size", "dim", "noise", "target_mean", "target_std", "eval_samples",
              "poison_scale"});
  auto& t = s.trainer;
  if (!trainer["kind"]) config_fail("trainer.kind", "missing");
  t.kind = read_enum<TrainerKind>(trainer["kind"], "trainer.kind",
                                  {{"least_squares", TrainerKind::LeastSquares}, {"toy_gan", TrainerKind::ToyGan}});
  read_opt(trainer, "lr_d", "trainer", t.lr_d);
  read_opt(trainer, "lr_g", "trainer", t.lr_g);
  read_count(trainer, "batch_size", "trainer", t.batch_size);
  read_count(trainer, "dim", "trainer", t.dim);
  read_opt(trainer, "noise", "trainer", t.noise);
  read_opt(trainer, "target_mean", "trainer", t.target_mean);
  read_opt(trainer, "target_std", "trainer", t.target_std);
  read_count(trainer, "eval_samples", "trainer", t.eval_samples);
  read_opt(trainer, "poison_scale", "trainer", t.poison_scale);
  positive(t.lr_d, "trainer.lr_d");
  positive(t.lr_g, "trainer.lr_g");
  positive(t.target_std, "trainer.target_std");
  if (t.batch_size < 1) config_fail("trainer.batch_size", "must be at least 1");
  if (t.dim < 1) config_fail("trainer.dim", "must be at least 1");
  if (t.eval_samples < 100) config_fail("trainer.eval_samples", "must be at least 100");
  if (!(t.noise >= 0.0)) config_fail("trainer.noise", "must be non-negative");

  if (const auto data = root["data"]) {
    check_keys(data, "data", {"partition", "alpha", "fraction", "samples", "classes", "file"});
    auto& d = s.data;
    if (const auto p = data["partition"]) {
      d.partition = read_enum<PartitionKind>(p, "data.partition",
                                             {{"iid", PartitionKind::Iid}, {"dirichlet", PartitionKind::Dirichlet}});
    }
    read_opt(data, "alpha", "data", d.alpha);
    read_opt(data, "fraction", "data", d.fraction);
    read_count(data, "samples", "data", d.samples);
    read_count(data, "classes", "data", d.classes);
    if (const auto f = data["file"]) {
      std::filesystem::path p = scalar<std::string>(f, "data.file");
      d.file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    positive(d.alpha, "data.alpha");
    if (!(d.fraction > 0.0 && d.fraction <= 1.0)) config_fail("data.fraction", "must be in (0, 1]");
    if (d.samples < 1) config_fail("data.samples", "must be at least 1");
    if (d.classes < 1) config_fail("data.classes", "must be at least 1");
  }

  const auto nodes = root["nodes"];
  if (!nodes || !nodes.IsSequence() || nodes.size() == 0) config_fail("nodes", "expected a non-empty list");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto path = "nodes[" + std::to_string(i) + "]";
    const auto n = nodes[i];
    check_keys(n, path, {"id", "address", "trust", "behavior"});
    ScenarioNode node;
    if (!n["id"]) config_fail(path + ".id", "missing");
    if (!n["address"]) config_fail(path + ".address", "missing");
    node.descriptor.id = scalar<std::string>(n["id"], path + ".id");
    node.descriptor.address = scalar<std::string>(n["address"], path + ".address");
    if (node.descriptor.id.empty() || node.descriptor.id.find('#') != std::string::npos) {
      config_fail(path + ".id", "must be non-empty and must not contain '#'");
    }
    if (!ids.insert(node.descriptor.id).second) config_fail(path + ".id", "duplicate id '" + node.descriptor.id + "'");
    node.descriptor.trust = Trust::Trusted;
    if (const auto tr = n["trust"]) {
      node.descriptor.trust =
          read_enum<Trust>(tr, path + ".trust", {{"trusted", Trust::Trusted}, {"untrusted", Trust::Untrusted}});
    }
    if (const auto b = n["behavior"]) {
      node.behavior = read_enum<Behavior>(b, path + ".behavior", {{"honest", Behavior::Honest}, {"poison", Behavior::Poison}});
    }
    s.nodes.push_back(std::move(node));
  }
  if (std::none_of(s.nodes.begin(), s.nodes.end(), [](const ScenarioNode& n) { return n.descriptor.trusted(); })) {
    config_fail("nodes", "at least one node must be trusted");
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto s = parse_scenario(ss.str(), path.parent_path());
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

}  // namespace rdfl::cli
