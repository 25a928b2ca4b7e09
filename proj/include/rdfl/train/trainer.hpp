#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/model.hpp"

namespace rdfl::train {

struct Sample {
  std::vector<double> x;
  double label = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// A node's local data R_i.
struct LocalDataset {
  std::vector<Sample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// Learning rates may vary with t; both default to constants.
struct TrainerConfig {
  double lr_d = 0.01;
  double lr_g = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::function<double(std::uint64_t)> lr_d_schedule;
  std::function<double(std::uint64_t)> lr_g_schedule;

  double lr_d_at(std::uint64_t t) const { return lr_d_schedule ? lr_d_schedule(t) : lr_d; }
  double lr_g_at(std::uint64_t t) const { return lr_g_schedule ? lr_g_schedule(t) : lr_g; }

  void validate() const {
    require(lr_d > 0.0 && lr_g > 0.0, ErrorCode::InvalidArgument, "learning rates must be positive");
    require(batch_size > 0, ErrorCode::InvalidArgument, "batch size must be positive");
  }
};

/// Improving directions for discriminator (theta) and generator (h).
struct StepDirections {
  ParamVector d;
  ParamVector g;
};

/// Per-node local training behind a uniform contract. The round engine owns
/// the parameters; a trainer only produces update directions from them.
class Trainer {
 public:
  virtual ~Trainer() = default;

  /// Global starting point (d_0, g_0); identical across honest nodes.
  virtual ModelPair initial_model() const = 0;

  /// Restarts the trainer's random stream.
  virtual void reset(std::uint64_t seed) = 0;

  virtual StepDirections local_step(const ModelPair& current, std::uint64_t t) = 0;

  virtual double lr_d(std::uint64_t t) const = 0;
  virtual double lr_g(std::uint64_t t) const = 0;

  /// |R_i|, drives the default aggregation weight.
  virtual std::size_t dataset_size() const = 0;

  /// Trainer-specific quality figure (loss or EMD) for the metrics stream.
  virtual double evaluate(const ModelPair& model) const = 0;
};

}  // namespace rdfl::train
