#pragma once

#include <memory>

#include "rdfl/random.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl::train {

/// Data-poisoning participant: keeps the honest trainer's shapes and
/// bookkeeping but pushes its parameters along large random directions.
class PoisonTrainer final : public Trainer {
 public:
  PoisonTrainer(std::unique_ptr<Trainer> honest, double scale) : honest_(std::move(honest)), scale_(scale), rng_(0) {
    require(honest_ != nullptr, ErrorCode::InvalidArgument, "poison trainer needs an inner trainer");
  }

  ModelPair initial_model() const override { return honest_->initial_model(); }

  void reset(std::uint64_t seed) override {
    honest_->reset(seed);
    rng_ = Rng(derive_seed(seed, "poison"));
  }

  StepDirections local_step(const ModelPair& current, std::uint64_t) override {
    StepDirections out{{std::vector<double>(current.d.size()), current.d.shape_tag},
                       {std::vector<double>(current.g.size()), current.g.shape_tag}};
    for (auto& x : out.d.values) x = scale_ * rng_.normal();
    for (auto& x : out.g.values) x = scale_ * rng_.normal();
    return out;
  }

  double lr_d(std::uint64_t t) const override { return honest_->lr_d(t); }
  double lr_g(std::uint64_t t) const override { return honest_->lr_g(t); }
  std::size_t dataset_size() const override { return honest_->dataset_size(); }
  double evaluate(const ModelPair& model) const override { return honest_->evaluate(model); }

 private:
  std::unique_ptr<Trainer> honest_;
  double scale_;
  Rng rng_;
};

}  // namespace rdfl::train
