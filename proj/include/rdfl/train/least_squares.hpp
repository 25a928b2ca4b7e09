#pragma once

#include <span>
#include <vector>

#include "rdfl/random.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl::train {

inline constexpr const char* kLeastSquaresTag = "lsq.w";
inline constexpr const char* kLeastSquaresUnusedTag = "lsq.none";

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Mean of 0.5 * (w.x - y)^2 over the batch.
inline double least_squares_loss(std::span<const double> w, std::span<const Sample> batch) {
  require(!batch.empty(), ErrorCode::InvalidArgument, "empty batch");
  double total = 0.0;
  for (const auto& s : batch) {
    const double r = dot(w, s.x) - s.label;
    total += 0.5 * r * r;
  }
  return total / static_cast<double>(batch.size());
}

/// Negative gradient of least_squares_loss.
inline std::vector<double> least_squares_direction(std::span<const double> w, std::span<const Sample> batch) {
  require(!batch.empty(), ErrorCode::InvalidArgument, "empty batch");
  std::vector<double> dir(w.size(), 0.0);
  for (const auto& s : batch) {
    require(s.x.size() == w.size(), ErrorCode::ShapeError, "feature dimension mismatch");
    const double r = dot(w, s.x) - s.label;
    for (std::size_t i = 0; i < w.size(); ++i) dir[i] -= r * s.x[i];
  }
  for (auto& v : dir) v /= static_cast<double>(batch.size());
  return dir;
}

/// y = w_true . x + noise with x ~ N(0, I). Returns the data and w_true.
inline std::pair<LocalDataset, std::vector<double>> make_linear_data(std::size_t n, std::size_t dim, double noise,
                                                                     std::uint64_t seed) {
  Rng rng(derive_seed(seed, "linear-data"));
  std::vector<double> w_true(dim);
  for (auto& w : w_true) w = rng.uniform(-1.0, 1.0);
  LocalDataset data;
  data.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.x.resize(dim);
    for (auto& x : s.x) x = rng.normal();
    s.label = dot(w_true, s.x) + noise * rng.normal();
    data.examples.push_back(std::move(s));
  }
  return {std::move(data), std::move(w_true)};
}

/// Federated least squares: only the discriminator slot (the regression
/// weights) is live; the generator slot is an empty vector.
class LeastSquaresTrainer final : public Trainer {
 public:
  LeastSquaresTrainer(LocalDataset data, TrainerConfig config, std::size_t dim)
      : data_(std::move(data)), config_(std::move(config)), dim_(dim), rng_(config_.seed) {
    config_.validate();
    require(!data_.empty(), ErrorCode::InvalidArgument, "least-squares trainer needs data");
    for (const auto& s : data_.examples) {
      require(s.x.size() == dim_, ErrorCode::ShapeError, "feature dimension mismatch");
    }
  }

  ModelPair initial_model() const override {
    return ModelPair{{std::vector<double>(dim_, 0.0), kLeastSquaresTag}, {{}, kLeastSquaresUnusedTag}, "", 0};
  }

  void reset(std::uint64_t seed) override { rng_ = Rng(seed); }

  /// Minibatch drawn with replacement; the full dataset when batch_size >= |R_i|.
  std::vector<Sample> draw_batch() {
    if (config_.batch_size >= data_.size()) return data_.examples;
    std::vector<Sample> batch;
    batch.reserve(config_.batch_size);
    for (std::size_t i = 0; i < config_.batch_size; ++i) batch.push_back(data_.examples[rng_.below(data_.size())]);
    return batch;
  }

  StepDirections local_step(const ModelPair& current, std::uint64_t) override {
    const auto batch = draw_batch();
    return {{least_squares_direction(current.d.values, batch), current.d.shape_tag},
            {std::vector<double>(current.g.size(), 0.0), current.g.shape_tag}};
  }

  double lr_d(std::uint64_t t) const override { return config_.lr_d_at(t); }
  double lr_g(std::uint64_t t) const override { return config_.lr_g_at(t); }
  std::size_t dataset_size() const override { return data_.size(); }

  double evaluate(const ModelPair& model) const override { return least_squares_loss(model.d.values, data_.examples); }

  const LocalDataset& data() const { return data_; }

 private:
  LocalDataset data_;
  TrainerConfig config_;
  std::size_t dim_;
  Rng rng_;
};

}  // namespace rdfl::train
