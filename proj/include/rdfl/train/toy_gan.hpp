#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "rdfl/random.hpp"
#include "rdfl/train/metrics.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl::train {

// One-dimensional GAN with closed-form gradients:
//   generator      G(z) = a z + b,  z ~ N(0, 1)
//   discriminator  D(x) = logistic(w0 + w1 x + w2 x^2)
// trained with the non-saturating losses
//   L_D = -mean[ log D(x_real) + log(1 - D(G(z))) ]
//   L_G = -mean[ log D(G(z)) ]

inline constexpr const char* kGanDiscriminatorTag = "toygan.d";
inline constexpr const char* kGanGeneratorTag = "toygan.g";

struct GanToyParams {
  double a = 1.0;
  double b = 0.0;
  std::array<double, 3> w{0.0, 0.0, 0.0};

  double generate(double z) const { return a * z + b; }

  double logit(double x) const { return w[0] + w[1] * x + w[2] * x * x; }

  /// Always inside (0, 1) for finite input.
  double discriminate(double x) const { return 1.0 / (1.0 + std::exp(-logit(x))); }

  ModelPair to_model() const {
    return ModelPair{{{w[0], w[1], w[2]}, kGanDiscriminatorTag}, {{a, b}, kGanGeneratorTag}, "", 0};
  }

  static GanToyParams from_model(const ModelPair& m) {
    require(m.d.size() == 3 && m.d.shape_tag == kGanDiscriminatorTag && m.g.size() == 2 &&
                m.g.shape_tag == kGanGeneratorTag,
            ErrorCode::ShapeError, "model is not a toy GAN parameter pair");
    return GanToyParams{m.g.values[0], m.g.values[1], {m.d.values[0], m.d.values[1], m.d.values[2]}};
  }
};

struct GanBatch {
  std::vector<double> real;
  std::vector<double> noise;
};

/// log(1 + e^u) without overflow.
inline double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

inline double discriminator_loss(const GanToyParams& p, const GanBatch& batch) {
  require(!batch.real.empty() && !batch.noise.empty(), ErrorCode::InvalidArgument, "empty batch");
  double real = 0.0, fake = 0.0;
  // -log D(x) = softplus(-u); -log(1 - D(x)) = softplus(u)
  for (double x : batch.real) real += softplus(-p.logit(x));
  for (double z : batch.noise) fake += softplus(p.logit(p.generate(z)));
  return real / static_cast<double>(batch.real.size()) + fake / static_cast<double>(batch.noise.size());
}

inline double generator_loss(const GanToyParams& p, const GanBatch& batch) {
  require(!batch.noise.empty(), ErrorCode::InvalidArgument, "empty batch");
  double total = 0.0;
  for (double z : batch.noise) total += softplus(-p.logit(p.generate(z)));
  return total / static_cast<double>(batch.noise.size());
}

/// Improving directions: -dL_D/dw for the discriminator, -dL_G/d(a, b) for the generator.
inline StepDirections gan_directions(const GanToyParams& p, const GanBatch& batch) {
  require(!batch.real.empty() && !batch.noise.empty(), ErrorCode::InvalidArgument, "empty batch");
  std::vector<double> dw(3, 0.0);
  const double nr = static_cast<double>(batch.real.size());
  const double nf = static_cast<double>(batch.noise.size());
  for (double x : batch.real) {
    const double c = (1.0 - p.discriminate(x)) / nr;
    dw[0] += c;
    dw[1] += c * x;
    dw[2] += c * x * x;
  }
  std::vector<double> dg(2, 0.0);
  for (double z : batch.noise) {
    const double x = p.generate(z);
    const double dx = p.discriminate(x);
    const double c = dx / nf;
    dw[0] -= c;
    dw[1] -= c * x;
    dw[2] -= c * x * x;
    // d/dx log D(x) = (1 - D) * (w1 + 2 w2 x)
    const double slope = (1.0 - dx) * (p.w[1] + 2.0 * p.w[2] * x) / nf;
    dg[0] += slope * z;
    dg[1] += slope;
  }
  return {{std::move(dw), kGanDiscriminatorTag}, {std::move(dg), kGanGeneratorTag}};
}

/// Hard 2-class oracle: class 1 ("on target") iff |x - mu| <= sigma, one-hot output.
inline OracleClassifier threshold_oracle(double mu, double sigma) {
  return OracleClassifier([mu, sigma](std::span<const double> x) {
    const bool inside = std::abs(x[0] - mu) <= sigma;
    return std::vector<double>{inside ? 0.0 : 1.0, inside ? 1.0 : 0.0};
  });
}

struct GanEvaluation {
  double mean = 0.0;
  double stddev = 0.0;
  double emd = 0.0;
};

/// Moments of n generator draws plus EMD against n fresh target draws; each
/// sample is labelled with the threshold oracle's predicted class.
inline GanEvaluation evaluate_gan(const GanToyParams& params, double mu, double sigma, std::size_t n,
                                  std::uint64_t seed) {
  require(n >= 100, ErrorCode::InvalidArgument, "evaluation needs at least 100 samples");
  Rng gen_rng(derive_seed(seed, "eval-generator"));
  Rng target_rng(derive_seed(seed, "eval-target"));
  const auto oracle = threshold_oracle(mu, sigma);

  std::vector<Sample> real(n), fake(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fake[i].x = {params.generate(gen_rng.normal())};
    real[i].x = {target_rng.normal(mu, sigma)};
    fake[i].label = static_cast<double>(oracle.predicted_class(fake[i].x));
    real[i].label = static_cast<double>(oracle.predicted_class(real[i].x));
    sum += fake[i].x[0];
  }
  GanEvaluation out;
  out.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (const auto& s : fake) sq += (s.x[0] - out.mean) * (s.x[0] - out.mean);
  out.stddev = std::sqrt(sq / static_cast<double>(n - 1));
  out.emd = emd(real, fake, oracle);
  return out;
}

/// Toy GAN node. Local data is a set of one-dimensional real samples (x[0]).
class ToyGanTrainer final : public Trainer {
 public:
  struct Target {
    double mu = 0.0;
    double sigma = 1.0;
  };

  ToyGanTrainer(LocalDataset data, TrainerConfig config, Target target, std::size_t eval_samples = 2000)
      : data_(std::move(data)), config_(std::move(config)), target_(target), eval_samples_(eval_samples),
        rng_(config_.seed) {
    config_.validate();
    require(!data_.empty(), ErrorCode::InvalidArgument, "toy GAN trainer needs data");
  }

  ModelPair initial_model() const override { return GanToyParams{}.to_model(); }

  void reset(std::uint64_t seed) override { rng_ = Rng(seed); }

  GanBatch draw_batch() {
    GanBatch batch;
    batch.real.reserve(config_.batch_size);
    batch.noise.reserve(config_.batch_size);
    for (std::size_t i = 0; i < config_.batch_size; ++i) {
      batch.real.push_back(data_.examples[rng_.below(data_.size())].x.at(0));
      batch.noise.push_back(rng_.normal());
    }
    return batch;
  }

  StepDirections local_step(const ModelPair& current, std::uint64_t) override {
    return gan_directions(GanToyParams::from_model(current), draw_batch());
  }

  double lr_d(std::uint64_t t) const override { return config_.lr_d_at(t); }
  double lr_g(std::uint64_t t) const override { return config_.lr_g_at(t); }
  std::size_t dataset_size() const override { return data_.size(); }

  /// EMD against the target distribution, on a fixed evaluation stream.
  double evaluate(const ModelPair& model) const override {
    return evaluate_gan(GanToyParams::from_model(model), target_.mu, target_.sigma, eval_samples_, config_.seed).emd;
  }

  Target target() const { return target_; }

 private:
  LocalDataset data_;
  TrainerConfig config_;
  Target target_;
  std::size_t eval_samples_;
  Rng rng_;
};

/// n one-dimensional samples from N(mu, sigma^2).
inline LocalDataset make_gaussian_data(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "gaussian-data"));
  LocalDataset data;
  data.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) data.examples.push_back({{rng.normal(mu, sigma)}, 0.0});
  return data;
}

}  // namespace rdfl::train
