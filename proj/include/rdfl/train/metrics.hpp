#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl::train {

inline constexpr double kProbabilityTolerance = 1e-9;

/// Pluggable scoring function f_o: sample -> class probabilities.
class OracleClassifier {
 public:
  using Fn = std::function<std::vector<double>(std::span<const double>)>;

  explicit OracleClassifier(Fn fn) : fn_(std::move(fn)) {}

  /// Output is checked to be a probability distribution.
  std::vector<double> probabilities(std::span<const double> x) const {
    auto p = fn_(x);
    require(!p.empty(), ErrorCode::InvalidArgument, "classifier returned no classes");
    double sum = 0.0;
    for (double v : p) {
      require(v >= 0.0 && std::isfinite(v), ErrorCode::InvalidArgument, "classifier returned a negative probability");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= kProbabilityTolerance, ErrorCode::InvalidArgument,
            "classifier output does not sum to 1");
    return p;
  }

  std::size_t predicted_class(std::span<const double> x) const {
    const auto p = probabilities(x);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  /// Softmax score of the predicted class.
  double score(std::span<const double> x) const {
    const auto p = probabilities(x);
    return *std::max_element(p.begin(), p.end());
  }

 private:
  Fn fn_;
};

/// (1/N) sum_i ( f_o(x_r^i) |y_r^i| - f_o(x_g^i) |y_g^i| ), f_o being the
/// predicted-class score. Pairs are matched by position.
inline double emd(std::span<const Sample> real, std::span<const Sample> generated, const OracleClassifier& oracle) {
  require(!real.empty(), ErrorCode::InvalidArgument, "emd needs samples");
  require(real.size() == generated.size(), ErrorCode::InvalidArgument, "emd sample lists differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    total += oracle.score(real[i].x) * std::abs(real[i].label) - oracle.score(generated[i].x) * std::abs(generated[i].label);
  }
  return total / static_cast<double>(real.size());
}

/// exp(E_x KL(p(y|x) || p(y))) per split, averaged over splits. Splits are
/// contiguous; the first (n mod splits) splits get one extra sample.
inline double inception_score(std::span<const std::vector<double>> samples, const OracleClassifier& classifier,
                              std::size_t splits = 1) {
  require(!samples.empty(), ErrorCode::InvalidArgument, "inception score needs samples");
  require(splits >= 1 && splits <= samples.size(), ErrorCode::InvalidArgument, "splits must be in [1, sample count]");

  std::vector<std::vector<double>> probs;
  probs.reserve(samples.size());
  for (const auto& s : samples) probs.push_back(classifier.probabilities(s));
  const std::size_t classes = probs.front().size();
  for (const auto& p : probs) require(p.size() == classes, ErrorCode::InvalidArgument, "inconsistent class count");

  const std::size_t base = samples.size() / splits;
  const std::size_t extra = samples.size() % splits;
  double score_sum = 0.0;
  std::size_t begin = 0;
  for (std::size_t s = 0; s < splits; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    std::vector<double> marginal(classes, 0.0);
    for (std::size_t i = begin; i < begin + len; ++i) {
      for (std::size_t c = 0; c < classes; ++c) marginal[c] += probs[i][c];
    }
    for (auto& m : marginal) m /= static_cast<double>(len);
    double kl_sum = 0.0;
    for (std::size_t i = begin; i < begin + len; ++i) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double p = probs[i][c];
        if (p > 0.0) kl_sum += p * (std::log(p) - std::log(marginal[c]));
      }
    }
    // KL is non-negative; clamp rounding noise so the score never dips below 1.
    score_sum += std::exp(std::max(0.0, kl_sum) / static_cast<double>(len));
    begin += len;
  }
  return score_sum / static_cast<double>(splits);
}

}  // namespace rdfl::train
