#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/random.hpp"
#include "rdfl/ring.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl::testing {

/// Runs `fn` and returns the code of the rdfl::Error it throws.
inline std::optional<ErrorCode> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

#define EXPECT_RDFL_ERROR(code, stmt) EXPECT_EQ(::rdfl::testing::error_code_of([&] { stmt; }), (code))

/// Linear scan over every entry: first trusted entry with position > from,
/// else the smallest-positioned trusted entry. Independent of the binary search.
inline std::string brute_force_successor(const RingTopology& ring, RingPosition from) {
  const RingEntry* best = nullptr;
  const RingEntry* lowest = nullptr;
  for (const auto& e : ring.entries()) {
    if (!e.node.trusted()) continue;
    auto before = [](const RingEntry& a, const RingEntry& b) {
      return a.position.value != b.position.value ? a.position.value < b.position.value : a.node.id < b.node.id;
    };
    if (!lowest || before(e, *lowest)) lowest = &e;
    if (e.position.value > from.value && (!best || before(e, *best))) best = &e;
  }
  const RingEntry* hit = best ? best : lowest;
  return hit->node.virtual_of ? *hit->node.virtual_of : hit->node.id;
}

inline std::vector<NodeDescriptor> random_nodes(std::size_t trusted, std::size_t untrusted, std::uint64_t seed,
                                                const std::string& prefix = "node") {
  Rng rng(seed);
  std::vector<NodeDescriptor> out;
  for (std::size_t i = 0; i < trusted + untrusted; ++i) {
    std::string addr = std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) + "." +
                       std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) + ":" +
                       std::to_string(i);
    out.push_back({prefix + std::to_string(i), addr, i < trusted ? Trust::Trusted : Trust::Untrusted, std::nullopt});
  }
  return out;
}

/// Normal-equations least squares (X^T X) w = X^T y by Gaussian elimination with partial pivoting.
inline std::vector<double> normal_equations(const std::vector<train::Sample>& data) {
  const std::size_t d = data.front().x.size();
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (const auto& s : data) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] += s.x[i] * s.x[j];
      a[i][d] += s.x[i] * s.label;
    }
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= d; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = a[i][d] / a[i][i];
  return w;
}

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace rdfl::testing
