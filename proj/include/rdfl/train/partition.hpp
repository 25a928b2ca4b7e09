#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/random.hpp"

namespace rdfl::train {

using Partition = std::vector<std::vector<std::size_t>>;

/// Label-skewed split: for every class, node shares come from a symmetric
/// Dirichlet(alpha). Partitions are disjoint, exhaustive, and sorted.
inline Partition dirichlet_partition(const std::vector<std::int64_t>& labels, double alpha, std::size_t nodes,
                                     std::uint64_t seed) {
  require(nodes >= 1, ErrorCode::InvalidArgument, "need at least one node");
  require(alpha > 0.0 && std::isfinite(alpha), ErrorCode::InvalidArgument, "alpha must be positive");

  std::map<std::int64_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  Rng rng(derive_seed(seed, "dirichlet-partition"));
  Partition out(nodes);
  for (auto& [label, indices] : by_class) {
    rng.shuffle(indices);
    const auto shares = rng.dirichlet(alpha, nodes);
    const double n = static_cast<double>(indices.size());
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < nodes; ++k) {
      cumulative += shares[k];
      const std::size_t end =
          k + 1 == nodes ? indices.size() : std::min(indices.size(), static_cast<std::size_t>(std::floor(cumulative * n)));
      if (end > begin) {
        out[k].insert(out[k].end(), indices.begin() + static_cast<std::ptrdiff_t>(begin),
                      indices.begin() + static_cast<std::ptrdiff_t>(end));
        begin = end;
      }
    }
  }
  for (auto& p : out) std::sort(p.begin(), p.end());
  return out;
}

/// Each node draws floor(fraction * size) indices uniformly with replacement.
inline Partition iid_partition(std::size_t size, std::size_t nodes, double fraction, std::uint64_t seed) {
  require(nodes >= 1, ErrorCode::InvalidArgument, "need at least one node");
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::InvalidArgument, "fraction must be in (0, 1]");
  require(size >= 1, ErrorCode::InvalidArgument, "empty dataset");
  const auto draws = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(size)));
  Rng rng(derive_seed(seed, "iid-partition"));
  Partition out(nodes);
  for (auto& p : out) {
    p.reserve(draws);
    for (std::size_t i = 0; i < draws; ++i) p.push_back(static_cast<std::size_t>(rng.below(size)));
  }
  return out;
}

}  // namespace rdfl::train
