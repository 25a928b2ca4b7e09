#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdfl/bytes.hpp"
#include "rdfl/error.hpp"

namespace rdfl {

/// Flat parameter array. `shape_tag` is opaque and only guards against
/// combining vectors that belong to different models.
struct ParamVector {
  std::vector<double> values;
  std::string shape_tag;

  std::size_t size() const { return values.size(); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// Discriminator and generator parameters of one node, snapshotted at a local step.
struct ModelPair {
  ParamVector d;
  ParamVector g;
  std::string origin;
  std::uint64_t iteration = 0;

  friend bool operator==(const ModelPair&, const ModelPair&) = default;
};

struct NodeWeight {
  double p = 0.0;
};

struct WeightedModel {
  ModelPair model;
  NodeWeight weight;
};

inline constexpr double kWeightSumTolerance = 1e-12;
inline constexpr const char* kAggregateOrigin = "aggregate";

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

inline void check_compatible(const ParamVector& a, const ParamVector& b) {
  require(a.size() == b.size() && a.shape_tag == b.shape_tag, ErrorCode::ShapeError,
          "incompatible parameter vectors ('" + a.shape_tag + "'[" + std::to_string(a.size()) + "] vs '" +
              b.shape_tag + "'[" + std::to_string(b.size()) + "])");
}

/// v + lr * grad. Callers pass `grad` already oriented as the improving
/// direction for that player, so the update is always an addition.
inline ParamVector apply_update(const ParamVector& v, const ParamVector& grad, double lr) {
  check_compatible(v, grad);
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::InvalidArgument, "learning rate must be positive");
  ParamVector out{std::vector<double>(v.size()), v.shape_tag};
  for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = v.values[i] + lr * grad.values[i];
  require(all_finite(out.values), ErrorCode::NumericError, "update produced a non-finite parameter");
  return out;
}

namespace detail {

/// Lexicographic total order used to canonicalise aggregation inputs.
inline bool canonical_less(const WeightedModel& a, const WeightedModel& b) {
  if (a.model.origin != b.model.origin) return a.model.origin < b.model.origin;
  if (a.model.iteration != b.model.iteration) return a.model.iteration < b.model.iteration;
  if (a.weight.p != b.weight.p) return a.weight.p < b.weight.p;
  if (a.model.d.values != b.model.d.values) return a.model.d.values < b.model.d.values;
  return a.model.g.values < b.model.g.values;
}

/// Pairwise (cascade) sum over inputs [lo, hi) of p_j * v_j, element-wise.
template <typename Select>
std::vector<double> pairwise_weighted_sum(std::span<const WeightedModel* const> inputs, Select select) {
  if (inputs.size() == 1) {
    const auto& v = select(inputs[0]->model).values;
    std::vector<double> out(v.size());
    const double p = inputs[0]->weight.p;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = p * v[i];
    return out;
  }
  const std::size_t mid = inputs.size() / 2;
  auto left = pairwise_weighted_sum(inputs.first(mid), select);
  const auto right = pairwise_weighted_sum(inputs.subspan(mid), select);
  for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
  return left;
}

}  // namespace detail

/// Federated averaging: sum_j p_j d_j and sum_j p_j g_j. Inputs are sorted into
/// a canonical order first so the result is bitwise independent of arrival order.
inline ModelPair fedavg(std::span<const WeightedModel> pairs) {
  require(!pairs.empty(), ErrorCode::InvalidArgument, "fedavg needs at least one model");

  double weight_sum = 0.0;
  for (const auto& wm : pairs) {
    check_compatible(wm.model.d, pairs.front().model.d);
    check_compatible(wm.model.g, pairs.front().model.g);
    require(wm.weight.p >= 0.0 && wm.weight.p <= 1.0, ErrorCode::InvalidWeights,
            "weight of '" + wm.model.origin + "' outside [0, 1]");
    weight_sum += wm.weight.p;
  }
  require(std::abs(weight_sum - 1.0) <= kWeightSumTolerance, ErrorCode::InvalidWeights,
          "weights sum to " + std::to_string(weight_sum));

  std::vector<const WeightedModel*> order;
  order.reserve(pairs.size());
  for (const auto& wm : pairs) order.push_back(&wm);
#ifndef RDFL_FAULT_INJECT_FEDAVG_ORDER
  std::sort(order.begin(), order.end(),
            [](const WeightedModel* a, const WeightedModel* b) { return detail::canonical_less(*a, *b); });
#endif

  ModelPair out;
  out.origin = kAggregateOrigin;
  out.d.shape_tag = pairs.front().model.d.shape_tag;
  out.g.shape_tag = pairs.front().model.g.shape_tag;
  out.d.values = detail::pairwise_weighted_sum(order, [](const ModelPair& m) -> const ParamVector& { return m.d; });
  out.g.values = detail::pairwise_weighted_sum(order, [](const ModelPair& m) -> const ParamVector& { return m.g; });
  for (const auto& wm : pairs) out.iteration = std::max(out.iteration, wm.model.iteration);
  require(all_finite(out.d.values) && all_finite(out.g.values), ErrorCode::NumericError,
          "aggregate contains a non-finite parameter");
  return out;
}

inline ModelPair fedavg(const std::vector<WeightedModel>& pairs) { return fedavg(std::span<const WeightedModel>(pairs)); }

// ---------------------------------------------------------------------------
// Wire format (little-endian):
//   "RDFL" | version u8 | d.shape_tag | g.shape_tag | origin   (each u32 length + bytes)
//   | iteration u64 | d: u64 count + f64[count] | g: u64 count + f64[count]

inline constexpr std::uint8_t kModelFormatVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 4 + 1 + 4 + 4 + 4 + 8 + 8 + 8;

inline std::size_t size_bytes(const ModelPair& m) {
  return kModelHeaderBytes + m.d.shape_tag.size() + m.g.shape_tag.size() + m.origin.size() +
         8 * (m.d.size() + m.g.size());
}

inline Bytes serialize(const ModelPair& m) {
  ByteWriter w;
  w.raw(as_bytes("RDFL"));
  w.u8(kModelFormatVersion);
  w.prefixed(m.d.shape_tag);
  w.prefixed(m.g.shape_tag);
  w.prefixed(m.origin);
  w.u64(m.iteration);
  for (const auto* v : {&m.d, &m.g}) {
    w.u64(v->size());
    for (double x : v->values) w.f64(x);
  }
  return std::move(w).take();
}

inline ModelPair deserialize(ByteView bytes) {
  ByteReader r(bytes);
  const auto magic = r.take(4);
  require(std::equal(magic.begin(), magic.end(), "RDFL"), ErrorCode::DecodeError, "bad magic");
  require(r.u8() == kModelFormatVersion, ErrorCode::DecodeError, "unsupported format version");
  ModelPair m;
  m.d.shape_tag = r.prefixed_string();
  m.g.shape_tag = r.prefixed_string();
  m.origin = r.prefixed_string();
  m.iteration = r.u64();
  for (auto* v : {&m.d, &m.g}) {
    const auto count = r.u64();
    require(count <= r.remaining() / 8, ErrorCode::DecodeError, "truncated parameter vector");
    v->values.resize(count);
    for (auto& x : v->values) x = r.f64();
    require(all_finite(v->values), ErrorCode::DecodeError, "non-finite parameter in payload");
  }
  require(r.remaining() == 0, ErrorCode::DecodeError, "trailing bytes after model payload");
  return m;
}

}  // namespace rdfl
