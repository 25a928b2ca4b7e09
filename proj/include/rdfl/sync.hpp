#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdfl/crypto.hpp"
#include "rdfl/error.hpp"
#include "rdfl/model.hpp"
#include "rdfl/netsim.hpp"
#include "rdfl/random.hpp"
#include "rdfl/ring.hpp"
#include "rdfl/train/trainer.hpp"

namespace rdfl {

inline bool should_sync(std::uint64_t t, std::uint64_t k) {
  require(k >= 1, ErrorCode::InvalidArgument, "synchronizing interval K must be positive");
  require(t >= 1, ErrorCode::InvalidArgument, "iteration t must be positive");
  return t % k == 0;
}

/// Short hex fingerprint of a model's serialized form.
inline std::string checksum(const ModelPair& m) {
  const auto digest = crypto::sha256(serialize(m));
  return to_hex(ByteView(digest).first(8));
}

struct HeldModel {
  ModelPair model;
  /// Untrusted-origin models are kept for audit but never forwarded or aggregated.
  bool trusted_origin = true;
};

/// Protocol state of one trusted node during a ring pass.
struct SyncState {
  std::string node;
  std::map<std::string, HeldModel> held;
  std::uint64_t hop = 0;
  /// Origin of the model this node forwards at the next hop.
  std::string forward;
  std::optional<ModelPair> installed;

  static SyncState start(const std::string& node, ModelPair own) {
    SyncState s;
    s.node = node;
    s.forward = node;
    s.held.emplace(node, HeldModel{std::move(own), true});
    return s;
  }

  std::size_t trusted_held() const {
    return static_cast<std::size_t>(
        std::count_if(held.begin(), held.end(), [](const auto& kv) { return kv.second.trusted_origin; }));
  }
};

using SyncStates = std::map<std::string, SyncState>;

struct RoutedModel {
  std::string recipient;
  std::string sender;
  ModelPair model;
};

struct RoundReport {
  std::uint64_t round = 0;
  std::uint64_t t = 0;
  ModelPair aggregate;
  std::vector<std::string> participants;
  std::vector<std::string> excluded;
  CommLedger ledger;
};

/// Delivers every untrusted sender's model to its clockwise trusted successor.
inline std::vector<RoutedModel> route_untrusted(const RingTopology& ring,
                                                const std::vector<std::pair<std::string, ModelPair>>& senders,
                                                CommLedger* ledger = nullptr, std::uint64_t time = 0) {
  std::vector<RoutedModel> out;
  out.reserve(senders.size());
  for (const auto& [id, model] : senders) {
    const auto& node = ring.node(id);
    require(!node.trusted(), ErrorCode::InvalidArgument, "sender '" + id + "' is trusted");
    const auto& recipient = trusted_successor(ring, ring.position(id));
    if (ledger) ledger->record({id, recipient.id, PayloadKind::ModelBytes, size_bytes(model), time});
    out.push_back({recipient.id, id, model});
  }
  return out;
}

inline void accept_routed(SyncStates& states, const std::vector<RoutedModel>& routed) {
  for (const auto& r : routed) {
    auto it = states.find(r.recipient);
    require(it != states.end(), ErrorCode::ProtocolError, "no sync state for recipient '" + r.recipient + "'");
    it->second.held.insert_or_assign(r.sender, HeldModel{r.model, false});
  }
}

inline void check_states_match_ring(const SyncStates& states, const RingTopology& ring) {
  const auto cycle = ring.trusted_cycle();
  require(!cycle.empty(), ErrorCode::InvalidTopology, "no trusted nodes");
  require(states.size() == cycle.size(), ErrorCode::ProtocolError, "sync states do not cover the trusted nodes");
  for (const auto& id : cycle) {
    require(states.count(id) == 1, ErrorCode::ProtocolError, "missing sync state for '" + id + "'");
  }
}

/// Executes a single lockstep hop: every trusted node forwards the model it
/// received last hop (its own at the first hop) to its clockwise trusted neighbour.
inline void ring_hop(SyncStates& states, const std::vector<std::string>& cycle, CommLedger* ledger,
                     std::uint64_t time) {
  const std::size_t m = cycle.size();
  std::vector<HeldModel> outgoing;
  outgoing.reserve(m);
  for (const auto& id : cycle) {
    auto& s = states.at(id);
    outgoing.push_back(s.held.at(s.forward));
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto& to = cycle[(i + 1) % m];
    auto& dst = states.at(to);
    const auto& origin = outgoing[i].model.origin;
    require(dst.held.count(origin) == 0 || !dst.held.at(origin).trusted_origin, ErrorCode::ProtocolError,
            "node '" + to + "' received '" + origin + "' twice");
    if (ledger) ledger->record({cycle[i], to, PayloadKind::ModelBytes, size_bytes(outgoing[i].model), time});
    dst.held.insert_or_assign(origin, outgoing[i]);
    dst.forward = origin;
    ++dst.hop;
  }
}

/// Whole-model ring allgather: m-1 hops, after which every trusted node holds
/// all m trusted-origin models. Hop h is recorded at time `first_time + h - 1`.
inline void ring_pass(SyncStates& states, const RingTopology& ring, CommLedger* ledger = nullptr,
                      std::uint64_t first_time = 1) {
  check_states_match_ring(states, ring);
  const auto cycle = ring.trusted_cycle();
  for (const auto& id : cycle) {
    const auto& s = states.at(id);
    require(s.hop == 0 && s.trusted_held() == 1 && s.held.count(id) == 1 && s.forward == id,
            ErrorCode::ProtocolError, "node '" + id + "' is not at the start of a ring pass");
    require(s.held.at(id).model.origin == id, ErrorCode::ProtocolError, "node '" + id + "' holds a foreign model");
  }
  for (std::size_t hop = 1; hop < cycle.size(); ++hop) ring_hop(states, cycle, ledger, first_time + hop - 1);
}

/// Each trusted node aggregates its trusted-origin models independently; all
/// results must agree bitwise before being installed.
inline RoundReport aggregate_and_install(SyncStates& states, const std::map<std::string, NodeWeight>& weights) {
  require(!states.empty(), ErrorCode::InvalidTopology, "no trusted nodes");
  std::vector<std::string> participants;
  for (const auto& [id, _] : states) participants.push_back(id);

  require(weights.size() == participants.size(), ErrorCode::InvalidWeights, "weights do not cover the trusted set");
  for (const auto& id : participants) {
    require(weights.count(id) == 1, ErrorCode::InvalidWeights, "no weight for trusted node '" + id + "'");
  }

  std::set<std::string> excluded;
  std::optional<Bytes> reference;
  RoundReport report;
  for (auto& [id, state] : states) {
    std::vector<WeightedModel> inputs;
    for (const auto& [origin, held] : state.held) {
      if (!held.trusted_origin) {
        excluded.insert(origin);
        continue;
      }
      require(weights.count(origin) == 1, ErrorCode::ProtocolError,
              "node '" + id + "' holds unexpected trusted model '" + origin + "'");
      inputs.push_back({held.model, weights.at(origin)});
    }
    require(inputs.size() == participants.size(), ErrorCode::ProtocolError,
            "node '" + id + "' holds " + std::to_string(inputs.size()) + " of " +
                std::to_string(participants.size()) + " trusted models");
    auto aggregate = fedavg(inputs);
    auto bytes = serialize(aggregate);
    if (!reference) {
      reference = std::move(bytes);
      report.aggregate = aggregate;
    } else {
      require(bytes == *reference, ErrorCode::ProtocolError, "node '" + id + "' computed a divergent aggregate");
    }
    state.installed = std::move(aggregate);
  }
  report.participants = std::move(participants);
  report.excluded.assign(excluded.begin(), excluded.end());
  return report;
}

// ---------------------------------------------------------------------------
// Training loop

enum class WeightMode { Uniform, BySize };

struct TrainingConfig {
  std::uint64_t horizon = 1;  ///< T
  std::uint64_t interval = 10;  ///< K
  WeightMode weights = WeightMode::BySize;
  std::uint64_t seed = 0;
  /// When false every trainer is reset with the same seed (single-node equivalence runs).
  bool per_node_seeds = true;
};

struct TrainingResult {
  std::vector<RoundReport> rounds;
  std::map<std::string, ModelPair> final_models;
};

using Trainers = std::map<std::string, std::unique_ptr<train::Trainer>>;

/// Called after every sync round with the report and every node's installed model.
using RoundObserver = std::function<void(const RoundReport&, const std::map<std::string, ModelPair>&)>;

inline std::map<std::string, NodeWeight> aggregation_weights(const std::vector<std::string>& participants,
                                                             const Trainers& trainers, WeightMode mode) {
  std::map<std::string, NodeWeight> out;
  double total = 0.0;
  for (const auto& id : participants) {
    const double w = mode == WeightMode::Uniform ? 1.0 : static_cast<double>(trainers.at(id)->dataset_size());
    require(w > 0.0, ErrorCode::InvalidWeights, "node '" + id + "' has an empty dataset");
    out[id].p = w;
    total += w;
  }
  for (auto& [_, w] : out) w.p /= total;
  return out;
}

/// One synchronization round over the nodes' current models: route untrusted
/// models, ring allgather among trusted nodes, aggregate, install everywhere.
/// Untrusted nodes get the aggregate back from the trusted node they routed to.
inline RoundReport sync_round(const RingTopology& ring, std::map<std::string, ModelPair>& models,
                              const std::map<std::string, NodeWeight>& weights) {
  CommLedger ledger;
  for (const auto& n : ring.physical_nodes()) ledger.add_node(n.id);

  SyncStates states;
  std::vector<std::pair<std::string, ModelPair>> untrusted;
  for (const auto& n : ring.physical_nodes()) {
    if (n.trusted()) {
      states.emplace(n.id, SyncState::start(n.id, models.at(n.id)));
    } else {
      untrusted.emplace_back(n.id, models.at(n.id));
    }
  }
  const auto routed = route_untrusted(ring, untrusted, &ledger, 0);
  accept_routed(states, routed);
  ring_pass(states, ring, &ledger, 1);
  auto report = aggregate_and_install(states, weights);

  for (auto& [id, state] : states) models.at(id) = *state.installed;
  const std::uint64_t back_time = ring.trusted_count();
  for (const auto& r : routed) {
    ledger.record({r.recipient, r.sender, PayloadKind::ModelBytes, size_bytes(report.aggregate), back_time});
    models.at(r.sender) = report.aggregate;
  }
  if (!states.empty()) ledger.set_model_bytes(size_bytes(report.aggregate));
  report.ledger = std::move(ledger);
  return report;
}

inline TrainingResult run_training(const RingTopology& ring, Trainers& trainers, const ModelPair& initial,
                                   const TrainingConfig& config, const RoundObserver& observer = {}) {
  require(config.horizon >= 1, ErrorCode::InvalidArgument, "horizon T must be positive");
  require(config.interval >= 1, ErrorCode::InvalidArgument, "synchronizing interval K must be positive");
  const auto nodes = ring.physical_nodes();
  for (const auto& n : nodes) {
    require(trainers.count(n.id) == 1 && trainers.at(n.id), ErrorCode::InvalidArgument,
            "no trainer registered for node '" + n.id + "'");
  }

  std::map<std::string, ModelPair> models;
  for (const auto& n : nodes) {
    auto& trainer = *trainers.at(n.id);
    trainer.reset(config.per_node_seeds ? derive_seed(config.seed, n.id) : config.seed);
    ModelPair m = initial;
    m.origin = n.id;
    m.iteration = 0;
    models.emplace(n.id, std::move(m));
  }
  const auto weights = aggregation_weights(ring.trusted_cycle(), trainers, config.weights);

  TrainingResult result;
  for (std::uint64_t t = 1; t <= config.horizon; ++t) {
    for (const auto& n : nodes) {
      auto& m = models.at(n.id);
      auto& trainer = *trainers.at(n.id);
      try {
        auto dir = trainer.local_step(m, t);
        m.d = apply_update(m.d, dir.d, trainer.lr_d(t));
        m.g = apply_update(m.g, dir.g, trainer.lr_g(t));
      } catch (const std::exception& e) {
        fail(ErrorCode::TrainerError, "node '" + n.id + "' at t=" + std::to_string(t) + ": " + e.what());
      }
      m.origin = n.id;
      m.iteration = t;
    }
    if (!should_sync(t, config.interval)) continue;

    auto report = sync_round(ring, models, weights);
    report.round = result.rounds.size() + 1;
    report.t = t;
    for (auto& [id, m] : models) {
      m.origin = id;
      m.iteration = t;
    }
    if (observer) observer(report, models);
    result.rounds.push_back(std::move(report));
  }
  result.final_models = std::move(models);
  return result;
}

}  // namespace rdfl
