#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rdfl/error.hpp"
#include "rdfl/random.hpp"

namespace rdfl {

enum class PayloadKind { ModelBytes, EnvelopeBytes };

struct Message {
  std::string sender;
  std::string receiver;
  PayloadKind kind = PayloadKind::ModelBytes;
  std::uint64_t bytes = 0;
  /// Communication-time index within the round.
  std::uint64_t time = 0;
};

/// Exact byte accounting of one communication round.
class CommLedger {
 public:
  CommLedger() = default;
  explicit CommLedger(std::uint64_t model_bytes) : model_bytes_(model_bytes) {}

  /// Registers a node so it appears in reports even without traffic.
  void add_node(const std::string& id) { nodes_.insert(id); }

  /// Self-addressed messages are only accepted when `allow_self` is set.
  void record(Message msg, bool allow_self = false) {
    require(msg.bytes > 0, ErrorCode::InvalidArgument, "message with zero bytes");
    require(allow_self || msg.sender != msg.receiver, ErrorCode::InvalidArgument,
            "node '" + msg.sender + "' messaging itself");
    nodes_.insert(msg.sender);
    nodes_.insert(msg.receiver);
    times_.insert(msg.time);
    messages_.push_back(std::move(msg));
  }

  const std::vector<Message>& messages() const { return messages_; }
  const std::set<std::string>& nodes() const { return nodes_; }
  std::uint64_t model_bytes() const { return model_bytes_; }
  void set_model_bytes(std::uint64_t m) { model_bytes_ = m; }

  /// Number of distinct communication-time indices used.
  std::size_t communication_times() const { return times_.size(); }
  const std::set<std::uint64_t>& time_indices() const { return times_; }

  std::uint64_t total_bytes() const {
    std::uint64_t total = 0;
    for (const auto& m : messages_) total += m.bytes;
    return total;
  }

  std::uint64_t sent_bytes(std::string_view node) const {
    return sum_if([&](const Message& m) { return m.sender == node; });
  }

  std::uint64_t received_bytes(std::string_view node) const {
    return sum_if([&](const Message& m) { return m.receiver == node; });
  }

  std::size_t sent_count(std::string_view node) const {
    return static_cast<std::size_t>(
        std::count_if(messages_.begin(), messages_.end(), [&](const Message& m) { return m.sender == node; }));
  }

  std::size_t received_count(std::string_view node) const {
    return static_cast<std::size_t>(
        std::count_if(messages_.begin(), messages_.end(), [&](const Message& m) { return m.receiver == node; }));
  }

  std::uint64_t egress_at(std::string_view node, std::uint64_t time) const {
    return sum_if([&](const Message& m) { return m.sender == node && m.time == time; });
  }

  std::uint64_t total_of(PayloadKind kind) const {
    return sum_if([&](const Message& m) { return m.kind == kind; });
  }

  /// Sum of per-node sent == sum of per-node received == sum of message sizes.
  bool conserved() const {
    std::uint64_t sent = 0, received = 0;
    for (const auto& n : nodes_) {
      sent += sent_bytes(n);
      received += received_bytes(n);
    }
    return sent == received && sent == total_bytes();
  }

  void append(const CommLedger& other) {
    for (const auto& n : other.nodes_) nodes_.insert(n);
    for (const auto& m : other.messages_) {
      times_.insert(m.time);
      messages_.push_back(m);
    }
  }

 private:
  template <typename Pred>
  std::uint64_t sum_if(Pred pred) const {
    std::uint64_t total = 0;
    for (const auto& m : messages_) {
      if (pred(m)) total += m.bytes;
    }
    return total;
  }

  std::uint64_t model_bytes_ = 0;
  std::vector<Message> messages_;
  std::set<std::string> nodes_;
  std::set<std::uint64_t> times_;
};

enum class TopologyKind { P2P, FLGossip, RDFL };

constexpr std::string_view to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::P2P: return "P2P";
    case TopologyKind::FLGossip: return "FLGossip";
    case TopologyKind::RDFL: return "RDFL";
  }
  return "?";
}

inline constexpr TopologyKind kAllTopologies[] = {TopologyKind::P2P, TopologyKind::FLGossip, TopologyKind::RDFL};

struct CommCost {
  std::uint64_t times = 0;
  std::uint64_t pressure = 0;
  std::uint64_t total = 0;

  friend bool operator==(const CommCost&, const CommCost&) = default;
};

/// round((n - 1) / 2) with halves rounded up.
constexpr std::uint64_t gossip_times(std::uint64_t n) { return n / 2; }

/// Communication cost per round for `n` nodes with model size `m` bytes.
inline CommCost closed_form(TopologyKind kind, std::uint64_t n, std::uint64_t m) {
  require(n >= 2, ErrorCode::InvalidArgument, "need at least two nodes");
  require(m > 0, ErrorCode::InvalidArgument, "model size must be positive");
  switch (kind) {
    case TopologyKind::P2P: return {1, n * m, n * n * m};
    case TopologyKind::FLGossip: return {gossip_times(n), 2 * m, 2 * n * m * gossip_times(n)};
    case TopologyKind::RDFL: return {n - 1, m, n * (n - 1) * m};
  }
  return {};
}

inline std::string sim_node_id(std::size_t i) { return "n" + std::to_string(i); }

/// Concrete per-round message schedule for each topology. P2P counts a
/// self-delivery per node so totals follow N^2 M.
inline CommLedger simulate_round(TopologyKind kind, std::size_t n, std::uint64_t m, std::uint64_t seed) {
  require(n >= 2, ErrorCode::InvalidArgument, "need at least two nodes");
  require(m > 0, ErrorCode::InvalidArgument, "model size must be positive");
  CommLedger ledger(m);
  for (std::size_t i = 0; i < n; ++i) ledger.add_node(sim_node_id(i));

  switch (kind) {
    case TopologyKind::RDFL:
      for (std::uint64_t t = 1; t < n; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          ledger.record({sim_node_id(i), sim_node_id((i + 1) % n), PayloadKind::ModelBytes, m, t});
        }
      }
      break;
    case TopologyKind::P2P:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          ledger.record({sim_node_id(i), sim_node_id(j), PayloadKind::ModelBytes, m, 1}, /*allow_self=*/true);
        }
      }
      break;
    case TopologyKind::FLGossip: {
      Rng rng(derive_seed(seed, "gossip"));
      for (std::uint64_t t = 1; t <= gossip_times(n); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          // Uniform peer among the other n-1 nodes.
          std::size_t peer = static_cast<std::size_t>(rng.below(n - 1));
          if (peer >= i) ++peer;
          ledger.record({sim_node_id(i), sim_node_id(peer), PayloadKind::ModelBytes, m, t});
          ledger.record({sim_node_id(peer), sim_node_id(i), PayloadKind::ModelBytes, m, t});
        }
      }
      break;
    }
  }
  return ledger;
}

struct NodePressure {
  std::string node;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t peak_egress = 0;  ///< max over communication times
};

struct PressureReport {
  std::vector<NodePressure> nodes;
  std::uint64_t total = 0;
  std::uint64_t times = 0;
  /// total / (N * times)
  double pressure = 0.0;
  std::uint64_t max_node_egress = 0;
  double mean_sent = 0.0;
  /// max per-node sent / mean per-node sent
  double max_over_mean = 0.0;
};

inline PressureReport pressure_report(const CommLedger& ledger) {
  require(!ledger.messages().empty(), ErrorCode::InvalidArgument, "empty ledger");
  PressureReport r;
  r.total = ledger.total_bytes();
  r.times = ledger.communication_times();
  std::uint64_t max_sent = 0;
  for (const auto& id : ledger.nodes()) {
    NodePressure np{id, ledger.sent_bytes(id), ledger.received_bytes(id), 0};
    for (auto t : ledger.time_indices()) np.peak_egress = std::max(np.peak_egress, ledger.egress_at(id, t));
    r.max_node_egress = std::max(r.max_node_egress, np.peak_egress);
    max_sent = std::max(max_sent, np.sent);
    r.nodes.push_back(std::move(np));
  }
  const double n = static_cast<double>(r.nodes.size());
  r.pressure = static_cast<double>(r.total) / (n * static_cast<double>(r.times));
  r.mean_sent = static_cast<double>(r.total) / n;
  r.max_over_mean = r.mean_sent > 0.0 ? static_cast<double>(max_sent) / r.mean_sent : 0.0;
  return r;
}

}  // namespace rdfl
