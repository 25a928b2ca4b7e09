#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rdfl/crypto.hpp"
#include "rdfl/error.hpp"

namespace rdfl {

/// Coordinate on the 32-bit hash circle.
struct RingPosition {
  std::uint32_t value = 0;

  friend auto operator<=>(const RingPosition&, const RingPosition&) = default;
};

enum class Trust { Trusted, Untrusted };

constexpr std::string_view to_string(Trust t) { return t == Trust::Trusted ? "trusted" : "untrusted"; }

struct NodeDescriptor {
  std::string id;
  std::string address;
  Trust trust = Trust::Trusted;
  /// Set on virtual entries only: the physical trusted node they mirror.
  std::optional<std::string> virtual_of;

  bool trusted() const { return trust == Trust::Trusted; }
  bool is_virtual() const { return virtual_of.has_value(); }
  /// Id of the physical node this entry stands for.
  const std::string& owner() const { return virtual_of ? *virtual_of : id; }

  friend bool operator==(const NodeDescriptor&, const NodeDescriptor&) = default;
};

struct RingEntry {
  RingPosition position;
  NodeDescriptor node;

  friend bool operator==(const RingEntry&, const RingEntry&) = default;
};

/// First 4 bytes (big-endian) of SHA-256 over the address bytes.
inline RingPosition position_of(std::string_view address) {
  require(!address.empty(), ErrorCode::InvalidArgument, "empty node address");
  const auto digest = crypto::sha256(address);
  return RingPosition{(std::uint32_t{digest[0]} << 24) | (std::uint32_t{digest[1]} << 16) |
                      (std::uint32_t{digest[2]} << 8) | std::uint32_t{digest[3]}};
}

inline std::string virtual_address(std::string_view address, std::size_t k) {
  return std::string(address) + "#v" + std::to_string(k);
}

/// Immutable consistent-hash ring. Entries are ordered by (position, id).
class RingTopology {
 public:
  const std::vector<RingEntry>& entries() const { return entries_; }

  std::size_t physical_count() const { return physical_.size(); }
  std::size_t trusted_count() const { return trusted_physical_; }
  std::size_t virtual_count() const { return virtual_count_; }

  bool contains(std::string_view id) const { return physical_.find(std::string(id)) != physical_.end(); }

  /// Physical descriptor by id; unknown-node if absent.
  const NodeDescriptor& node(std::string_view id) const { return entries_[physical_index(id)].node; }

  RingPosition position(std::string_view id) const { return entries_[physical_index(id)].position; }

  /// Physical nodes in ring order.
  std::vector<NodeDescriptor> physical_nodes() const {
    std::vector<NodeDescriptor> out;
    for (const auto& e : entries_) {
      if (!e.node.is_virtual()) out.push_back(e.node);
    }
    return out;
  }

  /// Physical trusted node ids in clockwise order of their own (non-virtual) entries.
  std::vector<std::string> trusted_cycle() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
      if (!e.node.is_virtual() && e.node.trusted()) out.push_back(e.node.id);
    }
    return out;
  }

  /// Indices into entries() of all trusted (physical or virtual) entries, in order.
  const std::vector<std::size_t>& trusted_entries() const { return trusted_index_; }

  friend bool operator==(const RingTopology& a, const RingTopology& b) { return a.entries_ == b.entries_; }

  friend RingTopology build_ring(const std::vector<NodeDescriptor>& nodes, std::size_t virtual_count);

 private:
  std::size_t physical_index(std::string_view id) const {
    auto it = physical_.find(std::string(id));
    if (it == physical_.end()) fail(ErrorCode::UnknownNode, "node '" + std::string(id) + "' is not on the ring");
    return it->second;
  }

  std::vector<RingEntry> entries_;
  std::map<std::string, std::size_t> physical_;
  std::vector<std::size_t> trusted_index_;
  std::size_t trusted_physical_ = 0;
  std::size_t virtual_count_ = 0;
};

inline RingTopology build_ring(const std::vector<NodeDescriptor>& nodes, std::size_t virtual_count) {
  RingTopology ring;
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    require(!n.id.empty(), ErrorCode::InvalidArgument, "empty node id");
    require(!n.is_virtual(), ErrorCode::InvalidArgument, "node '" + n.id + "' is already a virtual entry");
    require(ids.insert(n.id).second, ErrorCode::InvalidArgument, "duplicate node id '" + n.id + "'");
  }
  for (const auto& n : nodes) {
    ring.entries_.push_back({position_of(n.address), n});
    if (!n.trusted()) continue;
    ++ring.trusted_physical_;
    for (std::size_t k = 1; k <= virtual_count; ++k) {
      NodeDescriptor v{n.id + "#v" + std::to_string(k), virtual_address(n.address, k), Trust::Trusted, n.id};
      require(ids.insert(v.id).second, ErrorCode::InvalidArgument, "virtual id '" + v.id + "' collides with a node id");
      ring.entries_.push_back({position_of(v.address), std::move(v)});
    }
  }
  require(ring.trusted_physical_ > 0, ErrorCode::InvalidTopology, "ring needs at least one trusted node");
  ring.virtual_count_ = virtual_count;

  std::sort(ring.entries_.begin(), ring.entries_.end(), [](const RingEntry& a, const RingEntry& b) {
    return std::tie(a.position, a.node.id) < std::tie(b.position, b.node.id);
  });
  for (std::size_t i = 0; i < ring.entries_.size(); ++i) {
    const auto& node = ring.entries_[i].node;
    if (!node.is_virtual()) ring.physical_.emplace(node.id, i);
    if (node.trusted()) ring.trusted_index_.push_back(i);
  }
  return ring;
}

/// Index into entries() of the first trusted entry strictly clockwise of `from`.
inline std::size_t trusted_successor_index(const RingTopology& ring, RingPosition from) {
  const auto& trusted = ring.trusted_entries();
  require(!trusted.empty(), ErrorCode::InvalidTopology, "ring has no trusted entries");
  const auto& entries = ring.entries();
  auto it = std::upper_bound(trusted.begin(), trusted.end(), from,
                             [&](RingPosition p, std::size_t idx) { return p < entries[idx].position; });
  return it == trusted.end() ? trusted.front() : *it;
}

/// Physical trusted node reached by walking clockwise from `from`; virtual
/// entries resolve to their owner. A position is never its own successor.
inline const NodeDescriptor& trusted_successor(const RingTopology& ring, RingPosition from) {
  const auto& entry = ring.entries()[trusted_successor_index(ring, from)];
  return entry.node.is_virtual() ? ring.node(*entry.node.virtual_of) : entry.node;
}

/// Half-open clockwise arc [begin, end) on the circle; begin == end is empty
/// unless `full` is set.
struct Arc {
  RingPosition begin;
  RingPosition end;
  bool full = false;

  bool contains(RingPosition p) const {
    if (full) return true;
    if (begin.value <= end.value) return begin <= p && p < end;
    return p >= begin || p < end;
  }

  friend bool operator==(const Arc&, const Arc&) = default;
};

/// Arcs of positions whose trusted successor may differ between `before` and
/// `after`, where `after` is `before` plus exactly one physical node (and its
/// virtual entries). One arc per inserted entry: [trusted predecessor, entry).
inline std::vector<Arc> remap_delta(const RingTopology& before, const RingTopology& after) {
  const auto& old_entries = before.entries();
  const auto& new_entries = after.entries();
  require(new_entries.size() > old_entries.size(), ErrorCode::InvalidArgument, "after ring adds no entries");

  std::vector<std::size_t> inserted;
  std::optional<std::string> added_owner;
  std::size_t j = 0;
  auto key = [](const RingEntry& e) { return std::tie(e.position, e.node.id); };
  for (std::size_t i = 0; i < new_entries.size(); ++i) {
    if (j < old_entries.size() && new_entries[i] == old_entries[j]) {
      ++j;
      continue;
    }
    require(j >= old_entries.size() || key(old_entries[j]) > key(new_entries[i]), ErrorCode::InvalidArgument,
            "after ring drops or alters entry '" + (j < old_entries.size() ? old_entries[j].node.id : "") + "'");
    const auto& owner = new_entries[i].node.owner();
    if (!added_owner) added_owner = owner;
    require(*added_owner == owner, ErrorCode::InvalidArgument, "after ring adds more than one physical node");
    inserted.push_back(i);
  }
  require(j == old_entries.size(), ErrorCode::InvalidArgument, "after ring drops entries of before");
  require(!before.contains(*added_owner) && after.contains(*added_owner), ErrorCode::InvalidArgument,
          "added entries do not belong to a new physical node");
  const std::size_t expected = after.node(*added_owner).trusted() ? 1 + after.virtual_count() : 1;
  require(inserted.size() == expected && before.virtual_count() == after.virtual_count(), ErrorCode::InvalidArgument,
          "added node's virtual entries are inconsistent");

  const auto& trusted = after.trusted_entries();
  std::vector<Arc> arcs;
  for (std::size_t idx : inserted) {
    // Latest trusted entry strictly before idx in the total order, wrapping.
    auto it = std::lower_bound(trusted.begin(), trusted.end(), idx);
    const bool wrapped = it == trusted.begin();
    const std::size_t pred = wrapped ? trusted.back() : *std::prev(it);
    const auto begin = new_entries[pred].position;
    const auto end = new_entries[idx].position;
    // A wrapped predecessor at the same coordinate means the entry heads every tie group.
    arcs.push_back({begin, end, wrapped && begin == end && pred != idx});
  }
  return arcs;
}

/// `position<TAB>id<TAB>trust<TAB>virtual_of` per entry, `-` when not virtual.
inline void dump_topology(std::ostream& os, const RingTopology& ring) {
  for (const auto& e : ring.entries()) {
    os << e.position.value << '\t' << e.node.id << '\t' << to_string(e.node.trust) << '\t'
       << (e.node.virtual_of ? *e.node.virtual_of : "-") << '\n';
  }
}

}  // namespace rdfl
