#pragma once

#include <chrono>
#include <functional>
#include <ostream>
#include <sstream>

#include "rdfl/cli/runner.hpp"
#include "rdfl/store.hpp"

namespace rdfl::cli {

struct PropertyResult {
  bool pass = false;
  std::string detail;
};

struct Property {
  std::string name;
  std::function<PropertyResult()> check;
};

namespace verify_detail {

inline std::vector<NodeDescriptor> seeded_nodes(std::size_t trusted, std::size_t untrusted, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NodeDescriptor> out;
  for (std::size_t i = 0; i < trusted + untrusted; ++i) {
    out.push_back({"n" + std::to_string(i), "10." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) +
                                               "." + std::to_string(i),
                   i < trusted ? Trust::Trusted : Trust::Untrusted, std::nullopt});
  }
  return out;
}

/// Linear scan, independent of the indexed lookup.
inline std::string scan_successor(const RingTopology& ring, RingPosition p) {
  const RingEntry* best = nullptr;
  const RingEntry* lowest = nullptr;
  for (const auto& e : ring.entries()) {
    if (!e.node.trusted()) continue;
    if (!lowest || e.position < lowest->position) lowest = &e;
    if (e.position > p && (!best || e.position < best->position)) best = &e;
  }
  const auto* hit = best ? best : lowest;
  return hit->node.owner();
}

inline ModelPair random_pair(Rng& rng, const std::string& origin, std::size_t dim, double scale) {
  ModelPair m{{std::vector<double>(dim), "d"}, {std::vector<double>(dim / 4 + 1), "g"}, origin, 1};
  for (auto& x : m.d.values) x = rng.normal() * scale;
  for (auto& x : m.g.values) x = rng.normal() * scale;
  return m;
}

inline std::map<std::string, NodeWeight> uniform_weights(const std::vector<std::string>& ids) {
  std::map<std::string, NodeWeight> w;
  for (const auto& id : ids) w[id].p = 1.0 / static_cast<double>(ids.size());
  return w;
}

inline std::optional<ErrorCode> code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline PropertyResult verdict(bool ok, std::string detail) { return {ok, std::move(detail)}; }

}  // namespace verify_detail

inline std::vector<Property> property_suite() {
  using namespace verify_detail;
  std::vector<Property> props;

  props.push_back({"ring.successor_matches_scan", [] {
                     const auto ring = build_ring(seeded_nodes(10, 40, 1), 8);
                     Rng rng(2);
                     std::size_t bad = 0;
                     for (int i = 0; i < 20000; ++i) {
                       RingPosition p{static_cast<std::uint32_t>(rng.next_u64())};
                       bad += trusted_successor(ring, p).id != scan_successor(ring, p);
                     }
                     return verdict(bad == 0, std::to_string(bad) + " mismatches in 20000 positions");
                   }});

  props.push_back({"ring.remap_only_within_arcs", [] {
                     auto nodes = seeded_nodes(20, 30, 3);
                     const auto before = build_ring(nodes, 2);
                     nodes.push_back({"joiner", "172.31.0.1", Trust::Trusted, std::nullopt});
                     const auto after = build_ring(nodes, 2);
                     const auto arcs = remap_delta(before, after);
                     Rng rng(4);
                     std::size_t violations = 0;
                     for (int i = 0; i < 100000; ++i) {
                       RingPosition p{static_cast<std::uint32_t>(rng.next_u64())};
                       const bool moved = trusted_successor(before, p).id != trusted_successor(after, p).id;
                       const bool inside =
                           std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.contains(p); });
                       violations += moved && !inside;
                     }
                     return verdict(violations == 0, std::to_string(violations) + " moves outside " +
                                                          std::to_string(arcs.size()) + " arcs");
                   }});

  props.push_back({"model.serialize_roundtrip", [] {
                     Rng rng(5);
                     for (int i = 0; i < 200; ++i) {
                       auto m = random_pair(rng, "node" + std::to_string(i), rng.below(40), std::pow(10.0, rng.uniform(-50, 50)));
                       m.iteration = rng.next_u64();
                       if (deserialize(serialize(m)) != m) return verdict(false, "pair " + std::to_string(i));
                     }
                     return verdict(true, "200 pairs");
                   }});

  props.push_back({"model.fedavg_order_invariant", [] {
                     Rng rng(6);
                     std::vector<WeightedModel> inputs;
                     const std::vector<double> w = {0.1, 0.3, 0.2, 0.25, 0.15};
                     for (std::size_t j = 0; j < w.size(); ++j) {
                       inputs.push_back({random_pair(rng, "o" + std::to_string(j), 256, std::pow(10.0, 2.0 * j - 4.0)), {w[j]}});
                     }
                     const auto reference = serialize(fedavg(inputs));
                     std::vector<std::size_t> perm = {0, 1, 2, 3, 4};
                     std::size_t diverged = 0;
                     while (std::next_permutation(perm.begin(), perm.end())) {
                       std::vector<WeightedModel> shuffled;
                       for (auto i : perm) shuffled.push_back(inputs[i]);
                       diverged += serialize(fedavg(shuffled)) != reference;
                     }
                     return verdict(diverged == 0, std::to_string(diverged) + " of 119 reorderings differ bitwise");
                   }});

  props.push_back({"sync.consensus_matches_central_mean", [] {
                     for (std::size_t m : {2u, 5u, 8u}) {
                       const auto ring = build_ring(seeded_nodes(m, 2, 7 + m), 2);
                       Rng rng(m);
                       std::map<std::string, ModelPair> models;
                       for (const auto& n : ring.physical_nodes()) models[n.id] = random_pair(rng, n.id, 1000, 1.0);
                       const auto snapshot = models;
                       const auto report = sync_round(ring, models, uniform_weights(ring.trusted_cycle()));
                       for (const auto& id : ring.trusted_cycle()) {
                         if (models.at(id).d.values != report.aggregate.d.values) {
                           return verdict(false, "m=" + std::to_string(m) + ": node " + id + " diverged");
                         }
                       }
                       for (std::size_t i = 0; i < 1000; ++i) {
                         double naive = 0.0, mag = 0.0;
                         for (const auto& id : ring.trusted_cycle()) {
                           naive += snapshot.at(id).d.values[i];
                           mag += std::abs(snapshot.at(id).d.values[i]);
                         }
                         naive /= static_cast<double>(m);
                         mag /= static_cast<double>(m);
                         if (std::abs(report.aggregate.d.values[i] - naive) > 1e-12 * mag) {
                           return verdict(false, "m=" + std::to_string(m) + " coordinate " + std::to_string(i));
                         }
                       }
                     }
                     return verdict(true, "m in {2, 5, 8}");
                   }});

  props.push_back({"sync.poisoned_models_excluded", [] {
                     const auto honest = seeded_nodes(3, 0, 9);
                     auto mixed = honest;
                     mixed.push_back({"bad1", "198.51.100.1", Trust::Untrusted, std::nullopt});
                     mixed.push_back({"bad2", "198.51.100.2", Trust::Untrusted, std::nullopt});
                     Rng rng(10);
                     std::map<std::string, ModelPair> clean;
                     for (const auto& n : honest) clean[n.id] = random_pair(rng, n.id, 64, 1.0);
                     auto poisoned = clean;
                     poisoned["bad1"] = random_pair(rng, "bad1", 64, 1e200);
                     poisoned["bad2"] = random_pair(rng, "bad2", 64, -3.0);
                     const auto weights = uniform_weights(build_ring(honest, 0).trusted_cycle());
                     const auto a = sync_round(build_ring(honest, 3), clean, weights);
                     const auto b = sync_round(build_ring(mixed, 3), poisoned, weights);
                     return verdict(serialize(a.aggregate) == serialize(b.aggregate) && b.excluded.size() == 2,
                                    std::to_string(b.excluded.size()) + " excluded");
                   }});

  props.push_back({"netsim.table_formulas", [] {
                     for (auto kind : kAllTopologies) {
                       for (std::size_t n = 2; n <= 16; ++n) {
                         const auto cf = closed_form(kind, n, 1000);
                         const auto l = simulate_round(kind, n, 1000, n);
                         if (!l.conserved() || l.total_bytes() != cf.total || l.communication_times() != cf.times) {
                           return verdict(false, std::string(to_string(kind)) + " N=" + std::to_string(n));
                         }
                       }
                     }
                     return verdict(true, "3 kinds, N = 2..16");
                   }});

  props.push_back({"netsim.rdfl_egress_is_model_size", [] {
                     for (std::size_t n = 2; n <= 16; ++n) {
                       const auto l = simulate_round(TopologyKind::RDFL, n, 777, 0);
                       for (const auto& id : l.nodes()) {
                         for (auto t : l.time_indices()) {
                           if (l.egress_at(id, t) != 777) return verdict(false, "N=" + std::to_string(n) + " " + id);
                         }
                       }
                     }
                     return verdict(true, "N = 2..16");
                   }});

  props.push_back({"store.share_receive_and_tamper", [] {
                     ContentStore store;
                     const auto keys = crypto::KeyPair::generate();
                     const auto other = crypto::KeyPair::generate();
                     Rng rng(11);
                     for (int i = 0; i < 200; ++i) {
                       Bytes blob(1 + rng.below(2000));
                       for (auto& b : blob) b = static_cast<std::uint8_t>(rng.next_u64());
                       const auto env = share("p", blob, "r", keys.public_key(), store);
                       if (receive(env, keys, store) != blob) return verdict(false, "roundtrip " + std::to_string(i));
                     }
                     const auto env = share("p", as_bytes("x"), "r", keys.public_key(), store);
                     if (code_of([&] { receive(env, other, store); }) != ErrorCode::CryptoError) {
                       return verdict(false, "wrong key accepted");
                     }
                     auto bad = env;
                     bad.encrypted_cid[20] ^= 0x04;
                     if (code_of([&] { receive(bad, keys, store); }) != ErrorCode::AuthenticationError) {
                       return verdict(false, "tamper undetected");
                     }
                     return verdict(true, "200 roundtrips, wrong key, bit flip");
                   }});

  props.push_back({"train.gradients_match_finite_differences", [] {
                     const double h = 1e-5;
                     double worst = 0.0;
                     auto rel = [](double a, double b) {
                       return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7});
                     };
                     for (std::uint64_t trial = 0; trial < 10; ++trial) {
                       Rng rng(200 + trial);
                       train::GanToyParams p;
                       p.a = rng.uniform(0.5, 2.0);
                       p.b = rng.uniform(-1.0, 4.0);
                       for (auto& w : p.w) w = rng.normal() * 0.3;
                       train::GanBatch batch;
                       for (int i = 0; i < 64; ++i) {
                         batch.real.push_back(rng.normal(3.0, 1.5));
                         batch.noise.push_back(rng.normal());
                       }
                       const auto dir = train::gan_directions(p, batch);
                       for (std::size_t k = 0; k < 3; ++k) {
                         auto up = p, down = p;
                         up.w[k] += h;
                         down.w[k] -= h;
                         const double fd = (train::discriminator_loss(up, batch) - train::discriminator_loss(down, batch)) / (2 * h);
                         worst = std::max(worst, rel(-dir.d.values[k], fd));
                       }
                       for (int k = 0; k < 2; ++k) {
                         auto up = p, down = p;
                         (k == 0 ? up.a : up.b) += h;
                         (k == 0 ? down.a : down.b) -= h;
                         const double fd = (train::generator_loss(up, batch) - train::generator_loss(down, batch)) / (2 * h);
                         worst = std::max(worst, rel(-dir.g.values[k], fd));
                       }
                       auto [data, _] = train::make_linear_data(32, 5, 0.3, trial);
                       std::vector<double> w(5);
                       for (auto& x : w) x = rng.normal();
                       const auto g = train::least_squares_direction(w, data.examples);
                       for (std::size_t k = 0; k < 5; ++k) {
                         auto up = w, down = w;
                         up[k] += h;
                         down[k] -= h;
                         const double fd =
                             (train::least_squares_loss(up, data.examples) - train::least_squares_loss(down, data.examples)) / (2 * h);
                         worst = std::max(worst, rel(-g[k], fd));
                       }
                     }
                     std::ostringstream os;
                     os << "worst relative error " << worst;
                     return verdict(worst <= 1e-4, os.str());
                   }});

  props.push_back({"train.metric_sanity", [] {
                     std::vector<std::vector<double>> xs;
                     for (int i = 0; i < 90; ++i) xs.push_back({static_cast<double>(i)});
                     const train::OracleClassifier constant(
                         [](std::span<const double>) { return std::vector<double>{0.5, 0.25, 0.25}; });
                     const train::OracleClassifier onehot([](std::span<const double> x) {
                       std::vector<double> p(3, 0.0);
                       p[static_cast<std::size_t>(x[0]) % 3] = 1.0;
                       return p;
                     });
                     const double is1 = train::inception_score(xs, constant, 3);
                     const double is3 = train::inception_score(xs, onehot, 3);
                     std::vector<train::Sample> s;
                     for (int i = 0; i < 50; ++i) s.push_back({{i * 0.1}, static_cast<double>(i % 2)});
                     const double e = train::emd(s, s, train::threshold_oracle(2.0, 1.0));
                     std::ostringstream os;
                     os << "IS(constant)=" << is1 << " IS(one-hot, C=3)=" << is3 << " emd(S,S)=" << e;
                     return verdict(is1 == 1.0 && std::abs(is3 - 3.0) < 1e-12 && e == 0.0, os.str());
                   }});

  props.push_back({"cli.run_is_deterministic", [] {
                     const char* yaml = R"(
seed: 3
T: 40
K: 10
trainer: {kind: least_squares, lr_d: 0.05, batch_size: 8, dim: 4}
data: {samples: 200}
nodes:
  - {id: a, address: 10.1.0.1}
  - {id: b, address: 10.1.0.2}
  - {id: c, address: 10.1.0.3, trust: untrusted}
)";
                     const auto s = parse_scenario(yaml);
                     std::ostringstream first, second;
                     run_scenario(s, first);
                     run_scenario(s, second);
                     return verdict(first.str() == second.str() && !first.str().empty(),
                                    std::to_string(first.str().size()) + " bytes");
                   }});
  return props;
}

/// Prints one PASS/FAIL line per property; true iff all pass.
inline bool run_verify(std::ostream& out) {
  bool all = true;
  std::size_t passed = 0;
  const auto props = property_suite();
  for (const auto& p : props) {
    const auto start = std::chrono::steady_clock::now();
    PropertyResult r;
    try {
      r = p.check();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    out << (r.pass ? "PASS " : "FAIL ") << p.name << " (" << r.detail << ", " << ms << " ms)\n";
    all = all && r.pass;
    passed += r.pass;
  }
  out << passed << '/' << props.size() << " properties passed\n";
  return all;
}

}  // namespace rdfl::cli
