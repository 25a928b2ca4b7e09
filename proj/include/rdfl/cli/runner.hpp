#pragma once

#include <json.hpp>

#include <fstream>
#include <numeric>
#include <ostream>

#include "rdfl/cli/scenario.hpp"
#include "rdfl/netsim.hpp"
#include "rdfl/sync.hpp"
#include "rdfl/train.hpp"

namespace rdfl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitProtocol = 3,
  kExitCrypto = 4,
  kExitVerification = 5,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return kExitConfig;
    case ErrorCode::ProtocolError:
    case ErrorCode::InvalidTopology:
    case ErrorCode::UnknownNode:
      return kExitProtocol;
    case ErrorCode::CryptoError:
    case ErrorCode::AuthenticationError:
      return kExitCrypto;
    default:
      return kExitOther;
  }
}

/// Everything a scenario wires together before training starts.
struct Experiment {
  RingTopology ring;
  Trainers trainers;
  ModelPair initial;
  /// Union of all generated or loaded samples (least-squares loss reference).
  train::LocalDataset data;
};

namespace detail {

/// Dirichlet labels for real-valued data: rank-bin the value into `classes` buckets.
inline std::vector<std::int64_t> binned_labels(const train::LocalDataset& data, bool use_label, std::size_t classes) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  auto value = [&](std::size_t i) { return use_label ? data.examples[i].label : data.examples[i].x.at(0); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
  std::vector<std::int64_t> labels(data.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    labels[order[rank]] = static_cast<std::int64_t>(rank * classes / order.size());
  }
  return labels;
}

inline train::LocalDataset load_data(const Scenario& s) {
  if (s.data.file) {
    std::ifstream in(*s.data.file);
    if (!in) fail(ErrorCode::ConfigError, "data.file: cannot open '" + s.data.file->string() + "'");
    auto data = train::read_dataset(in);
    if (data.empty()) fail(ErrorCode::ConfigError, "data.file: no samples in '" + s.data.file->string() + "'");
    return data;
  }
  const auto seed = derive_seed(s.seed, "data");
  if (s.trainer.kind == TrainerKind::LeastSquares) {
    return train::make_linear_data(s.data.samples, s.trainer.dim, s.trainer.noise, seed).first;
  }
  return train::make_gaussian_data(s.data.samples, s.trainer.target_mean, s.trainer.target_std, seed);
}

}  // namespace detail

/// IID draws are keyed by node id, so a node's data does not depend on which
/// other nodes are present. Dirichlet splits follow the declared node order.
inline std::map<std::string, train::LocalDataset> node_datasets(const Scenario& s, const train::LocalDataset& data) {
  std::map<std::string, train::LocalDataset> out;
  if (s.data.partition == PartitionKind::Iid) {
    for (const auto& n : s.nodes) {
      const auto& id = n.descriptor.id;
      out[id] = train::subset(data, train::iid_partition(data.size(), 1, s.data.fraction, derive_seed(s.seed, "iid:" + id))[0]);
    }
  } else {
    const bool regression = s.trainer.kind == TrainerKind::LeastSquares;
    const auto labels = detail::binned_labels(data, regression, s.data.classes);
    const auto parts = train::dirichlet_partition(labels, s.data.alpha, s.nodes.size(), s.seed);
    for (std::size_t i = 0; i < s.nodes.size(); ++i) out[s.nodes[i].descriptor.id] = train::subset(data, parts[i]);
  }
  for (const auto& [id, d] : out) {
    if (d.empty()) {
      fail(ErrorCode::ConfigError, "data: node '" + id + "' received no samples; raise data.samples or data.alpha");
    }
  }
  return out;
}

inline Experiment build_experiment(const Scenario& s) {
  Experiment e{build_ring(s.descriptors(), s.virtual_count), {}, {}, detail::load_data(s)};
  const auto datasets = node_datasets(s, e.data);
  if (s.trainer.kind == TrainerKind::LeastSquares) {
    for (const auto& sample : e.data.examples) {
      if (sample.x.size() != s.trainer.dim) fail(ErrorCode::ConfigError, "trainer.dim does not match the data width");
    }
  }
  for (const auto& n : s.nodes) {
    const auto& id = n.descriptor.id;
    train::TrainerConfig cfg;
    cfg.lr_d = s.trainer.lr_d;
    cfg.lr_g = s.trainer.lr_g;
    cfg.batch_size = s.trainer.batch_size;
    cfg.seed = derive_seed(s.seed, id);
    std::unique_ptr<train::Trainer> trainer;
    if (s.trainer.kind == TrainerKind::LeastSquares) {
      trainer = std::make_unique<train::LeastSquaresTrainer>(datasets.at(id), cfg, s.trainer.dim);
    } else {
      trainer = std::make_unique<train::ToyGanTrainer>(
          datasets.at(id), cfg, train::ToyGanTrainer::Target{s.trainer.target_mean, s.trainer.target_std},
          s.trainer.eval_samples);
    }
    if (n.behavior == Behavior::Poison) {
      trainer = std::make_unique<train::PoisonTrainer>(std::move(trainer), s.trainer.poison_scale);
    }
    e.trainers[id] = std::move(trainer);
  }
  e.initial = e.trainers.begin()->second->initial_model();
  return e;
}

/// Quality of a model under the scenario's own metric: loss on all data for
/// least squares, EMD against the target for the toy GAN.
inline double aggregate_metric(const Scenario& s, const Experiment& e, const ModelPair& m) {
  if (s.trainer.kind == TrainerKind::LeastSquares) return train::least_squares_loss(m.d.values, e.data.examples);
  return train::evaluate_gan(train::GanToyParams::from_model(m), s.trainer.target_mean, s.trainer.target_std,
                             s.trainer.eval_samples, derive_seed(s.seed, "aggregate-eval"))
      .emd;
}

inline std::string metric_name(const Scenario& s) { return s.trainer.kind == TrainerKind::LeastSquares ? "loss" : "emd"; }

struct RunOutcome {
  TrainingResult result;
  nlohmann::ordered_json summary;
};

/// Runs the scenario and writes the metrics CSV (one row per sync round) plus
/// a trailing "# summary {json}" line.
inline RunOutcome run_scenario(const Scenario& s, std::ostream& out) {
  auto e = build_experiment(s);
  const auto fmt = train::format_double;
  const auto metric = metric_name(s);

  std::vector<std::string> ids;
  for (const auto& n : e.ring.physical_nodes()) ids.push_back(n.id);
  out << "round,t,checksum,round_bytes,aggregate_" << metric;
  for (const auto& id : ids) out << ',' << metric << ':' << id;
  out << '\n';

  const double initial_metric = aggregate_metric(s, e, e.initial);
  std::uint64_t total_bytes = 0;
  auto observer = [&](const RoundReport& r, const std::map<std::string, ModelPair>& models) {
    total_bytes += r.ledger.total_bytes();
    out << r.round << ',' << r.t << ',' << checksum(r.aggregate) << ',' << r.ledger.total_bytes() << ','
        << fmt(aggregate_metric(s, e, r.aggregate));
    for (const auto& id : ids) out << ',' << fmt(e.trainers.at(id)->evaluate(models.at(id)));
    out << '\n';
  };
  TrainingConfig cfg{s.horizon, s.interval, s.weights, s.seed};
  RunOutcome outcome{run_training(e.ring, e.trainers, e.initial, cfg, observer), {}};

  const auto& rounds = outcome.result.rounds;
  // Without any sync round there is no aggregate; report the first trusted node's model.
  const ModelPair final_model =
      rounds.empty() ? outcome.result.final_models.at(e.ring.trusted_cycle().front()) : rounds.back().aggregate;
  auto& j = outcome.summary;
  j["scenario"] = s.name;
  j["seed"] = s.seed;
  j["T"] = s.horizon;
  j["K"] = s.interval;
  j["nodes"] = e.ring.physical_count();
  j["trusted"] = e.ring.trusted_count();
  j["rounds"] = rounds.size();
  j["total_bytes"] = total_bytes;
  j["model_bytes"] = size_bytes(final_model);
  j["checksum"] = checksum(final_model);
  j["initial_" + metric] = fmt(initial_metric);
  j["final_" + metric] = fmt(aggregate_metric(s, e, final_model));
  if (!rounds.empty()) j["excluded"] = rounds.back().excluded;
  if (s.trainer.kind == TrainerKind::ToyGan) {
    const auto p = train::GanToyParams::from_model(final_model);
    const auto ev = train::evaluate_gan(p, s.trainer.target_mean, s.trainer.target_std, 20000,
                                        derive_seed(s.seed, "summary-eval"));
    j["generator"] = {{"a", fmt(p.a)}, {"b", fmt(p.b)}};
    j["mean"] = fmt(ev.mean);
    j["std"] = fmt(ev.stddev);
  } else {
    std::vector<std::string> w;
    for (double v : final_model.d.values) w.push_back(fmt(v));
    j["w"] = w;
  }
  out << "# summary " << j.dump() << '\n';
  return outcome;
}

/// Ring entries followed by the routing table of untrusted nodes.
inline void print_topology(const Scenario& s, std::ostream& out) {
  const auto ring = build_ring(s.descriptors(), s.virtual_count);
  out << "# ring: " << ring.physical_count() << " physical, " << ring.trusted_count() << " trusted, "
      << ring.virtual_count() << " virtual, " << ring.entries().size() << " entries\n";
  dump_topology(out, ring);
  out << "# routing\n";
  for (const auto& n : ring.physical_nodes()) {
    if (!n.trusted()) out << n.id << " -> " << trusted_successor(ring, ring.position(n.id)).id << '\n';
  }
  out << "# ring pass order\n";
  const auto cycle = ring.trusted_cycle();
  for (std::size_t i = 0; i < cycle.size(); ++i) out << (i ? " -> " : "") << cycle[i];
  if (cycle.size() > 1) out << " -> " << cycle.front();
  out << '\n';
}

/// Closed-form and simulated per-round costs side by side; returns false on any mismatch.
inline bool bench_comm(std::size_t n_min, std::size_t n_max, std::uint64_t m, std::uint64_t seed, std::ostream& out) {
  require(n_min >= 2 && n_max <= 64 && n_min <= n_max, ErrorCode::ConfigError,
          "bench-comm: node range must lie within [2, 64]");
  require(m >= 1, ErrorCode::ConfigError, "bench-comm: model size must be positive");
  out << "kind,N,M_bytes,times,pressure_bytes,total_bytes,max_node_egress,sim_times,sim_pressure_bytes,sim_total_bytes,"
         "match\n";
  bool all = true;
  for (auto kind : kAllTopologies) {
    for (std::size_t n = n_min; n <= n_max; ++n) {
      const auto cf = closed_form(kind, n, m);
      const auto ledger = simulate_round(kind, n, m, seed);
      const auto pr = pressure_report(ledger);
      const bool match = ledger.conserved() && cf.times == ledger.communication_times() && cf.total == pr.total &&
                         static_cast<double>(cf.pressure) == pr.pressure;
      all = all && match;
      out << to_string(kind) << ',' << n << ',' << m << ',' << cf.times << ',' << cf.pressure << ',' << cf.total << ','
          << pr.max_node_egress << ',' << ledger.communication_times() << ',' << train::format_double(pr.pressure)
          << ',' << pr.total << ',' << (match ? "yes" : "no") << '\n';
    }
  }
  out << "# P2P rows count N destinations per node, self included (N^2*M). Without self-delivery the physical total is "
         "N(N-1)*M:";
  for (std::size_t n = n_min; n <= n_max; ++n) out << ' ' << n << '=' << n * (n - 1) * m;
  out << '\n';
  return all;
}

}  // namespace rdfl::cli
