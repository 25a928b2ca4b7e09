#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <sstream>

#include "rdfl/sync.hpp"
#include "rdfl/train.hpp"
#include "support.hpp"

namespace rdfl::train {
namespace {

using rdfl::testing::relative_error;

TEST(LeastSquares, HandStepFromZero) {
  LocalDataset data{{{{1.0}, 2.0}}};
  TrainerConfig cfg;
  cfg.lr_d = 0.1;
  LeastSquaresTrainer trainer(data, cfg, 1);
  auto m = trainer.initial_model();
  auto dir = trainer.local_step(m, 1);
  EXPECT_DOUBLE_EQ(apply_update(m.d, dir.d, trainer.lr_d(1)).values[0], 0.2);
  EXPECT_TRUE(std::all_of(dir.g.values.begin(), dir.g.values.end(), [](double v) { return v == 0.0; }));
}

TEST(LeastSquares, StationaryAtNormalEquationsSolution) {
  auto [data, _] = make_linear_data(400, 6, 0.3, 5);
  const auto w = rdfl::testing::normal_equations(data.examples);
  TrainerConfig cfg;
  cfg.batch_size = data.size();
  LeastSquaresTrainer trainer(data, cfg, 6);
  ModelPair m = trainer.initial_model();
  m.d.values = w;
  const auto dir = trainer.local_step(m, 1);
  EXPECT_LE(std::sqrt(dot(dir.d.values, dir.d.values)), 1e-10);
}

TEST(LeastSquares, DirectionMatchesFiniteDifferences) {
  auto [data, _] = make_linear_data(50, 4, 0.5, 6);
  Rng rng(1);
  std::vector<double> w(4);
  for (auto& x : w) x = rng.normal();
  const auto dir = least_squares_direction(w, data.examples);
  const double h = 1e-5;
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto up = w, down = w;
    up[i] += h;
    down[i] -= h;
    const double fd = (least_squares_loss(up, data.examples) - least_squares_loss(down, data.examples)) / (2 * h);
    EXPECT_LE(relative_error(-dir[i], fd), 1e-4) << i;
  }
}

TEST(LeastSquares, Errors) {
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, LeastSquaresTrainer(LocalDataset{}, TrainerConfig{}, 1));
  EXPECT_RDFL_ERROR(ErrorCode::ShapeError, LeastSquaresTrainer(LocalDataset{{{{1.0, 2.0}, 0.0}}}, TrainerConfig{}, 1));
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, least_squares_direction(std::vector<double>{0.0}, {}));
  TrainerConfig bad;
  bad.lr_d = 0.0;
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, bad.validate());
}

// With identical data and a shared seed stream, K=1 federated training
// reproduces centralized SGD step for step.
TEST(LeastSquares, FederatedK1MatchesCentralizedSgd) {
  auto [data, _] = make_linear_data(100, 3, 0.2, 8);
  TrainerConfig cfg;
  cfg.lr_d = 0.05;
  cfg.batch_size = 10;

  auto ring = build_ring(rdfl::testing::random_nodes(4, 0, 3), 0);
  Trainers trainers;
  for (const auto& n : ring.physical_nodes()) trainers[n.id] = std::make_unique<LeastSquaresTrainer>(data, cfg, 3);
  const auto init = trainers.begin()->second->initial_model();

  LeastSquaresTrainer central(data, cfg, 3);
  central.reset(77);
  ModelPair w = init;
  std::vector<std::vector<double>> path;
  for (std::uint64_t t = 1; t <= 50; ++t) {
    w.d = apply_update(w.d, central.local_step(w, t).d, cfg.lr_d);
    path.push_back(w.d.values);
  }

  std::size_t step = 0;
  run_training(ring, trainers, init, {50, 1, WeightMode::Uniform, 77, false},
               [&](const RoundReport& report, const std::map<std::string, ModelPair>&) {
                 const auto& expected = path[step++];
                 for (std::size_t i = 0; i < expected.size(); ++i) {
                   ASSERT_LE(std::abs(report.aggregate.d.values[i] - expected[i]),
                             1e-12 * std::max(1.0, std::abs(expected[i])))
                       << "t=" << report.t;
                 }
               });
  EXPECT_EQ(step, 50u);
}

GanBatch seeded_batch(std::uint64_t seed, double mu, double sigma, std::size_t n) {
  Rng rng(seed);
  GanBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.real.push_back(rng.normal(mu, sigma));
    b.noise.push_back(rng.normal());
  }
  return b;
}

TEST(ToyGan, DirectionsMatchCentralFiniteDifferences) {
  const double h = 1e-5;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(100 + trial);
    GanToyParams p;
    p.a = rng.uniform(0.3, 2.0);
    p.b = rng.uniform(-2.0, 4.0);
    for (auto& w : p.w) w = rng.normal() * 0.5;
    const auto batch = seeded_batch(trial, 3.0, 1.5, 64);
    const auto dir = gan_directions(p, batch);

    for (std::size_t k = 0; k < 3; ++k) {
      auto up = p, down = p;
      up.w[k] += h;
      down.w[k] -= h;
      const double fd = (discriminator_loss(up, batch) - discriminator_loss(down, batch)) / (2 * h);
      EXPECT_LE(relative_error(-dir.d.values[k], fd), 1e-4) << "trial " << trial << " w" << k;
    }
    for (std::size_t k = 0; k < 2; ++k) {
      auto up = p, down = p;
      (k == 0 ? up.a : up.b) += h;
      (k == 0 ? down.a : down.b) -= h;
      const double fd = (generator_loss(up, batch) - generator_loss(down, batch)) / (2 * h);
      EXPECT_LE(relative_error(-dir.g.values[k], fd), 1e-4) << "trial " << trial << " g" << k;
    }
  }
}

TEST(ToyGan, ModelConversionAndBounds) {
  GanToyParams p;
  p.a = 1.5;
  p.b = -0.5;
  p.w[0] = 0.1;
  p.w[1] = -0.2;
  p.w[2] = 0.3;
  const auto m = p.to_model();
  EXPECT_EQ(m.d.shape_tag, kGanDiscriminatorTag);
  EXPECT_EQ(m.g.values, (std::vector<double>{1.5, -0.5}));
  const auto back = GanToyParams::from_model(m);
  EXPECT_EQ(back.a, p.a);
  EXPECT_EQ(back.w[2], p.w[2]);
  for (double x : {-5.0, -1.0, 0.0, 2.0, 5.0}) {
    const double d = p.discriminate(x);
    EXPECT_GT(d, 0.0);
    EXPECT_LT(d, 1.0);
  }
  EXPECT_TRUE(std::isfinite(discriminator_loss(p, {{1e3}, {1e3}})));
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, gan_directions(p, GanBatch{}));
}

TEST(EvaluateGan, ExactAndDegenerateGenerators) {
  const double mu = 3.0, sigma = 1.5;
  const std::size_t n = 4000;
  GanToyParams exact;
  exact.a = sigma;
  exact.b = mu;
  const auto e = evaluate_gan(exact, mu, sigma, n, 9);
  EXPECT_LE(std::abs(e.mean - mu), 5.0 / std::sqrt(static_cast<double>(n)) * sigma);
  EXPECT_LE(std::abs(e.stddev - sigma), 5.0 / std::sqrt(static_cast<double>(n)) * sigma);
  EXPECT_LE(std::abs(e.emd), 0.05);

  GanToyParams flat;
  flat.a = 0.0;
  flat.b = mu;
  EXPECT_LE(evaluate_gan(flat, mu, sigma, n, 9).stddev, 1e-12);
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, evaluate_gan(flat, mu, sigma, 99, 9));
}

TEST(EvaluateGan, EmdShrinksDuringTraining) {
  auto ring = build_ring({{"solo", "10.0.0.1", Trust::Trusted, {}}}, 0);
  TrainerConfig cfg;
  cfg.batch_size = 64;
  Trainers trainers;
  trainers["solo"] =
      std::make_unique<ToyGanTrainer>(make_gaussian_data(2000, 3.0, 1.5, 4), cfg, ToyGanTrainer::Target{3.0, 1.5});
  const auto init = GanToyParams{}.to_model();
  const double before = std::abs(trainers["solo"]->evaluate(init));
  auto result = run_training(ring, trainers, init, {10000, 1000, WeightMode::Uniform, 4});
  const double after = std::abs(trainers["solo"]->evaluate(result.final_models.at("solo")));
  EXPECT_GT(before, 0.4);
  EXPECT_LT(after, before / 4.0);
}

TEST(Emd, IdenticalListsAndConstantOracle) {
  const std::vector<Sample> s = {{{0.5}, 1}, {{-2.0}, 0}, {{7.0}, -3}};
  const auto oracle = threshold_oracle(0.0, 1.0);
  EXPECT_EQ(emd(s, s, oracle), 0.0);
  const OracleClassifier constant([](std::span<const double>) { return std::vector<double>{0.3, 0.7}; });
  std::vector<Sample> other = {{{9.0}, 2}, {{1.0}, -2}, {{3.0}, 2}};
  std::vector<Sample> same_abs = {{{4.0}, -2}, {{5.0}, 2}, {{6.0}, 2}};
  EXPECT_DOUBLE_EQ(emd(other, same_abs, constant), 0.0);
}

TEST(Emd, HandComputedLookupTable) {
  // Oracle: x -> probabilities from a table keyed by x[0].
  const std::map<double, std::vector<double>> table = {
      {1.0, {0.9, 0.1}}, {2.0, {0.2, 0.8}}, {3.0, {0.5, 0.5}}, {4.0, {0.4, 0.6}}, {5.0, {0.25, 0.75}}, {6.0, {1.0, 0.0}}};
  const OracleClassifier oracle([&](std::span<const double> x) { return table.at(x[0]); });
  const std::vector<Sample> real = {{{1.0}, 1}, {{2.0}, -2}, {{3.0}, 0}};
  const std::vector<Sample> gen = {{{4.0}, 1}, {{5.0}, 1}, {{6.0}, -1}};
  // (0.9*1 + 0.8*2 + 0.5*0 - 0.6*1 - 0.75*1 - 1.0*1) / 3 = 0.15 / 3
  EXPECT_NEAR(emd(real, gen, oracle), 0.05, 1e-15);
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, emd(real, std::vector<Sample>(gen.begin(), gen.end() - 1), oracle));
}

TEST(OracleClassifier, RejectsNonDistributions) {
  const OracleClassifier bad([](std::span<const double>) { return std::vector<double>{0.5, 0.6}; });
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, bad.probabilities(std::vector<double>{0.0}));
  const OracleClassifier negative([](std::span<const double>) { return std::vector<double>{1.5, -0.5}; });
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, negative.score(std::vector<double>{0.0}));
}

std::vector<std::vector<double>> index_samples(std::size_t n) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<double>(i)});
  return out;
}

TEST(InceptionScore, ConstantOutputIsOne) {
  const OracleClassifier constant([](std::span<const double>) { return std::vector<double>{0.2, 0.3, 0.5}; });
  EXPECT_DOUBLE_EQ(inception_score(index_samples(50), constant, 5), 1.0);
}

TEST(InceptionScore, BalancedOneHotReachesClassCount) {
  const OracleClassifier onehot([](std::span<const double> x) {
    std::vector<double> p(4, 0.0);
    p[static_cast<std::size_t>(x[0]) % 4] = 1.0;
    return p;
  });
  EXPECT_NEAR(inception_score(index_samples(400), onehot, 1), 4.0, 1e-12);
  EXPECT_NEAR(inception_score(index_samples(400), onehot, 10), 4.0, 1e-12);
}

// Values from tests/oracles/metrics_oracle.py.
TEST(InceptionScore, LookupTableMatchesDirectFormula) {
  const OracleClassifier table([](std::span<const double> x) {
    const auto i = static_cast<std::size_t>(x[0]);
    std::vector<double> raw = {1.0 + static_cast<double>(i % 7), 1.0 + static_cast<double>(3 * i % 5),
                               1.0 + static_cast<double>(i * i % 11)};
    const double s = raw[0] + raw[1] + raw[2];
    for (auto& r : raw) r /= s;
    return raw;
  });
  EXPECT_NEAR(inception_score(index_samples(100), table, 1), 1.110614149904007, 1e-12);
  EXPECT_NEAR(inception_score(index_samples(100), table, 3), 1.1105280800330737, 1e-12);
  EXPECT_GE(inception_score(index_samples(7), table, 7), 1.0);
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, inception_score({}, table, 1));
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, inception_score(index_samples(3), table, 4));
}

void expect_exact_partition(const Partition& parts, std::size_t size) {
  std::vector<int> seen(size, 0);
  for (const auto& p : parts) {
    for (auto i : p) ++seen.at(i);
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

std::vector<std::int64_t> class_labels(std::size_t classes, std::size_t per_class) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < classes * per_class; ++i) out.push_back(static_cast<std::int64_t>(i % classes));
  return out;
}

TEST(DirichletPartition, SingleNodeGetsEverything) {
  const auto parts = dirichlet_partition(class_labels(3, 10), 0.5, 1, 1);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].size(), 30u);
}

TEST(DirichletPartition, ExactPartitionForAnyParameters) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::int64_t> labels(1 + rng.below(300));
    for (auto& l : labels) l = static_cast<std::int64_t>(rng.below(7)) - 3;
    const double alpha = std::pow(10.0, rng.uniform(-2, 2));
    const auto parts = dirichlet_partition(labels, alpha, 1 + rng.below(9), trial);
    expect_exact_partition(parts, labels.size());
  }
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, dirichlet_partition({0, 1}, 0.0, 2, 0));
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, dirichlet_partition({0, 1}, -1.0, 2, 0));
}

TEST(DirichletPartition, Deterministic) {
  const auto labels = class_labels(4, 50);
  EXPECT_EQ(dirichlet_partition(labels, 0.3, 5, 11), dirichlet_partition(labels, 0.3, 5, 11));
  EXPECT_NE(dirichlet_partition(labels, 0.3, 5, 11), dirichlet_partition(labels, 0.3, 5, 12));
}

// Large alpha concentrates shares near 1/N. Per-class counts have standard
// deviation sqrt(1000^2 * (1/5)(4/5) / 501) ~ 17.9 around 200.
TEST(DirichletPartition, LargeAlphaConcentrates) {
  const auto labels = class_labels(10, 1000);
  const auto parts = dirichlet_partition(labels, 100.0, 5, 21);
  expect_exact_partition(parts, labels.size());
  double sq = 0.0;
  std::size_t within = 0;
  for (const auto& p : parts) {
    EXPECT_NEAR(static_cast<double>(p.size()), 2000.0, 0.15 * 2000.0);
    std::vector<double> per_class(10, 0.0);
    for (auto i : p) per_class[static_cast<std::size_t>(labels[i])] += 1.0;
    for (double c : per_class) {
      sq += (c - 200.0) * (c - 200.0);
      within += std::abs(c - 200.0) <= 30.0;
    }
  }
  const double sd = std::sqrt(sq / 50.0);
  const double theory = std::sqrt(1000.0 * 1000.0 * 0.2 * 0.8 / 501.0);
  EXPECT_NEAR(sd, theory, 0.3 * theory);
  EXPECT_GE(within, 40u);
}

TEST(DirichletPartition, SmallAlphaSkews) {
  const auto labels = class_labels(10, 1000);
  const auto parts = dirichlet_partition(labels, 0.1, 5, 21);
  std::size_t dominated = 0;
  for (std::int64_t c = 0; c < 10; ++c) {
    std::size_t best = 0;
    for (const auto& p : parts) {
      best = std::max<std::size_t>(best, std::count_if(p.begin(), p.end(), [&](std::size_t i) { return labels[i] == c; }));
    }
    dominated += best > 500;
  }
  EXPECT_GE(dominated, 7u);
}

TEST(IidPartition, SizesAndDeterminism) {
  const auto parts = iid_partition(100, 4, 1.0, 3);
  for (const auto& p : parts) {
    EXPECT_EQ(p.size(), 100u);
    EXPECT_TRUE(std::all_of(p.begin(), p.end(), [](std::size_t i) { return i < 100; }));
  }
  EXPECT_EQ(iid_partition(100, 4, 1.0, 3), parts);
  EXPECT_EQ(iid_partition(101, 3, 0.5, 3).front().size(), 50u);
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, iid_partition(100, 4, 0.0, 3));
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, iid_partition(100, 4, 1.5, 3));
}

TEST(IidPartition, LabelDistributionTracksGlobal) {
  Rng rng(12);
  std::vector<std::int64_t> labels(10'000);
  for (auto& l : labels) l = static_cast<std::int64_t>(rng.below(10) < 3 ? 0 : rng.below(10));
  std::vector<double> global(10, 0.0);
  for (auto l : labels) global[static_cast<std::size_t>(l)] += 1.0 / 10'000.0;
  for (const auto& p : iid_partition(labels.size(), 5, 0.5, 13)) {
    ASSERT_EQ(p.size(), 5000u);
    std::vector<double> local(10, 0.0);
    for (auto i : p) local[static_cast<std::size_t>(labels[i])] += 1.0 / 5000.0;
    for (std::size_t c = 0; c < 10; ++c) EXPECT_NEAR(local[c], global[c], 0.05) << "class " << c;
  }
}

TEST(DatasetIo, RoundTripIsExact) {
  auto [data, _] = make_linear_data(30, 3, 0.7, 2);
  data.examples[0].x[0] = 1e-300;
  data.examples[1].label = -0.1;
  std::stringstream ss;
  write_dataset(ss, data);
  const auto back = read_dataset(ss);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back.examples[i].x, data.examples[i].x);
    EXPECT_EQ(back.examples[i].label, data.examples[i].label);
  }
}

TEST(DatasetIo, CommentsBlankLinesAndErrors) {
  std::stringstream ok("# header\n\n1.5, 2,3\n4,5,6\r\n");
  const auto data = read_dataset(ok);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data.examples[0].x, (std::vector<double>{1.5, 2.0}));
  EXPECT_EQ(data.examples[1].label, 6.0);

  std::stringstream ragged("1,2,3\n4,5\n");
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, read_dataset(ragged));
  std::stringstream junk("1,abc\n");
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, read_dataset(junk));
  std::stringstream single("7\n");
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, read_dataset(single));
}

TEST(DatasetIo, PartitionsRoundTripAndSubset) {
  const Partition parts = {{0, 2, 4}, {}, {1, 3}};
  std::stringstream ss;
  write_partitions(ss, parts);
  EXPECT_EQ(ss.str(), "0,2,4\n\n1,3\n");
  EXPECT_EQ(read_partitions(ss), parts);

  LocalDataset data{{{{1.0}, 10}, {{2.0}, 20}, {{3.0}, 30}}};
  EXPECT_EQ(subset(data, {2, 0}).examples[0].label, 30.0);
  EXPECT_RDFL_ERROR(ErrorCode::InvalidArgument, subset(data, {3}));
  std::stringstream bad("1,x\n");
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, read_partitions(bad));
}

TEST(PoisonTrainer, KeepsShapesAndDelegates) {
  auto [data, _] = make_linear_data(20, 3, 0.1, 1);
  PoisonTrainer poison(std::make_unique<LeastSquaresTrainer>(data, TrainerConfig{}, 3), 50.0);
  poison.reset(4);
  const auto m = poison.initial_model();
  const auto dir = poison.local_step(m, 1);
  EXPECT_EQ(dir.d.size(), 3u);
  EXPECT_EQ(dir.d.shape_tag, m.d.shape_tag);
  EXPECT_EQ(poison.dataset_size(), 20u);
  double norm = std::sqrt(dot(dir.d.values, dir.d.values));
  EXPECT_GT(norm, 5.0);
}

}  // namespace
}  // namespace rdfl::train
