#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "kglp/embed.hpp"
#include "kglp/error.hpp"
#include "kglp/rng.hpp"
#include "kglp/split.hpp"
#include "kglp/synth.hpp"

using namespace kglp;

TEST(Similarity, OrthogonalAndIdentity) {
  const std::vector<double> x{1, 0}, y{0, 1};
  EXPECT_EQ(similarity(x, y), 0.0);
  EXPECT_EQ(similarity(x, x), 1.0);
  EXPECT_THROW(similarity(x, std::vector<double>{1, 2, 3}), Error);
}

TEST(Similarity, MatchesLongDoubleSum) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(50), b(50);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    long double oracle = 0;
    for (int i = 0; i < 50; ++i) oracle += static_cast<long double>(a[i]) * b[i];
    EXPECT_NEAR(similarity(a, b), static_cast<double>(oracle), 1e-12);
  }
}

TEST(BatchLoss, HandEvaluatedHinge) {
  EXPECT_NEAR(batch_loss(0.2, std::vector<double>{0.3}, 0.05), 0.15, 1e-15);
  EXPECT_NEAR(batch_loss(0.2, std::vector<double>{0.3, 0.1}, 0.05), 0.075, 1e-15);
  EXPECT_EQ(batch_loss(1.0, std::vector<double>{0.2, 0.9}, 0.05), 0.0);
}

TEST(BatchLoss, InactiveHingeHasExactlyZeroGradient) {
  const std::vector<double> u{1, 2}, v{3, 1}, n1{0.1, 0}, n2{0, 0.2};
  const std::vector<std::span<const double>> negs{n1, n2};
  const RowGradients g = example_gradients(u, v, negs, 0.05, EmbedLoss::Hinge);
  EXPECT_EQ(g.loss, 0.0);
  for (double x : g.u) EXPECT_EQ(x, 0.0);
  for (double x : g.v) EXPECT_EQ(x, 0.0);
  for (const auto& n : g.negs) {
    for (double x : n) EXPECT_EQ(x, 0.0);
  }
}

TEST(GradientCheck, RandomProbesMatchFiniteDifferences) {
  for (EmbedLoss loss : {EmbedLoss::Hinge, EmbedLoss::Softmax}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TrainConfig cfg;
      cfg.dim = 4;
      cfg.negatives_per_positive = 3;
      cfg.margin = 0.5;
      cfg.loss = loss;
      cfg.seed = seed;
      const EdgeSet probe = synth::random_edges(8, 6, seed);
      const GradientCheckResult r = gradient_check(cfg, probe, 8);
      EXPECT_LT(r.max_relative_error, 1e-4);
      EXPECT_EQ(r.checked + r.kinks_skipped, probe.size());
      EXPECT_TRUE(r.inactive_exactly_zero);
    }
  }
}

TEST(GradientCheck, KinkIsSkippedAndFlagged) {
  TrainConfig cfg;
  cfg.dim = 2;
  cfg.negatives_per_positive = 1;
  cfg.margin = 0.0;
  // Every row equal, so the positive and negative similarities coincide.
  EmbeddingMatrix start(3, 2);
  for (double& x : start.data()) x = 0.5;
  EdgeSet probe;
  probe.insert({EntityId{0}, EntityId{1}});
  const GradientCheckResult r = gradient_check(cfg, probe, 3, &start);
  EXPECT_EQ(r.kinks_skipped, 1u);
  EXPECT_EQ(r.checked, 0u);
}

TEST(GradientCheck, InactiveConfigurationIsExactlyZero) {
  TrainConfig cfg;
  cfg.dim = 2;
  cfg.negatives_per_positive = 2;
  cfg.margin = 0.05;
  EmbeddingMatrix start(3, 2);
  const double rows[3][2] = {{1, 1}, {2, 2}, {-1, -1}};
  for (std::uint32_t i = 0; i < 3; ++i) {
    start.row(EntityId{i})[0] = rows[i][0];
    start.row(EntityId{i})[1] = rows[i][1];
  }
  EdgeSet probe;
  probe.insert({EntityId{0}, EntityId{1}});
  const GradientCheckResult r = gradient_check(cfg, probe, 3, &start);
  EXPECT_EQ(r.checked, 1u);
  EXPECT_TRUE(r.inactive_exactly_zero);
  EXPECT_EQ(r.max_relative_error, 0.0);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const EdgeSet edges = synth::random_edges(30, 60, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 5;
  const TrainResult r = train_embeddings(edges, 30, cfg);
  EXPECT_EQ(r.embeddings, initial_embeddings(30, cfg.dim, 5));
  EXPECT_TRUE(r.report.epoch_loss.empty());
}

TEST(Train, InitializationIsSmallUniform) {
  const EmbeddingMatrix m = initial_embeddings(100, 20, 3);
  for (double x : m.data()) {
    EXPECT_GE(x, -1.0 / 20);
    EXPECT_LE(x, 1.0 / 20);
  }
}

TEST(Train, RejectsEmptyGraph) {
  EXPECT_THROW(train_embeddings(EdgeSet{}, 10, TrainConfig{}), Error);
}

TEST(Train, WithinBlockPairsAreMoreSimilarThanCrossBlock) {
  const KnowledgeGraph kg = synth::bipartite_blocks({});
  const EdgeSet edges = flattened_edges(kg);
  TrainConfig cfg;
  cfg.dim = 10;
  cfg.epochs = 10;
  cfg.seed = 11;
  const TrainResult r = train_embeddings(edges, kg.entity_count(), cfg);

  auto block_of = [&](EntityId id) { return kg.entity_iri(id).find("block0/") != std::string::npos ? 0 : 1; };
  auto is_a = [&](EntityId id) { return kg.entity_iri(id).find("/a/") != std::string::npos; };
  double within = 0, cross = 0;
  std::size_t n_within = 0, n_cross = 0;
  for (const Edge& e : edges) {
    within += similarity(r.embeddings.row(e.subject), r.embeddings.row(e.object));
    ++n_within;
  }
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
    for (std::uint32_t j = 0; j < kg.entity_count(); ++j) {
      const EntityId a{i}, b{j};
      if (is_a(a) && !is_a(b) && block_of(a) != block_of(b)) {
        cross += similarity(r.embeddings.row(a), r.embeddings.row(b));
        ++n_cross;
      }
    }
  }
  ASSERT_GT(n_cross, 0u);
  EXPECT_GT(within / n_within, cross / n_cross);
}

TEST(Train, LossTrendsDownOnLatentGraph) {
  const KnowledgeGraph kg = synth::latent_factor_kg({});
  TrainConfig cfg;
  cfg.seed = 2;
  const TrainResult r = train_embeddings(flattened_edges(kg), kg.entity_count(), cfg);
  const auto& l = r.report.epoch_loss;
  ASSERT_EQ(l.size(), 10u);
  const double first = (l[0] + l[1] + l[2]) / 3, last = (l[7] + l[8] + l[9]) / 3;
  EXPECT_LE(last, first);
  EXPECT_TRUE(r.embeddings.all_finite());
  EXPECT_EQ(r.report.examples, 10 * kg.edge_count());
}

TEST(Train, NeverTouchesTestFoldEdges) {
  const KnowledgeGraph kg = synth::random_kg(100, 3, 1500, 7);
  const FoldPlan plan = make_folds(kg, RelationId{2}, 5, 1);
  const EvaluationSplit split = build_split(kg, plan, 1, 2);
  std::set<std::uint64_t> accessed;
  TrainHooks hooks;
  hooks.on_edge_access = [&](Edge e) { accessed.insert(e.key()); };
  TrainConfig cfg;
  cfg.epochs = 3;
  train_embeddings(embedding_training_edges(kg, split), kg.entity_count(), cfg, hooks);
  EXPECT_EQ(accessed.size(), kg.edge_count() - split.test_pos.size());
  for (const Edge& e : split.test_pos) EXPECT_FALSE(accessed.contains(e.key()));
}

TEST(Train, SingleThreadIsBitReproducible) {
  const EdgeSet edges = synth::random_edges(200, 2000, 3);
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.seed = 77;
  const TrainResult a = train_embeddings(edges, 200, cfg);
  const TrainResult b = train_embeddings(edges, 200, cfg);
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_EQ(a.report.epoch_loss, b.report.epoch_loss);
  cfg.seed = 78;
  EXPECT_NE(train_embeddings(edges, 200, cfg).embeddings, a.embeddings);
}

TEST(Train, MultiThreadedStaysFinite) {
  const EdgeSet edges = synth::random_edges(500, 5000, 3);
  TrainConfig cfg;
  cfg.threads = 4;
  cfg.learning_rate = 0.1;
  const TrainResult r = train_embeddings(edges, 500, cfg);
  EXPECT_TRUE(r.embeddings.all_finite());
  EXPECT_EQ(r.report.examples + r.report.skipped, 10 * edges.size());
}

TEST(EmbeddingFiles, TextRoundTripKeepsNineDigits) {
  const KnowledgeGraph kg = synth::random_kg(20, 1, 40, 1);
  const EmbeddingMatrix m = initial_embeddings(kg.entity_count(), 7, 9);
  std::stringstream buf;
  write_embeddings_text(m, kg, buf);
  const EmbeddingMatrix back = read_embeddings_text(buf, kg);
  ASSERT_EQ(back.rows(), m.rows());
  ASSERT_EQ(back.dim(), m.dim());
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], m.data()[i], 1e-8 * std::abs(m.data()[i]) + 1e-300);
  }
}

TEST(EmbeddingFiles, BinaryRoundTripIsFloat32Exact) {
  const EmbeddingMatrix m = initial_embeddings(33, 5, 2);
  std::stringstream buf;
  write_embeddings_binary(m, buf);
  EXPECT_EQ(buf.str().size(), 8u + 4 + 8 + 4 + 33 * 5 * 4);
  const EmbeddingMatrix back = read_embeddings_binary(buf);
  ASSERT_EQ(back.rows(), 33u);
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    EXPECT_EQ(back.data()[i], static_cast<double>(static_cast<float>(m.data()[i])));
  }
}

TEST(EmbeddingFiles, RejectsGarbage) {
  std::istringstream bad("not an embedding file");
  EXPECT_THROW(read_embeddings_binary(bad), Error);
  const KnowledgeGraph kg = synth::random_kg(5, 1, 4, 1);
  std::istringstream text("http://nowhere/x 1 2\n");
  EXPECT_THROW(read_embeddings_text(text, kg), Error);
}
