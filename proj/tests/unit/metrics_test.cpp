#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kglp/error.hpp"
#include "kglp/metrics.hpp"
#include "kglp/rng.hpp"
#include "kglp/synth.hpp"

using namespace kglp;

namespace {

double auc_oracle(const std::vector<ScoredExample>& ex) {
  double good = 0;
  std::size_t pos = 0, neg = 0;
  for (const auto& p : ex) {
    if (p.label != 1) continue;
    ++pos;
    for (const auto& n : ex) {
      if (n.label != 0) continue;
      good += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
    }
  }
  for (const auto& e : ex) neg += e.label == 0;
  return good / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<ScoredExample> make(std::initializer_list<double> scores, std::initializer_list<int> labels) {
  std::vector<ScoredExample> out;
  auto l = labels.begin();
  for (double s : scores) out.push_back({s, *l++});
  return out;
}

BaselineTable bundled_baseline() { return BaselineTable::load_file(std::string(KGLP_DATA_DIR) + "/sota_baseline.tsv"); }

}  // namespace

TEST(FMeasure, HandCounts) {
  EXPECT_EQ(f_measure(make({1.0, 1.0, 0.0, 0.0}, {1, 1, 0, 0})), 1.0);
  // TP=1, FP=1, FN=0.
  EXPECT_NEAR(f_measure(make({0.9, 0.8, 0.1}, {1, 0, 0})), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(f_measure(make({0.1, 0.2, 0.3}, {1, 0, 1})), 0.0);
  EXPECT_THROW(f_measure(make({0.9, 0.1}, {0, 0})), Error);
}

TEST(FMeasure, ThresholdOnlyMovesTheConfusionMatrix) {
  const auto ex = make({0.9, 0.6, 0.4, 0.3}, {1, 0, 1, 0});
  EXPECT_NEAR(f_measure(ex, 0.5), 0.5, 1e-15);      // P=1/2, R=1/2
  EXPECT_NEAR(f_measure(ex, 0.35), 0.8, 1e-15);  // P=2/3, R=1
  auto reversed = ex;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(f_measure(reversed, 0.5), f_measure(ex, 0.5));
}

TEST(RocAuc, HandExamples) {
  EXPECT_EQ(roc_auc(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})), 1.0);
  EXPECT_EQ(roc_auc(make({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})), 0.5);
  EXPECT_EQ(roc_auc(make({0.9, 0.4, 0.6}, {1, 1, 0})), 0.5);
}

TEST(RocAuc, ErrorsOnOneClass) {
  try {
    roc_auc(make({0.1, 0.2}, {1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingleClass);
  }
}

TEST(RocAuc, MatchesPairCountingOracleWithTies) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform(std::uint64_t{400});
    const std::uint64_t levels = 1 + rng.uniform(std::uint64_t{20});
    std::vector<ScoredExample> ex(n);
    for (auto& e : ex) {
      e.score = static_cast<double>(rng.uniform(levels)) / static_cast<double>(levels);
      e.label = static_cast<int>(rng.uniform(std::uint64_t{2}));
    }
    ex[0].label = 1;
    ex[1].label = 0;
    EXPECT_EQ(roc_auc(ex), auc_oracle(ex));
  }
}

TEST(RocAuc, InvariantUnderMonotoneMapsAndLabelFlip) {
  Rng rng(11);
  std::vector<ScoredExample> ex(300);
  for (auto& e : ex) {
    e.score = rng.uniform01();
    e.label = static_cast<int>(rng.uniform(std::uint64_t{2}));
  }
  const double base = roc_auc(ex);
  auto mapped = ex, flipped = ex;
  for (auto& e : mapped) e.score = std::exp(3 * e.score) - 7;
  for (auto& e : flipped) {
    e.score = -e.score;
    e.label = 1 - e.label;
  }
  EXPECT_DOUBLE_EQ(roc_auc(mapped), base);
  EXPECT_DOUBLE_EQ(roc_auc(flipped), base);
}

TEST(MeanStd, FoldArithmetic) {
  const std::vector<double> v{0.8, 0.9, 1.0, 0.9, 0.8};
  const MeanStd m = mean_std(v);
  EXPECT_NEAR(m.mean, 0.88, 1e-12);
  EXPECT_NEAR(m.std, std::sqrt(0.0056), 1e-12);
}

TEST(Delta, FormattingKeepsSignAndThreeDecimals) {
  EXPECT_EQ(format_delta(0.999 - 0.72), "+0.279");
  EXPECT_EQ(format_delta(0.92 - 0.94), "-0.020");
  EXPECT_EQ(format_delta(0.0), "+0.000");
  EXPECT_EQ(format_delta(-0.0002), "+0.000");
  EXPECT_EQ(format_delta(0.72 - 0.72), "+0.000");
}

TEST(Delta, ReportAgainstBundledBaseline) {
  const BaselineTable base = bundled_baseline();
  EXPECT_EQ(base.entries().size(), 8u);
  std::vector<MetricRow> rows;
  for (std::size_t f = 0; f < 5; ++f) {
    rows.push_back({"has-indication", 50, f, 0.999, 0.9});
    rows.push_back({"has-target", 50, f, 0.92, 0.97});
  }
  const auto deltas = delta_report(rows, base);
  ASSERT_EQ(deltas.size(), 2u);
  EXPECT_EQ(deltas[0].relation, "has-indication");
  EXPECT_EQ(format_delta(deltas[0].delta_f), "+0.279");
  EXPECT_EQ(format_delta(deltas[0].delta_auc), "+0.110");
  EXPECT_EQ(format_delta(deltas[1].delta_f), "-0.020");
  EXPECT_EQ(format_delta(deltas[1].delta_auc), "+0.000");
  const std::string table = render_delta_table(deltas);
  EXPECT_NE(table.find("+0.279"), std::string::npos) << table;
  EXPECT_NE(table.find("-0.020"), std::string::npos) << table;

  const std::vector<MetricRow> unknown{{"has-nothing", 5, 0, 0.5, 0.5}};
  EXPECT_THROW(delta_report(unknown, base), Error);
}

TEST(MetricsCsv, RoundTripAndLayout) {
  const std::vector<MetricRow> rows{{"has-link", 10, 0, 0.75, 0.8125}, {"has-link", 10, 1, 1.0, 0.5}};
  std::stringstream buf;
  write_metrics_csv(rows, buf);
  EXPECT_EQ(buf.str(),
            "relation,dim,fold,f_measure,roc_auc\n"
            "has-link,10,0,0.750000,0.812500\n"
            "has-link,10,1,1.000000,0.500000\n");
  const auto back = read_metrics_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].fold, 1u);
  EXPECT_EQ(back[0].roc_auc, 0.8125);
  std::istringstream bad("relation,dim,fold,f_measure,roc_auc\nx,y\n");
  EXPECT_THROW(read_metrics_csv(bad), Error);
}

TEST(CrossValidate, PerfectStubGivesOnesWithZeroSpread) {
  const KnowledgeGraph kg = synth::latent_factor_kg({});
  CrossValidationOptions opt;
  opt.embed.epochs = 0;
  opt.scorer = [](const FoldContext& ctx) {
    std::vector<ScoredExample> out;
    for (std::size_t i = 0; i < ctx.split.test_pos.size(); ++i) out.push_back({1.0, 1});
    for (std::size_t i = 0; i < ctx.split.test_neg.size(); ++i) out.push_back({0.0, 0});
    return out;
  };
  const CrossValidationResult r = cross_validate(kg, RelationId{0}, 5, 1, opt);
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.f_measure, 1.0);
    EXPECT_EQ(row.roc_auc, 1.0);
  }
  EXPECT_EQ(r.roc_auc.std, 0.0);
  EXPECT_EQ(r.f_measure.std, 0.0);
}

TEST(CrossValidate, RandomStubIsNearChance) {
  const KnowledgeGraph kg = synth::random_kg(400, 1, 10000, 3);
  CrossValidationOptions opt;
  opt.embed.epochs = 0;
  opt.scorer = [](const FoldContext& ctx) {
    Rng rng(ctx.seed);
    std::vector<ScoredExample> out;
    for (std::size_t i = 0; i < ctx.split.test_pos.size(); ++i) out.push_back({rng.uniform01(), 1});
    for (std::size_t i = 0; i < ctx.split.test_neg.size(); ++i) out.push_back({rng.uniform01(), 0});
    return out;
  };
  const CrossValidationResult r = cross_validate(kg, RelationId{0}, 5, 8, opt);
  for (const auto& row : r.rows) EXPECT_NEAR(row.roc_auc, 0.5, 0.05);
}

TEST(CrossValidate, BitForBitReproducible) {
  const KnowledgeGraph kg = synth::latent_factor_kg({64, 64, 5, 0.05});
  CrossValidationOptions opt;
  opt.embed.epochs = 3;
  const auto a = cross_validate(kg, RelationId{0}, 8, 21, opt);
  const auto b = cross_validate(kg, RelationId{0}, 8, 21, opt);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].f_measure, b.rows[i].f_measure);
    EXPECT_EQ(a.rows[i].roc_auc, b.rows[i].roc_auc);
  }
}

TEST(CrossValidate, FoldSeedsAreDistinct) {
  const FoldSeeds a = fold_seeds(1, 10, 0), b = fold_seeds(1, 10, 1), c = fold_seeds(1, 20, 0);
  EXPECT_NE(a.split, b.split);
  EXPECT_EQ(a.split, c.split);  // splits are shared across dims
  EXPECT_NE(a.embed, c.embed);
  EXPECT_NE(a.classifier, a.embed);
}
