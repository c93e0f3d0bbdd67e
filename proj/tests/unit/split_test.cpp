#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "kglp/error.hpp"
#include "kglp/rng.hpp"
#include "kglp/split.hpp"
#include "kglp/synth.hpp"

using namespace kglp;

namespace {

std::set<std::uint64_t> keys(const EdgeSet& s) {
  std::set<std::uint64_t> out;
  for (const Edge& e : s) out.insert(e.key());
  return out;
}

// Domain d0..d{nd-1}, range r0..r{nr-1}, the first n_edges pairs in
// row-major order as positives.
KnowledgeGraph grid(std::size_t nd, std::size_t nr, std::size_t n_edges) {
  KnowledgeGraph kg;
  kg.declare_schema("http://r/rel", "D", "R");
  for (std::size_t i = 0; i < nd; ++i) kg.set_entity_type("http://d/" + std::to_string(i), "D");
  for (std::size_t j = 0; j < nr; ++j) kg.set_entity_type("http://r/" + std::to_string(j), "R");
  for (std::size_t k = 0; k < n_edges; ++k) {
    kg.add_triple({Iri("http://d/" + std::to_string(k / nr)), Iri("http://r/rel"),
                   Iri("http://r/" + std::to_string(k % nr))});
  }
  return kg;
}

}  // namespace

TEST(MakeFolds, TenEdgesFiveFolds) {
  const KnowledgeGraph kg = grid(5, 5, 10);
  const FoldPlan plan = make_folds(kg, RelationId{0}, 5, 1);
  ASSERT_EQ(plan.folds.size(), 5u);
  std::set<std::uint64_t> all;
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.size(), 2u);
    for (const Edge& e : f) EXPECT_TRUE(all.insert(e.key()).second);
  }
  EXPECT_EQ(all, keys(kg.edges(RelationId{0})));
}

TEST(MakeFolds, DeterministicForSeed) {
  const KnowledgeGraph kg = synth::random_kg(50, 1, 300, 2);
  const FoldPlan a = make_folds(kg, RelationId{0}, 5, 9);
  const FoldPlan b = make_folds(kg, RelationId{0}, 5, 9);
  const FoldPlan c = make_folds(kg, RelationId{0}, 5, 10);
  EXPECT_EQ(a.folds, b.folds);
  EXPECT_NE(a.folds, c.folds);
}

TEST(MakeFolds, HasIndicationSizedRelation) {
  const KnowledgeGraph kg = synth::random_kg(200, 1, 6704, 5);
  const FoldPlan plan = make_folds(kg, RelationId{0}, 5, 3);
  std::vector<std::size_t> sizes;
  for (const auto& f : plan.folds) sizes.push_back(f.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{1341, 1341, 1341, 1341, 1340}));
}

TEST(MakeFolds, SizesAreFloorOrCeilForManyShapes) {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.uniform(std::uint64_t{400});
    const std::size_t k = 2 + rng.uniform(std::min<std::uint64_t>(n - 1, 9));
    const KnowledgeGraph kg = synth::random_kg(60, 1, n, trial);
    const FoldPlan plan = make_folds(kg, RelationId{0}, k, trial);
    std::size_t total = 0;
    for (const auto& f : plan.folds) {
      EXPECT_TRUE(f.size() == n / k || f.size() == (n + k - 1) / k);
      total += f.size();
    }
    EXPECT_EQ(total, n);
  }
}

TEST(MakeFolds, IndependentOfInsertionOrder) {
  const KnowledgeGraph a = synth::random_kg(40, 1, 100, 8);
  std::stringstream buf;
  write_tsv(a, buf);
  std::vector<std::string> lines;
  for (std::string l; std::getline(buf, l);) lines.push_back(l);
  std::reverse(lines.begin(), lines.end());
  KnowledgeGraph b;
  for (const auto& l : lines) {
    const auto t1 = l.find('\t'), t2 = l.find('\t', t1 + 1);
    b.add_triple({Iri(l.substr(t1 + 1, t2 - t1 - 1)), Iri(l.substr(0, t1)), Iri(l.substr(t2 + 1))});
  }
  const FoldPlan pa = make_folds(a, RelationId{0}, 5, 4);
  const FoldPlan pb = make_folds(b, RelationId{0}, 5, 4);
  for (std::size_t f = 0; f < 5; ++f) {
    ASSERT_EQ(pa.folds[f].size(), pb.folds[f].size());
    for (std::size_t i = 0; i < pa.folds[f].size(); ++i) {
      EXPECT_EQ(a.entity_iri(pa.folds[f][i].subject), b.entity_iri(pb.folds[f][i].subject));
      EXPECT_EQ(a.entity_iri(pa.folds[f][i].object), b.entity_iri(pb.folds[f][i].object));
    }
  }
}

TEST(MakeFolds, RejectsTooFewEdges) {
  const KnowledgeGraph kg = grid(2, 2, 3);
  EXPECT_THROW(make_folds(kg, RelationId{0}, 5, 1), Error);
  EXPECT_THROW(make_folds(kg, RelationId{0}, 1, 1), Error);
}

TEST(SampleNegatives, CompleteBipartiteIsExhausted) {
  const KnowledgeGraph kg = grid(3, 3, 9);
  try {
    sample_negatives(kg, RelationId{0}, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Exhausted);
    EXPECT_NE(std::string(e.what()).find("pool of 0"), std::string::npos) << e.what();
  }
}

// Brute-force oracle: the pool is every domain x range pair minus (a, x).
TEST(SampleNegatives, ToyPoolIsEnumeratedExactly) {
  KnowledgeGraph kg;
  kg.declare_schema("http://r/rel", "D", "R");
  for (const char* d : {"http://e/a", "http://e/b"}) kg.set_entity_type(d, "D");
  for (const char* r : {"http://e/x", "http://e/y"}) kg.set_entity_type(r, "R");
  kg.add_triple({Iri("http://e/a"), Iri("http://r/rel"), Iri("http://e/x")});
  std::set<std::pair<std::string, std::string>> got;
  for (const Edge& e : sample_negatives(kg, RelationId{0}, 3, 42).pairs) {
    got.insert({kg.entity_iri(e.subject), kg.entity_iri(e.object)});
  }
  const std::set<std::pair<std::string, std::string>> want = {
      {"http://e/a", "http://e/y"}, {"http://e/b", "http://e/x"}, {"http://e/b", "http://e/y"}};
  EXPECT_EQ(got, want);
  EXPECT_THROW(sample_negatives(kg, RelationId{0}, 4, 42), Error);
}

TEST(SampleNegatives, ThousandNegativesAreTypedNonEdges) {
  synth::LatentFactorSpec spec;
  const KnowledgeGraph kg = synth::latent_factor_kg(spec);
  const RelationId rel = *kg.find_relation(spec.relation);
  const NegativeSet neg = sample_negatives(kg, rel, 1000, 6);
  ASSERT_EQ(neg.pairs.size(), 1000u);
  std::set<std::uint64_t> positives;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    for (const Edge& e : kg.edges(RelationId{r})) positives.insert(e.key());
  }
  for (const Edge& e : neg.pairs) {
    EXPECT_FALSE(positives.contains(e.key()));
    EXPECT_EQ(*kg.entity_type(e.subject), "Domain");
    EXPECT_EQ(*kg.entity_type(e.object), "Range");
  }
}

TEST(SampleNegatives, HonoursExclusionsInBothStrategies) {
  // Dense (enumeration) and sparse (rejection) candidate spaces.
  for (const auto& [nd, edges, count] : {std::tuple{6, 20, 8}, std::tuple{60, 100, 50}}) {
    const KnowledgeGraph kg = grid(nd, nd, edges);
    const NegativeSet first = sample_negatives(kg, RelationId{0}, count, 1);
    const NegativeSet second = sample_negatives(kg, RelationId{0}, count, 2, first.pairs);
    for (const Edge& e : second.pairs) EXPECT_FALSE(first.pairs.contains(e));
    EXPECT_EQ(second.pairs.size(), static_cast<std::size_t>(count));
  }
}

TEST(BuildSplit, CardinalitiesForTenPositives) {
  const KnowledgeGraph kg = grid(5, 5, 10);
  const FoldPlan plan = make_folds(kg, RelationId{0}, 5, 1);
  const EvaluationSplit s = build_split(kg, plan, 0, 7);
  EXPECT_EQ(s.train_pos.size(), 8u);
  EXPECT_EQ(s.test_pos.size(), 2u);
  EXPECT_EQ(s.train_neg.size(), 8u);
  EXPECT_EQ(s.test_neg.size(), 2u);
  EXPECT_TRUE(audit_leakage(kg, s, embedding_training_edges(kg, s)).clean());
  EXPECT_THROW(build_split(kg, plan, 5, 7), Error);
}

TEST(BuildSplit, TestFoldsPartitionPositivesAndAuditsClean) {
  const KnowledgeGraph kg = synth::random_kg(80, 3, 900, 4);
  const FoldPlan plan = make_folds(kg, RelationId{1}, 5, 2);
  std::set<std::uint64_t> seen;
  for (std::size_t f = 0; f < 5; ++f) {
    const EvaluationSplit s = build_split(kg, plan, f, derive_seed(3, std::to_string(f)));
    for (const Edge& e : s.test_pos) EXPECT_TRUE(seen.insert(e.key()).second);
    const EdgeSet training = embedding_training_edges(kg, s);
    EXPECT_EQ(training.size(), kg.edge_count() - s.test_pos.size());
    EXPECT_TRUE(audit_leakage(kg, s, training).clean());
  }
  EXPECT_EQ(seen, keys(kg.edges(RelationId{1})));
}

TEST(Audit, LeftOverTestEdgeIsTheOnlyViolation) {
  const KnowledgeGraph kg = grid(8, 8, 20);
  const FoldPlan plan = make_folds(kg, RelationId{0}, 5, 1);
  const EvaluationSplit s = build_split(kg, plan, 2, 3);
  EdgeSet training = embedding_training_edges(kg, s);
  const Edge leaked = *s.test_pos.begin();
  training.insert(leaked);
  const LeakageReport r = audit_leakage(kg, s, training);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, LeakageKind::TestEdgeInTraining);
  EXPECT_EQ(r.violations[0].edge, leaked);
  EXPECT_NE(describe(kg, r.violations[0]).find(kg.entity_iri(leaked.subject)), std::string::npos);
}

// Fault-injection oracle: every planted fault is reported, nothing else is.
TEST(Audit, RandomPlantedFaultsAreAllDetected) {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const KnowledgeGraph kg = synth::random_kg(70, 2, 500, 100 + trial);
    const FoldPlan plan = make_folds(kg, RelationId{0}, 5, trial);
    EvaluationSplit s = build_split(kg, plan, trial % 5, trial);
    EdgeSet training = embedding_training_edges(kg, s);
    const std::size_t j = rng.uniform(std::uint64_t{7});
    std::set<std::pair<int, std::uint64_t>> planted;
    while (planted.size() < j) {
      const int kind = static_cast<int>(rng.uniform(std::uint64_t{3}));
      if (kind == 0) {
        const Edge e = s.test_pos.edges()[rng.uniform(s.test_pos.size())];
        if (training.insert(e)) planted.insert({0, e.key()});
      } else if (kind == 1) {
        const Edge e = s.train_neg.edges()[rng.uniform(s.train_neg.size())];
        if (s.test_neg.insert(e)) planted.insert({1, e.key()});
      } else {
        const auto& other = kg.edges(RelationId{1});
        const Edge e = other.edges()[rng.uniform(other.size())];
        if (s.train_neg.insert(e)) planted.insert({2, e.key()});
      }
    }
    const LeakageReport r = audit_leakage(kg, s, training);
    std::set<std::pair<int, std::uint64_t>> found;
    for (const auto& v : r.violations) {
      const int kind = v.kind == LeakageKind::TestEdgeInTraining ? 0 : v.kind == LeakageKind::SetOverlap ? 1 : 2;
      found.insert({kind, v.edge.key()});
    }
    EXPECT_EQ(found, planted) << "trial " << trial;
    EXPECT_EQ(r.violations.size(), j);
    EXPECT_EQ(r.clean(), j == 0);
  }
}

TEST(SplitFile, RoundTrip) {
  const KnowledgeGraph kg = synth::random_kg(50, 2, 300, 6);
  const FoldPlan plan = make_folds(kg, RelationId{0}, 4, 1);
  const EvaluationSplit s = build_split(kg, plan, 3, 9);
  std::stringstream buf;
  write_split_tsv(kg, s, 4, 9, buf);
  const EvaluationSplit back = read_split_tsv(kg, buf);
  EXPECT_EQ(back.relation, s.relation);
  EXPECT_EQ(back.fold_index, 3u);
  EXPECT_EQ(keys(back.train_pos), keys(s.train_pos));
  EXPECT_EQ(keys(back.test_pos), keys(s.test_pos));
  EXPECT_EQ(keys(back.train_neg), keys(s.train_neg));
  EXPECT_EQ(keys(back.test_neg), keys(s.test_neg));

  std::istringstream bad("train_pos\thttp://kglp.example.org/rel/0\tnope\n");
  EXPECT_THROW(read_split_tsv(kg, bad), Error);
}
