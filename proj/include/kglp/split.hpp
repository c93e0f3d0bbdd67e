#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kglp/kg.hpp"

namespace kglp {

struct FoldPlan {
  RelationId relation;
  std::size_t k = 0;
  std::vector<std::vector<Edge>> folds;
  std::uint64_t seed = 0;
};

struct NegativeSet {
  RelationId relation;
  EdgeSet pairs;
  std::uint64_t seed = 0;
};

struct EvaluationSplit {
  RelationId relation;
  std::size_t fold_index = 0;
  EdgeSet train_pos;
  EdgeSet test_pos;
  EdgeSet train_neg;
  EdgeSet test_neg;
};

/// Shuffles the relation's edges (in canonical IRI order first, so the plan
/// does not depend on insertion order) and cuts them into k contiguous folds;
/// the first n mod k folds get one extra edge.
/// Throws TooFewEdges when k < 2 or the relation has fewer than k edges.
FoldPlan make_folds(const KnowledgeGraph& kg, RelationId relation, std::size_t k,
                    std::uint64_t seed);

/// Candidate subjects and objects for a relation's negatives. With a schema
/// these are all entities of the domain / range type; without one, the
/// distinct subjects / objects the relation already uses.
struct NegativePools {
  std::vector<EntityId> subjects;
  std::vector<EntityId> objects;
};
NegativePools negative_pools(const KnowledgeGraph& kg, RelationId relation);

/// Draws `count` distinct type-consistent pairs that are neither edges of the
/// relation in the full graph nor in `excluded`. Uniform rejection sampling,
/// or exhaustive enumeration when the candidate space is less than twice the
/// number of pairs it must avoid or produce. Throws Exhausted (with the pool
/// size) when fewer than `count` candidates exist.
NegativeSet sample_negatives(const KnowledgeGraph& kg, RelationId relation, std::size_t count,
                             std::uint64_t seed, const EdgeSet& excluded = {});

/// test_pos is fold `test_fold_index`, train_pos the rest; one negative per
/// positive on each side, with test negatives drawn disjoint from train
/// negatives.
EvaluationSplit build_split(const KnowledgeGraph& kg, const FoldPlan& plan,
                            std::size_t test_fold_index, std::uint64_t seed);

/// Edges an embedding may be trained on for this split: every edge of the
/// graph, labels dropped, minus the split's test positives.
EdgeSet embedding_training_edges(const KnowledgeGraph& kg, const EvaluationSplit& split);

enum class LeakageKind {
  TestEdgeInTraining,
  SetOverlap,
  NegativeIsPositive,
};

struct LeakageViolation {
  LeakageKind kind;
  Edge edge;
  std::string detail;
};

struct LeakageReport {
  std::vector<LeakageViolation> violations;
  bool clean() const noexcept { return violations.empty(); }
};

std::string describe(const KnowledgeGraph& kg, const LeakageViolation& v);

/// Flags test positives present in `training_edges`, any edge shared by two
/// of the four split sets, and any negative that is an edge of the split's
/// relation in the full graph.
LeakageReport audit_leakage(const KnowledgeGraph& kg, const EvaluationSplit& split,
                            const EdgeSet& training_edges);

// Split files: canonical TSV rows prefixed with a role column, preceded by
// `# relation=... k=... fold=... seed=...`.
void write_split_tsv(const KnowledgeGraph& kg, const EvaluationSplit& split, std::size_t k,
                     std::uint64_t seed, std::ostream& out);
/// Entities must already be in `kg`. Throws MalformedRow.
EvaluationSplit read_split_tsv(const KnowledgeGraph& kg, std::istream& in);

}  // namespace kglp
