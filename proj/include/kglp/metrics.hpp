#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kglp/embed.hpp"
#include "kglp/kg.hpp"
#include "kglp/link_model.hpp"
#include "kglp/split.hpp"

namespace kglp {

struct ScoredExample {
  double score = 0.0;
  int label = 0;
};

/// 2PR/(P+R) with predictions `score >= threshold`; 0 when P+R = 0.
/// Throws NoPositives.
double f_measure(std::span<const ScoredExample> examples, double threshold = 0.5);

/// Mann-Whitney AUC from average ranks, ties counted as half. O(n log n).
/// Throws SingleClass.
double roc_auc(std::span<const ScoredExample> examples);

struct MetricRow {
  std::string relation;
  std::size_t dim = 0;
  std::size_t fold = 0;
  double f_measure = 0.0;
  double roc_auc = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
MeanStd mean_std(std::span<const double> values);

struct BaselineEntry {
  double f_measure = 0.0;
  double roc_auc = 0.0;
};

/// Published per-relation scores that measured results are compared to.
class BaselineTable {
 public:
  /// TSV rows `relation<TAB>f_measure<TAB>roc_auc`; `#` lines are comments.
  static BaselineTable load(std::istream& in);
  static BaselineTable load_file(const std::string& path);

  void set(std::string relation, BaselineEntry entry) { entries_[std::move(relation)] = entry; }
  const BaselineEntry* find(const std::string& relation) const;
  const std::map<std::string, BaselineEntry>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, BaselineEntry> entries_;
};

struct DeltaRow {
  std::string relation;
  std::size_t dim = 0;
  double f_measure = 0.0;  // fold mean
  double roc_auc = 0.0;
  double delta_f = 0.0;
  double delta_auc = 0.0;
};

/// Averages rows per (relation, dim) and subtracts the baseline. Sorted by
/// relation then dim. Throws UnknownBaselineRelation.
std::vector<DeltaRow> delta_report(std::span<const MetricRow> measured, const BaselineTable& baseline);

/// Signed, three decimals: "+0.279", "-0.020", "+0.000".
std::string format_delta(double delta);

/// Relation rows against dimension columns, F-measure block then ROC AUC
/// block.
std::string render_delta_table(std::span<const DeltaRow> rows);

/// `relation,dim,fold,f_measure,roc_auc` with six decimals.
void write_metrics_csv(std::span<const MetricRow> rows, std::ostream& out);
std::vector<MetricRow> read_metrics_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Cross-validation

/// Everything a classifier sees for one fold.
struct FoldContext {
  const KnowledgeGraph& kg;
  const EvaluationSplit& split;
  const EmbeddingMatrix& embeddings;
  std::uint64_t seed;
};

/// Trains on the split's train sets and scores test_pos (label 1) and
/// test_neg (label 0).
using FoldScorer = std::function<std::vector<ScoredExample>(const FoldContext&)>;

enum class ClassifierKind { LogReg, Mlp };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::LogReg;
  LogRegConfig logreg;
  MlpConfig mlp;
  LinkOperator op = LinkOperator::Concat;
};

/// Builds the feature matrix for a set of pairs.
FeatureMatrix pair_features(const EmbeddingMatrix& embeddings, std::span<const Edge> pairs,
                            LinkOperator op = LinkOperator::Concat);

/// The standard scorer: featurize, train the classifier, predict.
FoldScorer classifier_scorer(const ClassifierSpec& spec);

struct CrossValidationOptions {
  std::size_t k = 5;
  TrainConfig embed;  // dim and seed are set per fold
  FoldScorer scorer;
  /// Train one embedding on the whole graph and reuse it for every fold.
  /// Test edges are then seen during embedding training; the leakage audit
  /// skips that check and reports are marked non-faithful.
  bool shared_embeddings = false;
  std::string relation_name;  // label for MetricRow; relation IRI if empty
};

struct CrossValidationResult {
  std::vector<MetricRow> rows;
  MeanStd f_measure;
  MeanStd roc_auc;
};

/// Per-fold seeds, all derived from the relation-level seed.
struct FoldSeeds {
  std::uint64_t split;
  std::uint64_t embed;
  std::uint64_t classifier;
};
std::uint64_t fold_plan_seed(std::uint64_t seed);
FoldSeeds fold_seeds(std::uint64_t seed, std::size_t dim, std::size_t fold);

/// One fold: split, leakage audit (throws AuditViolation), embedding,
/// classifier, metrics. `shared` replaces per-fold embedding training.
MetricRow evaluate_fold(const KnowledgeGraph& kg, const FoldPlan& plan, std::size_t fold,
                        std::size_t dim, std::uint64_t seed, const CrossValidationOptions& options,
                        const EmbeddingMatrix* shared = nullptr,
                        const EvaluationSplit* prebuilt_split = nullptr);

CrossValidationResult cross_validate(const KnowledgeGraph& kg, RelationId relation, std::size_t dim,
                                     std::uint64_t seed, const CrossValidationOptions& options);

}  // namespace kglp
