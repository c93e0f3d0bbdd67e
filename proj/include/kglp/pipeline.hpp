#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kglp/embed.hpp"
#include "kglp/error.hpp"
#include "kglp/kg.hpp"
#include "kglp/metrics.hpp"
#include "kglp/rdf.hpp"

namespace kglp {

/// Where the graph comes from. Exactly one of `triples` / `tsv` / `snapshot`.
struct InputSpec {
  std::string triples;
  std::string tsv;
  std::string snapshot;
  std::string prefixes;                   // JSON prefix file
  std::vector<std::string> prefix_flags;  // "label=iri"
  std::string schema;                     // JSON schema file
  bool strict = true;
};

/// Reads the graph described by `input`. Parse errors in a triples file are
/// fatal (MalformedRow naming the first one).
KnowledgeGraph load_graph(const InputSpec& input);

/// Accepts a full relation IRI or a unique local name (text after the last
/// '/' or '#'). Throws UnknownRelation.
RelationId resolve_relation(const KnowledgeGraph& kg, const std::string& name);

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Seed for everything the pipeline does with one relation; fold plans,
/// splits, embeddings and classifiers derive from it.
std::uint64_t relation_seed(std::uint64_t master, std::string_view relation_iri);

struct PipelineConfig {
  InputSpec input;
  std::string splits_dir;  // pre-built split files used instead of sampling
  bool flatten = true;
  AnonymousMatcher matcher;

  std::vector<std::string> relations;  // empty: every relation with edges
  std::vector<std::size_t> dims = {5, 10, 20, 50};
  std::size_t folds = 5;
  /// Unset: KGLP_SEED from the environment, else kDefaultSeed.
  std::optional<std::uint64_t> seed;

  TrainConfig embed;
  ClassifierKind classifier = ClassifierKind::LogReg;
  LogRegConfig logreg;
  MlpConfig mlp;
  LinkOperator op = LinkOperator::Concat;

  std::size_t threads = 1;  // worker pool size over (relation, dim, fold)
  bool shared_embeddings = false;
  std::string out = "kglp-out";
  std::string baseline;  // optional baseline TSV for delta reporting
};

/// Fields missing from the JSON keep their defaults; unknown keys are rejected.
/// Relative paths are resolved against `base_dir`.
PipelineConfig config_from_json(const std::string& text, const std::string& base_dir = "");
std::string config_to_json(const PipelineConfig& cfg);

/// Throws InvalidConfig naming the offending field.
void validate_config(const PipelineConfig& cfg);

/// cfg.seed, else KGLP_SEED, else kDefaultSeed. A malformed KGLP_SEED is an
/// InvalidConfig error.
std::uint64_t effective_seed(const PipelineConfig& cfg);

/// 0 ok, 2 configuration, 3 data, 4 leakage audit.
int exit_code_for(Errc code) noexcept;

struct PipelineResult {
  std::vector<MetricRow> rows;  // sorted by relation, dim, fold
  std::vector<DeltaRow> deltas;
  std::string config_hash;
};

/// ingest -> flatten -> split -> evaluate -> report, writing into cfg.out:
/// graph.tsv, splits/*.tsv, folds.csv, summary.json, effective-config.json
/// and manifest.json. Throws Error; callers map it through exit_code_for.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Stage records as written to manifest.json.
struct StageRecord {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

/// Every stage input must be an external file or an output of an earlier
/// stage. Returns the first offending input, if any.
std::optional<std::string> check_stage_order(const std::vector<StageRecord>& stages);

}  // namespace kglp
