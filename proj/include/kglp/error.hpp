#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kglp {

enum class Errc {
  // kg-core
  InvalidIri,
  AmbiguousPair,
  DanglingAnonymous,
  TypeConflict,
  SchemaOverlap,
  UnknownEntity,
  UnknownRelation,
  BadSnapshot,
  // rdf-ingest
  IoFailure,
  MalformedRow,
  BadPrefixMap,
  // split-sampler
  TooFewEdges,
  Exhausted,
  BadFoldIndex,
  // embed-trainer
  DimensionMismatch,
  EmptyGraph,
  NonFiniteLoss,
  BadEmbeddingFile,
  // link-model
  SingleClass,
  NonFinite,
  BadModelFile,
  // eval-metrics
  NoPositives,
  UnknownBaselineRelation,
  BadBaselineFile,
  // cli-pipeline
  InvalidConfig,
  AuditViolation,
};

std::string_view module_name(Errc code) noexcept;
std::string_view code_name(Errc code) noexcept;

// Every library failure is an Error carrying a module-prefixed code, so
// callers can both match on code() and print a self-describing message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace kglp
