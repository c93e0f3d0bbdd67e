#include "kglp/error.hpp"

namespace kglp {

std::string_view module_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidIri:
    case Errc::AmbiguousPair:
    case Errc::DanglingAnonymous:
    case Errc::TypeConflict:
    case Errc::SchemaOverlap:
    case Errc::UnknownEntity:
    case Errc::UnknownRelation:
    case Errc::BadSnapshot:
      return "kg-core";
    case Errc::IoFailure:
    case Errc::MalformedRow:
    case Errc::BadPrefixMap:
      return "rdf-ingest";
    case Errc::TooFewEdges:
    case Errc::Exhausted:
    case Errc::BadFoldIndex:
      return "split-sampler";
    case Errc::DimensionMismatch:
    case Errc::EmptyGraph:
    case Errc::NonFiniteLoss:
    case Errc::BadEmbeddingFile:
      return "embed-trainer";
    case Errc::SingleClass:
    case Errc::NonFinite:
    case Errc::BadModelFile:
      return "link-model";
    case Errc::NoPositives:
    case Errc::UnknownBaselineRelation:
    case Errc::BadBaselineFile:
      return "eval-metrics";
    case Errc::InvalidConfig:
    case Errc::AuditViolation:
      return "cli-pipeline";
  }
  return "unknown";
}

std::string_view code_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidIri: return "InvalidIri";
    case Errc::AmbiguousPair: return "AmbiguousPair";
    case Errc::DanglingAnonymous: return "DanglingAnonymous";
    case Errc::TypeConflict: return "TypeConflict";
    case Errc::SchemaOverlap: return "SchemaOverlap";
    case Errc::UnknownEntity: return "UnknownEntity";
    case Errc::UnknownRelation: return "UnknownRelation";
    case Errc::BadSnapshot: return "BadSnapshot";
    case Errc::IoFailure: return "IoFailure";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::BadPrefixMap: return "BadPrefixMap";
    case Errc::TooFewEdges: return "TooFewEdges";
    case Errc::Exhausted: return "Exhausted";
    case Errc::BadFoldIndex: return "BadFoldIndex";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::BadEmbeddingFile: return "BadEmbeddingFile";
    case Errc::SingleClass: return "SingleClass";
    case Errc::NonFinite: return "NonFinite";
    case Errc::BadModelFile: return "BadModelFile";
    case Errc::NoPositives: return "NoPositives";
    case Errc::UnknownBaselineRelation: return "UnknownRelation";
    case Errc::BadBaselineFile: return "BadBaselineFile";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::AuditViolation: return "AuditViolation";
  }
  return "Unknown";
}

namespace {

std::string format_error(Errc code, const std::string& message) {
  std::string out;
  out += module_name(code);
  out += ": ";
  out += code_name(code);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(format_error(code, message)), code_(code), detail_(message) {}

}  // namespace kglp
