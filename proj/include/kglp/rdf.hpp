#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kglp/kg.hpp"

namespace kglp {

/// Prefix label -> namespace. Expansion is plain concatenation.
class PrefixMap {
 public:
  /// Throws BadPrefixMap on a duplicate label or an empty namespace.
  void bind(std::string label, std::string ns);
  std::optional<std::string_view> find(std::string_view label) const;
  const std::map<std::string, std::string, std::less<>>& bindings() const noexcept {
    return bindings_;
  }
  bool empty() const noexcept { return bindings_.empty(); }

  /// `{ "prefixes": { "gene": "..." } }`
  static PrefixMap from_json(std::istream& in);
  /// Parses one `label=namespace` CLI binding into this map.
  void bind_flag(std::string_view flag);

 private:
  std::map<std::string, std::string, std::less<>> bindings_;
};

struct Comment {
  std::string text;
  friend bool operator==(const Comment&, const Comment&) = default;
};

struct Blank {
  friend bool operator==(const Blank&, const Blank&) = default;
};

struct ParseError {
  std::string message;
  std::size_t column = 0;  // 1-based
  friend bool operator==(const ParseError&, const ParseError&) = default;
};

struct ParseEvent {
  std::size_t line_number = 0;
  std::variant<Triple, Comment, Blank, ParseError> payload;

  const Triple* triple() const noexcept { return std::get_if<Triple>(&payload); }
  const ParseError* error() const noexcept { return std::get_if<ParseError>(&payload); }
};

/// Parses one physical line (no terminator; a trailing CR is ignored).
///
/// Accepted statements are `<s> <p> <o> .` and the prefixed-name form
/// `pfx:local pfx:local pfx:local .`, mixed freely. Local names take
/// alphanumerics and `_ - . /`, never ending in `.`. Literals, blank nodes and
/// anything else become a ParseError pointing at the offending column; this
/// function does not throw on bad input.
ParseEvent parse_line(std::string_view line, const PrefixMap& prefixes, std::size_t line_number = 1);

/// Canonical full-IRI N-Triples form, `<s> <p> <o> .`
std::string serialize_triple(const Triple& t);

struct DocumentSummary {
  std::size_t lines = 0;
  std::size_t triples = 0;
  std::size_t comments = 0;
  std::size_t blanks = 0;
  std::size_t errors = 0;
};

/// Pull parser over a line stream. Memory is bounded by the longest line.
class DocumentParser {
 public:
  DocumentParser(std::istream& in, const PrefixMap& prefixes) : in_(in), prefixes_(prefixes) {}

  /// Next event, or nullopt at end of input. Throws IoFailure (with the
  /// number of lines consumed) when the stream goes bad.
  std::optional<ParseEvent> next();
  const DocumentSummary& summary() const noexcept { return summary_; }

 private:
  std::istream& in_;
  const PrefixMap& prefixes_;
  std::string line_;
  DocumentSummary summary_;
};

DocumentSummary parse_document(std::istream& in, const PrefixMap& prefixes,
                               const std::function<void(const ParseEvent&)>& sink);

struct IngestResult {
  DocumentSummary summary;
  std::size_t inserted = 0;
  std::size_t duplicates = 0;
  std::vector<ParseEvent> first_errors;  // at most 20
};

/// Parses a document and adds every triple to `kg`.
IngestResult ingest_triples(std::istream& in, const PrefixMap& prefixes, KnowledgeGraph& kg);

struct TsvReadResult {
  std::size_t inserted = 0;
  std::size_t duplicates = 0;
  std::vector<std::size_t> duplicate_lines;
};

/// Reads `relation<TAB>subject<TAB>object` rows. Empty lines and lines
/// starting with `#` are skipped. Throws MalformedRow naming the line.
TsvReadResult read_tsv_edges(std::istream& in, KnowledgeGraph& kg);

/// Schema file: `{ "relations": { "<iri>": { "domain": "T1", "range": "T2" } } }`
void read_schema_json(std::istream& in, KnowledgeGraph& kg);

}  // namespace kglp
