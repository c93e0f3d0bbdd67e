#include "kglp/rdf.hpp"

#include <istream>

#include "json.hpp"
#include "kglp/error.hpp"

namespace kglp {

void PrefixMap::bind(std::string label, std::string ns) {
  if (ns.empty()) throw Error(Errc::BadPrefixMap, "empty namespace for prefix '" + label + "'");
  if (bindings_.contains(label)) {
    throw Error(Errc::BadPrefixMap, "prefix '" + label + "' bound twice");
  }
  bindings_.emplace(std::move(label), std::move(ns));
}

std::optional<std::string_view> PrefixMap::find(std::string_view label) const {
  if (auto it = bindings_.find(label); it != bindings_.end()) return it->second;
  return std::nullopt;
}

PrefixMap PrefixMap::from_json(std::istream& in) {
  PrefixMap map;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadPrefixMap, e.what());
  }
  if (!doc.is_object() || !doc.contains("prefixes") || !doc["prefixes"].is_object()) {
    throw Error(Errc::BadPrefixMap, "expected an object with a \"prefixes\" object");
  }
  for (const auto& [label, ns] : doc["prefixes"].items()) {
    if (!ns.is_string()) throw Error(Errc::BadPrefixMap, "namespace of '" + label + "' is not a string");
    map.bind(label, ns.get<std::string>());
  }
  return map;
}

void PrefixMap::bind_flag(std::string_view flag) {
  const auto eq = flag.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(Errc::BadPrefixMap, "expected LABEL=IRI, got '" + std::string(flag) + "'");
  }
  bind(std::string(flag.substr(0, eq)), std::string(flag.substr(eq + 1)));
}

namespace {

bool is_ws(char c) noexcept { return c == ' ' || c == '\t'; }

bool is_alnum(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_label_char(char c) noexcept { return is_alnum(c) || c == '_' || c == '-'; }

bool is_local_char(char c) noexcept {
  return is_alnum(c) || c == '_' || c == '-' || c == '.' || c == '/';
}

struct TermResult {
  std::string iri;
  ParseError error;
  bool ok() const noexcept { return error.column == 0; }
};

class LineScanner {
 public:
  LineScanner(std::string_view line, const PrefixMap& prefixes) : line_(line), prefixes_(prefixes) {}

  void skip_ws() {
    while (pos_ < line_.size() && is_ws(line_[pos_])) ++pos_;
  }
  bool at_end() const noexcept { return pos_ >= line_.size(); }
  char peek() const noexcept { return at_end() ? '\0' : line_[pos_]; }
  std::size_t column() const noexcept { return pos_ + 1; }
  void advance() noexcept { ++pos_; }
  std::string_view rest() const noexcept { return line_.substr(pos_); }

  TermResult term() {
    if (at_end()) return fail("expected IRI or prefixed name, found end of line");
    const char c = peek();
    if (c == '<') return full_iri();
    if (c == '"') return fail("literal objects are not supported");
    if (c == '_' && pos_ + 1 < line_.size() && line_[pos_ + 1] == ':') {
      return fail("blank nodes are not supported");
    }
    if (is_label_char(c) || c == ':') return prefixed_name();
    return fail(std::string("unexpected character '") + c + "'");
  }

  // A term must be followed by whitespace, the final dot, another IRI, or
  // the end of the line.
  bool at_term_boundary() const noexcept {
    const char c = peek();
    return at_end() || is_ws(c) || c == '.' || c == '<';
  }

 private:
  TermResult fail(std::string message) const { return {{}, {std::move(message), column()}}; }

  TermResult full_iri() {
    const std::size_t start = pos_;
    ++pos_;
    while (pos_ < line_.size() && line_[pos_] != '>') {
      const char c = line_[pos_];
      if (is_ws(c) || c == '<' || c == '"') break;
      ++pos_;
    }
    if (pos_ >= line_.size() || line_[pos_] != '>') {
      return {{}, {"unterminated IRI", start + 1}};
    }
    std::string iri(line_.substr(start + 1, pos_ - start - 1));
    ++pos_;
    if (iri.empty()) return {{}, {"empty IRI", start + 1}};
    if (!Iri::is_valid(iri)) {
      for (std::size_t i = 0; i < iri.size(); ++i) {
        if (!Iri::is_valid(std::string_view(&iri[i], 1))) {
          return {{}, {"invalid character in IRI", start + 2 + i}};
        }
      }
    }
    return {std::move(iri), {}};
  }

  TermResult prefixed_name() {
    const std::size_t start = pos_;
    while (pos_ < line_.size() && is_label_char(line_[pos_])) ++pos_;
    if (pos_ >= line_.size() || line_[pos_] != ':') {
      pos_ = start;
      return fail("expected IRI or prefixed name");
    }
    const std::string_view label = line_.substr(start, pos_ - start);
    const auto ns = prefixes_.find(label);
    if (!ns) return {{}, {"unknown prefix '" + std::string(label) + "'", start + 1}};
    ++pos_;
    const std::size_t local_start = pos_;
    while (pos_ < line_.size() && is_local_char(line_[pos_])) ++pos_;
    while (pos_ > local_start && line_[pos_ - 1] == '.') --pos_;
    std::string iri(*ns);
    iri.append(line_.substr(local_start, pos_ - local_start));
    if (!Iri::is_valid(iri)) return {{}, {"expanded IRI is invalid", start + 1}};
    return {std::move(iri), {}};
  }

  std::string_view line_;
  const PrefixMap& prefixes_;
  std::size_t pos_ = 0;
};

}  // namespace

ParseEvent parse_line(std::string_view line, const PrefixMap& prefixes, std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  ParseEvent event{line_number, Blank{}};
  LineScanner scan(line, prefixes);
  scan.skip_ws();
  if (scan.at_end()) return event;
  if (scan.peek() == '#') {
    scan.advance();
    event.payload = Comment{std::string(scan.rest())};
    return event;
  }

  std::string terms[3];
  for (auto& term : terms) {
    scan.skip_ws();
    TermResult r = scan.term();
    if (!r.ok()) {
      event.payload = std::move(r.error);
      return event;
    }
    if (!scan.at_term_boundary()) {
      event.payload = ParseError{std::string("unexpected character '") + scan.peek() + "'",
                                 scan.column()};
      return event;
    }
    term = std::move(r.iri);
  }
  scan.skip_ws();
  if (scan.peek() != '.') {
    event.payload = ParseError{"missing final dot", scan.column()};
    return event;
  }
  scan.advance();
  scan.skip_ws();
  if (!scan.at_end() && scan.peek() != '#') {
    event.payload = ParseError{"unexpected trailing characters", scan.column()};
    return event;
  }
  event.payload = Triple{Iri(std::move(terms[0])), Iri(std::move(terms[1])), Iri(std::move(terms[2]))};
  return event;
}

std::string serialize_triple(const Triple& t) {
  std::string out;
  out.reserve(t.subject.str().size() + t.predicate.str().size() + t.object.str().size() + 10);
  out += '<';
  out += t.subject.str();
  out += "> <";
  out += t.predicate.str();
  out += "> <";
  out += t.object.str();
  out += "> .";
  return out;
}

std::optional<ParseEvent> DocumentParser::next() {
  if (!std::getline(in_, line_)) {
    if (in_.bad()) {
      throw Error(Errc::IoFailure,
                  "read failed after " + std::to_string(summary_.lines) + " lines");
    }
    return std::nullopt;
  }
  ++summary_.lines;
  ParseEvent event = parse_line(line_, prefixes_, summary_.lines);
  std::visit(
      [this](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Triple>) ++summary_.triples;
        if constexpr (std::is_same_v<T, Comment>) ++summary_.comments;
        if constexpr (std::is_same_v<T, Blank>) ++summary_.blanks;
        if constexpr (std::is_same_v<T, ParseError>) ++summary_.errors;
      },
      event.payload);
  return event;
}

DocumentSummary parse_document(std::istream& in, const PrefixMap& prefixes,
                               const std::function<void(const ParseEvent&)>& sink) {
  DocumentParser parser(in, prefixes);
  while (auto event = parser.next()) {
    if (sink) sink(*event);
  }
  return parser.summary();
}

IngestResult ingest_triples(std::istream& in, const PrefixMap& prefixes, KnowledgeGraph& kg) {
  IngestResult result;
  result.summary = parse_document(in, prefixes, [&](const ParseEvent& event) {
    if (const Triple* t = event.triple()) {
      if (kg.add_triple(*t) == InsertOutcome::Inserted) {
        ++result.inserted;
      } else {
        ++result.duplicates;
      }
    } else if (event.error() && result.first_errors.size() < 20) {
      result.first_errors.push_back(event);
    }
  });
  return result;
}

TsvReadResult read_tsv_edges(std::istream& in, KnowledgeGraph& kg) {
  TsvReadResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (auto tab = rest.find('\t'); tab != std::string_view::npos; tab = rest.find('\t')) {
      fields.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 3) {
      throw Error(Errc::MalformedRow, "line " + std::to_string(line_number) +
                                          ": expected 3 tab-separated columns, found " +
                                          std::to_string(fields.size()));
    }
    for (const auto f : fields) {
      if (!Iri::is_valid(f)) {
        throw Error(Errc::MalformedRow, "line " + std::to_string(line_number) + ": invalid IRI '" +
                                            std::string(f) + "'");
      }
    }
    const RelationId r = kg.intern_relation(fields[0]);
    const EntityId s = kg.intern_entity(fields[1]);
    const EntityId o = kg.intern_entity(fields[2]);
    if (kg.add_edge(r, Edge{s, o}) == InsertOutcome::Inserted) {
      ++result.inserted;
    } else {
      ++result.duplicates;
      result.duplicate_lines.push_back(line_number);
    }
  }
  if (in.bad()) {
    throw Error(Errc::IoFailure, "read failed after " + std::to_string(line_number) + " lines");
  }
  return result;
}

void read_schema_json(std::istream& in, KnowledgeGraph& kg) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("schema file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("relations") || !doc["relations"].is_object()) {
    throw Error(Errc::InvalidConfig, "schema file: expected a \"relations\" object");
  }
  for (const auto& [rel, spec] : doc["relations"].items()) {
    if (!spec.is_object() || !spec.contains("domain") || !spec.contains("range") ||
        !spec["domain"].is_string() || !spec["range"].is_string()) {
      throw Error(Errc::InvalidConfig, "schema file: relation " + rel + " needs domain and range");
    }
    kg.declare_schema(rel, spec["domain"].get<std::string>(), spec["range"].get<std::string>());
  }
}

}  // namespace kglp
