#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kglp {

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

struct EntityId {
  std::uint32_t value = 0;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct RelationId {
  std::uint32_t value = 0;
  friend auto operator<=>(const RelationId&, const RelationId&) = default;
};

/// An ordered (subject, object) pair with the relation label dropped.
struct Edge {
  EntityId subject;
  EntityId object;

  std::uint64_t key() const noexcept {
    return (std::uint64_t{subject.value} << 32) | object.value;
  }
  static Edge from_key(std::uint64_t key) noexcept {
    return {EntityId{static_cast<std::uint32_t>(key >> 32)},
            EntityId{static_cast<std::uint32_t>(key & 0xffffffffULL)}};
  }
  Edge reversed() const noexcept { return {object, subject}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Absolute IRI, stored expanded and without angle brackets. Whitespace and
/// the delimiters `<`, `>`, `"` are rejected.
class Iri {
 public:
  explicit Iri(std::string value);

  static bool is_valid(std::string_view value) noexcept;

  const std::string& str() const noexcept { return value_; }
  friend bool operator==(const Iri&, const Iri&) = default;
  friend auto operator<=>(const Iri&, const Iri&) = default;

 private:
  std::string value_;
};

struct Triple {
  Iri subject;
  Iri predicate;
  Iri object;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Insertion-ordered set of edges with O(1) membership.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(std::span<const Edge> edges);

  /// Returns false when the edge was already present.
  bool insert(Edge e);
  bool contains(Edge e) const { return index_.contains(e.key()); }
  std::size_t size() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  auto begin() const noexcept { return edges_.begin(); }
  auto end() const noexcept { return edges_.end(); }

 private:
  std::vector<Edge> edges_;
  std::unordered_set<std::uint64_t> index_;
};

enum class InsertOutcome { Inserted, Duplicate };

enum class AmbiguityMode { Strict, Lenient };

struct RelationSchema {
  RelationId relation;
  std::string domain_type;
  std::string range_type;
};

/// Ordered pair that occurs under more than one relation.
struct FlatteningViolation {
  EntityId subject;
  std::vector<RelationId> relations;
  EntityId object;
};

/// Typed knowledge graph: entity and relation dictionaries plus one edge set
/// per relation.
///
/// Strict mode (default) rejects an ordered pair that is already asserted
/// under a different relation, which is the condition for dropping relation
/// labels without merging distinct facts. Lenient mode stores such pairs and
/// leaves them to verify_flattening_safety().
///
/// When a relation has a schema, inserting an edge types its subject with the
/// domain type and its object with the range type; a clash with an existing
/// type is a TypeConflict.
class KnowledgeGraph {
 public:
  explicit KnowledgeGraph(AmbiguityMode mode = AmbiguityMode::Strict) : mode_(mode) {}

  AmbiguityMode mode() const noexcept { return mode_; }

  EntityId intern_entity(std::string_view iri);
  RelationId intern_relation(std::string_view iri);
  std::optional<EntityId> find_entity(std::string_view iri) const;
  std::optional<RelationId> find_relation(std::string_view iri) const;
  const std::string& entity_iri(EntityId id) const;
  const std::string& relation_iri(RelationId id) const;
  std::size_t entity_count() const noexcept { return entity_iris_.size(); }
  std::size_t relation_count() const noexcept { return relation_iris_.size(); }

  InsertOutcome add_triple(const Triple& t);
  InsertOutcome add_edge(RelationId relation, Edge edge);

  const EdgeSet& edges(RelationId relation) const;
  /// Whether the ordered pair is asserted under any relation.
  bool contains_pair(Edge edge) const { return pair_owner_.contains(edge.key()); }
  /// First relation that asserted the pair.
  std::optional<RelationId> pair_owner(Edge edge) const;
  /// Total number of (relation, edge) assertions.
  std::size_t edge_count() const noexcept;

  /// Registers a schema; throws SchemaOverlap when another relation already
  /// uses the same (domain, range) pair, TypeConflict when existing edges
  /// disagree with it.
  void declare_schema(std::string_view relation_iri, std::string domain_type,
                      std::string range_type);
  const RelationSchema* schema(RelationId relation) const noexcept;
  std::span<const RelationSchema> schemas() const noexcept { return schemas_; }

  /// Registers the entity if needed and assigns an explicit type.
  EntityId set_entity_type(std::string_view iri, std::string_view type);
  std::optional<std::string_view> entity_type(EntityId id) const;
  /// Entities of the given type, ascending by id.
  std::vector<EntityId> entities_of_type(std::string_view type) const;

 private:
  void check_type(EntityId id, std::string_view type) const;
  void assign_type(EntityId id, std::string_view type);

  AmbiguityMode mode_;
  std::vector<std::string> entity_iris_;
  std::unordered_map<std::string, std::uint32_t> entity_index_;
  std::vector<std::string> relation_iris_;
  std::unordered_map<std::string, std::uint32_t> relation_index_;
  std::vector<EdgeSet> edges_;
  // Relation that first asserted each ordered pair.
  std::unordered_map<std::uint64_t, RelationId> pair_owner_;
  std::vector<std::string> type_names_;
  std::vector<std::int32_t> entity_type_;  // index into type_names_ or -1
  std::vector<RelationSchema> schemas_;
  std::vector<std::int32_t> schema_of_relation_;  // index into schemas_ or -1
};

/// How anonymous (reifying) individuals are recognized.
struct AnonymousMatcher {
  enum class Mode { Pattern, Structural };
  Mode mode = Mode::Pattern;
  /// ECMAScript regex searched in the entity IRI.
  std::string pattern = "instance_[0-9]+$";
  std::string type_predicate = std::string(kRdfType);

  bool operator==(const AnonymousMatcher&) const = default;
};

/// Rewrites every `(s, r, b), (b, type, c)` with anonymous `b` into
/// `(s, r, c)` and drops the typing edges of anonymous nodes. The result is a
/// fresh graph whose dictionary omits the anonymous nodes; the remaining
/// entities and relations keep their relative order.
/// Throws DanglingAnonymous when an anonymous node does not have exactly one
/// type edge.
KnowledgeGraph collapse_anonymous_instances(const KnowledgeGraph& kg,
                                            const AnonymousMatcher& matcher = {});

/// Edge count per relation IRI, omitting relations with no edges.
std::map<std::string, std::size_t> relation_stats(const KnowledgeGraph& kg);

std::vector<FlatteningViolation> verify_flattening_safety(const KnowledgeGraph& kg);

/// Union of all relations' edges with labels dropped, optionally skipping
/// given relations.
EdgeSet flattened_edges(const KnowledgeGraph& kg, std::span<const RelationId> skip = {});

// Serialization (kg_io.cpp). Formats are described in docs/formats.md.

/// `relation<TAB>subject<TAB>object\n`, sorted bytewise by the three columns.
void write_tsv(const KnowledgeGraph& kg, std::ostream& out);
void write_snapshot(const KnowledgeGraph& kg, std::ostream& out);
KnowledgeGraph read_snapshot(std::istream& in);

}  // namespace kglp

template <>
struct std::hash<kglp::EntityId> {
  std::size_t operator()(kglp::EntityId id) const noexcept { return id.value; }
};
template <>
struct std::hash<kglp::RelationId> {
  std::size_t operator()(kglp::RelationId id) const noexcept { return id.value; }
};
