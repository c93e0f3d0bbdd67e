#include "kglp/kg.hpp"

#include <algorithm>
#include <regex>

#include "kglp/error.hpp"

namespace kglp {

namespace {

bool is_forbidden(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == '<' || c == '>' || c == '"';
}

}  // namespace

Iri::Iri(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) {
    throw Error(Errc::InvalidIri, "invalid IRI '" + value_ + "'");
  }
}

bool Iri::is_valid(std::string_view value) noexcept {
  return !value.empty() && std::none_of(value.begin(), value.end(), is_forbidden);
}

EdgeSet::EdgeSet(std::span<const Edge> edges) {
  edges_.reserve(edges.size());
  for (const Edge& e : edges) insert(e);
}

bool EdgeSet::insert(Edge e) {
  if (!index_.insert(e.key()).second) return false;
  edges_.push_back(e);
  return true;
}

EntityId KnowledgeGraph::intern_entity(std::string_view iri) {
  std::string key(iri);
  if (auto it = entity_index_.find(key); it != entity_index_.end()) {
    return EntityId{it->second};
  }
  if (!Iri::is_valid(iri)) throw Error(Errc::InvalidIri, "invalid IRI '" + key + "'");
  const auto id = static_cast<std::uint32_t>(entity_iris_.size());
  entity_index_.emplace(key, id);
  entity_iris_.push_back(std::move(key));
  entity_type_.push_back(-1);
  return EntityId{id};
}

RelationId KnowledgeGraph::intern_relation(std::string_view iri) {
  std::string key(iri);
  if (auto it = relation_index_.find(key); it != relation_index_.end()) {
    return RelationId{it->second};
  }
  if (!Iri::is_valid(iri)) throw Error(Errc::InvalidIri, "invalid IRI '" + key + "'");
  const auto id = static_cast<std::uint32_t>(relation_iris_.size());
  relation_index_.emplace(key, id);
  relation_iris_.push_back(std::move(key));
  edges_.emplace_back();
  schema_of_relation_.push_back(-1);
  return RelationId{id};
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view iri) const {
  if (auto it = entity_index_.find(std::string(iri)); it != entity_index_.end()) {
    return EntityId{it->second};
  }
  return std::nullopt;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view iri) const {
  if (auto it = relation_index_.find(std::string(iri)); it != relation_index_.end()) {
    return RelationId{it->second};
  }
  return std::nullopt;
}

const std::string& KnowledgeGraph::entity_iri(EntityId id) const {
  if (id.value >= entity_iris_.size()) {
    throw Error(Errc::UnknownEntity, "entity id " + std::to_string(id.value));
  }
  return entity_iris_[id.value];
}

const std::string& KnowledgeGraph::relation_iri(RelationId id) const {
  if (id.value >= relation_iris_.size()) {
    throw Error(Errc::UnknownRelation, "relation id " + std::to_string(id.value));
  }
  return relation_iris_[id.value];
}

InsertOutcome KnowledgeGraph::add_triple(const Triple& t) {
  const RelationId r = intern_relation(t.predicate.str());
  const EntityId s = intern_entity(t.subject.str());
  const EntityId o = intern_entity(t.object.str());
  return add_edge(r, Edge{s, o});
}

InsertOutcome KnowledgeGraph::add_edge(RelationId relation, Edge edge) {
  if (relation.value >= edges_.size()) {
    throw Error(Errc::UnknownRelation, "relation id " + std::to_string(relation.value));
  }
  if (edge.subject.value >= entity_iris_.size() || edge.object.value >= entity_iris_.size()) {
    throw Error(Errc::UnknownEntity, "edge references an unregistered entity");
  }
  EdgeSet& set = edges_[relation.value];
  if (set.contains(edge)) return InsertOutcome::Duplicate;

  const auto owner = pair_owner_.find(edge.key());
  if (owner != pair_owner_.end() && owner->second != relation && mode_ == AmbiguityMode::Strict) {
    throw Error(Errc::AmbiguousPair, "(" + entity_iris_[edge.subject.value] + ", " +
                                         entity_iris_[edge.object.value] + ") already under " +
                                         relation_iris_[owner->second.value] + ", cannot add under " +
                                         relation_iris_[relation.value]);
  }
  if (const int s = schema_of_relation_[relation.value]; s >= 0) {
    // Check both ends before typing either, so a conflict leaves no trace.
    check_type(edge.subject, schemas_[s].domain_type);
    check_type(edge.object, schemas_[s].range_type);
    assign_type(edge.subject, schemas_[s].domain_type);
    assign_type(edge.object, schemas_[s].range_type);
  }
  if (owner == pair_owner_.end()) pair_owner_.emplace(edge.key(), relation);
  set.insert(edge);
  return InsertOutcome::Inserted;
}

const EdgeSet& KnowledgeGraph::edges(RelationId relation) const {
  if (relation.value >= edges_.size()) {
    throw Error(Errc::UnknownRelation, "relation id " + std::to_string(relation.value));
  }
  return edges_[relation.value];
}

std::optional<RelationId> KnowledgeGraph::pair_owner(Edge edge) const {
  if (auto it = pair_owner_.find(edge.key()); it != pair_owner_.end()) return it->second;
  return std::nullopt;
}

std::size_t KnowledgeGraph::edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& set : edges_) n += set.size();
  return n;
}

void KnowledgeGraph::declare_schema(std::string_view relation_iri, std::string domain_type,
                                    std::string range_type) {
  const RelationId r = intern_relation(relation_iri);
  for (const auto& s : schemas_) {
    if (s.relation != r && s.domain_type == domain_type && s.range_type == range_type) {
      throw Error(Errc::SchemaOverlap, "(" + domain_type + ", " + range_type +
                                           ") already used by " + relation_iris_[s.relation.value]);
    }
  }
  if (const int existing = schema_of_relation_[r.value]; existing >= 0) {
    const auto& s = schemas_[existing];
    if (s.domain_type != domain_type || s.range_type != range_type) {
      throw Error(Errc::TypeConflict, "schema of " + std::string(relation_iri) + " redeclared");
    }
    return;
  }
  for (const Edge& e : edges_[r.value]) {
    check_type(e.subject, domain_type);
    check_type(e.object, range_type);
  }
  for (const Edge& e : edges_[r.value]) {
    assign_type(e.subject, domain_type);
    assign_type(e.object, range_type);
  }
  schema_of_relation_[r.value] = static_cast<std::int32_t>(schemas_.size());
  schemas_.push_back({r, std::move(domain_type), std::move(range_type)});
}

const RelationSchema* KnowledgeGraph::schema(RelationId relation) const noexcept {
  if (relation.value >= schema_of_relation_.size()) return nullptr;
  const int s = schema_of_relation_[relation.value];
  return s >= 0 ? &schemas_[s] : nullptr;
}

EntityId KnowledgeGraph::set_entity_type(std::string_view iri, std::string_view type) {
  const EntityId id = intern_entity(iri);
  assign_type(id, type);
  return id;
}

std::optional<std::string_view> KnowledgeGraph::entity_type(EntityId id) const {
  if (id.value >= entity_type_.size() || entity_type_[id.value] < 0) return std::nullopt;
  return type_names_[entity_type_[id.value]];
}

std::vector<EntityId> KnowledgeGraph::entities_of_type(std::string_view type) const {
  std::vector<EntityId> out;
  const auto it = std::find(type_names_.begin(), type_names_.end(), type);
  if (it == type_names_.end()) return out;
  const auto t = static_cast<std::int32_t>(it - type_names_.begin());
  for (std::uint32_t i = 0; i < entity_type_.size(); ++i) {
    if (entity_type_[i] == t) out.push_back(EntityId{i});
  }
  return out;
}

void KnowledgeGraph::check_type(EntityId id, std::string_view type) const {
  const std::int32_t current = entity_type_[id.value];
  if (current >= 0 && type_names_[current] != type) {
    throw Error(Errc::TypeConflict, entity_iris_[id.value] + " is " + type_names_[current] +
                                        ", cannot also be " + std::string(type));
  }
}

void KnowledgeGraph::assign_type(EntityId id, std::string_view type) {
  check_type(id, type);
  auto it = std::find(type_names_.begin(), type_names_.end(), type);
  if (it == type_names_.end()) {
    type_names_.emplace_back(type);
    it = type_names_.end() - 1;
  }
  const auto t = static_cast<std::int32_t>(it - type_names_.begin());
  entity_type_[id.value] = t;
}

namespace {

std::vector<bool> find_anonymous(const KnowledgeGraph& kg, const AnonymousMatcher& matcher,
                                 std::optional<RelationId> type_rel) {
  std::vector<bool> anonymous(kg.entity_count(), false);
  if (matcher.mode == AnonymousMatcher::Mode::Pattern) {
    const std::regex re(matcher.pattern, std::regex::ECMAScript | std::regex::optimize);
    for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
      anonymous[i] = std::regex_search(kg.entity_iri(EntityId{i}), re);
    }
    return anonymous;
  }

  // Structural: exactly one incoming non-type edge, exactly one outgoing type
  // edge and nothing else.
  struct Degree {
    std::uint32_t in_other = 0, out_type = 0, out_other = 0, in_type = 0;
  };
  std::vector<Degree> deg(kg.entity_count());
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    const bool is_type = type_rel && type_rel->value == r;
    for (const Edge& e : kg.edges(RelationId{r})) {
      if (is_type) {
        ++deg[e.subject.value].out_type;
        ++deg[e.object.value].in_type;
      } else {
        ++deg[e.subject.value].out_other;
        ++deg[e.object.value].in_other;
      }
    }
  }
  for (std::size_t i = 0; i < deg.size(); ++i) {
    const Degree& d = deg[i];
    anonymous[i] = d.in_other == 1 && d.out_type == 1 && d.out_other == 0 && d.in_type == 0;
  }
  return anonymous;
}

}  // namespace

KnowledgeGraph collapse_anonymous_instances(const KnowledgeGraph& kg,
                                            const AnonymousMatcher& matcher) {
  const auto type_rel = kg.find_relation(matcher.type_predicate);
  const std::vector<bool> anonymous = find_anonymous(kg, matcher, type_rel);

  constexpr std::uint32_t kNone = ~std::uint32_t{0};
  std::vector<std::uint32_t> type_count(kg.entity_count(), 0);
  std::vector<std::uint32_t> class_of(kg.entity_count(), kNone);
  if (type_rel) {
    for (const Edge& e : kg.edges(*type_rel)) {
      if (!anonymous[e.subject.value]) continue;
      ++type_count[e.subject.value];
      class_of[e.subject.value] = e.object.value;
    }
  }
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
    if (anonymous[i] && type_count[i] != 1) {
      throw Error(Errc::DanglingAnonymous, kg.entity_iri(EntityId{i}) + " has " +
                                               std::to_string(type_count[i]) + " type edges");
    }
    if (anonymous[i] && anonymous[class_of[i]]) {
      throw Error(Errc::DanglingAnonymous,
                  kg.entity_iri(EntityId{i}) + " is typed by another anonymous node");
    }
  }

  KnowledgeGraph out(kg.mode());
  // Dictionaries first, in original order, so surviving ids keep their
  // relative order.
  std::vector<EntityId> remap(kg.entity_count());
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
    if (anonymous[i]) continue;
    const EntityId id{i};
    remap[i] = out.intern_entity(kg.entity_iri(id));
    if (auto t = kg.entity_type(id)) out.set_entity_type(kg.entity_iri(id), *t);
  }
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
    if (anonymous[i]) remap[i] = remap[class_of[i]];
  }
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    out.intern_relation(kg.relation_iri(RelationId{r}));
  }
  for (const auto& s : kg.schemas()) {
    out.declare_schema(kg.relation_iri(s.relation), s.domain_type, s.range_type);
  }
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    const bool is_type = type_rel && type_rel->value == r;
    for (const Edge& e : kg.edges(RelationId{r})) {
      if (is_type && anonymous[e.subject.value]) continue;
      out.add_edge(RelationId{r}, Edge{remap[e.subject.value], remap[e.object.value]});
    }
  }
  return out;
}

std::map<std::string, std::size_t> relation_stats(const KnowledgeGraph& kg) {
  std::map<std::string, std::size_t> stats;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    const std::size_t n = kg.edges(RelationId{r}).size();
    if (n > 0) stats[kg.relation_iri(RelationId{r})] = n;
  }
  return stats;
}

std::vector<FlatteningViolation> verify_flattening_safety(const KnowledgeGraph& kg) {
  std::unordered_map<std::uint64_t, std::vector<RelationId>> owners;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    for (const Edge& e : kg.edges(RelationId{r})) owners[e.key()].push_back(RelationId{r});
  }
  std::vector<FlatteningViolation> out;
  for (auto& [key, rels] : owners) {
    if (rels.size() < 2) continue;
    const Edge e = Edge::from_key(key);
    out.push_back({e.subject, std::move(rels), e.object});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return Edge{a.subject, a.object} < Edge{b.subject, b.object};
  });
  return out;
}

EdgeSet flattened_edges(const KnowledgeGraph& kg, std::span<const RelationId> skip) {
  EdgeSet out;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    if (std::find(skip.begin(), skip.end(), RelationId{r}) != skip.end()) continue;
    for (const Edge& e : kg.edges(RelationId{r})) out.insert(e);
  }
  return out;
}

}  // namespace kglp
