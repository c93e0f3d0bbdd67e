#include <algorithm>
#include <istream>
#include <ostream>
#include <tuple>

#include "binary_io.hpp"
#include "kglp/error.hpp"
#include "kglp/kg.hpp"

namespace kglp {

namespace {

constexpr char kSnapshotMagic[8] = {'K', 'G', 'L', 'P', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

void write_tsv(const KnowledgeGraph& kg, std::ostream& out) {
  using Row = std::tuple<const std::string*, const std::string*, const std::string*>;
  std::vector<Row> rows;
  rows.reserve(kg.edge_count());
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    const std::string& rel = kg.relation_iri(RelationId{r});
    for (const Edge& e : kg.edges(RelationId{r})) {
      rows.emplace_back(&rel, &kg.entity_iri(e.subject), &kg.entity_iri(e.object));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(*std::get<0>(a), *std::get<1>(a), *std::get<2>(a)) <
           std::tie(*std::get<0>(b), *std::get<1>(b), *std::get<2>(b));
  });
  for (const auto& [rel, s, o] : rows) {
    out << *rel << '\t' << *s << '\t' << *o << '\n';
  }
}

void write_snapshot(const KnowledgeGraph& kg, std::ostream& out) {
  using detail::put_le;
  using detail::put_string;
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint8_t>(out, kg.mode() == AmbiguityMode::Strict ? 0 : 1);

  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kg.entity_count()));
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) put_string(out, kg.entity_iri(EntityId{i}));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kg.relation_count()));
  for (std::uint32_t i = 0; i < kg.relation_count(); ++i) {
    put_string(out, kg.relation_iri(RelationId{i}));
  }

  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kg.schemas().size()));
  for (const auto& s : kg.schemas()) {
    put_le<std::uint32_t>(out, s.relation.value);
    put_string(out, s.domain_type);
    put_string(out, s.range_type);
  }

  std::vector<std::pair<std::uint32_t, std::string>> typed;
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
    if (auto t = kg.entity_type(EntityId{i})) typed.emplace_back(i, std::string(*t));
  }
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(typed.size()));
  for (const auto& [id, type] : typed) {
    put_le<std::uint32_t>(out, id);
    put_string(out, type);
  }

  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    const EdgeSet& edges = kg.edges(RelationId{r});
    put_le<std::uint64_t>(out, edges.size());
    for (const Edge& e : edges) {
      put_le<std::uint32_t>(out, e.subject.value);
      put_le<std::uint32_t>(out, e.object.value);
    }
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing snapshot");
}

KnowledgeGraph read_snapshot(std::istream& in) {
  using detail::get_le;
  using detail::get_string;
  constexpr Errc bad = Errc::BadSnapshot;

  char magic[sizeof kSnapshotMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kSnapshotMagic)) {
    throw Error(bad, "missing snapshot magic");
  }
  if (const auto v = get_le<std::uint32_t>(in, bad); v != kSnapshotVersion) {
    throw Error(bad, "unsupported snapshot version " + std::to_string(v));
  }
  const auto mode = get_le<std::uint8_t>(in, bad);
  KnowledgeGraph kg(mode == 0 ? AmbiguityMode::Strict : AmbiguityMode::Lenient);

  const auto n_entities = get_le<std::uint32_t>(in, bad);
  for (std::uint32_t i = 0; i < n_entities; ++i) kg.intern_entity(get_string(in, bad));
  const auto n_relations = get_le<std::uint32_t>(in, bad);
  for (std::uint32_t i = 0; i < n_relations; ++i) kg.intern_relation(get_string(in, bad));

  const auto n_schemas = get_le<std::uint32_t>(in, bad);
  for (std::uint32_t i = 0; i < n_schemas; ++i) {
    const auto rel = get_le<std::uint32_t>(in, bad);
    std::string domain = get_string(in, bad);
    std::string range = get_string(in, bad);
    if (rel >= n_relations) throw Error(bad, "schema references unknown relation");
    kg.declare_schema(kg.relation_iri(RelationId{rel}), std::move(domain), std::move(range));
  }
  const auto n_typed = get_le<std::uint32_t>(in, bad);
  for (std::uint32_t i = 0; i < n_typed; ++i) {
    const auto id = get_le<std::uint32_t>(in, bad);
    const std::string type = get_string(in, bad);
    if (id >= n_entities) throw Error(bad, "type references unknown entity");
    kg.set_entity_type(kg.entity_iri(EntityId{id}), type);
  }

  for (std::uint32_t r = 0; r < n_relations; ++r) {
    const auto n = get_le<std::uint64_t>(in, bad);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto s = get_le<std::uint32_t>(in, bad);
      const auto o = get_le<std::uint32_t>(in, bad);
      if (s >= n_entities || o >= n_entities) throw Error(bad, "edge references unknown entity");
      kg.add_edge(RelationId{r}, Edge{EntityId{s}, EntityId{o}});
    }
  }
  return kg;
}

}  // namespace kglp
