#include "kglp/split.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "kglp/error.hpp"
#include "kglp/rng.hpp"

namespace kglp {

namespace {

std::vector<Edge> canonical_edges(const KnowledgeGraph& kg, RelationId relation) {
  const auto span = kg.edges(relation).edges();
  std::vector<Edge> edges(span.begin(), span.end());
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return std::tie(kg.entity_iri(a.subject), kg.entity_iri(a.object)) <
           std::tie(kg.entity_iri(b.subject), kg.entity_iri(b.object));
  });
  return edges;
}

std::vector<bool> membership(const std::vector<EntityId>& ids, std::size_t n) {
  std::vector<bool> in(n, false);
  for (EntityId id : ids) in[id.value] = true;
  return in;
}

}  // namespace

FoldPlan make_folds(const KnowledgeGraph& kg, RelationId relation, std::size_t k,
                    std::uint64_t seed) {
  const std::size_t n = kg.edges(relation).size();
  if (k < 2) throw Error(Errc::TooFewEdges, "fold count must be at least 2");
  if (n < k) {
    throw Error(Errc::TooFewEdges, kg.relation_iri(relation) + " has " + std::to_string(n) +
                                       " edges, fewer than k=" + std::to_string(k));
  }
  std::vector<Edge> edges = canonical_edges(kg, relation);
  Rng rng(seed);
  rng.shuffle(std::span<Edge>(edges));

  FoldPlan plan{relation, k, {}, seed};
  plan.folds.resize(k);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t size = n / k + (i < n % k ? 1 : 0);
    plan.folds[i].assign(edges.begin() + static_cast<std::ptrdiff_t>(offset),
                         edges.begin() + static_cast<std::ptrdiff_t>(offset + size));
    offset += size;
  }
  return plan;
}

NegativePools negative_pools(const KnowledgeGraph& kg, RelationId relation) {
  NegativePools pools;
  if (const RelationSchema* schema = kg.schema(relation)) {
    pools.subjects = kg.entities_of_type(schema->domain_type);
    pools.objects = kg.entities_of_type(schema->range_type);
    return pools;
  }
  std::vector<bool> seen_s(kg.entity_count(), false), seen_o(kg.entity_count(), false);
  for (const Edge& e : kg.edges(relation)) {
    seen_s[e.subject.value] = true;
    seen_o[e.object.value] = true;
  }
  for (std::uint32_t i = 0; i < kg.entity_count(); ++i) {
    if (seen_s[i]) pools.subjects.push_back(EntityId{i});
    if (seen_o[i]) pools.objects.push_back(EntityId{i});
  }
  return pools;
}

NegativeSet sample_negatives(const KnowledgeGraph& kg, RelationId relation, std::size_t count,
                             std::uint64_t seed, const EdgeSet& excluded) {
  const NegativePools pools = negative_pools(kg, relation);
  const auto in_s = membership(pools.subjects, kg.entity_count());
  const auto in_o = membership(pools.objects, kg.entity_count());
  auto in_space = [&](Edge e) { return in_s[e.subject.value] && in_o[e.object.value]; };
  auto blocked = [&](Edge e) { return kg.contains_pair(e) || excluded.contains(e); };

  // Blocked pairs inside the candidate space, each counted once.
  std::size_t n_blocked = 0;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    for (const Edge& e : kg.edges(RelationId{r})) {
      if (in_space(e) && kg.pair_owner(e) == RelationId{r}) ++n_blocked;
    }
  }
  for (const Edge& e : excluded) {
    if (in_space(e) && !kg.contains_pair(e)) ++n_blocked;
  }
  const std::size_t total = pools.subjects.size() * pools.objects.size();
  const std::size_t pool = total - n_blocked;
  if (pool < count) {
    throw Error(Errc::Exhausted, "relation " + kg.relation_iri(relation) + ": pool of " +
                                     std::to_string(pool) + " candidate negatives, need " +
                                     std::to_string(count));
  }

  NegativeSet out{relation, {}, seed};
  Rng rng(seed);
  if (total < 2 * (n_blocked + count)) {
    std::vector<Edge> candidates;
    candidates.reserve(pool);
    for (EntityId s : pools.subjects) {
      for (EntityId o : pools.objects) {
        const Edge e{s, o};
        if (!blocked(e)) candidates.push_back(e);
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
      out.pairs.insert(candidates[i]);
    }
    return out;
  }
  while (out.pairs.size() < count) {
    const Edge e{pools.subjects[rng.uniform(pools.subjects.size())],
                 pools.objects[rng.uniform(pools.objects.size())]};
    if (!blocked(e)) out.pairs.insert(e);
  }
  return out;
}

EvaluationSplit build_split(const KnowledgeGraph& kg, const FoldPlan& plan,
                            std::size_t test_fold_index, std::uint64_t seed) {
  if (test_fold_index >= plan.folds.size()) {
    throw Error(Errc::BadFoldIndex, "fold " + std::to_string(test_fold_index) + " of " +
                                        std::to_string(plan.folds.size()));
  }
  EvaluationSplit split;
  split.relation = plan.relation;
  split.fold_index = test_fold_index;
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    EdgeSet& target = i == test_fold_index ? split.test_pos : split.train_pos;
    for (const Edge& e : plan.folds[i]) target.insert(e);
  }
  split.train_neg = sample_negatives(kg, plan.relation, split.train_pos.size(),
                                     derive_seed(seed, "train_neg"))
                        .pairs;
  split.test_neg = sample_negatives(kg, plan.relation, split.test_pos.size(),
                                    derive_seed(seed, "test_neg"), split.train_neg)
                       .pairs;
  return split;
}

EdgeSet embedding_training_edges(const KnowledgeGraph& kg, const EvaluationSplit& split) {
  EdgeSet out;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    for (const Edge& e : kg.edges(RelationId{r})) {
      if (!split.test_pos.contains(e)) out.insert(e);
    }
  }
  return out;
}

namespace {

constexpr std::array<const char*, 4> kRoles = {"train_pos", "test_pos", "train_neg", "test_neg"};

std::array<const EdgeSet*, 4> split_sets(const EvaluationSplit& split) {
  return {&split.train_pos, &split.test_pos, &split.train_neg, &split.test_neg};
}

const char* kind_name(LeakageKind kind) {
  switch (kind) {
    case LeakageKind::TestEdgeInTraining: return "test-edge-in-training";
    case LeakageKind::SetOverlap: return "set-overlap";
    case LeakageKind::NegativeIsPositive: return "negative-is-positive";
  }
  return "?";
}

}  // namespace

std::string describe(const KnowledgeGraph& kg, const LeakageViolation& v) {
  return std::string(kind_name(v.kind)) + " (" + kg.entity_iri(v.edge.subject) + ", " +
         kg.entity_iri(v.edge.object) + ")" + (v.detail.empty() ? "" : " " + v.detail);
}

LeakageReport audit_leakage(const KnowledgeGraph& kg, const EvaluationSplit& split,
                            const EdgeSet& training_edges) {
  LeakageReport report;
  for (const Edge& e : split.test_pos) {
    if (training_edges.contains(e)) {
      report.violations.push_back({LeakageKind::TestEdgeInTraining, e, "in embedding training edges"});
    }
  }
  const auto sets = split_sets(split);
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = a + 1; b < sets.size(); ++b) {
      for (const Edge& e : *sets[a]) {
        if (sets[b]->contains(e)) {
          report.violations.push_back(
              {LeakageKind::SetOverlap, e, std::string(kRoles[a]) + " and " + kRoles[b]});
        }
      }
    }
  }
  for (std::size_t i = 2; i < 4; ++i) {
    for (const Edge& e : *sets[i]) {
      if (kg.contains_pair(e)) {
        report.violations.push_back({LeakageKind::NegativeIsPositive, e, kRoles[i]});
      }
    }
  }
  return report;
}

void write_split_tsv(const KnowledgeGraph& kg, const EvaluationSplit& split, std::size_t k,
                     std::uint64_t seed, std::ostream& out) {
  out << "# relation=" << kg.relation_iri(split.relation) << " k=" << k
      << " fold=" << split.fold_index << " seed=" << seed << '\n';
  const std::string& rel = kg.relation_iri(split.relation);
  const auto sets = split_sets(split);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::vector<std::pair<const std::string*, const std::string*>> rows;
    rows.reserve(sets[i]->size());
    for (const Edge& e : *sets[i]) rows.emplace_back(&kg.entity_iri(e.subject), &kg.entity_iri(e.object));
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return std::tie(*a.first, *a.second) < std::tie(*b.first, *b.second);
    });
    for (const auto& [s, o] : rows) out << kRoles[i] << '\t' << rel << '\t' << *s << '\t' << *o << '\n';
  }
}

EvaluationSplit read_split_tsv(const KnowledgeGraph& kg, std::istream& in) {
  EvaluationSplit split;
  bool have_relation = false;
  std::string line;
  std::size_t line_number = 0;
  auto fail = [&](const std::string& why) {
    return Error(Errc::MalformedRow, "split line " + std::to_string(line_number) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream header(line.substr(1));
      std::string field;
      while (header >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "relation") {
          const auto r = kg.find_relation(value);
          if (!r) throw fail("unknown relation " + value);
          split.relation = *r;
          have_relation = true;
        } else if (key == "fold") {
          split.fold_index = std::stoul(value);
        }
      }
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream row(line);
    for (std::string f; std::getline(row, f, '\t');) fields.push_back(f);
    if (fields.size() != 4) throw fail("expected 4 tab-separated columns");
    const auto role = std::find(kRoles.begin(), kRoles.end(), fields[0]);
    if (role == kRoles.end()) throw fail("unknown role " + fields[0]);
    const auto r = kg.find_relation(fields[1]);
    if (!r) throw fail("unknown relation " + fields[1]);
    if (!have_relation) {
      split.relation = *r;
      have_relation = true;
    } else if (*r != split.relation) {
      throw fail("mixed relations in one split file");
    }
    const auto s = kg.find_entity(fields[2]);
    const auto o = kg.find_entity(fields[3]);
    if (!s || !o) throw fail("unknown entity");
    EdgeSet* sets[] = {&split.train_pos, &split.test_pos, &split.train_neg, &split.test_neg};
    sets[role - kRoles.begin()]->insert(Edge{*s, *o});
  }
  if (!have_relation) throw Error(Errc::MalformedRow, "split file names no relation");
  return split;
}

}  // namespace kglp
