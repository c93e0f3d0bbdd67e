#include "kglp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kglp/error.hpp"
#include "kglp/rng.hpp"

namespace kglp::synth {

namespace {

std::string iri(std::string_view kind, std::size_t i) {
  return std::string(kBase) + std::string(kind) + "/" + std::to_string(i);
}

}  // namespace

KnowledgeGraph latent_factor_kg(const LatentFactorSpec& spec) {
  Rng rng(spec.seed);
  auto draw = [&]() {
    return spec.factor == LatentFactorSpec::Factor::Gaussian ? rng.normal()
                                                             : -std::log(1.0 - rng.uniform01());
  };
  std::vector<double> a(spec.n_domain * spec.rank), b(spec.n_range * spec.rank);
  for (double& x : a) x = draw();
  for (double& x : b) x = draw();

  std::vector<std::pair<double, std::size_t>> scores;
  scores.reserve(spec.n_domain * spec.n_range);
  for (std::size_t u = 0; u < spec.n_domain; ++u) {
    for (std::size_t v = 0; v < spec.n_range; ++v) {
      double s = 0.0;
      for (std::size_t k = 0; k < spec.rank; ++k) s += a[u * spec.rank + k] * b[v * spec.rank + k];
      scores.emplace_back(s, u * spec.n_range + v);
    }
  }
  const auto n_pos = static_cast<std::size_t>(std::llround(spec.positive_fraction *
                                                           static_cast<double>(scores.size())));
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n_pos), scores.end(),
                    [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });

  KnowledgeGraph kg;
  kg.declare_schema(spec.relation, "Domain", "Range");
  for (std::size_t u = 0; u < spec.n_domain; ++u) kg.set_entity_type(iri("domain", u), "Domain");
  for (std::size_t v = 0; v < spec.n_range; ++v) kg.set_entity_type(iri("range", v), "Range");
  std::sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n_pos),
            [](const auto& x, const auto& y) { return x.second < y.second; });
  for (std::size_t i = 0; i < n_pos; ++i) {
    const std::size_t u = scores[i].second / spec.n_range, v = scores[i].second % spec.n_range;
    kg.add_triple({Iri(iri("domain", u)), Iri(spec.relation), Iri(iri("range", v))});
  }
  return kg;
}

KnowledgeGraph bipartite_blocks(const BlockSpec& spec) {
  Rng rng(spec.seed);
  KnowledgeGraph kg;
  const std::string rel = std::string(kBase) + "rel/in-block";
  for (int block = 0; block < 2; ++block) {
    const std::string a = "block" + std::to_string(block) + "/a";
    const std::string b = "block" + std::to_string(block) + "/b";
    for (std::size_t i = 0; i < spec.block_size; ++i) {
      for (std::size_t j = 0; j < spec.block_size; ++j) {
        // Keep every node connected even at low density.
        if (i == j || rng.uniform01() < spec.density) {
          kg.add_triple({Iri(iri(a, i)), Iri(rel), Iri(iri(b, j))});
        }
      }
    }
  }
  return kg;
}

KnowledgeGraph asymmetric_kg(const AsymmetricSpec& spec) {
  Rng rng(spec.seed);
  KnowledgeGraph kg;
  const std::string rel = std::string(kBase) + "rel/cites";
  kg.declare_schema(rel, "Node", "Node");
  for (std::size_t e = 0; e < spec.n_entities; ++e) kg.set_entity_type(iri("node", e), "Node");
  std::vector<std::size_t> cited;  // one entry per received citation
  for (std::size_t v = 1; v < spec.n_entities; ++v) {
    const std::size_t want = std::min(spec.citations, v);
    std::vector<std::size_t> chosen;
    while (chosen.size() < want) {
      const std::size_t u = cited.empty() || rng.uniform01() < spec.uniform_fraction
                                ? static_cast<std::size_t>(rng.uniform(v))
                                : cited[rng.uniform(cited.size())];
      if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
    }
    for (std::size_t u : chosen) {
      kg.add_triple({Iri(iri("node", v)), Iri(rel), Iri(iri("node", u))});
      cited.push_back(u);
    }
  }
  return kg;
}

KnowledgeGraph random_kg(std::size_t n_entities, std::size_t n_relations, std::size_t n_edges,
                         std::uint64_t seed) {
  if (n_entities * n_entities < n_edges) throw Error(Errc::InvalidConfig, "too many edges requested");
  Rng rng(seed);
  KnowledgeGraph kg;
  for (std::size_t i = 0; i < n_entities; ++i) kg.intern_entity(iri("entity", i));
  for (std::size_t r = 0; r < n_relations; ++r) kg.intern_relation(iri("rel", r));
  std::size_t added = 0;
  while (added < n_edges) {
    const Edge e{EntityId{static_cast<std::uint32_t>(rng.uniform(n_entities))},
                 EntityId{static_cast<std::uint32_t>(rng.uniform(n_entities))}};
    if (kg.contains_pair(e)) continue;
    kg.add_edge(RelationId{static_cast<std::uint32_t>(added % n_relations)}, e);
    ++added;
  }
  return kg;
}

KnowledgeGraph reified_kg(std::size_t n_assertions, std::size_t n_relations, std::uint64_t seed,
                          std::map<std::string, std::size_t>* expected) {
  Rng rng(seed);
  KnowledgeGraph kg;
  const Iri type(std::string{kRdfType});
  const std::size_t per_rel = (n_assertions + n_relations - 1) / n_relations;
  const auto pool = static_cast<std::size_t>(std::ceil(std::sqrt(2.0 * static_cast<double>(per_rel)))) + 1;
  std::size_t instance = 0;
  for (std::size_t r = 0; r < n_relations; ++r) {
    const std::size_t count = std::min(per_rel, n_assertions - std::min(n_assertions, r * per_rel));
    const Iri rel(iri("rel", r));
    const std::string prefix = "r" + std::to_string(r);
    EdgeSet used;
    while (used.size() < count) {
      const auto s = static_cast<std::uint32_t>(rng.uniform(pool));
      const auto c = static_cast<std::uint32_t>(rng.uniform(pool));
      if (!used.insert(Edge{EntityId{s}, EntityId{c}})) continue;
      const Iri anon(std::string(kBase) + "anon/instance_" + std::to_string(instance++));
      kg.add_triple({Iri(iri(prefix + "/subject", s)), rel, anon});
      kg.add_triple({anon, type, Iri(iri(prefix + "/class", c))});
    }
    if (expected && count > 0) (*expected)[rel.str()] = count;
  }
  return kg;
}

EdgeSet random_edges(std::size_t n_entities, std::size_t n_edges, std::uint64_t seed) {
  Rng rng(seed);
  EdgeSet edges;
  while (edges.size() < n_edges) {
    const Edge e{EntityId{static_cast<std::uint32_t>(rng.uniform(n_entities))},
                 EntityId{static_cast<std::uint32_t>(rng.uniform(n_entities))}};
    if (e.subject != e.object) edges.insert(e);
  }
  return edges;
}

}  // namespace kglp::synth
