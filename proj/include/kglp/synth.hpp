#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "kglp/kg.hpp"

namespace kglp::synth {

inline constexpr std::string_view kBase = "http://kglp.example.org/";

/// Bipartite relation from `n_domain` to `n_range` entities whose positives
/// are the top `positive_fraction` of pairs under a rank-`rank` score
/// `<a_u, b_v>`, with factor entries drawn i.i.d. from `factor`.
struct LatentFactorSpec {
  std::size_t n_domain = 200;
  std::size_t n_range = 200;
  std::size_t rank = 5;
  double positive_fraction = 0.05;
  enum class Factor { Gaussian, Exponential } factor = Factor::Exponential;
  std::uint64_t seed = 1;
  std::string relation = std::string(kBase) + "rel/has-link";
};
KnowledgeGraph latent_factor_kg(const LatentFactorSpec& spec);

/// Two disjoint complete-ish bipartite blocks A1->B1 and A2->B2 with edge
/// probability `density` inside each block.
struct BlockSpec {
  std::size_t block_size = 20;
  double density = 0.5;
  std::uint64_t seed = 1;
};
KnowledgeGraph bipartite_blocks(const BlockSpec& spec);

/// Citation-style relation over a single entity type: entities arrive one by
/// one and each cites `citations` earlier entities, picked uniformly with
/// probability `uniform_fraction` and otherwise proportionally to how often
/// they were cited so far. Edges always point from newer to older, so no edge
/// has its reverse in the graph, and age shows up in the undirected degree.
struct AsymmetricSpec {
  std::size_t n_entities = 500;
  std::size_t citations = 4;
  double uniform_fraction = 0.1;
  std::uint64_t seed = 1;
};
KnowledgeGraph asymmetric_kg(const AsymmetricSpec& spec);

/// Uniformly random directed edges over `n_entities`, spread round-robin
/// over `n_relations` relations without repeating a pair.
KnowledgeGraph random_kg(std::size_t n_entities, std::size_t n_relations, std::size_t n_edges,
                         std::uint64_t seed);

/// Reified graph: each assertion (s, r, c) is written as (s, r, inst_i) and
/// (inst_i, rdf:type, c) with inst_i matching the default anonymous pattern.
/// `expected` receives the direct-edge count per relation IRI.
KnowledgeGraph reified_kg(std::size_t n_assertions, std::size_t n_relations, std::uint64_t seed,
                          std::map<std::string, std::size_t>* expected = nullptr);

/// Edge list with `n_edges` distinct random pairs over `n_entities`.
EdgeSet random_edges(std::size_t n_entities, std::size_t n_edges, std::uint64_t seed);

}  // namespace kglp::synth
