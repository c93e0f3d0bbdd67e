#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "kglp/embed.hpp"
#include "kglp/error.hpp"

namespace kglp {

namespace {

constexpr char kEmbeddingMagic[8] = {'K', 'G', 'L', 'P', 'E', 'M', 'B', 'D'};
constexpr std::uint32_t kEmbeddingVersion = 1;

}  // namespace

void write_embeddings_text(const EmbeddingMatrix& m, const KnowledgeGraph& kg, std::ostream& out) {
  char buf[32];
  for (std::uint32_t i = 0; i < m.rows(); ++i) {
    out << kg.entity_iri(EntityId{i});
    for (double x : m.row(EntityId{i})) {
      std::snprintf(buf, sizeof buf, "%.9g", x);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

EmbeddingMatrix read_embeddings_text(std::istream& in, const KnowledgeGraph& kg) {
  EmbeddingMatrix m;
  std::vector<bool> seen(kg.entity_count(), false);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string iri;
    row >> iri;
    std::vector<double> values;
    for (double x; row >> x;) values.push_back(x);
    if (!row.eof()) {
      throw Error(Errc::BadEmbeddingFile, "line " + std::to_string(line_number) + ": bad number");
    }
    if (m.rows() == 0) m = EmbeddingMatrix(kg.entity_count(), values.size());
    if (values.empty() || values.size() != m.dim()) {
      throw Error(Errc::BadEmbeddingFile, "line " + std::to_string(line_number) + ": expected " +
                                              std::to_string(m.dim()) + " values");
    }
    const auto id = kg.find_entity(iri);
    if (!id) throw Error(Errc::BadEmbeddingFile, "unknown entity " + iri);
    std::copy(values.begin(), values.end(), m.row(*id).begin());
    seen[id->value] = true;
  }
  for (std::uint32_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error(Errc::BadEmbeddingFile, "no vector for " + kg.entity_iri(EntityId{i}));
  }
  return m;
}

void write_embeddings_binary(const EmbeddingMatrix& m, std::ostream& out) {
  out.write(kEmbeddingMagic, sizeof kEmbeddingMagic);
  detail::put_le<std::uint32_t>(out, kEmbeddingVersion);
  detail::put_le<std::uint64_t>(out, m.rows());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  for (double x : m.data()) detail::put_f32(out, static_cast<float>(x));
  if (!out) throw Error(Errc::IoFailure, "failed writing embeddings");
}

EmbeddingMatrix read_embeddings_binary(std::istream& in) {
  constexpr Errc bad = Errc::BadEmbeddingFile;
  char magic[sizeof kEmbeddingMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kEmbeddingMagic)) {
    throw Error(bad, "missing embedding magic");
  }
  if (detail::get_le<std::uint32_t>(in, bad) != kEmbeddingVersion) {
    throw Error(bad, "unsupported embedding version");
  }
  const auto rows = detail::get_le<std::uint64_t>(in, bad);
  const auto dim = detail::get_le<std::uint32_t>(in, bad);
  EmbeddingMatrix m(rows, dim);
  for (double& x : m.data()) x = detail::get_f32(in, bad);
  return m;
}

std::string train_report_json(const TrainReport& report, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["epoch_loss"] = report.epoch_loss;
  j["wall_seconds"] = report.wall_seconds;
  j["examples"] = report.examples;
  j["skipped"] = report.skipped;
  j["config"] = {
      {"dim", config.dim},
      {"epochs", config.epochs},
      {"learning_rate", config.learning_rate},
      {"negatives_per_positive", config.negatives_per_positive},
      {"margin", config.margin},
      {"seed", config.seed},
      {"threads", config.threads},
      {"loss", config.loss == EmbedLoss::Hinge ? "hinge" : "softmax"},
  };
  return j.dump(2);
}

}  // namespace kglp
