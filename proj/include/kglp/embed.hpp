#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kglp/kg.hpp"

namespace kglp {

/// Row-major |V| x d matrix of entity vectors, row i belonging to EntityId i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<double> row(EntityId id) { return {data_.data() + id.value * dim_, dim_}; }
  std::span<const double> row(EntityId id) const { return {data_.data() + id.value * dim_, dim_}; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;
  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class EmbedLoss { Hinge, Softmax };

struct TrainConfig {
  std::size_t dim = 10;
  std::size_t epochs = 10;
  double learning_rate = 0.05;
  std::size_t negatives_per_positive = 10;
  double margin = 0.05;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  EmbedLoss loss = EmbedLoss::Hinge;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean loss per positive
  double wall_seconds = 0.0;
  std::size_t examples = 0;        // positives visited
  std::size_t skipped = 0;         // positives with no admissible negative
};

struct TrainResult {
  EmbeddingMatrix embeddings;
  TrainReport report;
};

struct TrainHooks {
  /// Called with every training edge the trainer reads.
  std::function<void(Edge)> on_edge_access;
};

/// Dot product. Throws DimensionMismatch.
double similarity(std::span<const double> a, std::span<const double> b);

/// Hinge: (1/k) * sum_i max(0, margin - pos + neg_i).
/// Softmax: -log(exp(pos) / (exp(pos) + sum_i exp(neg_i))); margin unused.
double batch_loss(double pos_sim, std::span<const double> neg_sims, double margin,
                  EmbedLoss kind = EmbedLoss::Hinge);

/// Partial derivatives of batch_loss: d/dpos and d/dneg_i. At a hinge kink
/// the inactive side (zero) is taken.
struct LossGradient {
  double d_pos = 0.0;
  std::vector<double> d_neg;
};
LossGradient batch_loss_gradient(double pos_sim, std::span<const double> neg_sims, double margin,
                                 EmbedLoss kind = EmbedLoss::Hinge);

/// Loss for one positive (u, v) with negatives v'_i, and its gradients with
/// respect to each involved row. Row gradients are per role: when an entity
/// plays two roles its total gradient is the sum.
struct RowGradients {
  double loss = 0.0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<std::vector<double>> negs;
};
RowGradients example_gradients(std::span<const double> u, std::span<const double> v,
                               std::span<const std::span<const double>> negs, double margin,
                               EmbedLoss kind);

/// Seeded initialization, uniform in [-1/d, 1/d].
EmbeddingMatrix initial_embeddings(std::size_t rows, std::size_t dim, std::uint64_t seed);

/// SGD over `edges` (label-dropped pairs) for an entity space of size
/// `num_entities`. Each epoch visits every edge once in a seeded shuffled
/// order and corrupts the object with up to k uniformly drawn entities that
/// are not training edges of the subject. With threads > 1 rows are updated
/// without locks; only single-threaded runs are bit-reproducible.
/// Throws EmptyGraph, NonFiniteLoss.
TrainResult train_embeddings(const EdgeSet& edges, std::size_t num_entities,
                             const TrainConfig& config, const TrainHooks& hooks = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;        // examples compared
  std::size_t kinks_skipped = 0;  // examples within tolerance of a hinge kink
  bool inactive_exactly_zero = true;
};

/// Compares example_gradients against central finite differences of
/// batch_loss for every positive of `probe`, using a seeded random
/// embedding. Examples near a hinge kink are skipped and counted.
GradientCheckResult gradient_check(const TrainConfig& config, const EdgeSet& probe,
                                   std::size_t num_entities,
                                   const EmbeddingMatrix* start = nullptr);

// Serialization (embed_io.cpp).
void write_embeddings_text(const EmbeddingMatrix& m, const KnowledgeGraph& kg, std::ostream& out);
EmbeddingMatrix read_embeddings_text(std::istream& in, const KnowledgeGraph& kg);
void write_embeddings_binary(const EmbeddingMatrix& m, std::ostream& out);
EmbeddingMatrix read_embeddings_binary(std::istream& in);
std::string train_report_json(const TrainReport& report, const TrainConfig& config);

}  // namespace kglp
