#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace kglp {

/// [e(u); e(v)]: subject half first, object half second.
using LinkFeature = std::vector<double>;

/// Binary operators for building a pair feature. Concat is the only
/// order-preserving one; the others exist for ablations.
enum class LinkOperator { Concat, Average, Hadamard, L1, L2 };

/// Throws DimensionMismatch.
LinkFeature featurize(std::span<const double> subject, std::span<const double> object);
LinkFeature featurize(std::span<const double> subject, std::span<const double> object,
                      LinkOperator op);
LinkOperator parse_link_operator(const std::string& name);

/// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}

  /// Throws DimensionMismatch when the row width differs.
  void append(std::span<const double> row);
  std::size_t rows() const noexcept { return cols_ ? data_.size() / cols_ : 0; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

 private:
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double sigmoid(double z) noexcept;

// ---------------------------------------------------------------------------
// Logistic regression

struct LogRegConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;  // full-batch steps
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 0.0;
};

/// Mean binary cross-entropy plus (l2/2)*|w|^2, and its gradient.
struct LogRegObjective {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};
LogRegObjective logreg_objective(const LogisticModel& model, const FeatureMatrix& x,
                                 std::span<const int> labels);

/// Full-batch gradient descent from zero weights. `loss_trace`, when given,
/// receives the objective before every step. Throws SingleClass, NonFinite.
LogisticModel train_logreg(const FeatureMatrix& x, std::span<const int> labels,
                           const LogRegConfig& config, std::vector<double>* loss_trace = nullptr);

// ---------------------------------------------------------------------------
// Multi-layer perceptron

enum class Activation { Relu, Tanh };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

struct MlpModel {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., 1
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;
};

struct MlpConfig {
  std::vector<std::size_t> hidden = {200};
  Activation activation = Activation::Relu;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
};

/// He-uniform weights, zero biases.
MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, Activation activation,
                  std::uint64_t seed);

/// Mean binary cross-entropy over the given rows (all rows when empty) and
/// its gradient, laid out like model.layers.
struct MlpObjective {
  double loss = 0.0;
  std::vector<DenseLayer> grads;
};
MlpObjective mlp_objective(const MlpModel& model, const FeatureMatrix& x, std::span<const int> labels,
                           std::span<const std::size_t> rows = {});

/// Mini-batch SGD with momentum over a seeded shuffle per epoch.
/// Throws SingleClass, NonFinite (naming the epoch).
MlpModel train_mlp(const FeatureMatrix& x, std::span<const int> labels, const MlpConfig& config);

/// Sigmoid of the final pre-activation. Throws DimensionMismatch.
double predict_proba(const LogisticModel& model, std::span<const double> feature);
double predict_proba(const MlpModel& model, std::span<const double> feature);

// Model files: JSON with explicit shapes, row-major weights and the training
// configuration.
nlohmann::ordered_json to_json(const LogisticModel& model, const LogRegConfig& config);
nlohmann::ordered_json to_json(const MlpModel& model, const MlpConfig& config);
LogisticModel logreg_from_json(const nlohmann::json& j);
MlpModel mlp_from_json(const nlohmann::json& j);

}  // namespace kglp
