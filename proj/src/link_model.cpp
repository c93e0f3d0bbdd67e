#include "kglp/link_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kglp/error.hpp"
#include "kglp/rng.hpp"

namespace kglp {

LinkFeature featurize(std::span<const double> subject, std::span<const double> object) {
  return featurize(subject, object, LinkOperator::Concat);
}

LinkFeature featurize(std::span<const double> subject, std::span<const double> object,
                      LinkOperator op) {
  if (subject.size() != object.size()) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(subject.size()) + " vs " + std::to_string(object.size()));
  }
  const std::size_t d = subject.size();
  LinkFeature f;
  if (op == LinkOperator::Concat) {
    f.reserve(2 * d);
    f.insert(f.end(), subject.begin(), subject.end());
    f.insert(f.end(), object.begin(), object.end());
    return f;
  }
  f.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double a = subject[i], b = object[i];
    switch (op) {
      case LinkOperator::Average: f[i] = 0.5 * (a + b); break;
      case LinkOperator::Hadamard: f[i] = a * b; break;
      case LinkOperator::L1: f[i] = std::abs(a - b); break;
      case LinkOperator::L2: f[i] = (a - b) * (a - b); break;
      case LinkOperator::Concat: break;
    }
  }
  return f;
}

LinkOperator parse_link_operator(const std::string& name) {
  if (name == "concat") return LinkOperator::Concat;
  if (name == "average") return LinkOperator::Average;
  if (name == "hadamard") return LinkOperator::Hadamard;
  if (name == "l1") return LinkOperator::L1;
  if (name == "l2") return LinkOperator::L2;
  throw Error(Errc::InvalidConfig, "unknown link operator '" + name + "'");
}

void FeatureMatrix::append(std::span<const double> row) {
  if (cols_ == 0 && data_.empty()) cols_ = row.size();
  if (row.size() != cols_) {
    throw Error(Errc::DimensionMismatch,
                "row of width " + std::to_string(row.size()) + ", matrix has " + std::to_string(cols_));
  }
  data_.insert(data_.end(), row.begin(), row.end());
}

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) - y*z, the cross-entropy of sigmoid(z) against y.
double bce_from_logit(double z, int y) noexcept {
  return std::max(z, 0.0) - (y ? z : 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void require_labels(std::size_t rows, std::span<const int> labels) {
  if (rows != labels.size()) {
    throw Error(Errc::DimensionMismatch, std::to_string(rows) + " rows but " +
                                             std::to_string(labels.size()) + " labels");
  }
  const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 1; });
  const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 0; });
  if (!has_pos || !has_neg) throw Error(Errc::SingleClass, "training labels contain one class");
}

}  // namespace

LogRegObjective logreg_objective(const LogisticModel& model, const FeatureMatrix& x,
                                 std::span<const int> labels) {
  const std::size_t n = x.rows(), d = x.cols();
  LogRegObjective out;
  out.grad_w.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    const double z = model.bias + std::inner_product(row.begin(), row.end(), model.weights.begin(), 0.0);
    out.loss += bce_from_logit(z, labels[i]);
    const double dz = sigmoid(z) - labels[i];
    for (std::size_t j = 0; j < d; ++j) out.grad_w[j] += dz * row[j];
    out.grad_b += dz;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.grad_b *= inv_n;
  double sq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    out.grad_w[j] = out.grad_w[j] * inv_n + model.l2 * model.weights[j];
    sq += model.weights[j] * model.weights[j];
  }
  out.loss += 0.5 * model.l2 * sq;
  return out;
}

LogisticModel train_logreg(const FeatureMatrix& x, std::span<const int> labels,
                           const LogRegConfig& config, std::vector<double>* loss_trace) {
  require_labels(x.rows(), labels);
  LogisticModel model{std::vector<double>(x.cols(), 0.0), 0.0, config.l2};
  for (std::size_t step = 0; step < config.epochs; ++step) {
    const LogRegObjective obj = logreg_objective(model, x, labels);
    if (!std::isfinite(obj.loss)) {
      throw Error(Errc::NonFinite, "logistic loss diverged at step " + std::to_string(step));
    }
    if (loss_trace) loss_trace->push_back(obj.loss);
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
      model.weights[j] -= config.learning_rate * obj.grad_w[j];
    }
    model.bias -= config.learning_rate * obj.grad_b;
  }
  return model;
}

double predict_proba(const LogisticModel& model, std::span<const double> feature) {
  if (feature.size() != model.weights.size()) {
    throw Error(Errc::DimensionMismatch, "feature width " + std::to_string(feature.size()) +
                                             ", model expects " + std::to_string(model.weights.size()));
  }
  return sigmoid(model.bias +
                 std::inner_product(feature.begin(), feature.end(), model.weights.begin(), 0.0));
}

// ---------------------------------------------------------------------------

MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, Activation activation,
                  std::uint64_t seed) {
  MlpModel model;
  model.activation = activation;
  model.seed = seed;
  model.layer_sizes.push_back(input_dim);
  model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
  model.layer_sizes.push_back(1);
  Rng rng(derive_seed(seed, "mlp-init"));
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = model.layer_sizes[l];
    layer.out = model.layer_sizes[l + 1];
    if (layer.in == 0 || layer.out == 0) throw Error(Errc::InvalidConfig, "MLP layer of width 0");
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.bias.assign(layer.out, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

double activate(Activation a, double z) noexcept {
  return a == Activation::Relu ? std::max(0.0, z) : std::tanh(z);
}

double activate_grad(Activation a, double z, double out) noexcept {
  return a == Activation::Relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

// Pre-activations and outputs of every layer for one input.
struct ForwardPass {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> out;  // out[0] is the input
};

void forward(const MlpModel& model, std::span<const double> x, ForwardPass& pass) {
  const std::size_t n_layers = model.layers.size();
  pass.pre.resize(n_layers);
  pass.out.resize(n_layers + 1);
  pass.out[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = model.layers[l];
    auto& pre = pass.pre[l];
    auto& out = pass.out[l + 1];
    pre.resize(layer.out);
    out.resize(layer.out);
    const auto& in = pass.out[l];
    const bool last = l + 1 == n_layers;
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double z = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) z += w[i] * in[i];
      pre[o] = z;
      out[o] = last ? z : activate(model.activation, z);
    }
  }
}

std::vector<DenseLayer> zero_like(const MlpModel& model) {
  std::vector<DenseLayer> g;
  for (const auto& layer : model.layers) {
    g.push_back({layer.in, layer.out, std::vector<double>(layer.weights.size(), 0.0),
                 std::vector<double>(layer.out, 0.0)});
  }
  return g;
}

// Adds d(loss)/d(params) for one example into `grads`; returns its loss.
double backprop_one(const MlpModel& model, std::span<const double> x, int y, ForwardPass& pass,
                    std::vector<double>& delta, std::vector<double>& next_delta,
                    std::vector<DenseLayer>& grads) {
  forward(model, x, pass);
  const std::size_t n_layers = model.layers.size();
  const double logit = pass.pre.back()[0];
  delta.assign(1, sigmoid(logit) - y);
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = model.layers[l];
    DenseLayer& g = grads[l];
    const auto& in = pass.out[l];
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = g.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * in[i];
      g.bias[o] += d;
    }
    if (l == 0) break;
    next_delta.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) next_delta[i] += d * w[i];
    }
    const auto& pre = pass.pre[l - 1];
    const auto& out = pass.out[l];
    for (std::size_t i = 0; i < layer.in; ++i) {
      next_delta[i] *= activate_grad(model.activation, pre[i], out[i]);
    }
    std::swap(delta, next_delta);
  }
  return bce_from_logit(logit, y);
}

}  // namespace

MlpObjective mlp_objective(const MlpModel& model, const FeatureMatrix& x, std::span<const int> labels,
                           std::span<const std::size_t> rows) {
  MlpObjective out;
  out.grads = zero_like(model);
  ForwardPass pass;
  std::vector<double> delta, next_delta;
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  for (std::size_t r : rows) {
    out.loss += backprop_one(model, x.row(r), labels[r], pass, delta, next_delta, out.grads);
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  out.loss *= inv_n;
  for (auto& g : out.grads) {
    for (double& w : g.weights) w *= inv_n;
    for (double& b : g.bias) b *= inv_n;
  }
  return out;
}

MlpModel train_mlp(const FeatureMatrix& x, std::span<const int> labels, const MlpConfig& config) {
  require_labels(x.rows(), labels);
  MlpModel model = init_mlp(x.cols(), config.hidden, config.activation, config.seed);
  std::vector<DenseLayer> velocity = zero_like(model);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, "mlp-order"));
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const MlpObjective obj =
          mlp_objective(model, x, labels, std::span<const std::size_t>(order).subspan(start, n));
      epoch_loss += obj.loss * static_cast<double>(n);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto update = [&](std::vector<double>& param, std::vector<double>& vel,
                          const std::vector<double>& grad) {
          for (std::size_t i = 0; i < param.size(); ++i) {
            vel[i] = config.momentum * vel[i] - config.learning_rate * grad[i];
            param[i] += vel[i];
          }
        };
        update(model.layers[l].weights, velocity[l].weights, obj.grads[l].weights);
        update(model.layers[l].bias, velocity[l].bias, obj.grads[l].bias);
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw Error(Errc::NonFinite, "MLP loss diverged in epoch " + std::to_string(epoch));
    }
  }
  return model;
}

double predict_proba(const MlpModel& model, std::span<const double> feature) {
  if (model.layers.empty() || feature.size() != model.layers.front().in) {
    throw Error(Errc::DimensionMismatch, "feature width " + std::to_string(feature.size()) +
                                             " does not match the MLP input");
  }
  ForwardPass pass;
  forward(model, feature, pass);
  return sigmoid(pass.pre.back()[0]);
}

// ---------------------------------------------------------------------------

namespace {

const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw Error(Errc::BadModelFile, "unknown activation '" + s + "'");
}

}  // namespace

nlohmann::ordered_json to_json(const LogisticModel& model, const LogRegConfig& config) {
  nlohmann::ordered_json j;
  j["kind"] = "logreg";
  j["shape"] = {{"features", model.weights.size()}};
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["l2"] = model.l2;
  j["config"] = {{"learning_rate", config.learning_rate},
                 {"epochs", config.epochs},
                 {"l2", config.l2},
                 {"seed", config.seed}};
  return j;
}

nlohmann::ordered_json to_json(const MlpModel& model, const MlpConfig& config) {
  nlohmann::ordered_json j;
  j["kind"] = "mlp";
  j["layer_sizes"] = model.layer_sizes;
  j["activation"] = activation_name(model.activation);
  j["seed"] = model.seed;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& layer : model.layers) {
    layers.push_back({{"shape", {layer.out, layer.in}}, {"weights", layer.weights}, {"bias", layer.bias}});
  }
  j["layers"] = std::move(layers);
  j["config"] = {{"hidden", config.hidden},
                 {"activation", activation_name(config.activation)},
                 {"learning_rate", config.learning_rate},
                 {"momentum", config.momentum},
                 {"epochs", config.epochs},
                 {"batch_size", config.batch_size},
                 {"seed", config.seed}};
  return j;
}

LogisticModel logreg_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind") != "logreg") throw Error(Errc::BadModelFile, "not a logreg model");
    LogisticModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.l2 = j.value("l2", 0.0);
    if (m.weights.size() != j.at("shape").at("features").get<std::size_t>()) {
      throw Error(Errc::BadModelFile, "weight count does not match shape");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadModelFile, e.what());
  }
}

MlpModel mlp_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind") != "mlp") throw Error(Errc::BadModelFile, "not an MLP model");
    MlpModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    m.activation = parse_activation(j.at("activation").get<std::string>());
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& lj : j.at("layers")) {
      DenseLayer layer;
      layer.out = lj.at("shape").at(0).get<std::size_t>();
      layer.in = lj.at("shape").at(1).get<std::size_t>();
      layer.weights = lj.at("weights").get<std::vector<double>>();
      layer.bias = lj.at("bias").get<std::vector<double>>();
      if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
        throw Error(Errc::BadModelFile, "layer arrays do not match shape");
      }
      m.layers.push_back(std::move(layer));
    }
    if (m.layers.size() + 1 != m.layer_sizes.size()) {
      throw Error(Errc::BadModelFile, "layer count does not match layer_sizes");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadModelFile, e.what());
  }
}

}  // namespace kglp
