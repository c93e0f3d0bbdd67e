#include "kglp/embed.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "kglp/error.hpp"
#include "kglp/rng.hpp"

namespace kglp {

bool EmbeddingMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double batch_loss(double pos_sim, std::span<const double> neg_sims, double margin, EmbedLoss kind) {
  if (neg_sims.empty()) return 0.0;
  if (kind == EmbedLoss::Hinge) {
    double sum = 0.0;
    for (double n : neg_sims) sum += std::max(0.0, margin - pos_sim + n);
    return sum / static_cast<double>(neg_sims.size());
  }
  double hi = pos_sim;
  for (double n : neg_sims) hi = std::max(hi, n);
  double z = std::exp(pos_sim - hi);
  for (double n : neg_sims) z += std::exp(n - hi);
  return -(pos_sim - hi) + std::log(z);
}

LossGradient batch_loss_gradient(double pos_sim, std::span<const double> neg_sims, double margin,
                                 EmbedLoss kind) {
  LossGradient g;
  g.d_neg.assign(neg_sims.size(), 0.0);
  if (neg_sims.empty()) return g;
  if (kind == EmbedLoss::Hinge) {
    const double inv_k = 1.0 / static_cast<double>(neg_sims.size());
    for (std::size_t i = 0; i < neg_sims.size(); ++i) {
      if (margin - pos_sim + neg_sims[i] > 0.0) {
        g.d_pos -= inv_k;
        g.d_neg[i] = inv_k;
      }
    }
    return g;
  }
  double hi = pos_sim;
  for (double n : neg_sims) hi = std::max(hi, n);
  double z = std::exp(pos_sim - hi);
  for (double n : neg_sims) z += std::exp(n - hi);
  g.d_pos = std::exp(pos_sim - hi) / z - 1.0;
  for (std::size_t i = 0; i < neg_sims.size(); ++i) g.d_neg[i] = std::exp(neg_sims[i] - hi) / z;
  return g;
}

RowGradients example_gradients(std::span<const double> u, std::span<const double> v,
                               std::span<const std::span<const double>> negs, double margin,
                               EmbedLoss kind) {
  const double pos = similarity(u, v);
  std::vector<double> neg_sims(negs.size());
  for (std::size_t i = 0; i < negs.size(); ++i) neg_sims[i] = similarity(u, negs[i]);

  RowGradients out;
  out.loss = batch_loss(pos, neg_sims, margin, kind);
  const LossGradient g = batch_loss_gradient(pos, neg_sims, margin, kind);
  const std::size_t d = u.size();
  out.u.assign(d, 0.0);
  out.v.assign(d, 0.0);
  out.negs.assign(negs.size(), std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    out.u[j] = g.d_pos * v[j];
    out.v[j] = g.d_pos * u[j];
  }
  for (std::size_t i = 0; i < negs.size(); ++i) {
    if (g.d_neg[i] == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      out.u[j] += g.d_neg[i] * negs[i][j];
      out.negs[i][j] = g.d_neg[i] * u[j];
    }
  }
  return out;
}

EmbeddingMatrix initial_embeddings(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  EmbeddingMatrix m(rows, dim);
  Rng rng(derive_seed(seed, "init"));
  const double bound = 1.0 / static_cast<double>(dim);
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
  return m;
}

namespace {

template <bool Atomic>
double load(double& x) {
  if constexpr (Atomic) {
    return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
  } else {
    return x;
  }
}

template <bool Atomic>
void store(double& x, double value) {
  if constexpr (Atomic) {
    std::atomic_ref<double>(x).store(value, std::memory_order_relaxed);
  } else {
    x = value;
  }
}

struct EpochTotals {
  double loss = 0.0;
  std::size_t examples = 0;
  std::size_t skipped = 0;
};

// Per-worker scratch buffers, reused across examples.
struct Scratch {
  std::vector<double> u, v;
  std::vector<std::vector<double>> negs;
  std::vector<EntityId> neg_ids;
};

constexpr int kMaxNegativeTries = 20;

template <bool Atomic>
EpochTotals run_range(EmbeddingMatrix& m, const EdgeSet& edges, std::span<const Edge> order,
                      const TrainConfig& config, Rng& rng, const TrainHooks& hooks) {
  EpochTotals totals;
  const std::size_t d = m.dim();
  const std::size_t n_entities = m.rows();
  Scratch s;
  s.u.resize(d);
  s.v.resize(d);
  s.negs.assign(config.negatives_per_positive, std::vector<double>(d));
  std::vector<std::span<const double>> neg_views;

  auto copy_row = [&](EntityId id, std::vector<double>& dst) {
    auto row = m.row(id);
    for (std::size_t j = 0; j < d; ++j) dst[j] = load<Atomic>(row[j]);
  };
  auto apply = [&](EntityId id, const std::vector<double>& grad) {
    auto row = m.row(id);
    for (std::size_t j = 0; j < d; ++j) {
      store<Atomic>(row[j], load<Atomic>(row[j]) - config.learning_rate * grad[j]);
    }
  };

  for (const Edge& e : order) {
    if (hooks.on_edge_access) hooks.on_edge_access(e);
    s.neg_ids.clear();
    for (std::size_t i = 0; i < config.negatives_per_positive; ++i) {
      for (int attempt = 0; attempt < kMaxNegativeTries; ++attempt) {
        const EntityId cand{static_cast<std::uint32_t>(rng.uniform(n_entities))};
        if (cand == e.object || edges.contains(Edge{e.subject, cand})) continue;
        s.neg_ids.push_back(cand);
        break;
      }
    }
    if (s.neg_ids.empty()) {
      ++totals.skipped;
      continue;
    }
    copy_row(e.subject, s.u);
    copy_row(e.object, s.v);
    neg_views.clear();
    for (std::size_t i = 0; i < s.neg_ids.size(); ++i) {
      copy_row(s.neg_ids[i], s.negs[i]);
      neg_views.emplace_back(s.negs[i]);
    }
    const RowGradients g = example_gradients(s.u, s.v, neg_views, config.margin, config.loss);
    totals.loss += g.loss;
    ++totals.examples;
    apply(e.subject, g.u);
    apply(e.object, g.v);
    for (std::size_t i = 0; i < s.neg_ids.size(); ++i) apply(s.neg_ids[i], g.negs[i]);
  }
  return totals;
}

}  // namespace

TrainResult train_embeddings(const EdgeSet& edges, std::size_t num_entities,
                             const TrainConfig& config, const TrainHooks& hooks) {
  if (edges.empty() || num_entities < 2) throw Error(Errc::EmptyGraph, "no training edges");
  if (config.dim == 0) throw Error(Errc::InvalidConfig, "embedding dim must be positive");
  if (config.negatives_per_positive == 0) {
    throw Error(Errc::InvalidConfig, "negatives_per_positive must be at least 1");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainResult result{initial_embeddings(num_entities, config.dim, config.seed), {}};
  Rng order_rng(derive_seed(config.seed, "order"));
  std::vector<Edge> order(edges.begin(), edges.end());
  const std::size_t threads = std::max<std::size_t>(1, config.threads);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span<Edge>(order));
    EpochTotals totals;
    const std::string epoch_key = "epoch-" + std::to_string(epoch);
    if (threads == 1) {
      Rng rng(derive_seed(config.seed, epoch_key));
      totals = run_range<false>(result.embeddings, edges, order, config, rng, hooks);
    } else {
      std::vector<EpochTotals> parts(threads);
      std::vector<std::jthread> workers;
      const std::size_t chunk = (order.size() + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(order.size(), t * chunk);
        const std::size_t hi = std::min(order.size(), lo + chunk);
        workers.emplace_back([&, t, lo, hi] {
          Rng rng(derive_seed(config.seed, epoch_key + "/worker-" + std::to_string(t)));
          parts[t] = run_range<true>(result.embeddings, edges,
                                     std::span<const Edge>(order).subspan(lo, hi - lo), config, rng,
                                     hooks);
        });
      }
      workers.clear();
      for (const auto& p : parts) {
        totals.loss += p.loss;
        totals.examples += p.examples;
        totals.skipped += p.skipped;
      }
    }
    const double mean = totals.examples ? totals.loss / static_cast<double>(totals.examples) : 0.0;
    if (!std::isfinite(mean) || !result.embeddings.all_finite()) {
      throw Error(Errc::NonFiniteLoss, "diverged in epoch " + std::to_string(epoch));
    }
    result.report.epoch_loss.push_back(mean);
    result.report.examples += totals.examples;
    result.report.skipped += totals.skipped;
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

GradientCheckResult gradient_check(const TrainConfig& config, const EdgeSet& probe,
                                   std::size_t num_entities, const EmbeddingMatrix* start) {
  GradientCheckResult result;
  Rng rng(derive_seed(config.seed, "gradient-check"));
  EmbeddingMatrix m(num_entities, config.dim);
  if (start) {
    if (start->rows() != num_entities || start->dim() != config.dim) {
      throw Error(Errc::DimensionMismatch, "starting matrix does not match the probe");
    }
    m = *start;
  } else {
    for (double& x : m.data()) x = rng.normal() * 0.5;
  }

  constexpr double kStep = 1e-6;
  constexpr double kKinkTolerance = 1e-4;
  const std::size_t k = std::max<std::size_t>(1, config.negatives_per_positive);

  for (const Edge& e : probe) {
    std::vector<EntityId> neg_ids;
    while (neg_ids.size() < k) {
      const EntityId cand{static_cast<std::uint32_t>(rng.uniform(num_entities))};
      if (cand != e.object && !probe.contains(Edge{e.subject, cand})) neg_ids.push_back(cand);
    }

    auto loss_at = [&]() {
      const double pos = similarity(m.row(e.subject), m.row(e.object));
      std::vector<double> neg(k);
      for (std::size_t i = 0; i < k; ++i) neg[i] = similarity(m.row(e.subject), m.row(neg_ids[i]));
      return std::pair{pos, neg};
    };

    const auto [pos, negs] = loss_at();
    if (config.loss == EmbedLoss::Hinge) {
      const bool near_kink = std::any_of(negs.begin(), negs.end(), [&](double n) {
        return std::abs(config.margin - pos + n) < kKinkTolerance;
      });
      if (near_kink) {
        ++result.kinks_skipped;
        continue;
      }
    }

    std::vector<std::span<const double>> views;
    for (EntityId id : neg_ids) views.emplace_back(m.row(id));
    const RowGradients g =
        example_gradients(m.row(e.subject), m.row(e.object), views, config.margin, config.loss);

    // Total analytic gradient per (entity, coordinate).
    std::vector<std::pair<EntityId, std::vector<double>>> totals;
    auto add = [&](EntityId id, const std::vector<double>& grad) {
      auto it = std::find_if(totals.begin(), totals.end(), [&](const auto& p) { return p.first == id; });
      if (it == totals.end()) {
        totals.emplace_back(id, grad);
      } else {
        for (std::size_t j = 0; j < grad.size(); ++j) it->second[j] += grad[j];
      }
    };
    add(e.subject, g.u);
    add(e.object, g.v);
    for (std::size_t i = 0; i < k; ++i) add(neg_ids[i], g.negs[i]);

    const bool inactive =
        config.loss == EmbedLoss::Hinge &&
        std::all_of(negs.begin(), negs.end(), [&](double n) { return config.margin - pos + n < 0.0; });

    for (auto& [id, grad] : totals) {
      auto row = m.row(id);
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double saved = row[j];
        row[j] = saved + kStep;
        const auto [p1, n1] = loss_at();
        const double plus = batch_loss(p1, n1, config.margin, config.loss);
        row[j] = saved - kStep;
        const auto [p2, n2] = loss_at();
        const double minus = batch_loss(p2, n2, config.margin, config.loss);
        row[j] = saved;
        const double numeric = (plus - minus) / (2 * kStep);
        const double scale = std::max({std::abs(numeric), std::abs(grad[j]), 1e-3});
        result.max_relative_error =
            std::max(result.max_relative_error, std::abs(numeric - grad[j]) / scale);
        if (inactive && grad[j] != 0.0) result.inactive_exactly_zero = false;
      }
    }
    ++result.checked;
  }
  return result;
}

}  // namespace kglp
