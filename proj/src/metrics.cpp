#include "kglp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kglp/error.hpp"
#include "kglp/rng.hpp"

namespace kglp {

double f_measure(std::span<const ScoredExample> examples, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& e : examples) {
    const bool predicted = e.score >= threshold;
    if (e.label == 1) {
      predicted ? ++tp : ++fn;
    } else if (predicted) {
      ++fp;
    }
  }
  if (tp + fn == 0) throw Error(Errc::NoPositives, "F-measure needs at least one positive");
  const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double roc_auc(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return examples[a].score < examples[b].score; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && examples[order[j]].score == examples[order[i]].score) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (examples[order[t]].label == 1) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = examples.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(Errc::SingleClass, "ROC AUC needs both classes");
  const double np = static_cast<double>(n_pos);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / n);
  return out;
}

BaselineTable BaselineTable::load(std::istream& in) {
  BaselineTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    std::string relation;
    BaselineEntry entry;
    if (!std::getline(row, relation, '\t') || !(row >> entry.f_measure >> entry.roc_auc)) {
      throw Error(Errc::BadBaselineFile, "line " + std::to_string(line_number));
    }
    table.set(relation, entry);
  }
  return table;
}

BaselineTable BaselineTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::BadBaselineFile, "cannot open " + path);
  return load(in);
}

const BaselineEntry* BaselineTable::find(const std::string& relation) const {
  auto it = entries_.find(relation);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<DeltaRow> delta_report(std::span<const MetricRow> measured, const BaselineTable& baseline) {
  std::map<std::pair<std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& row : measured) {
    auto& [fs, aucs] = groups[{row.relation, row.dim}];
    fs.push_back(row.f_measure);
    aucs.push_back(row.roc_auc);
  }
  std::vector<DeltaRow> out;
  for (const auto& [key, values] : groups) {
    const BaselineEntry* base = baseline.find(key.first);
    if (!base) throw Error(Errc::UnknownBaselineRelation, key.first + " is not in the baseline table");
    DeltaRow row;
    row.relation = key.first;
    row.dim = key.second;
    row.f_measure = mean_std(values.first).mean;
    row.roc_auc = mean_std(values.second).mean;
    row.delta_f = row.f_measure - base->f_measure;
    row.delta_auc = row.roc_auc - base->roc_auc;
    out.push_back(row);
  }
  return out;
}

std::string format_delta(double delta) {
  double rounded = std::round(delta * 1000.0) / 1000.0;
  if (rounded == 0.0) rounded = 0.0;  // no "-0.000"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", rounded);
  return buf;
}

std::string render_delta_table(std::span<const DeltaRow> rows) {
  std::vector<std::string> relations;
  std::vector<std::size_t> dims;
  for (const auto& r : rows) {
    if (std::find(relations.begin(), relations.end(), r.relation) == relations.end()) {
      relations.push_back(r.relation);
    }
    if (std::find(dims.begin(), dims.end(), r.dim) == dims.end()) dims.push_back(r.dim);
  }
  std::sort(dims.begin(), dims.end());
  std::size_t width = 8;
  for (const auto& r : relations) width = std::max(width, r.size());

  std::ostringstream out;
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  auto cell = [&](const std::string& rel, std::size_t dim, bool f) -> std::string {
    for (const auto& r : rows) {
      if (r.relation == rel && r.dim == dim) return format_delta(f ? r.delta_f : r.delta_auc);
    }
    return "";
  };
  out << pad("", width) << " | " << pad("F-measure", dims.size() * 8) << " | ROC AUC\n";
  out << pad("relation", width) << " |";
  for (int block = 0; block < 2; ++block) {
    for (auto d : dims) out << ' ' << pad(std::to_string(d), 7);
    if (block == 0) out << " |";
  }
  out << '\n';
  for (const auto& rel : relations) {
    out << pad(rel, width) << " |";
    for (int block = 0; block < 2; ++block) {
      for (auto d : dims) out << ' ' << pad(cell(rel, d, block == 0), 7);
      if (block == 0) out << " |";
    }
    out << '\n';
  }
  return out.str();
}

void write_metrics_csv(std::span<const MetricRow> rows, std::ostream& out) {
  out << "relation,dim,fold,f_measure,roc_auc\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.f_measure, r.roc_auc);
    out << r.relation << ',' << r.dim << ',' << r.fold << ',' << buf << '\n';
  }
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::vector<MetricRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line_number == 1 || line.empty()) continue;
    std::istringstream row(line);
    MetricRow r;
    std::string dim, fold, f, auc;
    if (!std::getline(row, r.relation, ',') || !std::getline(row, dim, ',') ||
        !std::getline(row, fold, ',') || !std::getline(row, f, ',') || !std::getline(row, auc)) {
      throw Error(Errc::MalformedRow, "metrics line " + std::to_string(line_number));
    }
    try {
      r.dim = std::stoul(dim);
      r.fold = std::stoul(fold);
      r.f_measure = std::stod(f);
      r.roc_auc = std::stod(auc);
    } catch (const std::exception&) {
      throw Error(Errc::MalformedRow, "metrics line " + std::to_string(line_number));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------

FeatureMatrix pair_features(const EmbeddingMatrix& embeddings, std::span<const Edge> pairs,
                            LinkOperator op) {
  FeatureMatrix x(op == LinkOperator::Concat ? 2 * embeddings.dim() : embeddings.dim());
  for (const Edge& e : pairs) {
    x.append(featurize(embeddings.row(e.subject), embeddings.row(e.object), op));
  }
  return x;
}

FoldScorer classifier_scorer(const ClassifierSpec& spec) {
  return [spec](const FoldContext& ctx) {
    std::vector<Edge> train(ctx.split.train_pos.begin(), ctx.split.train_pos.end());
    std::vector<int> labels(train.size(), 1);
    train.insert(train.end(), ctx.split.train_neg.begin(), ctx.split.train_neg.end());
    labels.resize(train.size(), 0);
    const FeatureMatrix x = pair_features(ctx.embeddings, train, spec.op);

    std::vector<Edge> test(ctx.split.test_pos.begin(), ctx.split.test_pos.end());
    test.insert(test.end(), ctx.split.test_neg.begin(), ctx.split.test_neg.end());
    const FeatureMatrix tx = pair_features(ctx.embeddings, test, spec.op);

    std::vector<ScoredExample> scored(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) scored[i].label = i < ctx.split.test_pos.size();

    if (spec.kind == ClassifierKind::LogReg) {
      LogRegConfig cfg = spec.logreg;
      cfg.seed = ctx.seed;
      const LogisticModel model = train_logreg(x, labels, cfg);
      for (std::size_t i = 0; i < test.size(); ++i) scored[i].score = predict_proba(model, tx.row(i));
    } else {
      MlpConfig cfg = spec.mlp;
      cfg.seed = ctx.seed;
      const MlpModel model = train_mlp(x, labels, cfg);
      for (std::size_t i = 0; i < test.size(); ++i) scored[i].score = predict_proba(model, tx.row(i));
    }
    return scored;
  };
}

std::uint64_t fold_plan_seed(std::uint64_t seed) { return derive_seed(seed, "folds"); }

FoldSeeds fold_seeds(std::uint64_t seed, std::size_t dim, std::size_t fold) {
  const std::string f = std::to_string(fold);
  const std::string df = std::to_string(dim) + "/" + f;
  return {derive_seed(seed, "split/" + f), derive_seed(seed, "embed/" + df),
          derive_seed(seed, "classifier/" + df)};
}

MetricRow evaluate_fold(const KnowledgeGraph& kg, const FoldPlan& plan, std::size_t fold,
                        std::size_t dim, std::uint64_t seed, const CrossValidationOptions& options,
                        const EmbeddingMatrix* shared, const EvaluationSplit* prebuilt_split) {
  const FoldSeeds seeds = fold_seeds(seed, dim, fold);
  const EvaluationSplit split =
      prebuilt_split ? *prebuilt_split : build_split(kg, plan, fold, seeds.split);
  const EdgeSet training = embedding_training_edges(kg, split);

  const LeakageReport audit = audit_leakage(kg, split, shared ? EdgeSet{} : training);
  if (!audit.clean()) {
    std::string msg = std::to_string(audit.violations.size()) + " leakage violation(s): ";
    msg += describe(kg, audit.violations.front());
    throw Error(Errc::AuditViolation, msg);
  }

  EmbeddingMatrix trained;
  if (!shared) {
    TrainConfig cfg = options.embed;
    cfg.dim = dim;
    cfg.seed = seeds.embed;
    trained = cfg.epochs == 0 ? initial_embeddings(kg.entity_count(), dim, cfg.seed)
                              : train_embeddings(training, kg.entity_count(), cfg).embeddings;
  }
  const EmbeddingMatrix& embeddings = shared ? *shared : trained;

  const FoldScorer& scorer = options.scorer ? options.scorer : classifier_scorer({});
  const std::vector<ScoredExample> scored = scorer(FoldContext{kg, split, embeddings, seeds.classifier});

  MetricRow row;
  row.relation = options.relation_name.empty() ? kg.relation_iri(plan.relation) : options.relation_name;
  row.dim = dim;
  row.fold = fold;
  row.f_measure = f_measure(scored);
  row.roc_auc = roc_auc(scored);
  return row;
}

CrossValidationResult cross_validate(const KnowledgeGraph& kg, RelationId relation, std::size_t dim,
                                     std::uint64_t seed, const CrossValidationOptions& options) {
  const FoldPlan plan = make_folds(kg, relation, options.k, fold_plan_seed(seed));
  std::optional<EmbeddingMatrix> shared;
  if (options.shared_embeddings) {
    TrainConfig cfg = options.embed;
    cfg.dim = dim;
    cfg.seed = derive_seed(seed, "shared-embed/" + std::to_string(dim));
    shared = train_embeddings(flattened_edges(kg), kg.entity_count(), cfg).embeddings;
  }
  CrossValidationResult result;
  std::vector<double> fs, aucs;
  for (std::size_t fold = 0; fold < options.k; ++fold) {
    result.rows.push_back(
        evaluate_fold(kg, plan, fold, dim, seed, options, shared ? &*shared : nullptr));
    fs.push_back(result.rows.back().f_measure);
    aucs.push_back(result.rows.back().roc_auc);
  }
  result.f_measure = mean_std(fs);
  result.roc_auc = mean_std(aucs);
  return result;
}

}  // namespace kglp
