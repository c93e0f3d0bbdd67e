#include "kglp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kglp/rng.hpp"
#include "kglp/split.hpp"

namespace kglp {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  return out;
}

std::string local_name(std::string_view iri) {
  const auto cut = iri.find_last_of("/#");
  return std::string(cut == std::string_view::npos ? iri : iri.substr(cut + 1));
}

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* operator_name(LinkOperator op) {
  switch (op) {
    case LinkOperator::Concat: return "concat";
    case LinkOperator::Average: return "average";
    case LinkOperator::Hadamard: return "hadamard";
    case LinkOperator::L1: return "l1";
    case LinkOperator::L2: return "l2";
  }
  return "concat";
}

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(Errc::InvalidConfig, field + ": " + why);
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      bad(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

template <class T>
void read_field(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where.empty() ? key : where + "." + key, "wrong type");
  }
}

std::string resolve_path(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

KnowledgeGraph load_graph(const InputSpec& input) {
  KnowledgeGraph kg(input.strict ? AmbiguityMode::Strict : AmbiguityMode::Lenient);
  if (!input.snapshot.empty()) {
    auto in = open_in(input.snapshot, true);
    kg = read_snapshot(in);
  }
  if (!input.schema.empty()) {
    auto in = open_in(input.schema);
    read_schema_json(in, kg);
  }
  if (!input.tsv.empty()) {
    auto in = open_in(input.tsv);
    read_tsv_edges(in, kg);
  }
  if (!input.triples.empty()) {
    PrefixMap prefixes;
    if (!input.prefixes.empty()) {
      auto in = open_in(input.prefixes);
      prefixes = PrefixMap::from_json(in);
    }
    for (const auto& flag : input.prefix_flags) prefixes.bind_flag(flag);
    auto in = open_in(input.triples);
    const IngestResult r = ingest_triples(in, prefixes, kg);
    if (!r.first_errors.empty()) {
      const ParseEvent& e = r.first_errors.front();
      throw Error(Errc::MalformedRow, input.triples + ":" + std::to_string(e.line_number) + ":" +
                                          std::to_string(e.error()->column) + ": " + e.error()->message +
                                          " (" + std::to_string(r.summary.errors) + " bad line(s))");
    }
  }
  return kg;
}

std::uint64_t relation_seed(std::uint64_t master, std::string_view relation_iri) {
  return derive_seed(master, "relation/" + std::string(relation_iri));
}

RelationId resolve_relation(const KnowledgeGraph& kg, const std::string& name) {
  if (auto id = kg.find_relation(name)) return *id;
  std::optional<RelationId> hit;
  for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
    if (local_name(kg.relation_iri(RelationId{r})) != name) continue;
    if (hit) throw Error(Errc::UnknownRelation, "ambiguous relation name " + name);
    hit = RelationId{r};
  }
  if (!hit) throw Error(Errc::UnknownRelation, "no relation named " + name);
  return *hit;
}

PipelineConfig config_from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidConfig, std::string("config: ") + e.what());
  }
  if (!j.is_object()) bad("config", "expected a JSON object");
  reject_unknown(j,
                 {"input", "splits_dir", "flatten", "anonymous", "relations", "dims", "folds", "seed",
                  "embed", "classifier", "threads", "shared_embeddings", "out", "baseline"},
                 "");

  PipelineConfig cfg;
  if (j.contains("input")) {
    const json& in = j["input"];
    if (!in.is_object()) bad("input", "expected an object");
    reject_unknown(in, {"triples", "tsv", "snapshot", "prefixes", "prefix", "schema", "strict"}, "input");
    read_field(in, "triples", cfg.input.triples, "input");
    read_field(in, "tsv", cfg.input.tsv, "input");
    read_field(in, "snapshot", cfg.input.snapshot, "input");
    read_field(in, "prefixes", cfg.input.prefixes, "input");
    read_field(in, "prefix", cfg.input.prefix_flags, "input");
    read_field(in, "schema", cfg.input.schema, "input");
    read_field(in, "strict", cfg.input.strict, "input");
  }
  read_field(j, "splits_dir", cfg.splits_dir, "");
  read_field(j, "flatten", cfg.flatten, "");
  if (j.contains("anonymous")) {
    const json& a = j["anonymous"];
    reject_unknown(a, {"pattern", "structural", "type_predicate"}, "anonymous");
    read_field(a, "pattern", cfg.matcher.pattern, "anonymous");
    read_field(a, "type_predicate", cfg.matcher.type_predicate, "anonymous");
    bool structural = false;
    read_field(a, "structural", structural, "anonymous");
    cfg.matcher.mode = structural ? AnonymousMatcher::Mode::Structural : AnonymousMatcher::Mode::Pattern;
  }
  read_field(j, "relations", cfg.relations, "");
  read_field(j, "dims", cfg.dims, "");
  read_field(j, "folds", cfg.folds, "");
  if (j.contains("seed")) {
    std::uint64_t seed = 0;
    read_field(j, "seed", seed, "");
    cfg.seed = seed;
  }
  if (j.contains("embed")) {
    const json& e = j["embed"];
    reject_unknown(e, {"epochs", "learning_rate", "negatives", "margin", "loss", "threads"}, "embed");
    read_field(e, "epochs", cfg.embed.epochs, "embed");
    read_field(e, "learning_rate", cfg.embed.learning_rate, "embed");
    read_field(e, "negatives", cfg.embed.negatives_per_positive, "embed");
    read_field(e, "margin", cfg.embed.margin, "embed");
    read_field(e, "threads", cfg.embed.threads, "embed");
    std::string loss = "hinge";
    read_field(e, "loss", loss, "embed");
    if (loss == "hinge") cfg.embed.loss = EmbedLoss::Hinge;
    else if (loss == "softmax") cfg.embed.loss = EmbedLoss::Softmax;
    else bad("embed.loss", "expected hinge or softmax, got " + loss);
  }
  if (j.contains("classifier")) {
    const json& c = j["classifier"];
    reject_unknown(c,
                   {"kind", "operator", "hidden", "epochs", "learning_rate", "l2", "momentum",
                    "batch_size"},
                   "classifier");
    std::string kind = "logreg";
    read_field(c, "kind", kind, "classifier");
    if (kind == "logreg") cfg.classifier = ClassifierKind::LogReg;
    else if (kind == "mlp") cfg.classifier = ClassifierKind::Mlp;
    else bad("classifier.kind", "expected logreg or mlp, got " + kind);
    if (c.contains("operator")) {
      std::string op;
      read_field(c, "operator", op, "classifier");
      try {
        cfg.op = parse_link_operator(op);
      } catch (const Error&) {
        bad("classifier.operator", "unknown operator " + op);
      }
    }
    read_field(c, "hidden", cfg.mlp.hidden, "classifier");
    read_field(c, "momentum", cfg.mlp.momentum, "classifier");
    read_field(c, "batch_size", cfg.mlp.batch_size, "classifier");
    read_field(c, "l2", cfg.logreg.l2, "classifier");
    // epochs / learning_rate apply to whichever classifier is selected.
    if (cfg.classifier == ClassifierKind::LogReg) {
      read_field(c, "epochs", cfg.logreg.epochs, "classifier");
      read_field(c, "learning_rate", cfg.logreg.learning_rate, "classifier");
    } else {
      read_field(c, "epochs", cfg.mlp.epochs, "classifier");
      read_field(c, "learning_rate", cfg.mlp.learning_rate, "classifier");
    }
  }
  read_field(j, "threads", cfg.threads, "");
  read_field(j, "shared_embeddings", cfg.shared_embeddings, "");
  read_field(j, "out", cfg.out, "");
  read_field(j, "baseline", cfg.baseline, "");

  for (std::string* p : {&cfg.input.triples, &cfg.input.tsv, &cfg.input.snapshot, &cfg.input.prefixes,
                         &cfg.input.schema, &cfg.splits_dir, &cfg.out, &cfg.baseline}) {
    *p = resolve_path(*p, base_dir);
  }
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["input"] = {{"triples", cfg.input.triples},   {"tsv", cfg.input.tsv},
                {"snapshot", cfg.input.snapshot}, {"prefixes", cfg.input.prefixes},
                {"prefix", cfg.input.prefix_flags}, {"schema", cfg.input.schema},
                {"strict", cfg.input.strict}};
  j["splits_dir"] = cfg.splits_dir;
  j["flatten"] = cfg.flatten;
  j["anonymous"] = {{"pattern", cfg.matcher.pattern},
                    {"structural", cfg.matcher.mode == AnonymousMatcher::Mode::Structural},
                    {"type_predicate", cfg.matcher.type_predicate}};
  j["relations"] = cfg.relations;
  j["dims"] = cfg.dims;
  j["folds"] = cfg.folds;
  j["seed"] = effective_seed(cfg);
  j["embed"] = {{"epochs", cfg.embed.epochs},
                {"learning_rate", cfg.embed.learning_rate},
                {"negatives", cfg.embed.negatives_per_positive},
                {"margin", cfg.embed.margin},
                {"loss", cfg.embed.loss == EmbedLoss::Hinge ? "hinge" : "softmax"},
                {"threads", cfg.embed.threads}};
  const bool mlp = cfg.classifier == ClassifierKind::Mlp;
  j["classifier"] = {{"kind", mlp ? "mlp" : "logreg"},
                     {"operator", operator_name(cfg.op)},
                     {"hidden", cfg.mlp.hidden},
                     {"epochs", mlp ? cfg.mlp.epochs : cfg.logreg.epochs},
                     {"learning_rate", mlp ? cfg.mlp.learning_rate : cfg.logreg.learning_rate},
                     {"l2", cfg.logreg.l2},
                     {"momentum", cfg.mlp.momentum},
                     {"batch_size", cfg.mlp.batch_size}};
  j["threads"] = cfg.threads;
  j["shared_embeddings"] = cfg.shared_embeddings;
  j["out"] = cfg.out;
  j["baseline"] = cfg.baseline;
  return j.dump(2) + "\n";
}

std::uint64_t effective_seed(const PipelineConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  const char* env = std::getenv("KGLP_SEED");
  if (!env || !*env) return kDefaultSeed;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') bad("KGLP_SEED", std::string("not an unsigned integer: ") + env);
  return v;
}

void validate_config(const PipelineConfig& cfg) {
  const int sources = !cfg.input.triples.empty() + !cfg.input.tsv.empty() + !cfg.input.snapshot.empty();
  if (sources != 1) bad("input", "exactly one of triples, tsv, snapshot is required");
  const std::pair<const char*, const std::string*> paths[] = {
      {"input.triples", &cfg.input.triples}, {"input.tsv", &cfg.input.tsv},
      {"input.snapshot", &cfg.input.snapshot}, {"input.prefixes", &cfg.input.prefixes},
      {"input.schema", &cfg.input.schema},     {"splits_dir", &cfg.splits_dir},
      {"baseline", &cfg.baseline}};
  for (const auto& [field, path] : paths) {
    if (!path->empty() && !fs::exists(*path)) bad(field, "no such file: " + *path);
  }
  if (cfg.dims.empty()) bad("dims", "must not be empty");
  for (std::size_t d : cfg.dims) {
    if (d == 0) bad("dims", "every dimension must be positive");
  }
  if (cfg.folds < 2) bad("folds", "k must be at least 2 (got " + std::to_string(cfg.folds) + ")");
  if (cfg.threads == 0) bad("threads", "must be at least 1");
  if (cfg.embed.threads == 0) bad("embed.threads", "must be at least 1");
  if (!(cfg.embed.learning_rate > 0)) bad("embed.learning_rate", "must be positive");
  if (cfg.embed.negatives_per_positive == 0) bad("embed.negatives", "must be at least 1");
  if (!(cfg.embed.margin >= 0)) bad("embed.margin", "must be non-negative");
  if (!(cfg.logreg.learning_rate > 0)) bad("classifier.learning_rate", "must be positive");
  if (!(cfg.mlp.learning_rate > 0)) bad("classifier.learning_rate", "must be positive");
  if (!(cfg.logreg.l2 >= 0)) bad("classifier.l2", "must be non-negative");
  if (cfg.mlp.batch_size == 0) bad("classifier.batch_size", "must be at least 1");
  for (std::size_t h : cfg.mlp.hidden) {
    if (h == 0) bad("classifier.hidden", "layer sizes must be positive");
  }
  if (cfg.out.empty()) bad("out", "must not be empty");
  for (const auto& flag : cfg.input.prefix_flags) {
    try {
      PrefixMap().bind_flag(flag);
    } catch (const Error& e) {
      bad("prefix", e.detail());
    }
  }
  effective_seed(cfg);
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::BadPrefixMap:
      return 2;
    case Errc::AuditViolation:
      return 4;
    default:
      return 3;
  }
}

std::optional<std::string> check_stage_order(const std::vector<StageRecord>& stages) {
  std::set<std::string> all_outputs, produced;
  for (const auto& s : stages) all_outputs.insert(s.outputs.begin(), s.outputs.end());
  for (const auto& s : stages) {
    for (const auto& in : s.inputs) {
      if (all_outputs.contains(in) && !produced.contains(in)) return s.name + " reads " + in;
    }
    produced.insert(s.outputs.begin(), s.outputs.end());
  }
  return std::nullopt;
}

namespace {

struct RelationTask {
  RelationId relation;
  std::string label;
  std::uint64_t seed;
  std::vector<EvaluationSplit> splits;  // by fold
};

struct FoldTask {
  std::size_t relation;  // index into RelationTask list
  std::size_t dim;
  std::size_t fold;
};

/// Split files found in `dir`, keyed by (relation, fold).
std::map<std::pair<std::uint32_t, std::size_t>, EvaluationSplit> read_split_dir(const KnowledgeGraph& kg,
                                                                                const std::string& dir) {
  std::map<std::pair<std::uint32_t, std::size_t>, EvaluationSplit> out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto in = open_in(f.string());
    EvaluationSplit s = read_split_tsv(kg, in);
    const auto key = std::make_pair(s.relation.value, s.fold_index);
    out.insert_or_assign(key, std::move(s));
  }
  return out;
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. The first failure
/// in index order is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  const std::uint64_t master = effective_seed(cfg);
  const fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out / "splits", ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + (out / "splits").string() + ": " + ec.message());

  const std::string effective = config_to_json(cfg);
  json hashed = json::parse(effective);
  hashed.erase("out");
  hashed.erase("threads");
  PipelineResult result;
  result.config_hash = hex64(fnv1a64(hashed.dump()));
  open_out(out / "effective-config.json") << effective;

  std::vector<StageRecord> stages;
  std::vector<std::string> external;
  for (const std::string* p : {&cfg.input.triples, &cfg.input.tsv, &cfg.input.snapshot, &cfg.input.prefixes,
                               &cfg.input.schema}) {
    if (!p->empty()) external.push_back(*p);
  }

  // ingest
  KnowledgeGraph kg = load_graph(cfg.input);
  {
    auto snap = open_out(out / "ingested.kgsnap", true);
    write_snapshot(kg, snap);
  }
  stages.push_back({"ingest", external, {"ingested.kgsnap"}});

  // flatten
  if (cfg.flatten) kg = collapse_anonymous_instances(kg, cfg.matcher);
  const std::size_t flattening_violations = verify_flattening_safety(kg).size();
  {
    auto tsv = open_out(out / "graph.tsv");
    write_tsv(kg, tsv);
  }
  stages.push_back({"flatten", {"ingested.kgsnap"}, {"graph.tsv"}});

  // split
  std::vector<RelationTask> relations;
  if (cfg.relations.empty()) {
    for (std::uint32_t r = 0; r < kg.relation_count(); ++r) {
      const RelationId id{r};
      const std::string& iri = kg.relation_iri(id);
      if (iri == cfg.matcher.type_predicate || kg.edges(id).size() == 0) continue;
      relations.push_back({id, local_name(iri), 0, {}});
    }
  } else {
    for (const auto& name : cfg.relations) relations.push_back({resolve_relation(kg, name), name, 0, {}});
  }
  if (relations.empty()) throw Error(Errc::UnknownRelation, "no relation to evaluate");
  std::map<std::pair<std::uint32_t, std::size_t>, EvaluationSplit> prebuilt;
  std::vector<std::string> split_inputs = {"graph.tsv"};
  if (!cfg.splits_dir.empty()) {
    prebuilt = read_split_dir(kg, cfg.splits_dir);
    split_inputs.push_back(cfg.splits_dir);
  }
  std::vector<std::string> split_files;
  for (auto& rt : relations) {
    rt.seed = relation_seed(master, kg.relation_iri(rt.relation));
    const FoldPlan plan = make_folds(kg, rt.relation, cfg.folds, fold_plan_seed(rt.seed));
    for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
      auto it = prebuilt.find({rt.relation.value, fold});
      rt.splits.push_back(it != prebuilt.end() ? it->second
                                               : build_split(kg, plan, fold, fold_seeds(rt.seed, 0, fold).split));
      const std::string name = "splits/" + slug(rt.label) + ".fold" + std::to_string(fold) + ".tsv";
      auto f = open_out(out / name);
      write_split_tsv(kg, rt.splits.back(), cfg.folds, rt.seed, f);
      split_files.push_back(name);
    }
  }
  stages.push_back({"split", split_inputs, split_files});

  // evaluate
  std::map<std::size_t, EmbeddingMatrix> shared;
  if (cfg.shared_embeddings) {
    const EdgeSet all = flattened_edges(kg);
    for (std::size_t dim : cfg.dims) {
      TrainConfig tc = cfg.embed;
      tc.dim = dim;
      tc.seed = derive_seed(master, "shared-embed/" + std::to_string(dim));
      shared[dim] = tc.epochs == 0 ? initial_embeddings(kg.entity_count(), dim, tc.seed)
                                   : train_embeddings(all, kg.entity_count(), tc).embeddings;
    }
  }
  ClassifierSpec spec;
  spec.kind = cfg.classifier;
  spec.logreg = cfg.logreg;
  spec.mlp = cfg.mlp;
  spec.op = cfg.op;
  CrossValidationOptions options;
  options.k = cfg.folds;
  options.embed = cfg.embed;
  options.scorer = classifier_scorer(spec);
  options.shared_embeddings = cfg.shared_embeddings;

  std::vector<FoldTask> tasks;
  for (std::size_t r = 0; r < relations.size(); ++r) {
    for (std::size_t dim : cfg.dims) {
      for (std::size_t fold = 0; fold < cfg.folds; ++fold) tasks.push_back({r, dim, fold});
    }
  }
  std::vector<MetricRow> rows(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
    const FoldTask& t = tasks[i];
    const RelationTask& rt = relations[t.relation];
    CrossValidationOptions o = options;
    o.relation_name = rt.label;
    FoldPlan plan;  // only the relation is read when the split is supplied
    plan.relation = rt.relation;
    plan.k = cfg.folds;
    rows[i] = evaluate_fold(kg, plan, t.fold, t.dim, rt.seed, o,
                            cfg.shared_embeddings ? &shared.at(t.dim) : nullptr, &rt.splits[t.fold]);
  });
  std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.relation, a.dim, a.fold) < std::tie(b.relation, b.dim, b.fold);
  });
  {
    auto csv = open_out(out / "folds.csv");
    write_metrics_csv(rows, csv);
  }
  stages.push_back({"evaluate", split_files, {"folds.csv"}});
  stages.back().inputs.insert(stages.back().inputs.begin(), "graph.tsv");

  // report
  json summary;
  summary["faithful"] = !cfg.shared_embeddings;
  summary["seed"] = master;
  summary["config_hash"] = result.config_hash;
  summary["flattening_violations"] = flattening_violations;
  json per_relation = json::array();
  for (const auto& rt : relations) {
    json rel = {{"relation", rt.label},
                {"iri", kg.relation_iri(rt.relation)},
                {"edges", kg.edges(rt.relation).size()},
                {"dims", json::array()}};
    for (std::size_t dim : cfg.dims) {
      std::vector<double> f, auc;
      for (const auto& row : rows) {
        if (row.relation == rt.label && row.dim == dim) {
          f.push_back(row.f_measure);
          auc.push_back(row.roc_auc);
        }
      }
      rel["dims"].push_back({{"dim", dim},
                             {"f_measure", mean_std_json(mean_std(f))},
                             {"roc_auc", mean_std_json(mean_std(auc))}});
    }
    per_relation.push_back(rel);
  }
  summary["relations"] = per_relation;

  std::vector<std::string> report_inputs = {"folds.csv"};
  if (!cfg.baseline.empty()) {
    const BaselineTable baseline = BaselineTable::load_file(cfg.baseline);
    std::vector<MetricRow> known;
    json missing = json::array();
    for (const auto& rt : relations) {
      if (!baseline.find(rt.label)) missing.push_back(rt.label);
    }
    for (const auto& row : rows) {
      if (baseline.find(row.relation)) known.push_back(row);
    }
    result.deltas = delta_report(known, baseline);
    json deltas = json::array();
    for (const auto& d : result.deltas) {
      deltas.push_back({{"relation", d.relation},
                        {"dim", d.dim},
                        {"f_measure", d.f_measure},
                        {"roc_auc", d.roc_auc},
                        {"delta_f", format_delta(d.delta_f)},
                        {"delta_auc", format_delta(d.delta_auc)}});
    }
    summary["deltas"] = deltas;
    summary["baseline_missing"] = missing;
    report_inputs.push_back(cfg.baseline);
  }
  open_out(out / "summary.json") << summary.dump(2) << "\n";
  stages.push_back({"report", report_inputs, {"summary.json"}});

  if (auto bad_stage = check_stage_order(stages)) {
    throw Error(Errc::InvalidConfig, "stage order violated: " + *bad_stage);
  }
  json manifest = {{"config_hash", result.config_hash}, {"stages", json::array()}};
  for (const auto& s : stages) {
    manifest["stages"].push_back({{"name", s.name}, {"inputs", s.inputs}, {"outputs", s.outputs}});
  }
  open_out(out / "manifest.json") << manifest.dump(2) << "\n";

  result.rows = std::move(rows);
  return result;
}

}  // namespace kglp
