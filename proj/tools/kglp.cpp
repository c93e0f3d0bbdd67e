// kglp command-line tool. Each subcommand maps to one library stage; `run`
// chains them under a JSON config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "kglp/embed.hpp"
#include "kglp/kg.hpp"
#include "kglp/link_model.hpp"
#include "kglp/metrics.hpp"
#include "kglp/pipeline.hpp"
#include "kglp/rdf.hpp"
#include "kglp/rng.hpp"
#include "kglp/split.hpp"
#include "kglp/synth.hpp"

namespace fs = std::filesystem;
using namespace kglp;

namespace {

struct InputFlags {
  InputSpec spec;
  bool lenient = false;

  void attach(CLI::App* app) {
    app->add_option("--triples", spec.triples, "N-Triples / prefixed triples file");
    app->add_option("--tsv", spec.tsv, "relation<TAB>subject<TAB>object edge file");
    app->add_option("--snapshot", spec.snapshot, "binary graph snapshot");
    app->add_option("--prefixes", spec.prefixes, "JSON prefix map");
    app->add_option("--prefix", spec.prefix_flags, "LABEL=IRI prefix binding (repeatable)");
    app->add_option("--schema", spec.schema, "JSON relation schema");
    app->add_flag("--strict", "reject pairs asserted under two relations (default)");
    app->add_flag("--lenient", lenient, "keep such pairs and report them");
  }

  InputSpec resolved() const {
    InputSpec s = spec;
    s.strict = !lenient;
    const int n = !s.triples.empty() + !s.tsv.empty() + !s.snapshot.empty();
    if (n != 1) throw Error(Errc::InvalidConfig, "input: exactly one of --triples, --tsv, --snapshot is required");
    return s;
  }
};

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  return in;
}

void write_graph(const KnowledgeGraph& kg, const std::string& path) {
  if (path.empty() || path == "-") {
    write_tsv(kg, std::cout);
  } else if (fs::path(path).extension() == ".tsv") {
    auto out = open_out(path);
    write_tsv(kg, out);
  } else {
    auto out = open_out(path, true);
    write_snapshot(kg, out);
  }
}

std::uint64_t seed_or_env(const std::optional<std::uint64_t>& flag) {
  PipelineConfig c;
  c.seed = flag;
  return effective_seed(c);
}

ClassifierKind parse_classifier(const std::string& s) {
  if (s == "logreg") return ClassifierKind::LogReg;
  if (s == "mlp") return ClassifierKind::Mlp;
  throw Error(Errc::InvalidConfig, "classifier: expected logreg or mlp, got " + s);
}

EmbeddingMatrix load_embeddings(const std::string& path, const KnowledgeGraph& kg) {
  if (fs::path(path).extension() == ".bin") {
    auto in = open_in(path, true);
    return read_embeddings_binary(in);
  }
  auto in = open_in(path);
  return read_embeddings_text(in, kg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph link prediction with log-linear entity embeddings"};
  app.require_subcommand(1);

  // ingest / flatten / stats
  InputFlags ingest_in, flatten_in, stats_in;
  std::string ingest_out, flatten_out;
  auto* ingest = app.add_subcommand("ingest", "parse input into a graph snapshot (.tsv output for TSV)");
  ingest_in.attach(ingest);
  ingest->add_option("--out", ingest_out, "output path; '-' or omitted prints TSV");

  std::string pattern = AnonymousMatcher{}.pattern;
  bool structural = false;
  auto* flatten = app.add_subcommand("flatten", "collapse anonymous instances into direct edges");
  flatten_in.attach(flatten);
  flatten->add_option("--out", flatten_out, "output path; '-' or omitted prints TSV");
  flatten->add_option("--pattern", pattern, "regex identifying anonymous instance IRIs");
  flatten->add_flag("--structural", structural, "detect anonymous nodes by shape instead of IRI");

  bool stats_short = false;
  auto* stats = app.add_subcommand("stats", "edge count per relation");
  stats_in.attach(stats);
  stats->add_flag("--short", stats_short, "print relation local names");

  // split
  InputFlags split_in;
  std::string split_relation, split_out = "splits";
  std::size_t split_folds = 5;
  std::optional<std::uint64_t> split_seed;
  auto* split = app.add_subcommand("split", "write the k train/test splits of one relation");
  split_in.attach(split);
  split->add_option("--relation", split_relation, "relation IRI or local name")->required();
  split->add_option("--folds", split_folds, "k");
  split->add_option("--seed", split_seed, "master seed (KGLP_SEED fallback)");
  split->add_option("--out", split_out, "output directory");

  // embed
  InputFlags embed_in;
  TrainConfig tc;
  std::string embed_out, embed_report, embed_exclude, embed_loss = "hinge";
  std::optional<std::uint64_t> embed_seed;
  auto* embed = app.add_subcommand("embed", "train entity embeddings on the flattened graph");
  embed_in.attach(embed);
  embed->add_option("--dim", tc.dim, "embedding dimension");
  embed->add_option("--epochs", tc.epochs, "training epochs");
  embed->add_option("--lr", tc.learning_rate, "learning rate");
  embed->add_option("--negatives", tc.negatives_per_positive, "negatives per positive");
  embed->add_option("--margin", tc.margin, "hinge margin");
  embed->add_option("--loss", embed_loss, "hinge or softmax")->check(CLI::IsMember({"hinge", "softmax"}));
  embed->add_option("--threads", tc.threads, "lock-free SGD workers");
  embed->add_option("--seed", embed_seed, "seed (KGLP_SEED fallback)");
  embed->add_option("--exclude-split", embed_exclude, "split file whose test edges are withheld");
  embed->add_option("--out", embed_out, "embedding file (.bin for binary, text otherwise)");
  embed->add_option("--report", embed_report, "training report JSON path (also printed)");

  // classify
  InputFlags classify_in;
  std::string classify_split, classify_embeddings, classify_kind = "logreg", classify_model;
  std::vector<std::size_t> classify_hidden = {200};
  std::optional<std::uint64_t> classify_seed;
  auto* classify = app.add_subcommand("classify", "train and test a classifier on one split");
  classify_in.attach(classify);
  classify->add_option("--split", classify_split, "split file")->required();
  classify->add_option("--embeddings", classify_embeddings, "embedding file")->required();
  classify->add_option("--classifier", classify_kind, "logreg or mlp");
  classify->add_option("--hidden", classify_hidden, "MLP hidden sizes")->delimiter(',');
  classify->add_option("--seed", classify_seed, "seed (KGLP_SEED fallback)");
  classify->add_option("--model-out", classify_model, "write the trained model as JSON");

  // run / evaluate share the pipeline flags
  PipelineConfig cli_cfg;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::vector<std::size_t> dims_flag, hidden_flag;
  std::optional<std::size_t> folds_flag, threads_flag;
  std::vector<std::string> relation_flag, prefix_flag;
  std::string classifier_flag, out_flag, triples_flag, tsv_flag, snapshot_flag, prefixes_flag, schema_flag,
      baseline_flag, splits_flag;
  bool strict_flag = false, lenient_flag = false, shared_flag = false;
  auto add_pipeline_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON pipeline config");
    sub->add_option("--seed", seed_flag, "master seed (KGLP_SEED fallback)");
    sub->add_option("--dims", dims_flag, "embedding dimensions, e.g. 5,10,20,50")->delimiter(',');
    sub->add_option("--folds", folds_flag, "cross-validation folds");
    sub->add_option("--relation", relation_flag, "relation to evaluate (repeatable)");
    sub->add_option("--classifier", classifier_flag, "logreg or mlp");
    sub->add_option("--hidden", hidden_flag, "MLP hidden sizes, e.g. 200")->delimiter(',');
    sub->add_option("--threads", threads_flag, "worker pool size");
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--prefix", prefix_flag, "LABEL=IRI prefix binding (repeatable)");
    sub->add_flag("--strict", strict_flag, "reject pairs asserted under two relations");
    sub->add_flag("--lenient", lenient_flag, "keep such pairs and report them");
    sub->add_flag("--shared-embeddings", shared_flag, "one embedding per dim for all folds (non-faithful)");
    sub->add_option("--triples", triples_flag, "triples input");
    sub->add_option("--tsv", tsv_flag, "TSV edge input");
    sub->add_option("--snapshot", snapshot_flag, "snapshot input");
    sub->add_option("--prefixes", prefixes_flag, "JSON prefix map");
    sub->add_option("--schema", schema_flag, "JSON relation schema");
    sub->add_option("--baseline", baseline_flag, "baseline TSV for delta reporting");
    sub->add_option("--splits", splits_flag, "directory of pre-built split files");
  };
  auto* run = app.add_subcommand("run", "full pipeline into --out");
  add_pipeline_flags(run);
  auto* evaluate = app.add_subcommand("evaluate", "cross-validate and print per-fold metrics CSV");
  add_pipeline_flags(evaluate);

  // report
  std::string report_metrics, report_baseline;
  auto* report = app.add_subcommand("report", "delta table of measured fold means against a baseline");
  report->add_option("--metrics", report_metrics, "folds CSV")->required();
  report->add_option("--baseline", report_baseline, "baseline TSV")->required();

  // synth
  std::string synth_kind = "random", synth_out;
  std::size_t synth_entities = 1000, synth_edges = 5000, synth_relations = 1;
  std::uint64_t synth_seed = 1;
  bool synth_entities_set = false, synth_edges_set = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic graph as TSV");
  synth_cmd->add_option("--kind", synth_kind, "random, latent, blocks, asymmetric, reified")
      ->check(CLI::IsMember({"random", "latent", "blocks", "asymmetric", "reified"}));
  auto* entities_opt = synth_cmd->add_option("--entities", synth_entities, "entity count (random; per side for latent)");
  auto* edges_opt = synth_cmd->add_option("--edges", synth_edges, "edge or assertion count (random, reified, latent)");
  synth_cmd->add_option("--relations", synth_relations, "relation count (random, reified)");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output path; stdout when omitted");

  try {
    app.parse(argc, argv);
    synth_entities_set = entities_opt->count() > 0;
    synth_edges_set = edges_opt->count() > 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) {
      KnowledgeGraph kg = load_graph(ingest_in.resolved());
      write_graph(kg, ingest_out);
      std::fprintf(stderr, "%zu entities, %zu relations, %zu edges\n", kg.entity_count(), kg.relation_count(),
                   kg.edge_count());
    } else if (*flatten) {
      const KnowledgeGraph kg = load_graph(flatten_in.resolved());
      AnonymousMatcher m;
      m.pattern = pattern;
      m.mode = structural ? AnonymousMatcher::Mode::Structural : AnonymousMatcher::Mode::Pattern;
      const KnowledgeGraph flat = collapse_anonymous_instances(kg, m);
      write_graph(flat, flatten_out);
      const auto violations = verify_flattening_safety(flat);
      std::fprintf(stderr, "%zu -> %zu entities, %zu ambiguous pair(s)\n", kg.entity_count(), flat.entity_count(),
                   violations.size());
    } else if (*stats) {
      const KnowledgeGraph kg = load_graph(stats_in.resolved());
      for (const auto& [iri, count] : relation_stats(kg)) {
        std::string name = iri;
        if (stats_short) {
          const auto cut = iri.find_last_of("/#");
          if (cut != std::string::npos) name = iri.substr(cut + 1);
        }
        std::printf("%s\t%zu\n", name.c_str(), count);
      }
    } else if (*split) {
      const KnowledgeGraph kg = load_graph(split_in.resolved());
      const RelationId rel = resolve_relation(kg, split_relation);
      const std::uint64_t rseed = relation_seed(seed_or_env(split_seed), kg.relation_iri(rel));
      const FoldPlan plan = make_folds(kg, rel, split_folds, fold_plan_seed(rseed));
      fs::create_directories(split_out);
      for (std::size_t fold = 0; fold < split_folds; ++fold) {
        const EvaluationSplit s = build_split(kg, plan, fold, fold_seeds(rseed, 0, fold).split);
        const std::string path = (fs::path(split_out) / ("fold" + std::to_string(fold) + ".tsv")).string();
        auto out = open_out(path);
        write_split_tsv(kg, s, split_folds, rseed, out);
        std::printf("%s\ttrain_pos=%zu\ttest_pos=%zu\ttrain_neg=%zu\ttest_neg=%zu\n", path.c_str(), s.train_pos.size(),
                    s.test_pos.size(), s.train_neg.size(), s.test_neg.size());
      }
    } else if (*embed) {
      const KnowledgeGraph kg = load_graph(embed_in.resolved());
      tc.seed = seed_or_env(embed_seed);
      tc.loss = embed_loss == "softmax" ? EmbedLoss::Softmax : EmbedLoss::Hinge;
      EdgeSet edges;
      if (!embed_exclude.empty()) {
        auto in = open_in(embed_exclude);
        edges = embedding_training_edges(kg, read_split_tsv(kg, in));
      } else {
        edges = flattened_edges(kg);
      }
      const TrainResult r = train_embeddings(edges, kg.entity_count(), tc);
      if (!embed_out.empty()) {
        if (fs::path(embed_out).extension() == ".bin") {
          auto out = open_out(embed_out, true);
          write_embeddings_binary(r.embeddings, out);
        } else {
          auto out = open_out(embed_out);
          write_embeddings_text(r.embeddings, kg, out);
        }
      }
      const std::string json_report = train_report_json(r.report, tc);
      if (!embed_report.empty()) open_out(embed_report) << json_report << "\n";
      std::printf("%s\n", json_report.c_str());
    } else if (*classify) {
      const KnowledgeGraph kg = load_graph(classify_in.resolved());
      auto split_stream = open_in(classify_split);
      const EvaluationSplit s = read_split_tsv(kg, split_stream);
      const EmbeddingMatrix emb = load_embeddings(classify_embeddings, kg);
      if (emb.rows() != kg.entity_count()) {
        throw Error(Errc::DimensionMismatch, "embedding rows " + std::to_string(emb.rows()) + " != entities " +
                                                 std::to_string(kg.entity_count()));
      }
      ClassifierSpec spec;
      spec.kind = parse_classifier(classify_kind);
      spec.mlp.hidden = classify_hidden;
      const std::uint64_t seed = seed_or_env(classify_seed);
      const std::vector<ScoredExample> scored = classifier_scorer(spec)(FoldContext{kg, s, emb, seed});
      std::printf("f_measure=%.6f\troc_auc=%.6f\tn=%zu\n", f_measure(scored), roc_auc(scored), scored.size());
      if (!classify_model.empty()) {
        std::vector<Edge> train(s.train_pos.begin(), s.train_pos.end());
        std::vector<int> labels(train.size(), 1);
        train.insert(train.end(), s.train_neg.begin(), s.train_neg.end());
        labels.resize(train.size(), 0);
        const FeatureMatrix x = pair_features(emb, train, spec.op);
        auto out = open_out(classify_model);
        if (spec.kind == ClassifierKind::LogReg) {
          spec.logreg.seed = seed;
          out << to_json(train_logreg(x, labels, spec.logreg), spec.logreg).dump(2) << "\n";
        } else {
          spec.mlp.seed = seed;
          out << to_json(train_mlp(x, labels, spec.mlp), spec.mlp).dump(2) << "\n";
        }
      }
    } else if (*run || *evaluate) {
      PipelineConfig cfg;
      if (!config_path.empty()) {
        auto in = open_in(config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        cfg = config_from_json(buf.str(), fs::path(config_path).parent_path().string());
      }
      // Flags win over the config file.
      if (seed_flag) cfg.seed = seed_flag;
      if (!dims_flag.empty()) cfg.dims = dims_flag;
      if (folds_flag) cfg.folds = *folds_flag;
      if (!relation_flag.empty()) cfg.relations = relation_flag;
      if (!classifier_flag.empty()) cfg.classifier = parse_classifier(classifier_flag);
      if (!hidden_flag.empty()) cfg.mlp.hidden = hidden_flag;
      if (threads_flag) cfg.threads = *threads_flag;
      if (!out_flag.empty()) cfg.out = out_flag;
      for (const auto& p : prefix_flag) cfg.input.prefix_flags.push_back(p);
      if (strict_flag && lenient_flag) throw Error(Errc::InvalidConfig, "strict: --strict and --lenient conflict");
      if (strict_flag) cfg.input.strict = true;
      if (lenient_flag) cfg.input.strict = false;
      if (shared_flag) cfg.shared_embeddings = true;
      if (!triples_flag.empty() || !tsv_flag.empty() || !snapshot_flag.empty()) {
        cfg.input.triples = triples_flag;
        cfg.input.tsv = tsv_flag;
        cfg.input.snapshot = snapshot_flag;
      }
      if (!prefixes_flag.empty()) cfg.input.prefixes = prefixes_flag;
      if (!schema_flag.empty()) cfg.input.schema = schema_flag;
      if (!baseline_flag.empty()) cfg.baseline = baseline_flag;
      if (!splits_flag.empty()) cfg.splits_dir = splits_flag;

      if (*evaluate && out_flag.empty()) {
        cfg.out = (fs::temp_directory_path() / ("kglp-evaluate-" + std::to_string(::getpid()))).string();
      }
      const PipelineResult r = run_pipeline(cfg);
      if (*evaluate) {
        write_metrics_csv(r.rows, std::cout);
        if (out_flag.empty()) fs::remove_all(cfg.out);
      } else {
        std::fprintf(stderr, "%zu fold rows written to %s (config %s)\n", r.rows.size(), cfg.out.c_str(),
                     r.config_hash.c_str());
        if (!r.deltas.empty()) std::printf("%s", render_delta_table(r.deltas).c_str());
      }
    } else if (*report) {
      auto in = open_in(report_metrics);
      const std::vector<MetricRow> rows = read_metrics_csv(in);
      const BaselineTable baseline = BaselineTable::load_file(report_baseline);
      std::printf("%s", render_delta_table(delta_report(rows, baseline)).c_str());
    } else if (*synth_cmd) {
      KnowledgeGraph kg;
      if (synth_kind == "random") {
        kg = synth::random_kg(synth_entities, synth_relations, synth_edges, synth_seed);
      } else if (synth_kind == "latent") {
        synth::LatentFactorSpec s;
        s.seed = synth_seed;
        if (synth_entities_set) {
          s.n_domain = s.n_range = synth_entities;
          if (synth_edges_set) {
            s.positive_fraction = static_cast<double>(synth_edges) / static_cast<double>(synth_entities * synth_entities);
          }
        }
        kg = synth::latent_factor_kg(s);
      } else if (synth_kind == "blocks") {
        synth::BlockSpec s;
        s.seed = synth_seed;
        kg = synth::bipartite_blocks(s);
      } else if (synth_kind == "asymmetric") {
        synth::AsymmetricSpec s;
        s.seed = synth_seed;
        kg = synth::asymmetric_kg(s);
      } else {
        kg = synth::reified_kg(synth_edges, synth_relations, synth_seed);
      }
      write_graph(kg, synth_out.empty() ? "-" : synth_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "kglp: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kglp: %s\n", e.what());
    return 3;
  }
  return 0;
}
