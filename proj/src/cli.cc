// SPDX-License-Identifier: Apache-2.0

#include "topoledger/cli.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "topoledger/augment.h"
#include "topoledger/coa_graph.h"
#include "topoledger/embed.h"
#include "topoledger/error.h"
#include "topoledger/eval.h"
#include "topoledger/experiment.h"
#include "topoledger/mapper.h"
#include "topoledger/rng.h"
#include "topoledger/synth.h"
#include "topoledger/text_io.h"
#include "topoledger/train.h"

namespace topoledger {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr std::string_view kModule = "cli";

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool quiet = false;
};

// Collects everything a run touched so the manifest can be written at the end.
class RunContext {
 public:
  RunContext(const GlobalOptions& global, std::ostream& out, std::ostream& err)
      : global_(global), out_(out), err_(err), start_(std::chrono::steady_clock::now()) {}

  std::ostream& out() { return out_; }
  void warn(const std::string& message) {
    if (!global_.quiet) err_ << "warning: " << message << '\n';
  }
  void info(const std::string& message) {
    if (!global_.quiet) out_ << message << '\n';
  }

  void input(const std::string& path) { inputs_.push_back(path); }
  std::string output_path(const std::string& name) {
    fs::create_directories(global_.out_dir);
    std::string path = (fs::path(global_.out_dir) / name).string();
    outputs_.push_back(path);
    return path;
  }
  std::ofstream open_output(const std::string& name) {
    const std::string path = output_path(name);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::kIo, kModule, "cannot write '" + path + "'");
    return file;
  }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

  void write_manifest(const CLI::App& sub, const std::vector<std::string>& argv) {
    Json doc;
    doc["command"] = sub.get_name();
    doc["argv"] = argv;
    doc["version"] = kVersion;
    Json config = Json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
      const auto& results = opt->results();
      if (results.empty()) {
        config[opt->get_name()] = opt->get_default_str();
      } else if (results.size() == 1) {
        config[opt->get_name()] = results.front();
      } else {
        config[opt->get_name()] = results;
      }
    }
    doc["config"] = config;
    doc["global"] = {{"seed", global_.seed}, {"out_dir", global_.out_dir}, {"quiet", global_.quiet}};
    doc["seeds"] = seeds_;
    auto files = [](const std::vector<std::string>& paths) {
      Json list = Json::array();
      for (const std::string& p : paths) list.push_back({{"path", p}, {"fnv1a64", hex64(fnv1a_file(p))}});
      return list;
    };
    doc["inputs"] = files(inputs_);
    doc["outputs"] = files(outputs_);
    doc["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::create_directories(global_.out_dir);
    const std::string path = (fs::path(global_.out_dir) / (sub.get_name() + ".manifest.json")).string();
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::kIo, kModule, "cannot write '" + path + "'");
    file << doc.dump(2) << '\n';
  }

 private:
  const GlobalOptions& global_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::uint64_t> seeds_;
};

CoaCatalog load_catalog(const std::vector<std::string>& paths, RunContext& ctx) {
  CoaCatalog catalog;
  for (const std::string& path : paths) {
    ctx.input(path);
    catalog.add(load_coa(path));
  }
  return catalog;
}

// With a non-empty `only`, lines for other configs are dropped before ids are
// resolved, so their COA files need not be loaded.
std::vector<MappingRecord> load_records(const std::string& path, const CoaCatalog& catalog,
                                        RunContext& ctx, const std::vector<std::string>& only) {
  ctx.input(path);
  if (only.empty()) return load_mapping_records(path, catalog);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cli", "cannot open '" + path + "'");
  std::string kept, line;
  while (std::getline(in, line)) {
    strip_carriage_return(line);
    const auto fields = split_tabs(line);
    if (fields.size() >= 2 && std::find(only.begin(), only.end(), fields[1]) != only.end()) {
      kept += line + "\n";
    }
  }
  std::istringstream filtered(kept);
  auto records = read_mapping_records(filtered, catalog);
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cli", "no records for the selected configs");
  }
  return records;
}

struct TrainFlags {
  TrainConfig cfg;
  std::size_t dim = EmbeddingModel::kDefaultDim;
  bool normalize = false;

  void attach(CLI::App* sub) {
    sub->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size, "Pairs per batch")->capture_default_str();
    sub->add_option("--lr", cfg.learning_rate, "Peak learning rate")->capture_default_str();
    sub->add_option("--warmup", cfg.warmup_fraction, "Warm-up fraction of all steps")->capture_default_str();
    sub->add_option("--scale", cfg.mnrl_scale, "MNRL similarity scale")->capture_default_str();
    sub->add_option("--weight-decay", cfg.weight_decay, "AdamW weight decay")->capture_default_str();
    sub->add_option("--dim", dim, "Embedding width")->capture_default_str();
    sub->add_flag("--normalize", normalize, "Emit unit-length embeddings");
  }
};

// An encoder from either a checkpoint or an external vector file.
std::unique_ptr<TextEncoder> load_encoder(const std::string& model_path,
                                          const std::string& embeddings_path, RunContext& ctx) {
  if (!model_path.empty() == !embeddings_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "give exactly one of --model / --embeddings");
  }
  if (!model_path.empty()) {
    ctx.input(model_path);
    return std::make_unique<EmbeddingModel>(load_model(model_path));
  }
  ctx.input(embeddings_path);
  return std::make_unique<ExternalEmbeddings>(ExternalEmbeddings::load(embeddings_path));
}

std::vector<VertexIndex> truths_of(std::span<const MappingRecord> records) {
  std::vector<VertexIndex> truths;
  truths.reserve(records.size());
  for (const MappingRecord& r : records) truths.push_back(r.true_vertex);
  return truths;
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const double k = parse_double(item, kModule, "--k");
    if (k < 1 || k != static_cast<double>(static_cast<std::size_t>(k))) {
      throw Error(ErrorCode::kInvalidArgument, kModule, "--k values must be positive integers");
    }
    ks.push_back(static_cast<std::size_t>(k));
  }
  if (ks.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "--k is empty");
  return ks;
}

void write_matrix(std::ostream& out, const CoaTree& tree, std::size_t n,
                  const std::function<std::string(std::size_t, std::size_t)>& cell) {
  out << "vertex";
  for (std::size_t j = 0; j < n; ++j) out << '\t' << tree.external_id(static_cast<VertexIndex>(j));
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << tree.external_id(static_cast<VertexIndex>(i));
    for (std::size_t j = 0; j < n; ++j) out << '\t' << cell(i, j);
    out << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology-aware ledger account mapping"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Run seed")->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Directory for outputs and the manifest")->capture_default_str();
  app.add_flag("--quiet", global.quiet, "Suppress informational output and warnings");

  RunContext ctx(global, out, err);
  std::vector<std::string> coa_paths;
  std::string records_path, dataset_path, model_path, embeddings_path, predictions_path;
  std::vector<std::string> only_configs;
  std::string model_id, dataset_id, report_a, report_b, k_list = "5,10,15,20";
  std::string loss = "cosine", split_by = "record";
  std::size_t k = 20, top_k = 5;
  double train_fraction = 0.9;
  bool no_baseline = false;
  TrainFlags train_flags;

  auto* validate = app.add_subcommand("validate", "Check a COA file; print size and diameter");
  validate->add_option("--coa", coa_paths, "COA JSON file")->required()->expected(1);

  auto* distances = app.add_subcommand("distances", "Write distance and similarity matrices as TSV");
  distances->add_option("--coa", coa_paths, "COA JSON file")->required()->expected(1);

  SynthConfig synth_cfg;
  std::size_t n_configs = 6;
  synth_cfg.n_vertices = 150;
  synth_cfg.max_children = 8;
  synth_cfg.max_depth = 3;
  synth_cfg.records_per_vertex = 3;
  synth_cfg.synonym_probability = 0.3;
  synth_cfg.drop_probability = 0.2;
  synth_cfg.abbreviation_probability = 0.1;
  auto* synth = app.add_subcommand("synth", "Generate synthetic COAs and mapping records");
  synth->add_option("--configs", n_configs, "Number of COA configurations")->capture_default_str();
  synth->add_option("--vertices", synth_cfg.n_vertices, "Vertices per COA")->capture_default_str();
  synth->add_option("--max-children", synth_cfg.max_children, "Branching bound")->capture_default_str();
  synth->add_option("--max-depth", synth_cfg.max_depth, "Depth bound (0 = none)")->capture_default_str();
  synth->add_option("--records-per-vertex", synth_cfg.records_per_vertex)->capture_default_str();
  synth->add_option("--synonym-p", synth_cfg.synonym_probability)->capture_default_str();
  synth->add_option("--drop-p", synth_cfg.drop_probability)->capture_default_str();
  synth->add_option("--abbrev-p", synth_cfg.abbreviation_probability)->capture_default_str();
  synth->add_option("--companies", synth_cfg.companies, "Tag records with one of N company ids")->capture_default_str();

  auto* augment = app.add_subcommand("augment", "Build the augmented training set");
  augment->add_option("--coa", coa_paths, "COA JSON files")->required();
  augment->add_option("--records", records_path, "Mapping records TSV")->required();
  augment->add_option("--config", only_configs, "Only records of this config (repeatable)");
  augment->add_option("--k", k, "Negatives per positive")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train an embedding model");
  train_cmd->add_option("--dataset", dataset_path, "Augmented dataset TSV")->required();
  train_cmd->add_option("--coa", coa_paths, "COA files whose labels join the vocabulary");
  train_cmd->add_option("--loss", loss, "cosine | mnrl")->capture_default_str();
  train_flags.attach(train_cmd);

  auto* map_cmd = app.add_subcommand("map", "Rank standard accounts for each record");
  map_cmd->add_option("--coa", coa_paths, "COA JSON files")->required();
  map_cmd->add_option("--records", records_path, "Mapping records TSV")->required();
  map_cmd->add_option("--config", only_configs, "Only records of this config (repeatable)");
  map_cmd->add_option("--model", model_path, "Model checkpoint");
  map_cmd->add_option("--embeddings", embeddings_path, "External embedding-vector file");
  map_cmd->add_option("--top-k", top_k, "Candidates per record (0 = all)")->capture_default_str();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on records");
  evaluate_cmd->add_option("--coa", coa_paths, "COA JSON files")->required();
  evaluate_cmd->add_option("--records", records_path, "Mapping records TSV")->required();
  evaluate_cmd->add_option("--config", only_configs, "Only records of this config (repeatable)");
  evaluate_cmd->add_option("--model", model_path, "Model checkpoint");
  evaluate_cmd->add_option("--embeddings", embeddings_path, "External embedding-vector file");
  evaluate_cmd->add_option("--predictions", predictions_path, "Full-ranking predictions TSV");
  evaluate_cmd->add_option("--model-id", model_id, "Name recorded in the report");
  evaluate_cmd->add_option("--dataset-id", dataset_id, "Dataset name recorded in the report");

  auto* compare = app.add_subcommand("compare", "Difference of two MD histograms (a - b)");
  compare->add_option("--a", report_a, "Report JSON")->required();
  compare->add_option("--b", report_b, "Report JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate over several K");
  sweep->add_option("--coa", coa_paths, "COA JSON files")->required();
  sweep->add_option("--records", records_path, "Mapping records TSV")->required();
  sweep->add_option("--config", only_configs, "Only records of this config (repeatable)");
  sweep->add_option("--k", k_list, "Comma-separated K values")->capture_default_str();
  sweep->add_option("--train-fraction", train_fraction)->capture_default_str();
  sweep->add_option("--split-by", split_by, "record | company")->capture_default_str();
  sweep->add_flag("--no-baseline", no_baseline, "Skip the MNRL baseline");
  train_flags.attach(sweep);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    ctx.seed("run", global.seed);
    if (sub == validate) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      const CoaEntry& e = catalog.begin()->second;
      out << "config " << e.tree.config_id() << ": n=" << e.tree.size()
          << " diameter=" << e.distances.max() << '\n';

    } else if (sub == distances) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      const CoaEntry& e = catalog.begin()->second;
      const std::size_t n = e.tree.size();
      {
        auto file = ctx.open_output(e.tree.config_id() + "_distances.tsv");
        write_matrix(file, e.tree, n, [&](std::size_t i, std::size_t j) {
          return std::to_string(e.distances(i, j));
        });
      }
      {
        auto file = ctx.open_output(e.tree.config_id() + "_similarity.tsv");
        write_matrix(file, e.tree, n, [&](std::size_t i, std::size_t j) {
          return format_fixed(e.similarity(i, j), 6);
        });
      }
      ctx.info("wrote " + std::to_string(n) + "x" + std::to_string(n) + " matrices, max(D)=" +
               std::to_string(e.distances.max()));

    } else if (sub == synth) {
      const SynthCorpus corpus = generate_corpus(synth_cfg, n_configs, global.seed);
      for (std::size_t c = 0; c < n_configs; ++c) {
        const std::string id = "cfg" + std::to_string(c + 1);
        ctx.seed(id, splitmix64(global.seed + c));
        auto file = ctx.open_output("coa_" + id + ".json");
        file << serialize_coa(corpus.catalog.at(id).tree);
      }
      auto file = ctx.open_output("records.tsv");
      write_mapping_records(file, corpus.records, corpus.catalog);
      ctx.info("generated " + std::to_string(n_configs) + " COAs and " +
               std::to_string(corpus.records.size()) + " records");

    } else if (sub == augment) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      const auto records = load_records(records_path, catalog, ctx, only_configs);
      ctx.seed("augment", global.seed);
      const AugmentedDataset data = build_augmented(records, catalog, k, global.seed);
      if (data.truncated_records > 0) {
        ctx.warn(std::to_string(data.truncated_records) +
                 " records drew fewer than k negatives (tree too small)");
      }
      auto file = ctx.open_output("dataset.tsv");
      write_dataset(file, data.samples);
      ctx.info("wrote " + std::to_string(data.samples.size()) + " samples (" +
               std::to_string(data.count(Polarity::kPositive)) + " positive)");

    } else if (sub == train_cmd) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      ctx.input(dataset_path);
      std::ifstream in(dataset_path, std::ios::binary);
      if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + dataset_path + "'");
      const std::vector<TrainingSample> samples = read_dataset(in);

      std::vector<std::string> texts;
      for (const auto& [id, entry] : catalog)
        for (VertexIndex v = 0; v < entry.tree.size(); ++v) texts.push_back(entry.tree.label(v));
      for (const TrainingSample& s : samples) {
        texts.push_back(s.custom_description);
        texts.push_back(s.standard_label);
      }
      const RunSeeds seeds = RunSeeds::from(global.seed);
      ctx.seed("model_init", seeds.model_init);
      ctx.seed("train", seeds.train);
      EmbeddingModel model = EmbeddingModel::initialize(
          Vocabulary::build(texts), train_flags.dim, seeds.model_init, train_flags.normalize);
      TrainConfig cfg = train_flags.cfg;
      cfg.loss = parse_loss(loss);
      cfg.seed = seeds.train;
      const TrainResult result = train(model, samples, cfg);
      if (result.skipped_batches > 0) {
        ctx.warn(std::to_string(result.skipped_batches) +
                 " single-pair batches skipped (no in-batch negatives)");
      }
      Json meta = {{"loss", std::string(loss_name(cfg.loss))},
                   {"train_seed", cfg.seed},
                   {"epochs", cfg.epochs},
                   {"steps", result.batch_losses.size()}};
      save_model(model, ctx.output_path("model.json"), meta.dump());
      auto trace = ctx.open_output("train_loss.tsv");
      for (std::size_t i = 0; i < result.batch_losses.size(); ++i) {
        trace << i << '\t' << format_fixed(result.batch_losses[i], 9) << '\n';
      }
      if (!result.batch_losses.empty()) {
        ctx.info("trained " + std::to_string(result.batch_losses.size()) +
                 " steps; final batch loss " + format_fixed(result.batch_losses.back(), 6));
      }

    } else if (sub == map_cmd) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      const auto records = load_records(records_path, catalog, ctx, only_configs);
      const auto encoder = load_encoder(model_path, embeddings_path, ctx);
      const IndexSet indexes(*encoder, catalog);
      const auto predictions = map_records(indexes, *encoder, records, top_k);
      auto file = ctx.open_output("predictions.tsv");
      write_predictions(file, predictions, catalog);
      ctx.info("mapped " + std::to_string(predictions.size()) + " records");

    } else if (sub == evaluate_cmd) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      const auto records = load_records(records_path, catalog, ctx, only_configs);
      std::vector<Prediction> predictions;
      if (!predictions_path.empty()) {
        if (!model_path.empty() || !embeddings_path.empty()) {
          throw Error(ErrorCode::kInvalidArgument, kModule,
                      "--predictions cannot be combined with --model/--embeddings");
        }
        ctx.input(predictions_path);
        std::ifstream in(predictions_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + predictions_path + "'");
        predictions = read_predictions(in, records, catalog);
      } else {
        const auto encoder = load_encoder(model_path, embeddings_path, ctx);
        predictions = map_records(IndexSet(*encoder, catalog), *encoder, records, 0);
      }
      if (model_id.empty()) {
        const std::string& source =
            !predictions_path.empty() ? predictions_path
                                      : (!model_path.empty() ? model_path : embeddings_path);
        model_id = fs::path(source).stem().string();
      }
      if (dataset_id.empty()) dataset_id = fs::path(records_path).stem().string();
      const EvalReport report = evaluate(predictions, truths_of(records), catalog, model_id, dataset_id);
      auto file = ctx.open_output("report.json");
      file << report_to_json(report);
      if (!global.quiet) out << format_report_table(std::span(&report, 1));

    } else if (sub == compare) {
      ctx.input(report_a);
      ctx.input(report_b);
      const EvalReport a = load_report(report_a);
      const EvalReport b = load_report(report_b);
      const HistogramDiff diff = histogram_diff(a.md_histogram, b.md_histogram);
      auto file = ctx.open_output("histogram_diff.tsv");
      file << "distance\t" << (a.model_id.empty() ? "a" : a.model_id) << "\t"
           << (b.model_id.empty() ? "b" : b.model_id) << "\tdifference\n";
      for (const auto& [d, delta] : diff) {
        auto count = [d = d](const Histogram& h) {
          auto it = h.find(d);
          return it == h.end() ? std::uint64_t{0} : it->second;
        };
        file << d << '\t' << count(a.md_histogram) << '\t' << count(b.md_histogram) << '\t'
             << (delta > 0 ? "+" : "") << delta << '\n';
      }
      if (!global.quiet) {
        const std::array reports{a, b};
        out << format_report_table(reports);
        for (const auto& [d, delta] : diff) out << "MD " << d << ": " << (delta > 0 ? "+" : "") << delta << '\n';
      }

    } else if (sub == sweep) {
      const CoaCatalog catalog = load_catalog(coa_paths, ctx);
      const auto records = load_records(records_path, catalog, ctx, only_configs);
      SweepConfig cfg;
      cfg.ks = parse_k_list(k_list);
      cfg.train_fraction = train_fraction;
      cfg.split_by = parse_split_by(split_by);
      cfg.with_baseline = !no_baseline;
      cfg.seed = global.seed;
      cfg.model.dim = train_flags.dim;
      cfg.model.normalize = train_flags.normalize;
      cfg.train = train_flags.cfg;
      const RunSeeds seeds = RunSeeds::from(global.seed);
      ctx.seed("split", seeds.split);
      ctx.seed("augment", seeds.augment);
      ctx.seed("model_init", seeds.model_init);
      ctx.seed("train", seeds.train);
      const SweepResult result = run_sweep(catalog, records, cfg);
      for (const EvalReport& r : result.reports) {
        auto file = ctx.open_output("report_" + r.model_id + ".json");
        file << report_to_json(r);
      }
      const std::string table = format_report_table(result.reports);
      auto file = ctx.open_output("sweep_table.tsv");
      file << table;
      if (!global.quiet) {
        out << table;
        out << "accuracy monotone in K: " << (result.accuracy_monotone_in_k ? "yes" : "no") << '\n';
      }
    }
    ctx.write_manifest(*sub, args);
  } catch (const Error& e) {
    err << "error [" << sub->get_name() << "/" << error_code_name(e.code()) << "]: " << e.what()
        << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error [" << sub->get_name() << "]: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace topoledger
