// SPDX-License-Identifier: Apache-2.0

#include "topoledger/experiment.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "topoledger/error.h"
#include "topoledger/mapper.h"
#include "topoledger/rng.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "experiment";

std::size_t train_count(std::size_t total, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

}  // namespace

SplitBy parse_split_by(std::string_view name) {
  if (name == "record") return SplitBy::kRecord;
  if (name == "company") return SplitBy::kCompany;
  throw Error(ErrorCode::kInvalidArgument, kModule,
              "unknown split '" + std::string(name) + "' (expected record|company)");
}

RunSeeds RunSeeds::from(std::uint64_t seed) {
  return {splitmix64(seed ^ 0x1), splitmix64(seed ^ 0x2), splitmix64(seed ^ 0x3),
          splitmix64(seed ^ 0x4)};
}

Split split_records(std::span<const MappingRecord> records, double train_fraction, SplitBy by,
                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "train fraction must be in (0, 1)");
  }
  Rng rng(splitmix64(seed));
  Split split;
  if (by == SplitBy::kRecord) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    const std::size_t cut = train_count(order.size(), train_fraction);
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < cut ? split.train : split.test).push_back(records[order[i]]);
    }
    return split;
  }

  std::map<std::string, std::vector<std::size_t>> by_company;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].company_id.empty()) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "company split needs a company id on every record");
    }
    by_company[records[i].company_id].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> companies;
  for (const auto& [id, members] : by_company) companies.push_back(&members);
  shuffle(companies, rng);
  const std::size_t cut = train_count(companies.size(), train_fraction);
  for (std::size_t c = 0; c < companies.size(); ++c) {
    for (std::size_t i : *companies[c]) (c < cut ? split.train : split.test).push_back(records[i]);
  }
  return split;
}

Vocabulary training_vocabulary(std::span<const MappingRecord> train, const CoaCatalog& catalog) {
  std::vector<std::string> texts;
  for (const auto& [id, entry] : catalog) {
    for (VertexIndex v = 0; v < entry.tree.size(); ++v) texts.push_back(entry.tree.label(v));
  }
  for (const MappingRecord& r : train) texts.push_back(r.custom_description);
  return Vocabulary::build(texts);
}

TrainedModel train_topology_model(const CoaCatalog& catalog, std::span<const MappingRecord> train,
                                  std::size_t k, std::uint64_t augment_seed,
                                  const ModelSpec& spec, TrainConfig cfg) {
  cfg.loss = LossKind::kCosineRegression;
  const AugmentedDataset data = build_augmented(train, catalog, k, augment_seed);
  EmbeddingModel model = EmbeddingModel::initialize(training_vocabulary(train, catalog), spec.dim,
                                                    spec.init_seed, spec.normalize);
  TrainResult result = train_cosine_regression(model, data.samples, cfg);
  return {std::move(model), std::move(result)};
}

TrainedModel train_baseline_model(const CoaCatalog& catalog, std::span<const MappingRecord> train,
                                  const ModelSpec& spec, TrainConfig cfg) {
  cfg.loss = LossKind::kMultipleNegativesRanking;
  const std::vector<TrainingSample> positives = build_positive(train, catalog);
  EmbeddingModel model = EmbeddingModel::initialize(training_vocabulary(train, catalog), spec.dim,
                                                    spec.init_seed, spec.normalize);
  TrainResult result = train_mnrl(model, positives, cfg);
  return {std::move(model), std::move(result)};
}

EvalReport evaluate_encoder(const TextEncoder& encoder, const CoaCatalog& catalog,
                            std::span<const MappingRecord> records, std::string model_id,
                            std::string dataset_id) {
  const IndexSet indexes(encoder, catalog);
  const std::vector<Prediction> predictions = map_records(indexes, encoder, records, 0);
  std::vector<VertexIndex> truths;
  truths.reserve(records.size());
  for (const MappingRecord& r : records) truths.push_back(r.true_vertex);
  return evaluate(predictions, truths, catalog, std::move(model_id), std::move(dataset_id));
}

SweepResult run_sweep(const CoaCatalog& catalog, std::span<const MappingRecord> records,
                      const SweepConfig& cfg) {
  if (cfg.ks.empty()) throw Error(ErrorCode::kInvalidArgument, kModule, "no K values to sweep");
  const RunSeeds seeds = RunSeeds::from(cfg.seed);
  const Split split = split_records(records, cfg.train_fraction, cfg.split_by, seeds.split);
  if (split.train.empty() || split.test.empty()) {
    throw Error(ErrorCode::kEmptyDataset, kModule, "split left an empty train or test set");
  }
  ModelSpec spec = cfg.model;
  spec.init_seed = seeds.model_init;
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seeds.train;
  const std::string dataset_id = "test-split-seed-" + std::to_string(cfg.seed);

  SweepResult out;
  if (cfg.with_baseline) {
    const TrainedModel baseline = train_baseline_model(catalog, split.train, spec, train_cfg);
    out.reports.push_back(
        evaluate_encoder(baseline.model, catalog, split.test, "mnrl-baseline", dataset_id));
  }
  out.accuracy_monotone_in_k = true;
  double previous = -1.0;
  for (std::size_t k : cfg.ks) {
    const TrainedModel model =
        train_topology_model(catalog, split.train, k, seeds.augment, spec, train_cfg);
    EvalReport report = evaluate_encoder(model.model, catalog, split.test,
                                         "topology@" + std::to_string(k), dataset_id);
    if (report.accuracy < previous) out.accuracy_monotone_in_k = false;
    previous = report.accuracy;
    out.reports.push_back(std::move(report));
  }
  return out;
}

}  // namespace topoledger
