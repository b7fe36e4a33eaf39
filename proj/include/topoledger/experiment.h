// SPDX-License-Identifier: Apache-2.0
//
// End-to-end experiment plumbing: split records, train the topology-aware
// model on augmented data and the in-batch-negatives baseline on positives,
// and score both on the held-out records.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topoledger/augment.h"
#include "topoledger/coa_graph.h"
#include "topoledger/embed.h"
#include "topoledger/eval.h"
#include "topoledger/train.h"

namespace topoledger {

enum class SplitBy { kRecord, kCompany };
SplitBy parse_split_by(std::string_view name);  // "record" | "company"

struct Split {
  std::vector<MappingRecord> train;
  std::vector<MappingRecord> test;
};

// Seeded shuffle of records (or of company ids, keeping each company's
// records together), then the first round(fraction * count) go to train.
Split split_records(std::span<const MappingRecord> records, double train_fraction, SplitBy by,
                    std::uint64_t seed);

// Training descriptions plus every standard label of the catalog.
Vocabulary training_vocabulary(std::span<const MappingRecord> train, const CoaCatalog& catalog);

struct ModelSpec {
  std::size_t dim = EmbeddingModel::kDefaultDim;
  std::uint64_t init_seed = 0;
  bool normalize = false;
};

struct TrainedModel {
  EmbeddingModel model;
  TrainResult result;
};

// Cosine regression on D_aug built with `k` negatives per record.
TrainedModel train_topology_model(const CoaCatalog& catalog, std::span<const MappingRecord> train,
                                  std::size_t k, std::uint64_t augment_seed,
                                  const ModelSpec& spec, TrainConfig cfg);

// MNRL on the positive pairs only.
TrainedModel train_baseline_model(const CoaCatalog& catalog, std::span<const MappingRecord> train,
                                  const ModelSpec& spec, TrainConfig cfg);

// Full-ranking evaluation of `encoder` on `records`.
EvalReport evaluate_encoder(const TextEncoder& encoder, const CoaCatalog& catalog,
                            std::span<const MappingRecord> records, std::string model_id,
                            std::string dataset_id);

struct SweepConfig {
  std::vector<std::size_t> ks{5, 10, 15, 20};
  double train_fraction = 0.9;
  SplitBy split_by = SplitBy::kRecord;
  bool with_baseline = true;
  std::uint64_t seed = 0;
  ModelSpec model;
  TrainConfig train;
};

struct SweepResult {
  // Baseline first when requested, then one report per K in order.
  std::vector<EvalReport> reports;
  // True when accuracy never decreases as K grows. Reported, not enforced.
  bool accuracy_monotone_in_k = false;
};

SweepResult run_sweep(const CoaCatalog& catalog, std::span<const MappingRecord> records,
                      const SweepConfig& cfg);

// Stream seeds for the parts of a run, all derived from the run seed.
struct RunSeeds {
  std::uint64_t split;
  std::uint64_t augment;
  std::uint64_t model_init;
  std::uint64_t train;
  static RunSeeds from(std::uint64_t seed);
};

}  // namespace topoledger
