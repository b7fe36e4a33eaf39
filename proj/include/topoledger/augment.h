// SPDX-License-Identifier: Apache-2.0
//
// Topology-aware training data: one positive per mapping record plus K
// negatives whose target score is the tree similarity to the true account.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "topoledger/coa_graph.h"
#include "topoledger/rng.h"

namespace topoledger {

// A custom ledger description and the standard account it was mapped to.
struct MappingRecord {
  std::string custom_description;
  std::string config_id;
  VertexIndex true_vertex = 0;
  std::string company_id;  // optional; empty when the input has no company column

  bool operator==(const MappingRecord&) const = default;
};

enum class Polarity { kPositive, kNegative };

struct TrainingSample {
  std::string custom_description;
  std::string standard_label;
  double target = 1.0;
  Polarity polarity = Polarity::kPositive;

  bool operator==(const TrainingSample&) const = default;
};

struct AugmentedDataset {
  // All positives in record order, then each record's negatives in record order.
  std::vector<TrainingSample> samples;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  // Records whose tree had fewer than k other vertices.
  std::size_t truncated_records = 0;

  std::size_t count(Polarity polarity) const;
};

// (u, label(v_u), 1) per record, in record order.
std::vector<TrainingSample> build_positive(std::span<const MappingRecord> records,
                                           const CoaCatalog& catalog);

// min(k, |V|-1) distinct vertices drawn uniformly from V \ {v_u}, each paired
// with its similarity to v_u.
std::vector<TrainingSample> sample_negatives(const MappingRecord& record, const CoaTree& tree,
                                             const SimilarityMatrix& sim, std::size_t k,
                                             Rng& rng);

// Record i draws from derive_stream(seed, i), so the result does not depend
// on how records are scheduled. Parallel over records.
AugmentedDataset build_augmented(std::span<const MappingRecord> records,
                                 const CoaCatalog& catalog, std::size_t k, std::uint64_t seed);
AugmentedDataset build_augmented_serial(std::span<const MappingRecord> records,
                                        const CoaCatalog& catalog, std::size_t k,
                                        std::uint64_t seed);

// Mapping-records TSV: description, config_id, external vertex id
// [, company_id]. Vertex ids are resolved against the catalog.
std::vector<MappingRecord> read_mapping_records(std::istream& in, const CoaCatalog& catalog);
std::vector<MappingRecord> load_mapping_records(const std::string& path,
                                                const CoaCatalog& catalog);
void write_mapping_records(std::ostream& out, std::span<const MappingRecord> records,
                           const CoaCatalog& catalog);

// Augmented-dataset TSV: description, label, target (%.6f), positive|negative.
void write_dataset(std::ostream& out, std::span<const TrainingSample> samples);
std::vector<TrainingSample> read_dataset(std::istream& in);

std::string format_target(double target);

}  // namespace topoledger
