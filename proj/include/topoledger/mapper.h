// SPDX-License-Identifier: Apache-2.0
//
// Nearest-standard-account mapping. A description maps to the account of its
// own COA whose label embedding has the highest cosine similarity.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "topoledger/augment.h"
#include "topoledger/coa_graph.h"
#include "topoledger/embed.h"

namespace topoledger {

struct IndexEntry {
  VertexIndex vertex;
  std::string label;
  Vector embedding;
};

// Label embeddings for every vertex of one COA, in vertex order.
struct LabelIndex {
  std::string config_id;
  std::size_t dim = 0;
  std::vector<IndexEntry> entries;
};

struct Candidate {
  VertexIndex vertex;
  std::string label;
  double score;
};

struct Prediction {
  std::string custom_description;
  std::string config_id;
  // Descending score; equal scores ordered by ascending vertex.
  std::vector<Candidate> candidates;

  const Candidate& top() const { return candidates.front(); }
};

// Embeds each label once. Encoder failures are rethrown naming the label.
LabelIndex build_index(const TextEncoder& encoder, const CoaTree& tree);

// Ranking order used for candidates.
inline bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.vertex < b.vertex;
}

Prediction map_description(const LabelIndex& index, const TextEncoder& encoder,
                           std::string_view description, std::size_t top_k);

// One label index per catalog config, built with the same encoder.
class IndexSet {
 public:
  IndexSet(const TextEncoder& encoder, const CoaCatalog& catalog);
  const LabelIndex& at(std::string_view config_id) const;

 private:
  std::vector<LabelIndex> indexes_;
};

// Maps every record against its own config's index. top_k == 0 means the
// full ranking. Parallel over records; order of the output follows input.
std::vector<Prediction> map_records(const IndexSet& indexes, const TextEncoder& encoder,
                                    std::span<const MappingRecord> records, std::size_t top_k);
std::vector<Prediction> map_records_serial(const IndexSet& indexes, const TextEncoder& encoder,
                                           std::span<const MappingRecord> records,
                                           std::size_t top_k);

// Prediction TSV: description, rank (1-based), external vertex id, label,
// score (%.6f). One block of rows per prediction, starting at rank 1.
void write_predictions(std::ostream& out, std::span<const Prediction> predictions,
                       const CoaCatalog& catalog);
// Reads blocks back; the config of block i is taken from `records[i]`.
std::vector<Prediction> read_predictions(std::istream& in, std::span<const MappingRecord> records,
                                         const CoaCatalog& catalog);

}  // namespace topoledger
