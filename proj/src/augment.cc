// SPDX-License-Identifier: Apache-2.0

#include "topoledger/augment.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "topoledger/error.h"
#include "topoledger/text_io.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "augment";

const CoaEntry& checked_entry(const MappingRecord& record, const CoaCatalog& catalog) {
  const CoaEntry* entry = catalog.find(record.config_id);
  if (!entry) {
    throw Error(ErrorCode::kUnknownConfig, kModule,
                "record '" + record.custom_description + "' references unknown config '" +
                    record.config_id + "'");
  }
  if (record.true_vertex >= entry->tree.size()) {
    throw Error(ErrorCode::kUnknownVertex, kModule,
                "record '" + record.custom_description + "' references vertex " +
                    std::to_string(record.true_vertex) + " outside config '" +
                    record.config_id + "'");
  }
  if (record.custom_description.empty()) {
    throw Error(ErrorCode::kMalformed, kModule, "record with empty description");
  }
  return *entry;
}

TrainingSample positive_for(const MappingRecord& record, const CoaTree& tree) {
  return {record.custom_description, tree.label(record.true_vertex), 1.0, Polarity::kPositive};
}

template <bool kParallel>
AugmentedDataset augment_impl(std::span<const MappingRecord> records, const CoaCatalog& catalog,
                              std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, kModule, "k must be at least 1");

  std::vector<const CoaEntry*> entries;
  entries.reserve(records.size());
  for (const MappingRecord& record : records) entries.push_back(&checked_entry(record, catalog));

  // groups[i] holds record i's negatives; positives are built serially below.
  std::vector<std::vector<TrainingSample>> groups(records.size());
  const auto count = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 64) if (kParallel)
  for (std::int64_t i = 0; i < count; ++i) {
    const MappingRecord& record = records[i];
    const CoaEntry& entry = *entries[i];
    Rng rng = derive_stream(seed, static_cast<std::uint64_t>(i));
    groups[i] = sample_negatives(record, entry.tree, entry.similarity, k, rng);
  }

  AugmentedDataset out;
  out.k = k;
  out.seed = seed;
  std::size_t total = records.size();
  for (const auto& g : groups) total += g.size();
  out.samples.reserve(total);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.samples.push_back(positive_for(records[i], entries[i]->tree));
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].size() < k) ++out.truncated_records;
    std::move(groups[i].begin(), groups[i].end(), std::back_inserter(out.samples));
  }
  return out;
}

std::string_view polarity_name(Polarity p) {
  return p == Polarity::kPositive ? "positive" : "negative";
}

}  // namespace

std::size_t AugmentedDataset::count(Polarity polarity) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(),
      [polarity](const TrainingSample& s) { return s.polarity == polarity; }));
}

std::vector<TrainingSample> build_positive(std::span<const MappingRecord> records,
                                           const CoaCatalog& catalog) {
  std::vector<TrainingSample> out;
  out.reserve(records.size());
  for (const MappingRecord& record : records) {
    out.push_back(positive_for(record, checked_entry(record, catalog).tree));
  }
  return out;
}

std::vector<TrainingSample> sample_negatives(const MappingRecord& record, const CoaTree& tree,
                                             const SimilarityMatrix& sim, std::size_t k,
                                             Rng& rng) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, kModule, "k must be at least 1");
  if (record.true_vertex >= tree.size() || sim.size() != tree.size()) {
    throw Error(ErrorCode::kUnknownVertex, kModule, "record vertex or similarity matrix does not match tree");
  }
  // Candidates V \ {v_u}; a partial Fisher-Yates takes the first m draws.
  std::vector<VertexIndex> candidates;
  candidates.reserve(tree.size() - 1);
  for (VertexIndex v = 0; v < tree.size(); ++v) {
    if (v != record.true_vertex) candidates.push_back(v);
  }
  const std::size_t m = std::min(k, candidates.size());
  std::vector<TrainingSample> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + uniform_index(rng, candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    const VertexIndex v = candidates[i];
    out.push_back({record.custom_description, tree.label(v), sim(record.true_vertex, v),
                   Polarity::kNegative});
  }
  return out;
}

AugmentedDataset build_augmented(std::span<const MappingRecord> records,
                                 const CoaCatalog& catalog, std::size_t k, std::uint64_t seed) {
  return augment_impl<true>(records, catalog, k, seed);
}

AugmentedDataset build_augmented_serial(std::span<const MappingRecord> records,
                                        const CoaCatalog& catalog, std::size_t k,
                                        std::uint64_t seed) {
  return augment_impl<false>(records, catalog, k, seed);
}

std::vector<MappingRecord> read_mapping_records(std::istream& in, const CoaCatalog& catalog) {
  std::vector<MappingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_carriage_return(line);
    if (line.empty()) continue;
    const std::vector<std::string_view> fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 4) {
      throw Error(ErrorCode::kMalformed, kModule,
                  "records line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated fields");
    }
    MappingRecord record;
    record.custom_description = std::string(fields[0]);
    record.config_id = std::string(fields[1]);
    if (record.custom_description.empty()) {
      throw Error(ErrorCode::kMalformed, kModule,
                  "records line " + std::to_string(line_no) + ": empty description");
    }
    const CoaEntry* entry = catalog.find(record.config_id);
    if (!entry) {
      throw Error(ErrorCode::kUnknownConfig, kModule,
                  "records line " + std::to_string(line_no) + ": unknown config '" +
                      record.config_id + "'");
    }
    auto vertex = entry->tree.find_external(fields[2]);
    if (!vertex) {
      throw Error(ErrorCode::kUnknownVertex, kModule,
                  "records line " + std::to_string(line_no) + ": unknown vertex id '" +
                      std::string(fields[2]) + "' in config '" + record.config_id + "'");
    }
    record.true_vertex = *vertex;
    if (fields.size() == 4) record.company_id = std::string(fields[3]);
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<MappingRecord> load_mapping_records(const std::string& path,
                                                const CoaCatalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path + "'");
  return read_mapping_records(in, catalog);
}

void write_mapping_records(std::ostream& out, std::span<const MappingRecord> records,
                           const CoaCatalog& catalog) {
  for (const MappingRecord& record : records) {
    const CoaEntry& entry = checked_entry(record, catalog);
    require_tsv_field(record.custom_description, kModule);
    out << record.custom_description << '\t' << record.config_id << '\t'
        << entry.tree.external_id(record.true_vertex);
    if (!record.company_id.empty()) out << '\t' << record.company_id;
    out << '\n';
  }
}

std::string format_target(double target) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", target);
  return buf;
}

void write_dataset(std::ostream& out, std::span<const TrainingSample> samples) {
  for (const TrainingSample& s : samples) {
    require_tsv_field(s.custom_description, kModule);
    require_tsv_field(s.standard_label, kModule);
    out << s.custom_description << '\t' << s.standard_label << '\t' << format_target(s.target)
        << '\t' << polarity_name(s.polarity) << '\n';
  }
}

std::vector<TrainingSample> read_dataset(std::istream& in) {
  std::vector<TrainingSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_carriage_return(line);
    if (line.empty()) continue;
    const std::vector<std::string_view> fields = split_tabs(line);
    const std::string where = "dataset line " + std::to_string(line_no);
    if (fields.size() != 4) {
      throw Error(ErrorCode::kMalformed, kModule, where + ": expected 4 tab-separated fields");
    }
    TrainingSample s;
    s.custom_description = std::string(fields[0]);
    s.standard_label = std::string(fields[1]);
    s.target = parse_double(fields[2], kModule, where);
    if (fields[3] == "positive") {
      s.polarity = Polarity::kPositive;
    } else if (fields[3] == "negative") {
      s.polarity = Polarity::kNegative;
    } else {
      throw Error(ErrorCode::kMalformed, kModule, where + ": polarity must be positive|negative");
    }
    if (s.target < 0.0 || s.target > 1.0) {
      throw Error(ErrorCode::kMalformed, kModule, where + ": target outside [0, 1]");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace topoledger
