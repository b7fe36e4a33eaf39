// SPDX-License-Identifier: Apache-2.0

#include "topoledger/mapper.h"

#include <algorithm>
#include <exception>
#include <istream>
#include <ostream>

#include "topoledger/error.h"
#include "topoledger/text_io.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "mapper";

template <bool kParallel>
std::vector<Prediction> map_impl(const IndexSet& indexes, const TextEncoder& encoder,
                                 std::span<const MappingRecord> records, std::size_t top_k) {
  std::vector<const LabelIndex*> targets;
  targets.reserve(records.size());
  for (const MappingRecord& r : records) targets.push_back(&indexes.at(r.config_id));

  std::vector<Prediction> out(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  const auto count = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16) if (kParallel)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      const LabelIndex& index = *targets[i];
      const std::size_t k = top_k == 0 ? index.entries.size() : top_k;
      out[i] = map_description(index, encoder, records[i].custom_description, k);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

LabelIndex build_index(const TextEncoder& encoder, const CoaTree& tree) {
  LabelIndex index;
  index.config_id = tree.config_id();
  index.dim = encoder.dim();
  index.entries.reserve(tree.size());
  for (VertexIndex v = 0; v < tree.size(); ++v) {
    Vector embedding;
    try {
      embedding = encoder.embed(tree.label(v));
    } catch (const Error& e) {
      throw Error(e.code(), kModule,
                  "cannot embed label '" + tree.label(v) + "' of config '" + tree.config_id() +
                      "': " + e.what());
    }
    if (embedding.size() != index.dim) {
      throw Error(ErrorCode::kDimensionMismatch, kModule,
                  "label '" + tree.label(v) + "' embedded with wrong dimension");
    }
    index.entries.push_back({v, tree.label(v), std::move(embedding)});
  }
  return index;
}

Prediction map_description(const LabelIndex& index, const TextEncoder& encoder,
                           std::string_view description, std::size_t top_k) {
  if (top_k == 0 || top_k > index.entries.size()) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "top_k must be in [1, " + std::to_string(index.entries.size()) + "]");
  }
  const Vector query = encoder.embed(description);

  std::vector<Candidate> all;
  all.reserve(index.entries.size());
  for (const IndexEntry& entry : index.entries) {
    all.push_back({entry.vertex, entry.label, cosine_similarity(query, entry.embedding)});
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top_k), all.end(),
                    ranks_before);
  all.resize(top_k);
  return Prediction{std::string(description), index.config_id, std::move(all)};
}

IndexSet::IndexSet(const TextEncoder& encoder, const CoaCatalog& catalog) {
  indexes_.reserve(catalog.size());
  for (const auto& [config_id, entry] : catalog) indexes_.push_back(build_index(encoder, entry.tree));
}

const LabelIndex& IndexSet::at(std::string_view config_id) const {
  for (const LabelIndex& index : indexes_) {
    if (index.config_id == config_id) return index;
  }
  throw Error(ErrorCode::kUnknownConfig, kModule,
              "no label index for config '" + std::string(config_id) + "'");
}

std::vector<Prediction> map_records(const IndexSet& indexes, const TextEncoder& encoder,
                                    std::span<const MappingRecord> records, std::size_t top_k) {
  return map_impl<true>(indexes, encoder, records, top_k);
}

std::vector<Prediction> map_records_serial(const IndexSet& indexes, const TextEncoder& encoder,
                                           std::span<const MappingRecord> records,
                                           std::size_t top_k) {
  return map_impl<false>(indexes, encoder, records, top_k);
}

void write_predictions(std::ostream& out, std::span<const Prediction> predictions,
                       const CoaCatalog& catalog) {
  for (const Prediction& p : predictions) {
    require_tsv_field(p.custom_description, kModule);
    const CoaTree& tree = catalog.at(p.config_id).tree;
    for (std::size_t r = 0; r < p.candidates.size(); ++r) {
      const Candidate& c = p.candidates[r];
      out << p.custom_description << '\t' << (r + 1) << '\t' << tree.external_id(c.vertex) << '\t'
          << c.label << '\t' << format_fixed(c.score, 6) << '\n';
    }
  }
}

std::vector<Prediction> read_predictions(std::istream& in, std::span<const MappingRecord> records,
                                         const CoaCatalog& catalog) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_carriage_return(line);
    if (line.empty()) continue;
    const std::string where = "predictions line " + std::to_string(line_no);
    const auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw Error(ErrorCode::kMalformed, kModule, where + ": expected 5 tab-separated fields");
    }
    const double rank = parse_double(fields[1], kModule, where);
    if (rank == 1.0) {
      if (out.size() == records.size()) {
        throw Error(ErrorCode::kLengthMismatch, kModule, where + ": more predictions than records");
      }
      out.push_back({std::string(fields[0]), records[out.size()].config_id, {}});
    } else if (out.empty() || rank != static_cast<double>(out.back().candidates.size() + 1)) {
      throw Error(ErrorCode::kMalformed, kModule, where + ": ranks must run 1, 2, 3, ...");
    }
    Prediction& p = out.back();
    if (fields[0] != p.custom_description) {
      throw Error(ErrorCode::kMalformed, kModule, where + ": description changes inside a block");
    }
    const CoaTree& tree = catalog.at(p.config_id).tree;
    auto v = tree.find_external(fields[2]);
    if (!v) {
      throw Error(ErrorCode::kUnknownVertex, kModule,
                  where + ": unknown vertex '" + std::string(fields[2]) + "'");
    }
    p.candidates.push_back({*v, std::string(fields[3]), parse_double(fields[4], kModule, where)});
  }
  if (out.size() != records.size()) {
    throw Error(ErrorCode::kLengthMismatch, kModule,
                std::to_string(out.size()) + " predictions for " + std::to_string(records.size()) +
                    " records");
  }
  return out;
}

}  // namespace topoledger
