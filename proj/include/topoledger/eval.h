// SPDX-License-Identifier: Apache-2.0
//
// Ranking and hierarchy-aware metrics. The misprediction distance (MD) of an
// instance is the tree path length between the top-1 and the true account;
// MMD averages it over mispredicted instances, MOD over all instances.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topoledger/coa_graph.h"
#include "topoledger/mapper.h"

namespace topoledger {

using Histogram = std::map<std::uint32_t, std::uint64_t>;
using HistogramDiff = std::map<std::uint32_t, std::int64_t>;

struct EvalReport {
  double accuracy = 0.0;
  double mrr = 0.0;
  std::optional<double> mmd;  // absent when nothing was mispredicted
  double mod = 0.0;
  Histogram md_histogram;
  std::uint64_t n_instances = 0;
  std::uint64_t n_mispredictions = 0;
  std::string model_id;
  std::string dataset_id;
};

// All metric functions take predictions aligned with `truths` and throw
// Error(kLengthMismatch) when the lengths differ.
double accuracy(std::span<const Prediction> predictions, std::span<const VertexIndex> truths);
// Needs the truth somewhere in each ranking; Error(kTruthNotRanked) otherwise.
double mrr(std::span<const Prediction> predictions, std::span<const VertexIndex> truths);

// MD per instance, looked up in each prediction's own tree. Parallel.
std::vector<std::uint32_t> misprediction_distances(std::span<const Prediction> predictions,
                                                   std::span<const VertexIndex> truths,
                                                   const CoaCatalog& catalog);

std::optional<double> mmd(std::span<const Prediction> predictions,
                          std::span<const VertexIndex> truths, const CoaCatalog& catalog);
double mod(std::span<const Prediction> predictions, std::span<const VertexIndex> truths,
           const CoaCatalog& catalog);
Histogram md_histogram(std::span<const Prediction> predictions,
                       std::span<const VertexIndex> truths, const CoaCatalog& catalog);

// count_a - count_b at every distance present in either. Throws
// Error(kTotalMismatch) if the histograms cover different instance counts.
HistogramDiff histogram_diff(const Histogram& a, const Histogram& b);

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const VertexIndex> truths,
                    const CoaCatalog& catalog, std::string model_id = "",
                    std::string dataset_id = "");

// Full-precision JSON round trip.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
EvalReport load_report(const std::string& path);

// Table rows rounded for display: Acc and MRR as percentages, MMD/MOD as
// edge counts, all with 2 decimals.
std::string format_report_table(std::span<const EvalReport> reports);

}  // namespace topoledger
