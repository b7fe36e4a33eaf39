// SPDX-License-Identifier: Apache-2.0

#include "topoledger/eval.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "topoledger/error.h"
#include "topoledger/text_io.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "eval";

void check_aligned(std::span<const Prediction> predictions, std::span<const VertexIndex> truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorCode::kLengthMismatch, kModule,
                std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(truths.size()) + " truths");
  }
  for (const Prediction& p : predictions) {
    if (p.candidates.empty()) {
      throw Error(ErrorCode::kMalformed, kModule,
                  "prediction for '" + p.custom_description + "' has no candidates");
    }
  }
}

std::size_t rank_of(const Prediction& p, VertexIndex truth) {
  for (std::size_t r = 0; r < p.candidates.size(); ++r) {
    if (p.candidates[r].vertex == truth) return r + 1;
  }
  throw Error(ErrorCode::kTruthNotRanked, kModule,
              "true vertex " + std::to_string(truth) + " missing from ranking of '" +
                  p.custom_description + "'");
}

}  // namespace

double accuracy(std::span<const Prediction> predictions, std::span<const VertexIndex> truths) {
  check_aligned(predictions, truths);
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].top().vertex == truths[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double mrr(std::span<const Prediction> predictions, std::span<const VertexIndex> truths) {
  check_aligned(predictions, truths);
  if (predictions.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    sum += 1.0 / static_cast<double>(rank_of(predictions[i], truths[i]));
  }
  return sum / static_cast<double>(predictions.size());
}

std::vector<std::uint32_t> misprediction_distances(std::span<const Prediction> predictions,
                                                   std::span<const VertexIndex> truths,
                                                   const CoaCatalog& catalog) {
  check_aligned(predictions, truths);
  std::vector<const CoaTree*> trees;
  trees.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const CoaTree& tree = catalog.at(predictions[i].config_id).tree;
    if (truths[i] >= tree.size() || predictions[i].top().vertex >= tree.size()) {
      throw Error(ErrorCode::kUnknownVertex, kModule,
                  "instance " + std::to_string(i) + " names a vertex outside config '" +
                      tree.config_id() + "'");
    }
    trees.push_back(&tree);
  }
  std::vector<std::uint32_t> out(predictions.size());
  const auto count = static_cast<std::int64_t>(predictions.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    out[i] = misprediction_distance(*trees[i], predictions[i].top().vertex, truths[i]);
  }
  return out;
}

std::optional<double> mmd(std::span<const Prediction> predictions,
                          std::span<const VertexIndex> truths, const CoaCatalog& catalog) {
  std::uint64_t sum = 0, count = 0;
  for (std::uint32_t d : misprediction_distances(predictions, truths, catalog)) {
    if (d > 0) {
      sum += d;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return static_cast<double>(sum) / static_cast<double>(count);
}

double mod(std::span<const Prediction> predictions, std::span<const VertexIndex> truths,
           const CoaCatalog& catalog) {
  const auto mds = misprediction_distances(predictions, truths, catalog);
  if (mds.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (std::uint32_t d : mds) sum += d;
  return static_cast<double>(sum) / static_cast<double>(mds.size());
}

Histogram md_histogram(std::span<const Prediction> predictions,
                       std::span<const VertexIndex> truths, const CoaCatalog& catalog) {
  Histogram h;
  for (std::uint32_t d : misprediction_distances(predictions, truths, catalog)) ++h[d];
  return h;
}

HistogramDiff histogram_diff(const Histogram& a, const Histogram& b) {
  std::uint64_t total_a = 0, total_b = 0;
  for (const auto& [d, c] : a) total_a += c;
  for (const auto& [d, c] : b) total_b += c;
  if (total_a != total_b) {
    throw Error(ErrorCode::kTotalMismatch, kModule,
                "histograms cover " + std::to_string(total_a) + " and " +
                    std::to_string(total_b) + " instances");
  }
  HistogramDiff diff;
  for (const auto& [d, c] : a) diff[d] += static_cast<std::int64_t>(c);
  for (const auto& [d, c] : b) diff[d] -= static_cast<std::int64_t>(c);
  return diff;
}

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const VertexIndex> truths,
                    const CoaCatalog& catalog, std::string model_id, std::string dataset_id) {
  EvalReport report;
  report.model_id = std::move(model_id);
  report.dataset_id = std::move(dataset_id);
  report.accuracy = accuracy(predictions, truths);
  report.mrr = mrr(predictions, truths);

  // One MD pass feeds MMD, MOD and the histogram; sums run in instance order.
  const auto mds = misprediction_distances(predictions, truths, catalog);
  std::uint64_t sum = 0;
  for (std::uint32_t d : mds) {
    sum += d;
    ++report.md_histogram[d];
    if (d > 0) ++report.n_mispredictions;
  }
  report.n_instances = mds.size();
  report.mod = mds.empty() ? 0.0 : static_cast<double>(sum) / static_cast<double>(mds.size());
  if (report.n_mispredictions > 0) {
    report.mmd = static_cast<double>(sum) / static_cast<double>(report.n_mispredictions);
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["model_id"] = report.model_id;
  doc["dataset_id"] = report.dataset_id;
  doc["accuracy"] = report.accuracy;
  doc["mrr"] = report.mrr;
  doc["mmd"] = report.mmd ? nlohmann::ordered_json(*report.mmd) : nlohmann::ordered_json(nullptr);
  doc["mod"] = report.mod;
  auto& hist = doc["md_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [d, c] : report.md_histogram) hist[std::to_string(d)] = c;
  doc["n_instances"] = report.n_instances;
  doc["n_mispredictions"] = report.n_mispredictions;
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    EvalReport r;
    r.model_id = doc.value("model_id", std::string());
    r.dataset_id = doc.value("dataset_id", std::string());
    r.accuracy = doc.at("accuracy").get<double>();
    r.mrr = doc.at("mrr").get<double>();
    if (!doc.at("mmd").is_null()) r.mmd = doc.at("mmd").get<double>();
    r.mod = doc.at("mod").get<double>();
    for (const auto& [key, value] : doc.at("md_histogram").items()) {
      r.md_histogram[static_cast<std::uint32_t>(std::stoul(key))] = value.get<std::uint64_t>();
    }
    r.n_instances = doc.at("n_instances").get<std::uint64_t>();
    r.n_mispredictions = doc.at("n_mispredictions").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, kModule, std::string("bad report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kMalformed, kModule, std::string("bad histogram key: ") + e.what());
  }
}

EvalReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return report_from_json(buffer.str());
}

std::string format_report_table(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "model\tAcc\tMRR\tMMD\tMOD\tn\n";
  for (const EvalReport& r : reports) {
    out << r.model_id << '\t' << format_fixed(100.0 * r.accuracy, 2) << '\t'
        << format_fixed(100.0 * r.mrr, 2) << '\t' << (r.mmd ? format_fixed(*r.mmd, 2) : "-")
        << '\t' << format_fixed(r.mod, 2) << '\t' << r.n_instances << '\n';
  }
  return out.str();
}

}  // namespace topoledger
