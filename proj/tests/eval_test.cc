// SPDX-License-Identifier: Apache-2.0

#include "topoledger/eval.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.h"
#include "topoledger/error.h"

namespace topoledger {
namespace {

using testing::mod_mmd_identity_exact;
using testing::oracle_metrics;
using testing::path_tree;
using testing::random_metric_fixture;

// Prediction on the 5-vertex path with `ranking` as the candidate order.
Prediction ranked(const std::vector<VertexIndex>& ranking) {
  Prediction p{"u", "path", {}};
  double score = 1.0;
  for (VertexIndex v : ranking) {
    p.candidates.push_back({v, "p" + std::to_string(v), score});
    score -= 0.1;
  }
  return p;
}

// Full ranking with `top` first, the rest ascending.
Prediction top_first(VertexIndex top) {
  std::vector<VertexIndex> order{top};
  for (VertexIndex v = 0; v < 5; ++v)
    if (v != top) order.push_back(v);
  return ranked(order);
}

class WorkedExamples : public ::testing::Test {
 protected:
  void SetUp() override { catalog_.add(path_tree(5)); }
  CoaCatalog catalog_;
};

TEST_F(WorkedExamples, AccuracyAndMrr) {
  // Truth 0 at ranks 1, 2 and 4.
  const std::vector<Prediction> preds{ranked({0, 1, 2, 3, 4}), ranked({1, 0, 2, 3, 4}),
                                      ranked({1, 2, 3, 0, 4})};
  const std::vector<VertexIndex> truths{0, 0, 0};
  EXPECT_NEAR(mrr(preds, truths), (1 + 0.5 + 0.25) / 3, 1e-15);
  EXPECT_NEAR(accuracy(preds, truths), 1.0 / 3, 1e-15);

  const std::vector<Prediction> four{ranked({0, 1}), ranked({1, 0}), ranked({2, 1}), ranked({3})};
  const std::vector<VertexIndex> t4{0, 0, 2, 1};
  EXPECT_EQ(accuracy(four, t4), 0.5);
  EXPECT_EQ(accuracy(std::span(four).first(1), std::span(t4).first(1)), 1.0);
  EXPECT_EQ(mrr(std::span(four).first(1), std::span(t4).first(1)), 1.0);
}

TEST_F(WorkedExamples, MdTwoAndFourPlusTwoCorrect) {
  const std::vector<Prediction> preds{top_first(0), top_first(3), top_first(2), top_first(4)};
  const std::vector<VertexIndex> truths{0, 1, 2, 0};  // MDs 0, 2, 0, 4
  EXPECT_EQ(mmd(preds, truths, catalog_), 3.0);
  EXPECT_EQ(mod(preds, truths, catalog_), 1.5);
  EXPECT_EQ(md_histogram(preds, truths, catalog_), (Histogram{{0, 2}, {2, 1}, {4, 1}}));
  const EvalReport r = evaluate(preds, truths, catalog_, "m", "d");
  EXPECT_EQ(r.mmd, 3.0);
  EXPECT_EQ(r.mod, 1.5);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.n_instances, 4u);
  EXPECT_EQ(r.n_mispredictions, 2u);
  EXPECT_TRUE(mod_mmd_identity_exact(r));
}

TEST_F(WorkedExamples, PerfectModelHasNoMmd) {
  const std::vector<Prediction> preds{ranked({1, 0}), ranked({3, 2})};
  const std::vector<VertexIndex> truths{1, 3};
  EXPECT_FALSE(mmd(preds, truths, catalog_).has_value());
  const EvalReport r = evaluate(preds, truths, catalog_);
  EXPECT_FALSE(r.mmd.has_value());
  EXPECT_EQ(r.mod, 0.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.mrr, 1.0);
}

TEST_F(WorkedExamples, Errors) {
  const std::vector<Prediction> preds{ranked({1, 2})};
  try {
    accuracy(preds, std::vector<VertexIndex>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  try {
    mrr(preds, std::vector<VertexIndex>{0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruthNotRanked);
  }
  try {
    mod(preds, std::vector<VertexIndex>{9}, catalog_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownVertex);
  }
}

TEST(Metrics, MatchBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto f = random_metric_fixture(seed);
    const auto o = oracle_metrics(f);
    const EvalReport r = evaluate(f.predictions, f.truths, f.catalog);
    EXPECT_NEAR(accuracy(f.predictions, f.truths), o.accuracy, 1e-12);
    EXPECT_NEAR(mrr(f.predictions, f.truths), o.mrr, 1e-12);
    EXPECT_NEAR(mod(f.predictions, f.truths, f.catalog), o.mod, 1e-12);
    ASSERT_EQ(mmd(f.predictions, f.truths, f.catalog).has_value(), o.mmd.has_value());
    if (o.mmd) EXPECT_NEAR(*mmd(f.predictions, f.truths, f.catalog), *o.mmd, 1e-12);
    EXPECT_EQ(md_histogram(f.predictions, f.truths, f.catalog), o.histogram);

    EXPECT_NEAR(r.accuracy, o.accuracy, 1e-12);
    EXPECT_NEAR(r.mrr, o.mrr, 1e-12);
    EXPECT_NEAR(r.mod, o.mod, 1e-12);
    EXPECT_EQ(r.md_histogram, o.histogram);
    EXPECT_TRUE(mod_mmd_identity_exact(r)) << "seed " << seed;

    // Report invariants.
    const auto zeros = r.md_histogram.contains(0) ? r.md_histogram.at(0) : 0;
    EXPECT_EQ(r.accuracy, static_cast<double>(zeros) / static_cast<double>(r.n_instances));
    EXPECT_EQ(r.n_mispredictions, r.n_instances - zeros);
    EXPECT_EQ(r.mmd.has_value(), r.n_mispredictions > 0);
    EXPECT_GE(r.mrr, r.accuracy);
    if (r.mmd && zeros > 0) EXPECT_LE(r.mod, *r.mmd);
  }
}

TEST(HistogramDiff, Cases) {
  const Histogram a{{0, 5}, {1, 3}, {3, 2}};
  const Histogram b{{0, 7}, {2, 3}};
  EXPECT_EQ(histogram_diff(a, b), (HistogramDiff{{0, -2}, {1, 3}, {2, -3}, {3, 2}}));
  EXPECT_EQ(histogram_diff(a, a), (HistogramDiff{{0, 0}, {1, 0}, {3, 0}}));
  try {
    histogram_diff(a, Histogram{{0, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTotalMismatch);
  }
}

TEST(HistogramDiff, MatchesOracleOnRandomPairs) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto f = random_metric_fixture(seed);
    auto g = f;
    Rng rng(seed);
    for (Prediction& p : g.predictions) shuffle(p.candidates, rng);
    const Histogram ha = md_histogram(f.predictions, f.truths, f.catalog);
    const Histogram hb = md_histogram(g.predictions, g.truths, g.catalog);
    const HistogramDiff d = histogram_diff(ha, hb);
    std::int64_t net = 0;
    for (std::uint32_t md = 0; md < 64; ++md) {
      const auto ca = ha.contains(md) ? static_cast<std::int64_t>(ha.at(md)) : 0;
      const auto cb = hb.contains(md) ? static_cast<std::int64_t>(hb.at(md)) : 0;
      const auto got = d.contains(md) ? d.at(md) : 0;
      EXPECT_EQ(got, ca - cb);
      net += got;
    }
    EXPECT_EQ(net, 0);
  }
}

TEST(ReportJson, RoundTrip) {
  const auto f = random_metric_fixture(4);
  const EvalReport r = evaluate(f.predictions, f.truths, f.catalog, "model-a", "set-1");
  const EvalReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.accuracy, r.accuracy);
  EXPECT_EQ(back.mrr, r.mrr);
  EXPECT_EQ(back.mmd, r.mmd);
  EXPECT_EQ(back.mod, r.mod);
  EXPECT_EQ(back.md_histogram, r.md_histogram);
  EXPECT_EQ(back.n_instances, r.n_instances);
  EXPECT_EQ(back.model_id, "model-a");
  EXPECT_EQ(back.dataset_id, "set-1");

  EvalReport perfect;
  perfect.accuracy = perfect.mrr = 1.0;
  perfect.n_instances = 2;
  perfect.md_histogram = {{0, 2}};
  EXPECT_NE(report_to_json(perfect).find("\"mmd\": null"), std::string::npos);
  EXPECT_FALSE(report_from_json(report_to_json(perfect)).mmd.has_value());
  EXPECT_THROW(report_from_json("{}"), Error);
}

TEST(ReportTable, Formats) {
  EvalReport r;
  r.model_id = "m";
  r.accuracy = 0.5;
  r.mrr = 0.58333;
  r.mmd = 3.0;
  r.mod = 1.5;
  r.n_instances = 4;
  const std::vector<EvalReport> reports{r};
  const std::string table = format_report_table(reports);
  EXPECT_NE(table.find("50.00"), std::string::npos);
  EXPECT_NE(table.find("58.33"), std::string::npos);
  EXPECT_NE(table.find("3.00"), std::string::npos);
  EXPECT_NE(table.find("1.50"), std::string::npos);
}

}  // namespace
}  // namespace topoledger
