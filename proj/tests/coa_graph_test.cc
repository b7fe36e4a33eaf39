// SPDX-License-Identifier: Apache-2.0

#include "topoledger/coa_graph.h"

#include <gtest/gtest.h>

#include "test_util.h"
#include "topoledger/error.h"

namespace topoledger {
namespace {

using testing::floyd_warshall;
using testing::path_tree;
using testing::random_tree;

ErrorCode parse_error(std::string_view json) {
  try {
    parse_coa(json);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << json;
  return ErrorCode::kIo;
}

TEST(ParseCoa, AssetsExample) {
  const CoaTree t = parse_coa(R"({"config_id": "c1", "nodes": [
    {"id": "a", "parent": null, "label": "assets"},
    {"id": "f", "parent": "a", "label": "fixed assets"},
    {"id": "c", "parent": "a", "label": "current assets"}]})");
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.edges().size(), 2u);
  EXPECT_EQ(t.config_id(), "c1");
  EXPECT_EQ(t.root(), 0u);
  EXPECT_EQ(t.label(1), "fixed assets");
  EXPECT_EQ(t.find_external("c"), VertexIndex{2});
  EXPECT_EQ(t.find_label("assets"), VertexIndex{0});
  EXPECT_EQ(t.parent(2), VertexIndex{0});
  EXPECT_FALSE(t.parent(0).has_value());
}

TEST(ParseCoa, Errors) {
  EXPECT_EQ(parse_error("{not json"), ErrorCode::kMalformed);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "cash"},
    {"id": "b", "parent": "a", "label": "cash"}]})"),
            ErrorCode::kDuplicateLabel);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"},
    {"id": "a", "parent": "a", "label": "y"}]})"),
            ErrorCode::kDuplicateVertexId);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"},
    {"id": "b", "parent": "zz", "label": "y"}]})"),
            ErrorCode::kUnknownParent);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": "c", "label": "x"},
    {"id": "b", "parent": "a", "label": "y"},
    {"id": "c", "parent": "b", "label": "z"}]})"),
            ErrorCode::kCycle);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "r", "parent": null, "label": "root"},
    {"id": "a", "parent": "c", "label": "x"},
    {"id": "b", "parent": "a", "label": "y"},
    {"id": "c", "parent": "b", "label": "z"}]})"),
            ErrorCode::kCycle);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"},
    {"id": "b", "parent": null, "label": "y"}]})"),
            ErrorCode::kDisconnected);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"},
    {"id": "b", "parent": "a", "label": ""}]})"),
            ErrorCode::kEmptyLabel);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"}]})"),
            ErrorCode::kDegenerateTree);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"},
    {"id": "b", "label": "y"}]})"),
            ErrorCode::kMalformed);
  EXPECT_EQ(parse_error(R"({"config_id": "c", "nodes": [
    {"id": "a", "parent": null, "label": "x"},
    {"id": "b", "parent": "a", "label": "y\tz"}]})"),
            ErrorCode::kMalformed);
}

TEST(ParseCoa, RoundTrip) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CoaTree t = random_tree(2 + uniform_index(rng, 40), rng);
    const std::string text = serialize_coa(t);
    const CoaTree back = parse_coa(text);
    EXPECT_EQ(back, t);
    EXPECT_EQ(serialize_coa(back), text);
  }
}

TEST(DistanceMatrix, PathTree) {
  const CoaTree t = path_tree(3);
  const DistanceMatrix d = distance_matrix(t);
  const std::vector<std::uint32_t> want{0, 1, 2, 1, 0, 1, 2, 1, 0};
  EXPECT_EQ(std::vector<std::uint32_t>(d.entries().begin(), d.entries().end()), want);
  EXPECT_EQ(d.max(), 2u);
  const SimilarityMatrix s = similarity_matrix(d);
  const std::vector<double> want_s{1, 0.5, 0, 0.5, 1, 0.5, 0, 0.5, 1};
  EXPECT_EQ(std::vector<double>(s.entries().begin(), s.entries().end()), want_s);
}

TEST(DistanceMatrix, Star) {
  const std::vector<CoaNode> nodes{{"c", std::nullopt, "centre"},
                                   {"l1", "c", "leaf one"},
                                   {"l2", "c", "leaf two"},
                                   {"l3", "c", "leaf three"}};
  const DistanceMatrix d = distance_matrix(CoaTree::build("star", nodes));
  for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(d(0, j), 1u);
  for (std::size_t i = 1; i < 4; ++i)
    for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(d(i, j), i == j ? 0u : 2u);
  EXPECT_EQ(d.max(), 2u);
}

TEST(DistanceMatrix, MatchesFloydWarshallOnRandomTrees) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const CoaTree t = random_tree(2 + uniform_index(rng, 49), rng);
    const auto oracle = floyd_warshall(t);
    const DistanceMatrix d = distance_matrix(t);
    std::uint32_t diameter = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < t.size(); ++j) {
        ASSERT_EQ(d(i, j), oracle[i][j]) << "trial " << trial;
        diameter = std::max(diameter, oracle[i][j]);
      }
    EXPECT_EQ(d.max(), diameter);
    EXPECT_EQ(d, distance_matrix_serial(t));

    const SimilarityMatrix s = similarity_matrix(d);
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(s(i, i), 1.0);
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double want = 1.0 - static_cast<double>(oracle[i][j]) / diameter;
        EXPECT_NEAR(s(i, j), want, 1e-12);
        EXPECT_EQ(s(i, j), s(j, i));
        if (oracle[i][j] == diameter) EXPECT_EQ(s(i, j), 0.0);
        EXPECT_GE(s(i, j), 0.0);
        EXPECT_LE(s(i, j), 1.0);
      }
    }
  }
}

TEST(DistanceMatrix, TriangleInequality) {
  Rng rng(5);
  const CoaTree t = random_tree(30, rng);
  const DistanceMatrix d = distance_matrix(t);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j)
      for (std::size_t k = 0; k < t.size(); ++k) ASSERT_LE(d(i, j), d(i, k) + d(k, j));
}

TEST(SimilarityMatrix, DegenerateRejected) {
  const DistanceMatrix d(1, {0});
  EXPECT_THROW(similarity_matrix(d), Error);
}

TEST(MispredictionDistance, MatchesMatrixAndIsSymmetric) {
  const CoaTree p = path_tree(3);
  EXPECT_EQ(misprediction_distance(p, 0, 2), 2u);
  EXPECT_EQ(misprediction_distance(p, 2, 0), 2u);
  EXPECT_EQ(misprediction_distance(p, 1, 1), 0u);

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CoaTree t = random_tree(2 + uniform_index(rng, 40), rng);
    const DistanceMatrix d = distance_matrix(t);
    for (VertexIndex a = 0; a < t.size(); ++a)
      for (VertexIndex b = 0; b < t.size(); ++b) {
        ASSERT_EQ(misprediction_distance(t, a, b), d(a, b));
        ASSERT_EQ(misprediction_distance(t, a, b), misprediction_distance(t, b, a));
      }
  }
}

TEST(MispredictionDistance, UnknownVertex) {
  const CoaTree p = path_tree(3);
  try {
    misprediction_distance(p, 0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownVertex);
  }
}

TEST(CoaCatalog, DuplicateAndMissing) {
  CoaCatalog catalog;
  catalog.add(path_tree(3, "a"));
  EXPECT_EQ(catalog.at("a").distances.max(), 2u);
  EXPECT_EQ(catalog.find("b"), nullptr);
  try {
    catalog.add(path_tree(4, "a"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateKey);
  }
  try {
    catalog.at("b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownConfig);
  }
}

}  // namespace
}  // namespace topoledger
