// SPDX-License-Identifier: Apache-2.0
//
// Charts of accounts as vertex-labeled trees, and the tree distance and
// similarity matrices derived from them.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace topoledger {

// Dense 0-based vertex index inside one CoaTree. External ids from the input
// file are kept on the tree for reporting.
using VertexIndex = std::uint32_t;

// One node as it appears in a COA file.
struct CoaNode {
  std::string id;
  std::optional<std::string> parent;
  std::string label;
};

// Vertex-labeled tree for one chart-of-accounts configuration. Immutable once
// built; every instance satisfies the tree and label-bijection invariants.
class CoaTree {
 public:
  // Validates and builds. Node order defines the vertex numbering.
  // Throws Error on empty/duplicate labels, duplicate ids, unknown parents,
  // cycles, multiple or missing roots, and trees with fewer than 2 vertices.
  static CoaTree build(std::string config_id, std::span<const CoaNode> nodes);

  const std::string& config_id() const { return config_id_; }
  std::size_t size() const { return labels_.size(); }
  VertexIndex root() const { return root_; }

  const std::string& label(VertexIndex v) const { return labels_.at(v); }
  const std::string& external_id(VertexIndex v) const { return ids_.at(v); }
  std::optional<VertexIndex> parent(VertexIndex v) const;
  std::uint32_t depth(VertexIndex v) const { return depth_.at(v); }
  std::span<const VertexIndex> neighbors(VertexIndex v) const;

  std::optional<VertexIndex> find_external(std::string_view id) const;
  std::optional<VertexIndex> find_label(std::string_view label) const;

  // Undirected edges as (parent, child) pairs in child order.
  std::vector<std::pair<VertexIndex, VertexIndex>> edges() const;
  std::vector<CoaNode> nodes() const;

  bool operator==(const CoaTree& other) const;

 private:
  CoaTree() = default;

  std::string config_id_;
  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  std::vector<std::int64_t> parent_;  // -1 for the root
  std::vector<std::uint32_t> depth_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<VertexIndex> adj_;
  VertexIndex root_ = 0;
  std::unordered_map<std::string, VertexIndex> by_id_;
  std::unordered_map<std::string, VertexIndex> by_label_;
};

// COA JSON: {"config_id": str, "nodes": [{"id", "parent" (str|null), "label"}]}
CoaTree parse_coa(std::istream& in);
CoaTree parse_coa(std::string_view json_text);
CoaTree load_coa(const std::string& path);
std::string serialize_coa(const CoaTree& tree);

// Shortest-path edge counts between all vertex pairs, row-major n x n.
class DistanceMatrix {
 public:
  DistanceMatrix(std::size_t n, std::vector<std::uint32_t> entries);

  std::size_t size() const { return n_; }
  std::uint32_t operator()(std::size_t i, std::size_t j) const {
    return entries_[i * n_ + j];
  }
  std::span<const std::uint32_t> row(std::size_t i) const {
    return {entries_.data() + i * n_, n_};
  }
  // Global maximum entry, i.e. the tree diameter.
  std::uint32_t max() const { return max_; }
  std::span<const std::uint32_t> entries() const { return entries_; }

  bool operator==(const DistanceMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint32_t> entries_;
  std::uint32_t max_;
};

// s_ij = 1 - d_ij / max(D).
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::size_t n, std::vector<double> entries)
      : n_(n), entries_(std::move(entries)) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * n_ + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * n_, n_};
  }
  std::span<const double> entries() const { return entries_; }

 private:
  std::size_t n_;
  std::vector<double> entries_;
};

// One BFS per source vertex, rows computed in parallel with OpenMP.
DistanceMatrix distance_matrix(const CoaTree& tree);
// Same computation on a single thread. Kept as the reference for tests and
// the benchmark.
DistanceMatrix distance_matrix_serial(const CoaTree& tree);

// Throws Error(kDegenerateTree) when max(D) == 0.
SimilarityMatrix similarity_matrix(const DistanceMatrix& d);

// Tree path length between predicted and true vertex, by walking both up to
// their lowest common ancestor. Throws Error(kUnknownVertex) on bad indices.
std::uint32_t misprediction_distance(const CoaTree& tree, VertexIndex predicted,
                                     VertexIndex truth);

// A tree together with its precomputed matrices.
struct CoaEntry {
  CoaTree tree;
  DistanceMatrix distances;
  SimilarityMatrix similarity;
};

// All COA configurations known to a run, keyed by config_id.
class CoaCatalog {
 public:
  void add(CoaTree tree);
  const CoaEntry& at(std::string_view config_id) const;
  const CoaEntry* find(std::string_view config_id) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, CoaEntry, std::less<>> entries_;
};

}  // namespace topoledger
