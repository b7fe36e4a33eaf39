// SPDX-License-Identifier: Apache-2.0

#include "topoledger/coa_graph.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "topoledger/error.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "coa";

[[noreturn]] void fail(ErrorCode code, const std::string& message) {
  throw Error(code, kModule, message);
}

bool has_line_breaks_or_tabs(std::string_view s) {
  return s.find_first_of("\t\r\n") != std::string_view::npos;
}

// Single-source BFS over the CSR adjacency, writing one matrix row.
void bfs_row(const CoaTree& tree, VertexIndex source, std::uint32_t* row,
             std::vector<VertexIndex>& queue) {
  const std::size_t n = tree.size();
  constexpr std::uint32_t kUnset = ~std::uint32_t{0};
  std::fill(row, row + n, kUnset);
  queue.clear();
  queue.push_back(source);
  row[source] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexIndex v = queue[head];
    for (VertexIndex w : tree.neighbors(v)) {
      if (row[w] == kUnset) {
        row[w] = row[v] + 1;
        queue.push_back(w);
      }
    }
  }
}

}  // namespace

CoaTree CoaTree::build(std::string config_id, std::span<const CoaNode> nodes) {
  const std::size_t n = nodes.size();
  if (n < 2) {
    fail(ErrorCode::kDegenerateTree,
         "config '" + config_id + "' has " + std::to_string(n) +
             " vertices; at least 2 are required");
  }

  CoaTree tree;
  tree.config_id_ = std::move(config_id);
  tree.ids_.reserve(n);
  tree.labels_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CoaNode& node = nodes[i];
    if (node.id.empty()) fail(ErrorCode::kMalformed, "node " + std::to_string(i) + " has an empty id");
    if (node.label.empty()) fail(ErrorCode::kEmptyLabel, "node '" + node.id + "' has an empty label");
    if (has_line_breaks_or_tabs(node.id) || has_line_breaks_or_tabs(node.label)) {
      fail(ErrorCode::kMalformed, "node '" + node.id + "' contains a tab or line break");
    }
    const auto index = static_cast<VertexIndex>(i);
    if (!tree.by_id_.emplace(node.id, index).second) {
      fail(ErrorCode::kDuplicateVertexId, "duplicate vertex id '" + node.id + "'");
    }
    if (!tree.by_label_.emplace(node.label, index).second) {
      fail(ErrorCode::kDuplicateLabel, "duplicate label '" + node.label + "'");
    }
    tree.ids_.push_back(node.id);
    tree.labels_.push_back(node.label);
  }

  tree.parent_.assign(n, -1);
  std::vector<VertexIndex> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (!nodes[i].parent) {
      roots.push_back(static_cast<VertexIndex>(i));
      continue;
    }
    auto it = tree.by_id_.find(*nodes[i].parent);
    if (it == tree.by_id_.end()) {
      fail(ErrorCode::kUnknownParent,
           "node '" + nodes[i].id + "' references unknown parent '" + *nodes[i].parent + "'");
    }
    tree.parent_[i] = it->second;
  }

  // Parent-pointer cycle detection: 0 = unvisited, 1 = on current chain, 2 = done.
  std::vector<std::uint8_t> state(n, 0);
  std::vector<std::size_t> chain;
  for (std::size_t start = 0; start < n; ++start) {
    chain.clear();
    std::int64_t v = static_cast<std::int64_t>(start);
    while (v >= 0 && state[v] == 0) {
      state[v] = 1;
      chain.push_back(static_cast<std::size_t>(v));
      v = tree.parent_[v];
    }
    if (v >= 0 && state[v] == 1) {
      fail(ErrorCode::kCycle, "parent links form a cycle through '" + tree.ids_[v] + "'");
    }
    for (std::size_t c : chain) state[c] = 2;
  }

  if (roots.size() != 1) {
    fail(ErrorCode::kDisconnected,
         "expected exactly one root, found " + std::to_string(roots.size()));
  }
  tree.root_ = roots.front();

  // CSR adjacency: children in node order, plus the parent link.
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.parent_[i] >= 0) {
      ++degree[i];
      ++degree[tree.parent_[i]];
    }
  }
  tree.adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) tree.adj_offsets_[i + 1] = tree.adj_offsets_[i] + degree[i];
  tree.adj_.resize(tree.adj_offsets_[n]);
  std::vector<std::size_t> cursor(tree.adj_offsets_.begin(), tree.adj_offsets_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.parent_[i] < 0) continue;
    const auto p = static_cast<std::size_t>(tree.parent_[i]);
    tree.adj_[cursor[i]++] = static_cast<VertexIndex>(p);
    tree.adj_[cursor[p]++] = static_cast<VertexIndex>(i);
  }

  // Depths from the root; also confirms every vertex is reachable.
  tree.depth_.assign(n, 0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<VertexIndex> queue{tree.root_};
  seen[tree.root_] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexIndex v = queue[head];
    for (VertexIndex w : tree.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        tree.depth_[w] = tree.depth_[v] + 1;
        queue.push_back(w);
      }
    }
  }
  if (queue.size() != n) {
    fail(ErrorCode::kDisconnected, "tree is not connected");
  }
  return tree;
}

std::optional<VertexIndex> CoaTree::parent(VertexIndex v) const {
  const std::int64_t p = parent_.at(v);
  if (p < 0) return std::nullopt;
  return static_cast<VertexIndex>(p);
}

std::span<const VertexIndex> CoaTree::neighbors(VertexIndex v) const {
  return {adj_.data() + adj_offsets_[v], adj_offsets_[v + 1] - adj_offsets_[v]};
}

std::optional<VertexIndex> CoaTree::find_external(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<VertexIndex> CoaTree::find_label(std::string_view label) const {
  auto it = by_label_.find(std::string(label));
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<VertexIndex, VertexIndex>> CoaTree::edges() const {
  std::vector<std::pair<VertexIndex, VertexIndex>> out;
  out.reserve(size() - 1);
  for (std::size_t i = 0; i < size(); ++i) {
    if (parent_[i] >= 0) {
      out.emplace_back(static_cast<VertexIndex>(parent_[i]), static_cast<VertexIndex>(i));
    }
  }
  return out;
}

std::vector<CoaNode> CoaTree::nodes() const {
  std::vector<CoaNode> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    CoaNode node{ids_[i], std::nullopt, labels_[i]};
    if (parent_[i] >= 0) node.parent = ids_[parent_[i]];
    out.push_back(std::move(node));
  }
  return out;
}

bool CoaTree::operator==(const CoaTree& other) const {
  return config_id_ == other.config_id_ && ids_ == other.ids_ &&
         labels_ == other.labels_ && parent_ == other.parent_;
}

CoaTree parse_coa(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformed, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::kMalformed, "top level must be an object");
  auto cfg = doc.find("config_id");
  if (cfg == doc.end() || !cfg->is_string()) {
    fail(ErrorCode::kMalformed, "missing string field 'config_id'");
  }
  auto list = doc.find("nodes");
  if (list == doc.end() || !list->is_array()) {
    fail(ErrorCode::kMalformed, "missing array field 'nodes'");
  }

  std::vector<CoaNode> nodes;
  nodes.reserve(list->size());
  for (const auto& item : *list) {
    if (!item.is_object()) fail(ErrorCode::kMalformed, "node entries must be objects");
    auto id = item.find("id");
    auto label = item.find("label");
    auto parent = item.find("parent");
    if (id == item.end() || !id->is_string()) fail(ErrorCode::kMalformed, "node without string 'id'");
    if (label == item.end() || !label->is_string()) {
      fail(ErrorCode::kMalformed, "node '" + id->get<std::string>() + "' without string 'label'");
    }
    CoaNode node{id->get<std::string>(), std::nullopt, label->get<std::string>()};
    if (parent != item.end() && !parent->is_null()) {
      if (!parent->is_string()) {
        fail(ErrorCode::kMalformed, "node '" + node.id + "' has a non-string parent");
      }
      node.parent = parent->get<std::string>();
    } else if (parent == item.end()) {
      fail(ErrorCode::kMalformed, "node '" + node.id + "' without 'parent' field");
    }
    nodes.push_back(std::move(node));
  }
  return CoaTree::build(cfg->get<std::string>(), nodes);
}

CoaTree parse_coa(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_coa(std::string_view(buffer.str()));
}

CoaTree load_coa(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path + "'");
  return parse_coa(in);
}

std::string serialize_coa(const CoaTree& tree) {
  nlohmann::ordered_json doc;
  doc["config_id"] = tree.config_id();
  auto& list = doc["nodes"] = nlohmann::ordered_json::array();
  for (const CoaNode& node : tree.nodes()) {
    nlohmann::ordered_json item;
    item["id"] = node.id;
    item["parent"] = node.parent ? nlohmann::ordered_json(*node.parent) : nlohmann::ordered_json(nullptr);
    item["label"] = node.label;
    list.push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<std::uint32_t> entries)
    : n_(n), entries_(std::move(entries)) {
  if (entries_.size() != n_ * n_) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "distance matrix entry count is not n*n");
  }
  max_ = entries_.empty() ? 0 : *std::max_element(entries_.begin(), entries_.end());
}

DistanceMatrix distance_matrix(const CoaTree& tree) {
  const std::size_t n = tree.size();
  std::vector<std::uint32_t> entries(n * n);
#pragma omp parallel
  {
    std::vector<VertexIndex> queue;
    queue.reserve(n);
#pragma omp for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(n); ++s) {
      bfs_row(tree, static_cast<VertexIndex>(s), entries.data() + s * n, queue);
    }
  }
  return DistanceMatrix(n, std::move(entries));
}

DistanceMatrix distance_matrix_serial(const CoaTree& tree) {
  const std::size_t n = tree.size();
  std::vector<std::uint32_t> entries(n * n);
  std::vector<VertexIndex> queue;
  queue.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    bfs_row(tree, static_cast<VertexIndex>(s), entries.data() + s * n, queue);
  }
  return DistanceMatrix(n, std::move(entries));
}

SimilarityMatrix similarity_matrix(const DistanceMatrix& d) {
  if (d.max() == 0) {
    fail(ErrorCode::kDegenerateTree, "max(D) is 0; similarity is undefined");
  }
  const double max_d = d.max();
  std::vector<double> entries(d.entries().size());
  std::transform(d.entries().begin(), d.entries().end(), entries.begin(),
                 [max_d](std::uint32_t x) { return 1.0 - static_cast<double>(x) / max_d; });
  return SimilarityMatrix(d.size(), std::move(entries));
}

std::uint32_t misprediction_distance(const CoaTree& tree, VertexIndex predicted,
                                     VertexIndex truth) {
  if (predicted >= tree.size() || truth >= tree.size()) {
    fail(ErrorCode::kUnknownVertex,
         "vertex index out of range for config '" + tree.config_id() + "'");
  }
  std::uint32_t steps = 0;
  VertexIndex a = predicted;
  VertexIndex b = truth;
  while (tree.depth(a) > tree.depth(b)) { a = *tree.parent(a); ++steps; }
  while (tree.depth(b) > tree.depth(a)) { b = *tree.parent(b); ++steps; }
  while (a != b) {
    a = *tree.parent(a);
    b = *tree.parent(b);
    steps += 2;
  }
  return steps;
}

void CoaCatalog::add(CoaTree tree) {
  std::string key = tree.config_id();
  if (entries_.contains(key)) {
    throw Error(ErrorCode::kDuplicateKey, kModule, "config '" + key + "' loaded twice");
  }
  DistanceMatrix d = distance_matrix(tree);
  SimilarityMatrix s = similarity_matrix(d);
  entries_.emplace(std::move(key), CoaEntry{std::move(tree), std::move(d), std::move(s)});
}

const CoaEntry& CoaCatalog::at(std::string_view config_id) const {
  const CoaEntry* entry = find(config_id);
  if (!entry) {
    throw Error(ErrorCode::kUnknownConfig, kModule,
                "unknown config '" + std::string(config_id) + "'");
  }
  return *entry;
}

const CoaEntry* CoaCatalog::find(std::string_view config_id) const {
  auto it = entries_.find(config_id);
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace topoledger
