// SPDX-License-Identifier: Apache-2.0

#include "topoledger/embed.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "json.hpp"
#include "topoledger/error.h"
#include "topoledger/rng.h"
#include "topoledger/text_io.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "embed";
constexpr std::string_view kCheckpointFormat = "topoledger-embedding-model";

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                               : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, kModule,
                "cosine of vectors with dims " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return dot / (std::sqrt(aa) * std::sqrt(bb));
}

Vocabulary::Vocabulary() { add(std::string(kUnknownToken)); }

void Vocabulary::add(std::string token) {
  if (index_.emplace(token, tokens_.size()).second) tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
  Vocabulary vocab;
  for (const std::string& text : texts) {
    for (std::string& token : tokenize(text)) vocab.add(std::move(token));
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens.front() != kUnknownToken) {
    throw Error(ErrorCode::kMalformed, kModule, "vocabulary must start with the unknown token");
  }
  Vocabulary vocab;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::size_t before = vocab.size();
    vocab.add(std::move(tokens[i]));
    if (vocab.size() == before) {
      throw Error(ErrorCode::kDuplicateKey, kModule, "duplicate vocabulary token");
    }
  }
  return vocab;
}

std::size_t Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

EmbeddingModel EmbeddingModel::initialize(Vocabulary vocab, std::size_t dim, std::uint64_t seed,
                                          bool normalize) {
  std::vector<double> table(vocab.size() * dim);
  Rng rng(splitmix64(seed));
  for (double& x : table) x = (2.0 * uniform_unit(rng) - 1.0) * kInitRange;
  return EmbeddingModel(std::move(vocab), dim, std::move(table), normalize, seed);
}

EmbeddingModel::EmbeddingModel(Vocabulary vocab, std::size_t dim, std::vector<double> table,
                               bool normalize, std::uint64_t init_seed)
    : vocab_(std::move(vocab)),
      dim_(dim),
      table_(std::move(table)),
      normalize_(normalize),
      init_seed_(init_seed) {
  if (dim_ < 2) throw Error(ErrorCode::kInvalidArgument, kModule, "embedding dim must be >= 2");
  if (table_.size() != vocab_.size() * dim_) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "table size does not match |vocab| x dim");
  }
  for (double x : table_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kMalformed, kModule, "non-finite table entry");
  }
}

std::vector<std::size_t> EmbeddingModel::encode(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const std::string& token : tokenize(text)) ids.push_back(vocab_.index(token));
  return ids;
}

void EmbeddingModel::mean_pool(std::span<const std::size_t> ids, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (ids.empty()) return;
  for (std::size_t id : ids) {
    const double* r = table_.data() + id * dim_;
    for (std::size_t j = 0; j < dim_; ++j) out[j] += r[j];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& x : out) x *= inv;
}

Vector EmbeddingModel::embed(std::string_view text) const {
  Vector out(dim_);
  mean_pool(encode(text), out);
  if (normalize_) {
    double norm = 0.0;
    for (double x : out) norm += x * x;
    if (norm > 0.0) {
      const double inv = 1.0 / std::sqrt(norm);
      for (double& x : out) x *= inv;
    }
  }
  return out;
}

bool EmbeddingModel::operator==(const EmbeddingModel& other) const {
  return vocab_ == other.vocab_ && dim_ == other.dim_ && table_ == other.table_ &&
         normalize_ == other.normalize_ && init_seed_ == other.init_seed_;
}

std::string model_to_json(const EmbeddingModel& model, const std::string& metadata_json) {
  nlohmann::ordered_json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = 1;
  doc["dim"] = model.dim();
  doc["normalize"] = model.normalize();
  doc["init_seed"] = model.init_seed();
  doc["metadata"] = nlohmann::ordered_json::parse(metadata_json);
  doc["vocabulary"] = model.vocabulary().tokens();
  doc["table"] = std::vector<double>(model.table().begin(), model.table().end());
  return doc.dump() + "\n";
}

EmbeddingModel model_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", std::string()) != kCheckpointFormat) {
      throw Error(ErrorCode::kMalformed, kModule, "not an embedding model checkpoint");
    }
    return EmbeddingModel(Vocabulary::from_tokens(doc.at("vocabulary").get<std::vector<std::string>>()),
                          doc.at("dim").get<std::size_t>(),
                          doc.at("table").get<std::vector<double>>(),
                          doc.at("normalize").get<bool>(),
                          doc.at("init_seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, kModule, std::string("bad checkpoint: ") + e.what());
  }
}

void save_model(const EmbeddingModel& model, const std::string& path,
                const std::string& metadata_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, kModule, "cannot write '" + path + "'");
  out << model_to_json(model, metadata_json);
}

EmbeddingModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

ExternalEmbeddings ExternalEmbeddings::parse(std::istream& in) {
  ExternalEmbeddings out;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kMalformed, kModule, "empty embedding file");
  }
  strip_carriage_return(line);
  {
    std::istringstream header(line);
    std::string word;
    long long dim = 0;
    std::string rest;
    if (!(header >> word >> dim) || word != "dim" || dim < 1 || (header >> rest)) {
      throw Error(ErrorCode::kMalformed, kModule, "first line must be 'dim <D>'");
    }
    out.dim_ = static_cast<std::size_t>(dim);
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_carriage_return(line);
    if (line.empty()) continue;
    const std::string where = "embedding line " + std::to_string(line_no);
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kMalformed, kModule, where + ": missing tab after key");
    }
    std::string key = line.substr(0, tab);
    std::string_view values(line);
    values.remove_prefix(tab + 1);

    Vector v;
    v.reserve(out.dim_);
    std::size_t pos = 0;
    while (pos < values.size()) {
      while (pos < values.size() && values[pos] == ' ') ++pos;
      if (pos >= values.size()) break;
      std::size_t end = values.find(' ', pos);
      if (end == std::string_view::npos) end = values.size();
      v.push_back(parse_double(values.substr(pos, end - pos), kModule, where));
      pos = end;
    }
    if (v.size() != out.dim_) {
      throw Error(ErrorCode::kDimensionMismatch, kModule,
                  where + ": expected " + std::to_string(out.dim_) + " values, found " +
                      std::to_string(v.size()));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kMalformed, kModule, where + ": non-finite value");
    }
    if (!out.vectors_.emplace(key, std::move(v)).second) {
      throw Error(ErrorCode::kDuplicateKey, kModule, where + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

ExternalEmbeddings ExternalEmbeddings::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path + "'");
  return parse(in);
}

Vector ExternalEmbeddings::embed(std::string_view text) const {
  auto it = vectors_.find(std::string(text));
  if (it == vectors_.end()) {
    throw Error(ErrorCode::kUnknownText, kModule, "no vector for text '" + std::string(text) + "'");
  }
  return it->second;
}

bool ExternalEmbeddings::contains(std::string_view text) const {
  return vectors_.contains(std::string(text));
}

}  // namespace topoledger
