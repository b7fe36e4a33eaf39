// SPDX-License-Identifier: Apache-2.0
//
// Text embeddings: a mean-pooled token-embedding bi-encoder that can be
// trained in-process, and a provider for vectors computed elsewhere.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace topoledger {

using Vector = std::vector<double>;

// Lowercase, split on every non-alphanumeric ASCII byte, drop empty tokens.
// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// dot(a, b) / (|a| |b|), or 0 when either norm is 0.
// Throws Error(kDimensionMismatch) if sizes differ.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  // Tokens in order of first appearance across `texts`.
  static Vocabulary build(std::span<const std::string> texts);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t index(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Anything that turns text into a fixed-width vector.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector embed(std::string_view text) const = 0;
};

class EmbeddingModel final : public TextEncoder {
 public:
  static constexpr std::size_t kDefaultDim = 64;
  static constexpr double kInitRange = 0.05;

  // Rows drawn uniformly from [-kInitRange, kInitRange] using `seed`.
  static EmbeddingModel initialize(Vocabulary vocab, std::size_t dim, std::uint64_t seed,
                                   bool normalize = false);
  // Takes an explicit table, |vocab| x dim row-major.
  EmbeddingModel(Vocabulary vocab, std::size_t dim, std::vector<double> table, bool normalize,
                 std::uint64_t init_seed);

  std::size_t dim() const override { return dim_; }
  // Mean of the token rows; the zero vector for texts without tokens. When
  // `normalize` is set the mean is scaled to unit length.
  Vector embed(std::string_view text) const override;

  std::vector<std::size_t> encode(std::string_view text) const;
  void mean_pool(std::span<const std::size_t> ids, std::span<double> out) const;

  const Vocabulary& vocabulary() const { return vocab_; }
  bool normalize() const { return normalize_; }
  std::uint64_t init_seed() const { return init_seed_; }
  std::span<const double> table() const { return table_; }
  std::span<double> mutable_table() { return table_; }
  std::span<const double> row(std::size_t i) const { return {table_.data() + i * dim_, dim_}; }

  bool operator==(const EmbeddingModel& other) const;

 private:
  Vocabulary vocab_;
  std::size_t dim_;
  std::vector<double> table_;
  bool normalize_;
  std::uint64_t init_seed_;
};

// JSON checkpoint: format tag, vocabulary, dim, table, normalize, init_seed,
// plus caller-supplied metadata (training seeds, loss, ...).
void save_model(const EmbeddingModel& model, const std::string& path,
                const std::string& metadata_json = "{}");
EmbeddingModel load_model(const std::string& path);
std::string model_to_json(const EmbeddingModel& model, const std::string& metadata_json = "{}");
EmbeddingModel model_from_json(std::string_view text);

// Fixed vector per exact text key. Format: first line "dim <D>", then
// "<text>\t<D space-separated decimals>" per line.
class ExternalEmbeddings final : public TextEncoder {
 public:
  static ExternalEmbeddings parse(std::istream& in);
  static ExternalEmbeddings load(const std::string& path);

  std::size_t dim() const override { return dim_; }
  // Throws Error(kUnknownText) for keys not in the file.
  Vector embed(std::string_view text) const override;
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::string_view text) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vector> vectors_;
};

}  // namespace topoledger
