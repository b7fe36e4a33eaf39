// SPDX-License-Identifier: Apache-2.0
//
// Training for the mean-pooled bi-encoder: cosine-similarity regression on
// scored pairs, and multiple negatives ranking loss over in-batch negatives.
// Both run single-threaded so loss traces are bit-reproducible.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "topoledger/augment.h"
#include "topoledger/embed.h"

namespace topoledger {

enum class LossKind { kCosineRegression, kMultipleNegativesRanking };

std::string_view loss_name(LossKind loss);
LossKind parse_loss(std::string_view name);  // "cosine" | "mnrl"

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  // The from-scratch table needs a much larger step than transformer
  // fine-tuning; 2e-5 remains available by setting it explicitly.
  double learning_rate = 1e-2;
  double warmup_fraction = 0.05;
  double mnrl_scale = 20.0;
  double weight_decay = 0.01;
  LossKind loss = LossKind::kCosineRegression;
  std::uint64_t seed = 0;

  void validate() const;
};

// A training pair with both sides already mapped to token ids.
struct EncodedPair {
  std::vector<std::size_t> query;
  std::vector<std::size_t> label;
  double target = 1.0;
};

std::vector<EncodedPair> encode_pairs(const EmbeddingModel& model,
                                      std::span<const TrainingSample> samples);

// Mean over the batch of (cos(u, l) - target)^2. When `grad` is non-empty it
// must have the table's size and receives dLoss/dTable (overwritten).
double cosine_regression_loss(const EmbeddingModel& model, std::span<const EncodedPair> batch,
                              std::span<double> grad);

// Mean over queries i of cross-entropy of softmax_j(scale * cos(u_i, l_j))
// against class i. Same gradient convention as above.
double mnrl_loss(const EmbeddingModel& model, std::span<const EncodedPair> batch, double scale,
                 std::span<double> grad);

// Learning-rate multiplier for optimizer step `step` (0-based): linear ramp
// from 0 over `warmup_steps`, then linear decay to 0 at `total_steps`.
double warmup_linear(std::size_t step, std::size_t warmup_steps, std::size_t total_steps);

// Adam with decoupled weight decay over one flat parameter vector.
class AdamW {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  AdamW(std::size_t size, double weight_decay);
  void step(std::span<double> params, std::span<const double> grad, double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  double weight_decay_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct TrainResult {
  std::vector<double> batch_losses;  // one per optimizer step
  std::size_t batches_per_epoch = 0;
  std::size_t skipped_batches = 0;   // MNRL batches of size 1
};

// Shuffles the whole dataset jointly each epoch.
TrainResult train_cosine_regression(EmbeddingModel& model, std::span<const TrainingSample> dataset,
                                    const TrainConfig& cfg);

// Requires positives only and batch_size >= 2.
TrainResult train_mnrl(EmbeddingModel& model, std::span<const TrainingSample> positives,
                       const TrainConfig& cfg);

// Dispatches on cfg.loss; MNRL keeps only the positive samples.
TrainResult train(EmbeddingModel& model, std::span<const TrainingSample> dataset,
                  const TrainConfig& cfg);

}  // namespace topoledger
