// SPDX-License-Identifier: Apache-2.0

#include "topoledger/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topoledger/error.h"
#include "topoledger/rng.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "train";

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// d(mean pool)/d(row) is 1/len per occurrence.
void scatter(std::span<const std::size_t> ids, std::span<const double> d_pooled, std::size_t dim,
             std::span<double> grad) {
  if (ids.empty()) return;
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (std::size_t id : ids) {
    double* g = grad.data() + id * dim;
    for (std::size_t j = 0; j < dim; ++j) g[j] += d_pooled[j] * inv;
  }
}

void check_grad_size(const EmbeddingModel& model, std::span<double> grad) {
  if (!grad.empty() && grad.size() != model.table().size()) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "gradient buffer does not match table");
  }
}

void check_finite(double loss, std::size_t epoch, std::size_t batch, std::string_view which) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kNonFiniteLoss, kModule,
                std::string(which) + " loss became " + std::to_string(loss) + " at epoch " +
                    std::to_string(epoch) + ", batch " + std::to_string(batch) +
                    "; lower the learning rate");
  }
}

std::size_t warmup_steps_for(const TrainConfig& cfg, std::size_t total_steps) {
  return static_cast<std::size_t>(std::floor(cfg.warmup_fraction * static_cast<double>(total_steps)));
}

}  // namespace

std::string_view loss_name(LossKind loss) {
  return loss == LossKind::kCosineRegression ? "cosine" : "mnrl";
}

LossKind parse_loss(std::string_view name) {
  if (name == "cosine") return LossKind::kCosineRegression;
  if (name == "mnrl") return LossKind::kMultipleNegativesRanking;
  throw Error(ErrorCode::kInvalidArgument, kModule,
              "unknown loss '" + std::string(name) + "' (expected cosine|mnrl)");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, kModule, what);
  };
  if (epochs == 0) bad("epochs must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) bad("warmup_fraction must be in [0, 1)");
  if (!(mnrl_scale > 0.0)) bad("mnrl_scale must be positive");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be non-negative");
}

std::vector<EncodedPair> encode_pairs(const EmbeddingModel& model,
                                      std::span<const TrainingSample> samples) {
  std::vector<EncodedPair> out;
  out.reserve(samples.size());
  for (const TrainingSample& s : samples) {
    out.push_back({model.encode(s.custom_description), model.encode(s.standard_label), s.target});
  }
  return out;
}

double cosine_regression_loss(const EmbeddingModel& model, std::span<const EncodedPair> batch,
                              std::span<double> grad) {
  check_grad_size(model, grad);
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  if (batch.empty()) return 0.0;

  const std::size_t dim = model.dim();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  std::vector<double> a(dim), b(dim), da(dim), db(dim);
  double loss = 0.0;
  for (const EncodedPair& pair : batch) {
    model.mean_pool(pair.query, a);
    model.mean_pool(pair.label, b);
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) {
      // Cosine is pinned to 0 here and carries no gradient.
      loss += pair.target * pair.target;
      continue;
    }
    const double c = dot(a, b) / (na * nb);
    const double err = c - pair.target;
    loss += err * err;
    if (grad.empty()) continue;

    const double coef = 2.0 * err * inv_batch;
    for (std::size_t j = 0; j < dim; ++j) {
      da[j] = coef * (b[j] / (na * nb) - c * a[j] / (na * na));
      db[j] = coef * (a[j] / (na * nb) - c * b[j] / (nb * nb));
    }
    scatter(pair.query, da, dim, grad);
    scatter(pair.label, db, dim, grad);
  }
  return loss * inv_batch;
}

double mnrl_loss(const EmbeddingModel& model, std::span<const EncodedPair> batch, double scale,
                 std::span<double> grad) {
  check_grad_size(model, grad);
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t n = batch.size();
  if (n == 0) return 0.0;

  const std::size_t dim = model.dim();
  // Unit-length pooled vectors (zero when the pooled vector is zero).
  std::vector<double> ua(n * dim), ub(n * dim), na(n), nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> ai(ua.data() + i * dim, dim), bi(ub.data() + i * dim, dim);
    model.mean_pool(batch[i].query, ai);
    model.mean_pool(batch[i].label, bi);
    na[i] = std::sqrt(dot(ai, ai));
    nb[i] = std::sqrt(dot(bi, bi));
    for (std::size_t j = 0; j < dim; ++j) {
      ai[j] = na[i] > 0.0 ? ai[j] / na[i] : 0.0;
      bi[j] = nb[i] > 0.0 ? bi[j] / nb[i] : 0.0;
    }
  }
  auto row_a = [&](std::size_t i) { return std::span<const double>(ua.data() + i * dim, dim); };
  auto row_b = [&](std::size_t i) { return std::span<const double>(ub.data() + i * dim, dim); };

  std::vector<double> cos(n * n), g(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cos[i * n + j] = dot(row_a(i), row_b(j));

  const double inv_batch = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* c = cos.data() + i * n;
    double max_logit = scale * c[0];
    for (std::size_t j = 1; j < n; ++j) max_logit = std::max(max_logit, scale * c[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(scale * c[j] - max_logit);
    const double lse = max_logit + std::log(z);
    loss += lse - scale * c[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double p = std::exp(scale * c[j] - lse);
      g[i * n + j] = (p - (i == j ? 1.0 : 0.0)) * inv_batch;
    }
  }
  if (grad.empty()) return loss * inv_batch;

  std::vector<double> d(dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (na[i] == 0.0) continue;
    double gc = 0.0;
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double gij = g[i * n + j];
      gc += gij * cos[i * n + j];
      const auto bj = row_b(j);
      for (std::size_t k = 0; k < dim; ++k) d[k] += gij * bj[k];
    }
    const auto ai = row_a(i);
    for (std::size_t k = 0; k < dim; ++k) d[k] = scale * (d[k] - gc * ai[k]) / na[i];
    scatter(batch[i].query, d, dim, grad);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (nb[j] == 0.0) continue;
    double gc = 0.0;
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double gij = g[i * n + j];
      gc += gij * cos[i * n + j];
      const auto ai = row_a(i);
      for (std::size_t k = 0; k < dim; ++k) d[k] += gij * ai[k];
    }
    const auto bj = row_b(j);
    for (std::size_t k = 0; k < dim; ++k) d[k] = scale * (d[k] - gc * bj[k]) / nb[j];
    scatter(batch[j].label, d, dim, grad);
  }
  return loss * inv_batch;
}

double warmup_linear(std::size_t step, std::size_t warmup_steps, std::size_t total_steps) {
  if (step < warmup_steps) {
    return static_cast<double>(step) / static_cast<double>(std::max<std::size_t>(1, warmup_steps));
  }
  const double remaining = static_cast<double>(total_steps) - static_cast<double>(step);
  const double span = static_cast<double>(std::max<std::size_t>(1, total_steps - warmup_steps));
  return std::max(0.0, remaining / span);
}

AdamW::AdamW(std::size_t size, double weight_decay)
    : weight_decay_(weight_decay), m_(size, 0.0), v_(size, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "optimizer state size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  const double decay = 1.0 - lr * weight_decay_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] = params[i] * decay - lr * m_hat / (std::sqrt(v_hat) + kEpsilon);
  }
}

TrainResult train_cosine_regression(EmbeddingModel& model, std::span<const TrainingSample> dataset,
                                    const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw Error(ErrorCode::kEmptyDataset, kModule, "training dataset is empty");

  const std::vector<EncodedPair> pairs = encode_pairs(model, dataset);
  const std::size_t n = pairs.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches * cfg.epochs;
  const std::size_t warmup = warmup_steps_for(cfg, total_steps);

  TrainResult result;
  result.batches_per_epoch = batches;
  result.batch_losses.reserve(total_steps);
  AdamW optimizer(model.table().size(), cfg.weight_decay);
  std::vector<double> grad(model.table().size());
  std::vector<std::size_t> order(n);
  std::vector<EncodedPair> batch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = derive_stream(cfg.seed, epoch);
    shuffle(order, rng);
    for (std::size_t b = 0; b < batches; ++b) {
      batch.clear();
      const std::size_t end = std::min(n, (b + 1) * cfg.batch_size);
      for (std::size_t i = b * cfg.batch_size; i < end; ++i) batch.push_back(pairs[order[i]]);
      const double loss = cosine_regression_loss(model, batch, grad);
      check_finite(loss, epoch, b, "cosine regression");
      optimizer.step(model.mutable_table(), grad,
                     cfg.learning_rate * warmup_linear(step, warmup, total_steps));
      result.batch_losses.push_back(loss);
      ++step;
    }
  }
  return result;
}

TrainResult train_mnrl(EmbeddingModel& model, std::span<const TrainingSample> positives,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.batch_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "MNRL needs batch_size >= 2");
  }
  if (positives.empty()) throw Error(ErrorCode::kEmptyDataset, kModule, "no positive pairs");
  for (const TrainingSample& s : positives) {
    if (s.polarity != Polarity::kPositive) {
      throw Error(ErrorCode::kInvalidArgument, kModule, "MNRL takes positive pairs only");
    }
  }

  const std::vector<EncodedPair> pairs = encode_pairs(model, positives);
  const std::size_t n = pairs.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const bool trailing_single = n % cfg.batch_size == 1;
  const std::size_t steps_per_epoch = batches - (trailing_single ? 1 : 0);
  const std::size_t total_steps = steps_per_epoch * cfg.epochs;
  const std::size_t warmup = warmup_steps_for(cfg, total_steps);

  TrainResult result;
  result.batches_per_epoch = batches;
  AdamW optimizer(model.table().size(), cfg.weight_decay);
  std::vector<double> grad(model.table().size());
  std::vector<std::size_t> order(n);
  std::vector<EncodedPair> batch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = derive_stream(cfg.seed, epoch);
    shuffle(order, rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t end = std::min(n, (b + 1) * cfg.batch_size);
      if (end - b * cfg.batch_size < 2) {
        ++result.skipped_batches;
        continue;
      }
      batch.clear();
      for (std::size_t i = b * cfg.batch_size; i < end; ++i) batch.push_back(pairs[order[i]]);
      const double loss = mnrl_loss(model, batch, cfg.mnrl_scale, grad);
      check_finite(loss, epoch, b, "multiple negatives ranking");
      optimizer.step(model.mutable_table(), grad,
                     cfg.learning_rate * warmup_linear(step, warmup, total_steps));
      result.batch_losses.push_back(loss);
      ++step;
    }
  }
  return result;
}

TrainResult train(EmbeddingModel& model, std::span<const TrainingSample> dataset,
                  const TrainConfig& cfg) {
  if (cfg.loss == LossKind::kCosineRegression) return train_cosine_regression(model, dataset, cfg);
  std::vector<TrainingSample> positives;
  for (const TrainingSample& s : dataset) {
    if (s.polarity == Polarity::kPositive) positives.push_back(s);
  }
  return train_mnrl(model, positives, cfg);
}

}  // namespace topoledger
