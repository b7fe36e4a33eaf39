// SPDX-License-Identifier: Apache-2.0

#include "topoledger/train.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "test_util.h"
#include "topoledger/error.h"
#include "topoledger/synth.h"

namespace topoledger {
namespace {

using testing::gradient_relative_error;

TEST(Gradients, MatchFiniteDifferences) {
  for (LossKind loss : {LossKind::kCosineRegression, LossKind::kMultipleNegativesRanking}) {
    for (std::uint64_t point = 0; point < 20; ++point) {
      EXPECT_LT(gradient_relative_error(loss, point), 1e-4)
          << loss_name(loss) << " point " << point;
    }
  }
}

EmbeddingModel small_model(std::uint64_t seed = 1) {
  return EmbeddingModel::initialize(
      Vocabulary::from_tokens({"<unk>", "rent", "fuel", "cash", "bank", "fees"}), 6, seed);
}

TEST(CosineLoss, StationaryWhenCosineEqualsTarget) {
  const EmbeddingModel model = small_model();
  const double current = cosine_similarity(model.embed("rent fuel"), model.embed("cash"));
  const std::vector<EncodedPair> batch{{{1, 2}, {3}, current}};
  std::vector<double> grad(model.table().size(), 1.0);
  EXPECT_NEAR(cosine_regression_loss(model, batch, grad), 0.0, 1e-24);
  for (double g : grad) EXPECT_NEAR(g, 0.0, 1e-12);

  const std::vector<EncodedPair> off{{{1, 2}, {3}, current + 0.3}};
  cosine_regression_loss(model, off, grad);
  double total = 0;
  for (double g : grad) total += std::abs(g);
  EXPECT_GT(total, 1e-3);
}

TEST(CosineLoss, ZeroVectorPinsCosineToZero) {
  const EmbeddingModel model = small_model();
  const std::vector<EncodedPair> batch{{{}, {1}, 0.5}};
  std::vector<double> grad(model.table().size());
  EXPECT_DOUBLE_EQ(cosine_regression_loss(model, batch, grad), 0.25);
  for (double g : grad) EXPECT_EQ(g, 0.0);
}

TEST(MnrlLoss, UniformScoresGiveLogBatch) {
  const EmbeddingModel model = small_model();
  for (std::size_t b : {2u, 3u, 7u}) {
    const std::vector<EncodedPair> batch(b, EncodedPair{{3}, {3}, 1.0});
    EXPECT_NEAR(mnrl_loss(model, batch, 20.0, {}), std::log(static_cast<double>(b)), 1e-12);
  }
}

TEST(MnrlLoss, GradientBufferSizeChecked) {
  const EmbeddingModel model = small_model();
  const std::vector<EncodedPair> batch{{{1}, {2}, 1.0}, {{3}, {4}, 1.0}};
  std::vector<double> grad(3);
  EXPECT_THROW(mnrl_loss(model, batch, 20.0, grad), Error);
}

TEST(WarmupLinear, Schedule) {
  EXPECT_EQ(warmup_linear(0, 2, 10), 0.0);
  EXPECT_EQ(warmup_linear(1, 2, 10), 0.5);
  EXPECT_EQ(warmup_linear(2, 2, 10), 1.0);
  EXPECT_EQ(warmup_linear(6, 2, 10), 0.5);
  EXPECT_EQ(warmup_linear(10, 2, 10), 0.0);
  EXPECT_EQ(warmup_linear(0, 0, 4), 1.0);
  EXPECT_EQ(warmup_linear(3, 0, 4), 0.25);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  AdamW opt(3, 0.0);
  std::vector<double> p{1.0, 1.0, 1.0};
  const std::vector<double> g{0.5, -2.0, 0.0};
  opt.step(p, g, 0.1);
  EXPECT_NEAR(p[0], 0.9, 1e-7);
  EXPECT_NEAR(p[1], 1.1, 1e-7);
  EXPECT_EQ(p[2], 1.0);
  EXPECT_EQ(opt.steps_taken(), 1u);

  AdamW decayed(1, 0.5);
  std::vector<double> q{2.0};
  decayed.step(q, std::vector<double>{0.0}, 0.1);
  EXPECT_DOUBLE_EQ(q[0], 2.0 * (1.0 - 0.05));
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.mnrl_scale, 20.0);
  EXPECT_EQ(cfg.batch_size, 64u);
  EXPECT_EQ(cfg.warmup_fraction, 0.05);
  cfg.warmup_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(parse_loss("cosine"), LossKind::kCosineRegression);
  EXPECT_EQ(parse_loss("mnrl"), LossKind::kMultipleNegativesRanking);
  EXPECT_THROW(parse_loss("hinge"), Error);
}

// 100 records on a 50-vertex synthetic COA, K = 4: 500 samples.
struct SmallCorpus {
  CoaCatalog catalog;
  std::vector<MappingRecord> records;
  AugmentedDataset data;
  Vocabulary vocab;
};

SmallCorpus small_corpus(std::uint64_t seed) {
  SmallCorpus c;
  SynthConfig cfg;
  cfg.config_id = "s";
  cfg.n_vertices = 50;
  cfg.records_per_vertex = 2;
  cfg.synonym_probability = 0.3;
  cfg.seed = seed;
  CoaTree tree = generate_coa(cfg);
  c.records = generate_records(tree, cfg);
  c.catalog.add(std::move(tree));
  c.data = build_augmented(c.records, c.catalog, 4, seed);
  std::vector<std::string> texts;
  for (const auto& s : c.data.samples) {
    texts.push_back(s.custom_description);
    texts.push_back(s.standard_label);
  }
  c.vocab = Vocabulary::build(texts);
  return c;
}

TEST(TrainCosine, LossDecreasesOverSeeds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SmallCorpus c = small_corpus(seed);
    ASSERT_EQ(c.data.samples.size(), 500u);
    EmbeddingModel model = EmbeddingModel::initialize(c.vocab, 16, seed);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    cfg.seed = seed;
    const TrainResult r = train_cosine_regression(model, c.data.samples, cfg);
    ASSERT_EQ(r.batch_losses.size(), 5 * r.batches_per_epoch);
    const auto last = r.batch_losses.end() - static_cast<std::ptrdiff_t>(r.batches_per_epoch);
    const double final_mean =
        std::accumulate(last, r.batch_losses.end(), 0.0) / static_cast<double>(r.batches_per_epoch);
    EXPECT_LE(final_mean, r.batch_losses.front()) << "seed " << seed;
  }
}

TEST(TrainCosine, Deterministic) {
  const SmallCorpus c = small_corpus(3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 8;
  EmbeddingModel a = EmbeddingModel::initialize(c.vocab, 8, 2);
  EmbeddingModel b = EmbeddingModel::initialize(c.vocab, 8, 2);
  const TrainResult ra = train_cosine_regression(a, c.data.samples, cfg);
  const TrainResult rb = train_cosine_regression(b, c.data.samples, cfg);
  EXPECT_EQ(ra.batch_losses, rb.batch_losses);
  EXPECT_EQ(a, b);
  cfg.seed = 9;
  EmbeddingModel d = EmbeddingModel::initialize(c.vocab, 8, 2);
  EXPECT_NE(train_cosine_regression(d, c.data.samples, cfg).batch_losses, ra.batch_losses);
}

TEST(TrainCosine, IdenticalTextsReachCosineOne) {
  EmbeddingModel model = small_model();
  const std::vector<TrainingSample> data{{"cash bank", "cash bank", 1.0, Polarity::kPositive}};
  TrainConfig cfg;
  cfg.epochs = 3;
  train_cosine_regression(model, data, cfg);
  EXPECT_NEAR(cosine_similarity(model.embed("cash bank"), model.embed("cash bank")), 1.0, 1e-12);
}

TEST(TrainCosine, Errors) {
  EmbeddingModel model = small_model();
  try {
    train_cosine_regression(model, {}, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
  model.mutable_table()[6] = std::numeric_limits<double>::infinity();
  const std::vector<TrainingSample> data{{"rent", "fuel", 0.5, Polarity::kNegative}};
  try {
    train_cosine_regression(model, data, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(TrainMnrl, TwoPairToyConverges) {
  EmbeddingModel model = small_model(5);
  const std::vector<TrainingSample> data{{"rent", "rent", 1.0, Polarity::kPositive},
                                         {"fuel", "fuel", 1.0, Polarity::kPositive}};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 2;
  cfg.loss = LossKind::kMultipleNegativesRanking;
  const TrainResult r = train(model, data, cfg);
  EXPECT_LT(r.batch_losses.back(), r.batch_losses.front());
  const auto score = [&](const char* a, const char* b) {
    return cosine_similarity(model.embed(a), model.embed(b));
  };
  EXPECT_GT(score("rent", "rent"), score("rent", "fuel"));
  EXPECT_GT(score("fuel", "fuel"), score("fuel", "rent"));
  EXPECT_LT(score("rent", "fuel"), 0.5);
}

TEST(TrainMnrl, SkipsSingletonBatches) {
  EmbeddingModel model = small_model();
  const std::vector<TrainingSample> data{{"rent", "rent", 1.0, Polarity::kPositive},
                                         {"fuel", "fuel", 1.0, Polarity::kPositive},
                                         {"cash", "bank", 1.0, Polarity::kPositive}};
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 2;
  const TrainResult r = train_mnrl(model, data, cfg);
  EXPECT_EQ(r.batches_per_epoch, 2u);
  EXPECT_EQ(r.skipped_batches, 4u);
  EXPECT_EQ(r.batch_losses.size(), 4u);

  const std::vector<TrainingSample> negative{{"a", "b", 0.2, Polarity::kNegative}};
  EXPECT_THROW(train_mnrl(model, negative, cfg), Error);
  cfg.batch_size = 1;
  EXPECT_THROW(train_mnrl(model, data, cfg), Error);
}

}  // namespace
}  // namespace topoledger
