// SPDX-License-Identifier: Apache-2.0

#include "topoledger/experiment.h"

#include <gtest/gtest.h>

#include <set>

#include "topoledger/error.h"

namespace topoledger {
namespace {

std::vector<MappingRecord> numbered(std::size_t n, std::size_t companies = 0) {
  std::vector<MappingRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"r" + std::to_string(i), "c", 0,
                   companies ? "co" + std::to_string(i % companies) : ""});
  }
  return out;
}

TEST(SplitRecords, NinetyTenByRecord) {
  const auto records = numbered(200);
  const Split a = split_records(records, 0.9, SplitBy::kRecord, 4);
  EXPECT_EQ(a.train.size(), 180u);
  EXPECT_EQ(a.test.size(), 20u);
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.test})
    for (const auto& r : *part) all.insert(r.custom_description);
  EXPECT_EQ(all.size(), 200u);
  const Split b = split_records(records, 0.9, SplitBy::kRecord, 4);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, split_records(records, 0.9, SplitBy::kRecord, 5).train);
  EXPECT_THROW(split_records(records, 1.0, SplitBy::kRecord, 0), Error);
}

TEST(SplitRecords, CompanyKeepsGroupsTogether) {
  const auto records = numbered(200, 10);
  const Split s = split_records(records, 0.9, SplitBy::kCompany, 1);
  std::set<std::string> train_cos, test_cos;
  for (const auto& r : s.train) train_cos.insert(r.company_id);
  for (const auto& r : s.test) test_cos.insert(r.company_id);
  EXPECT_EQ(train_cos.size(), 9u);
  EXPECT_EQ(test_cos.size(), 1u);
  for (const auto& c : test_cos) EXPECT_FALSE(train_cos.contains(c));
  EXPECT_THROW(split_records(numbered(10), 0.9, SplitBy::kCompany, 1), Error);
  EXPECT_EQ(parse_split_by("company"), SplitBy::kCompany);
  EXPECT_THROW(parse_split_by("year"), Error);
}

TEST(RunSeeds, DistinctStreams) {
  const RunSeeds s = RunSeeds::from(0);
  const std::set<std::uint64_t> seeds{s.split, s.augment, s.model_init, s.train};
  EXPECT_EQ(seeds.size(), 4u);
  EXPECT_EQ(RunSeeds::from(0).train, s.train);
  EXPECT_NE(RunSeeds::from(1).train, s.train);
}

}  // namespace
}  // namespace topoledger
