// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "gnl/data.hpp"
#include "gnl/errors.hpp"

namespace gnl {
namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "mem.csv");
}

std::string load_error_message(const std::string& text) {
  try {
    parse(text);
  } catch (const LoadError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected LoadError";
  return {};
}

Dataset ramp(std::size_t length, std::size_t nodes) {
  Dataset ds;
  for (std::size_t i = 0; i < nodes; ++i) ds.node_ids.push_back("v" + std::to_string(i));
  for (std::size_t t = 0; t < length; ++t) {
    ds.timestamps.push_back(std::to_string(t));
    for (std::size_t i = 0; i < nodes; ++i) ds.values.push_back(double(t) * double(i + 1) + double(i));
  }
  return ds;
}

TEST(ParseCsv, ThreeByTwo) {
  const auto ds = parse("time,a,b\n0,1,2\n1,3,4\n2,5,6.5\n");
  EXPECT_EQ(ds.length(), 3u);
  EXPECT_EQ(ds.nodes(), 2u);
  EXPECT_EQ(ds.features, 1u);
  EXPECT_EQ(ds.node_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.at(2, 1), 6.5);
  EXPECT_EQ(ds.snapshot(1), Tensor::matrix(2, 1, {3, 4}));
  EXPECT_FALSE(ds.prior.has_value());
}

TEST(ParseCsv, FeatureColumnsGroupByNode) {
  const auto ds = parse("t,a:0,a:1,b:0,b:1\n0,1,2,3,4\n");
  EXPECT_EQ(ds.nodes(), 2u);
  EXPECT_EQ(ds.features, 2u);
  EXPECT_EQ(ds.at(0, 1, 0), 3.0);
  EXPECT_EQ(ds.snapshot(0), Tensor::matrix(2, 2, {1, 2, 3, 4}));
}

// Row numbers count file lines, header included.
TEST(ParseCsv, MissingCellNamesRowAndColumn) {
  const auto msg = load_error_message("t,a,b\n0,1,2\n1,,4\n");
  EXPECT_NE(msg.find("mem.csv"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
}

TEST(ParseCsv, Rejections) {
  EXPECT_NE(load_error_message("t,a,a\n0,1,2\n").find("duplicate node id 'a'"), std::string::npos);
  EXPECT_NE(load_error_message("").find("empty file"), std::string::npos);
  EXPECT_NE(load_error_message("t,a\n").find("no data rows"), std::string::npos);
  EXPECT_NE(load_error_message("t,a\n0,x\n").find("non-numeric value 'x'"), std::string::npos);
  EXPECT_NE(load_error_message("t,a\n0,1,2\n").find("row 2 has 3 cells"), std::string::npos);
  EXPECT_NE(load_error_message("t,a\n0,nan\n").find("non-finite"), std::string::npos);
  EXPECT_NE(load_error_message("t,a:0,a:1,b:0\n0,1,2,3\n").find("node 'b' has 1"), std::string::npos);
}

TEST(LoadCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_csv("/nonexistent/data.csv"), IoError);
}

TEST(WriteCsv, RoundTripIsExact) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1e3);
  auto ds = ramp(20, 3);
  for (auto& v : ds.values) v = normal(rng);
  std::ostringstream out;
  write_csv(out, ds);
  const auto back = parse(out.str());
  EXPECT_EQ(back.node_ids, ds.node_ids);
  EXPECT_EQ(back.timestamps, ds.timestamps);
  EXPECT_EQ(back.values, ds.values);
}

TEST(ZScore, ConstantColumnLoadsButCannotBeFitted) {
  const auto ds = parse("t,a,flat\n0,1,5\n1,2,5\n2,4,5\n");
  try {
    fit_zscore(ds, {0, 3});
    FAIL() << "expected NormalizationError";
  } catch (const NormalizationError& e) {
    EXPECT_NE(std::string(e.what()).find("'flat'"), std::string::npos) << e.what();
  }
}

TEST(ZScore, PopulationStandardDeviationExample) {
  const auto ds = parse("t,a\n0,1\n1,2\n2,3\n");
  const auto z = zscore(ds, {0, 3});
  EXPECT_DOUBLE_EQ(z.stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(z.stats.stddev[0], std::sqrt(2.0 / 3.0));
  EXPECT_NEAR(z.normalized.values[0], -1.224744871391589, 1e-15);
  EXPECT_EQ(z.normalized.values[1], 0.0);
  EXPECT_NEAR(z.normalized.values[2], 1.224744871391589, 1e-15);
}

TEST(ZScore, RefitOfStandardisedDataIsIdentity) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(3.0, 7.0);
  auto ds = ramp(50, 4);
  for (auto& v : ds.values) v = normal(rng);
  const auto z = zscore(ds, {0, 50});
  const auto again = fit_zscore(z.normalized, {0, 50});
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(again.mean[c], 0.0, 1e-14);
    EXPECT_NEAR(again.stddev[c], 1.0, 1e-14);
  }
  const auto back = invert_zscore(z.normalized, z.stats);
  for (std::size_t k = 0; k < ds.values.size(); ++k) EXPECT_NEAR(back.values[k], ds.values[k], 1e-12);
}

TEST(ZScore, FitRangeErrors) {
  const auto ds = ramp(5, 2);
  EXPECT_THROW(fit_zscore(ds, {2, 2}), ArgumentError);
  EXPECT_THROW(fit_zscore(ds, {0, 6}), ArgumentError);
}

TEST(ZScore, StatisticsIgnoreRowsOutsideFitRange) {
  auto ds = ramp(10, 2);
  const auto before = fit_zscore(ds, {0, 6});
  for (std::size_t t = 6; t < 10; ++t) ds.at(t, 0) = 1e9;
  const auto after = fit_zscore(ds, {0, 6});
  EXPECT_EQ(before.mean, after.mean);
  EXPECT_EQ(before.stddev, after.stddev);
}

TEST(Windows, CountExamples) {
  EXPECT_EQ(window_count(7, 5, 1), 2u);
  EXPECT_EQ(window_count(8, 5, 3), 1u);
  EXPECT_THROW(window_count(5, 5, 1), ArgumentError);
  EXPECT_THROW(window_count(10, 0, 1), ArgumentError);
  EXPECT_THROW(window_count(10, 2, 0), ArgumentError);
}

TEST(Windows, SnapshotsAlignWithTimestamps) {
  const auto ds = ramp(7, 2);
  const auto w = make_windows(ds, 5, 1);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].start, 1u);
  ASSERT_EQ(w[1].inputs.size(), 5u);
  ASSERT_EQ(w[1].targets.size(), 1u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(w[1].inputs[k], ds.snapshot(1 + k));
  EXPECT_EQ(w[1].targets[0], ds.snapshot(6));
  EXPECT_THROW(make_windows(ds, 5, 1, {0, 3}), ArgumentError);
}

TEST(Split, ChronologicalAndDisjoint) {
  for (std::size_t horizon : {1u, 3u}) {
    const auto s = make_split(100, horizon, 0.7, 0.1);
    EXPECT_EQ(s.train, (IndexRange{0, 70}));
    EXPECT_EQ(s.validation.end, 80u);
    EXPECT_EQ(s.test.end, 100u);
    EXPECT_EQ(s.validation.begin, 70 + horizon - 1);
    EXPECT_EQ(s.test.begin, 80 + horizon - 1);
    EXPECT_LE(s.train.end, s.validation.begin);
    EXPECT_LE(s.validation.end, s.test.begin);
  }
}

TEST(Split, TrainingRowsNeverIncludeTestTargets) {
  const std::size_t window = 5, horizon = 2, length = 60;
  const auto s = make_split(window_count(length, window, horizon), horizon);
  const auto rows = rows_covered(s.train, window, horizon);
  const std::size_t first_test_target = s.test.begin + window;
  EXPECT_LE(rows.end, first_test_target);
  EXPECT_EQ(rows_covered({4, 4}, window, horizon).size(), 0u);
}

TEST(EdgeList, ParsesIdsAndComments) {
  std::istringstream in("# prior graph\na b\nb c  # trailing\n\na b\n");
  const auto e = parse_edge_list(in, {"a", "b", "c"});
  EXPECT_EQ(e.size(), 2u);
  EXPECT_EQ(e.edges()[0], (EdgeSet::Edge{0, 1}));
  EXPECT_EQ(e.edges()[1], (EdgeSet::Edge{1, 2}));
}

TEST(EdgeList, Errors) {
  std::istringstream unknown("a z\n");
  EXPECT_THROW(parse_edge_list(unknown, {"a", "b"}), LoadError);
  std::istringstream extra("a b c\n");
  EXPECT_THROW(parse_edge_list(extra, {"a", "b", "c"}), LoadError);
  EXPECT_THROW(load_edge_list("/nonexistent/edges.txt", {"a"}), IoError);
}

}  // namespace
}  // namespace gnl
