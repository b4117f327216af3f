#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/tree_spec.hpp"

using ultrametric::BallTree;
using ultrametric::padic_preset;
using ultrametric::parse_tree_spec;

TEST(padic_preset, p2_depth1) {
  const BallTree tree = BallTree::build(padic_preset(2, 1, 1.0));
  ASSERT_EQ(tree.leaf_count(), 2u);
  EXPECT_DOUBLE_EQ(tree.ball(tree.root()).diameter, 1.0);
  EXPECT_DOUBLE_EQ(tree.total_measure(), 1.0);
  for (auto leaf : tree.leaves()) {
    EXPECT_DOUBLE_EQ(tree.ball(leaf).diameter, 0.5);
    EXPECT_DOUBLE_EQ(tree.ball(leaf).measure, 0.5);
  }
}

TEST(padic_preset, p3_depth2_has_nine_leaves_of_one_ninth) {
  const BallTree tree = BallTree::build(padic_preset(3, 2, 1.0));
  ASSERT_EQ(tree.leaf_count(), 9u);
  for (auto leaf : tree.leaves()) EXPECT_NEAR(tree.ball(leaf).measure, 1.0 / 9.0, 1e-15);
}

TEST(padic_preset, p2_depth3_total4) {
  const BallTree tree = BallTree::build(padic_preset(2, 3, 4.0));
  ASSERT_EQ(tree.leaf_count(), 8u);
  double total = 0.0;
  for (auto leaf : tree.leaves()) {
    EXPECT_DOUBLE_EQ(tree.ball(leaf).measure, 0.5);
    total += tree.ball(leaf).measure;
  }
  EXPECT_DOUBLE_EQ(total, 4.0);
  EXPECT_DOUBLE_EQ(tree.total_measure(), 4.0);
}

TEST(padic_preset, level_k_scaling) {
  const BallTree tree = BallTree::build(padic_preset(5, 3, 2.0));
  for (std::size_t i = 0; i < tree.ball_count(); ++i) {
    const auto& b = tree.ball({i});
    EXPECT_NEAR(b.diameter, std::pow(5.0, -b.level), 1e-15);
    EXPECT_NEAR(b.measure, 2.0 * std::pow(5.0, -b.level), 1e-14);
  }
}

TEST(padic_preset, rejects_bad_parameters) {
  EXPECT_THROW(padic_preset(1, 2, 1.0), ultrametric::PreconditionError);
  EXPECT_THROW(padic_preset(2, 0, 1.0), ultrametric::PreconditionError);
  EXPECT_THROW(padic_preset(2, 2, 0.0), ultrametric::PreconditionError);
}

TEST(parse_tree_spec, preset_document) {
  const auto doc = nlohmann::json::parse(R"({"preset": {"type": "padic", "p": 3, "depth": 1, "total_measure": 1}})");
  const BallTree tree = BallTree::build(parse_tree_spec(doc));
  ASSERT_EQ(tree.leaf_count(), 3u);
  for (auto leaf : tree.leaves()) EXPECT_NEAR(tree.ball(leaf).measure, 1.0 / 3.0, 1e-16);
}

TEST(parse_tree_spec, explicit_balls_with_leaf_measures) {
  const auto doc = nlohmann::json::parse(R"({
    "balls": [{"id": "r", "parent": null, "diameter": 1},
              {"id": "a", "parent": "r", "diameter": 0.5},
              {"id": "b", "parent": "r", "diameter": 0.5}],
    "leaf_measures": {"a": 0.25, "b": 0.75}})");
  const BallTree tree = BallTree::build(parse_tree_spec(doc));
  EXPECT_DOUBLE_EQ(tree.total_measure(), 1.0);
  EXPECT_EQ(tree.ball(tree.leaf(0)).id, "a");
}

TEST(parse_tree_spec, requires_exactly_one_source) {
  EXPECT_THROW(parse_tree_spec(nlohmann::json::parse("{}")), ultrametric::Error);
  EXPECT_THROW(parse_tree_spec(nlohmann::json::parse(
                   R"({"balls": [], "preset": {"type": "padic", "p": 2, "depth": 1}})")),
               ultrametric::Error);
}

TEST(parse_tree_spec, rejects_malformed_fields) {
  EXPECT_THROW(parse_tree_spec(nlohmann::json::parse(R"({"balls": [{"id": 3, "diameter": 1}]})")),
               ultrametric::Error);
  EXPECT_THROW(parse_tree_spec(nlohmann::json::parse(R"({"balls": [{"id": "r"}]})")), ultrametric::Error);
  EXPECT_THROW(parse_tree_spec(nlohmann::json::parse(R"({"preset": {"type": "dyadic", "p": 2, "depth": 1}})")),
               ultrametric::Error);
  EXPECT_THROW(parse_tree_spec(nlohmann::json::parse(R"({"preset": {"type": "padic", "p": 2.5, "depth": 1}})")),
               ultrametric::Error);
}

TEST(parse_tree_spec, json_round_trip) {
  const auto spec = padic_preset(3, 2, 1.5);
  const auto again = parse_tree_spec(ultrametric::to_json(spec));
  ASSERT_EQ(again.balls.size(), spec.balls.size());
  for (std::size_t i = 0; i < spec.balls.size(); ++i) {
    EXPECT_EQ(again.balls[i].id, spec.balls[i].id);
    EXPECT_EQ(again.balls[i].parent, spec.balls[i].parent);
    EXPECT_EQ(again.balls[i].diameter, spec.balls[i].diameter);
    EXPECT_EQ(again.balls[i].measure, spec.balls[i].measure);
  }
}
