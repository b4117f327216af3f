#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "ultrametric/tree_spec.hpp"
#include "ultrametric/types.hpp"

namespace ultrametric {

/// Relative tolerance for the additivity check between a declared internal
/// measure and the sum of its children.
inline constexpr double kMeasureTolerance = 1e-12;

struct Ball {
  std::string id;
  std::optional<BallIndex> parent;
  std::vector<BallIndex> children;
  double diameter = 0.0;
  double measure = 0.0;
  int level = 0;  // edges from the root

  // Leaves of this ball occupy canonical positions [leaf_begin, leaf_end).
  std::size_t leaf_begin = 0;
  std::size_t leaf_end = 0;
  // Balls of the subtree occupy preorder indices [self, subtree_end).
  std::size_t subtree_end = 0;

  bool is_leaf() const { return children.empty(); }
  std::size_t leaf_count() const { return leaf_end - leaf_begin; }
};

/// A finite analytic ultrametric space: a rooted tree of measured balls.
///
/// Balls are stored in depth-first preorder following each ball's child
/// order, so the leaves of any ball form a contiguous run of the canonical
/// leaf order. Immutable after construction.
class BallTree {
 public:
  /// Validates `spec` and builds the tree. Internal measures that are not
  /// declared are computed from the leaves. Throws TreeValidationError
  /// listing every violated invariant.
  static BallTree build(const TreeSpec& spec);

  /// Returns one diagnostic line per violated invariant; empty when valid.
  static std::vector<std::string> validate(const TreeSpec& spec);

  BallIndex root() const { return BallIndex{0}; }
  std::size_t ball_count() const { return balls_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }
  int depth() const { return depth_; }

  const Ball& ball(BallIndex b) const;
  const Ball& operator[](BallIndex b) const { return ball(b); }

  std::span<const BallIndex> leaves() const { return leaves_; }
  std::span<const BallIndex> internal_balls() const { return internal_; }
  BallIndex leaf(std::size_t position) const;
  bool is_leaf(BallIndex b) const { return ball(b).is_leaf(); }

  std::optional<BallIndex> find(std::string_view id) const;
  BallIndex index_of(std::string_view id) const;

  /// True when `inner` is `outer` or one of its descendants.
  bool contains(BallIndex outer, BallIndex inner) const;
  bool contains_leaf(BallIndex outer, std::size_t leaf_position) const;

  /// Minimal ball containing both arguments (lowest common ancestor).
  BallIndex sup(BallIndex a, BallIndex b) const;
  BallIndex sup(std::string_view a, std::string_view b) const;

  /// The maximal subball of `ancestor` that contains `descendant`.
  BallIndex child_toward(BallIndex ancestor, BallIndex descendant) const;

  /// Balls from the root down to `b`, inclusive.
  std::vector<BallIndex> path_from_root(BallIndex b) const;

  /// Ultrametric on leaf positions: diameter of sup for distinct leaves, 0 otherwise.
  double distance(std::size_t leaf_a, std::size_t leaf_b) const;

  const Eigen::VectorXd& leaf_measures() const { return leaf_measures_; }
  double total_measure() const { return balls_.front().measure; }

  TreeSpec to_spec() const;

 private:
  BallTree() = default;

  std::vector<Ball> balls_;
  std::vector<BallIndex> leaves_;
  std::vector<BallIndex> internal_;
  std::unordered_map<std::string, BallIndex> by_id_;
  Eigen::VectorXd leaf_measures_;
  int depth_ = 0;
};

/// Smallest ball containing every leaf where |f| > tol, or nullopt when there
/// is no such leaf.
std::optional<BallIndex> ball_support(const BallTree& tree, const LeafFunction& f, double tol);

}  // namespace ultrametric
