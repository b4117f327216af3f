#include "ultrametric/ball_tree.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ultrametric {

TreeValidationError::TreeValidationError(std::vector<std::string> diagnostics)
    : Error(diagnostics.empty() ? std::string("invalid tree")
                                : fmt::format("invalid tree: {}{}", diagnostics.front(),
                                              diagnostics.size() > 1
                                                  ? fmt::format(" (+{} more)", diagnostics.size() - 1)
                                                  : std::string{})),
      diagnostics_(std::move(diagnostics)) {}

namespace {

bool close_relative(double a, double b) {
  return std::abs(a - b) <= kMeasureTolerance * std::max(std::abs(a), std::abs(b));
}

// Structural analysis of a TreeSpec, indexed by position in spec.balls.
struct Draft {
  std::vector<std::vector<std::size_t>> children;
  std::vector<double> measure;
  std::size_t root = 0;
  std::vector<std::string> diagnostics;
};

Draft analyze(const TreeSpec& spec) {
  Draft d;
  const std::size_t n = spec.balls.size();
  auto& diag = d.diagnostics;
  if (n == 0) {
    diag.emplace_back("tree has no balls");
    return d;
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = spec.balls[i].id;
    if (id.empty()) diag.push_back(fmt::format("balls[{}]: empty id", i));
    if (!index.emplace(id, i).second) diag.push_back(fmt::format("ball '{}': duplicate id", id));
  }

  std::vector<std::size_t> roots;
  std::vector<std::optional<std::size_t>> parent(n);
  d.children.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = spec.balls[i];
    if (!b.parent) {
      roots.push_back(i);
      continue;
    }
    auto it = index.find(*b.parent);
    if (it == index.end()) {
      diag.push_back(fmt::format("ball '{}': unknown parent '{}'", b.id, *b.parent));
    } else if (it->second == i) {
      diag.push_back(fmt::format("ball '{}': is its own parent", b.id));
    } else {
      parent[i] = it->second;
      d.children[it->second].push_back(i);
    }
  }
  if (roots.empty()) {
    diag.emplace_back("tree has no root (every ball has a parent)");
  } else if (roots.size() > 1) {
    std::string names;
    for (auto r : roots) names += fmt::format("{}'{}'", names.empty() ? "" : ", ", spec.balls[r].id);
    diag.push_back(fmt::format("tree has {} roots: {}", roots.size(), names));
  }

  for (const auto& b : spec.balls) {
    if (!std::isfinite(b.diameter) || b.diameter <= 0.0) {
      diag.push_back(fmt::format("ball '{}': diameter must be positive, got {}", b.id, b.diameter));
    }
    if (b.measure && (!std::isfinite(*b.measure) || *b.measure <= 0.0)) {
      diag.push_back(fmt::format("ball '{}': measure must be positive, got {}", b.id, *b.measure));
    }
  }
  if (!diag.empty()) return d;

  d.root = roots.front();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{d.root};
  std::vector<std::size_t> preorder;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    preorder.push_back(v);
    for (auto c : d.children[v]) stack.push_back(c);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      diag.push_back(fmt::format("ball '{}': not reachable from root '{}' (cycle in parent links)",
                                 spec.balls[i].id, spec.balls[d.root].id));
    }
  }
  if (!diag.empty()) return d;

  for (const auto& [id, value] : spec.leaf_measures) {
    auto it = index.find(id);
    if (it == index.end()) {
      diag.push_back(fmt::format("leaf_measures: unknown ball '{}'", id));
      continue;
    }
    if (!d.children[it->second].empty()) {
      diag.push_back(fmt::format("leaf_measures: ball '{}' is not a leaf", id));
    }
    if (!std::isfinite(value) || value <= 0.0) {
      diag.push_back(fmt::format("ball '{}': leaf measure must be positive, got {}", id, value));
    }
    const auto& declared = spec.balls[it->second].measure;
    if (declared && !close_relative(*declared, value)) {
      diag.push_back(fmt::format("ball '{}': measure {} conflicts with leaf_measures value {}", id,
                                 *declared, value));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = spec.balls[i];
    const auto& kids = d.children[i];
    if (kids.empty()) {
      if (!b.measure && !spec.leaf_measures.contains(b.id)) {
        diag.push_back(fmt::format("leaf '{}': no measure given", b.id));
      }
    } else if (kids.size() == 1) {
      diag.push_back(fmt::format("ball '{}': internal ball has a single child '{}' (needs >= 2)",
                                 b.id, spec.balls[kids.front()].id));
    }
    for (auto c : kids) {
      if (!(spec.balls[c].diameter < b.diameter)) {
        diag.push_back(fmt::format("edge '{}' -> '{}': child diameter {} is not below parent diameter {}",
                                   b.id, spec.balls[c].id, spec.balls[c].diameter, b.diameter));
      }
    }
  }
  if (!diag.empty()) return d;

  d.measure.assign(n, 0.0);
  for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
    const auto v = *it;
    const auto& b = spec.balls[v];
    if (d.children[v].empty()) {
      auto lm = spec.leaf_measures.find(b.id);
      d.measure[v] = lm != spec.leaf_measures.end() ? lm->second : *b.measure;
      continue;
    }
    double sum = 0.0;
    for (auto c : d.children[v]) sum += d.measure[c];
    if (b.measure) {
      if (!close_relative(*b.measure, sum)) {
        diag.push_back(fmt::format("ball '{}': measure {} differs from the sum of its children {}",
                                   b.id, *b.measure, sum));
      }
      d.measure[v] = *b.measure;
    } else {
      d.measure[v] = sum;
    }
  }
  return d;
}

}  // namespace

std::vector<std::string> BallTree::validate(const TreeSpec& spec) {
  return analyze(spec).diagnostics;
}

BallTree BallTree::build(const TreeSpec& spec) {
  Draft draft = analyze(spec);
  if (!draft.diagnostics.empty()) throw TreeValidationError(std::move(draft.diagnostics));

  BallTree tree;
  tree.balls_.reserve(spec.balls.size());

  struct Frame {
    std::size_t spec_index;
    std::optional<BallIndex> parent;
    int level;
  };
  std::vector<Frame> stack{{draft.root, std::nullopt, 0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const auto& src = spec.balls[f.spec_index];
    const BallIndex self{tree.balls_.size()};
    Ball b;
    b.id = src.id;
    b.parent = f.parent;
    b.diameter = src.diameter;
    b.measure = draft.measure[f.spec_index];
    b.level = f.level;
    tree.balls_.push_back(std::move(b));
    tree.by_id_.emplace(src.id, self);
    if (f.parent) tree.balls_[f.parent->value].children.push_back(self);
    tree.depth_ = std::max(tree.depth_, f.level);

    const auto& kids = draft.children[f.spec_index];
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      stack.push_back({*it, self, f.level + 1});
    }
  }

  // Leaf ranges and subtree extents, children before parents.
  for (std::size_t i = 0; i < tree.balls_.size(); ++i) {
    if (tree.balls_[i].is_leaf()) {
      tree.balls_[i].leaf_begin = tree.leaves_.size();
      tree.leaves_.push_back(BallIndex{i});
      tree.balls_[i].leaf_end = tree.leaves_.size();
    } else {
      tree.internal_.push_back(BallIndex{i});
    }
  }
  for (std::size_t i = tree.balls_.size(); i-- > 0;) {
    auto& b = tree.balls_[i];
    if (b.is_leaf()) {
      b.subtree_end = i + 1;
    } else {
      const auto& first = tree.balls_[b.children.front().value];
      const auto& last = tree.balls_[b.children.back().value];
      b.leaf_begin = first.leaf_begin;
      b.leaf_end = last.leaf_end;
      b.subtree_end = last.subtree_end;
    }
  }

  tree.leaf_measures_.resize(static_cast<Eigen::Index>(tree.leaves_.size()));
  for (std::size_t k = 0; k < tree.leaves_.size(); ++k) {
    tree.leaf_measures_[static_cast<Eigen::Index>(k)] = tree.balls_[tree.leaves_[k].value].measure;
  }
  return tree;
}

const Ball& BallTree::ball(BallIndex b) const {
  if (b.value >= balls_.size()) {
    throw UnknownBallError(fmt::format("ball index {} out of range ({} balls)", b.value, balls_.size()));
  }
  return balls_[b.value];
}

BallIndex BallTree::leaf(std::size_t position) const {
  if (position >= leaves_.size()) {
    throw UnknownBallError(fmt::format("leaf position {} out of range ({} leaves)", position, leaves_.size()));
  }
  return leaves_[position];
}

std::optional<BallIndex> BallTree::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

BallIndex BallTree::index_of(std::string_view id) const {
  if (auto b = find(id)) return *b;
  throw UnknownBallError(fmt::format("unknown ball id '{}'", id));
}

bool BallTree::contains(BallIndex outer, BallIndex inner) const {
  const auto& o = ball(outer);
  ball(inner);
  return outer.value <= inner.value && inner.value < o.subtree_end;
}

bool BallTree::contains_leaf(BallIndex outer, std::size_t leaf_position) const {
  const auto& o = ball(outer);
  return o.leaf_begin <= leaf_position && leaf_position < o.leaf_end;
}

BallIndex BallTree::sup(BallIndex a, BallIndex b) const {
  ball(b);
  BallIndex up = a;
  while (!contains(up, b)) up = *ball(up).parent;
  return up;
}

BallIndex BallTree::sup(std::string_view a, std::string_view b) const {
  return sup(index_of(a), index_of(b));
}

BallIndex BallTree::child_toward(BallIndex ancestor, BallIndex descendant) const {
  if (ancestor == descendant || !contains(ancestor, descendant)) {
    throw PreconditionError(fmt::format("ball '{}' is not a strict ancestor of '{}'",
                                        ball(ancestor).id, ball(descendant).id));
  }
  BallIndex c = descendant;
  while (*ball(c).parent != ancestor) c = *ball(c).parent;
  return c;
}

std::vector<BallIndex> BallTree::path_from_root(BallIndex b) const {
  std::vector<BallIndex> path{b};
  while (auto p = ball(path.back()).parent) path.push_back(*p);
  std::reverse(path.begin(), path.end());
  return path;
}

double BallTree::distance(std::size_t leaf_a, std::size_t leaf_b) const {
  if (leaf_a == leaf_b) {
    leaf(leaf_a);
    return 0.0;
  }
  return ball(sup(leaf(leaf_a), leaf(leaf_b))).diameter;
}

TreeSpec BallTree::to_spec() const {
  TreeSpec spec;
  for (const auto& b : balls_) {
    BallSpec s{b.id, std::nullopt, b.diameter, b.measure};
    if (b.parent) s.parent = balls_[b.parent->value].id;
    spec.balls.push_back(std::move(s));
  }
  return spec;
}

std::optional<BallIndex> ball_support(const BallTree& tree, const LeafFunction& f, double tol) {
  if (static_cast<std::size_t>(f.size()) != tree.leaf_count()) {
    throw DimensionError(fmt::format("leaf function has {} values, tree has {} leaves", f.size(),
                                     tree.leaf_count()));
  }
  std::optional<std::size_t> first, last;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    if (std::abs(f[k]) > tol) {
      if (!first) first = static_cast<std::size_t>(k);
      last = static_cast<std::size_t>(k);
    }
  }
  if (!first) return std::nullopt;
  return tree.sup(tree.leaf(*first), tree.leaf(*last));
}

}  // namespace ultrametric
