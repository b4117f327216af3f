#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/types.hpp"

namespace ultrametric {

/// One element of an orthonormal basis of the mean-zero functions that are
/// constant on the children of an internal ball.
struct Wavelet {
  BallIndex ball;
  int index = 1;  // 1 .. (number of children - 1)
  RealLeafFunction values;
};

/// Values of the weighted Helmert vector that separates a block of mass
/// `leading_mass` (first j children) from the next child of mass `next_mass`.
/// `positive` is taken on the leading block, `negative` on the next child.
struct HelmertValues {
  double positive = 0.0;
  double negative = 0.0;
};
HelmertValues helmert_values(double leading_mass, double next_mass);

/// Orthonormal basis of L^2 on the leaves: the wavelets of every internal
/// ball (preorder, then index ascending) followed by the normalized constant.
class WaveletBasis {
 public:
  static WaveletBasis build(const BallTree& tree);

  /// Wraps an externally constructed family (for instance a rotated one).
  /// Checks shape only: one vector per leaf, total count = leaves - 1.
  static WaveletBasis from_wavelets(const BallTree& tree, std::vector<Wavelet> wavelets);

  std::size_t size() const { return wavelets_.size() + 1; }
  std::size_t leaf_count() const { return static_cast<std::size_t>(measures_.size()); }
  std::size_t constant_position() const { return wavelets_.size(); }

  std::span<const Wavelet> wavelets() const { return wavelets_; }
  const RealLeafFunction& constant() const { return constant_; }
  const Eigen::VectorXd& measures() const { return measures_; }

  /// Basis element k; k == constant_position() is the constant.
  const RealLeafFunction& element(std::size_t k) const;

  /// Leaf x basis matrix whose columns are the basis elements.
  Eigen::MatrixXd matrix() const;

  /// Coefficients <basis_k, f> under the measure-weighted inner product.
  Eigen::VectorXcd analyze(const LeafFunction& f) const;
  LeafFunction synthesize(const Eigen::VectorXcd& coefficients) const;

 private:
  WaveletBasis() = default;

  std::vector<Wavelet> wavelets_;
  // Canonical leaf range [first, second) where each wavelet may be nonzero.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges_;
  RealLeafFunction constant_;
  Eigen::VectorXd measures_;
};

/// Integral of f against the measure.
Complex mean(const BallTree& tree, const LeafFunction& f);

Complex inner_product(const Eigen::VectorXd& measures, const LeafFunction& f, const LeafFunction& g);
double weighted_norm(const Eigen::VectorXd& measures, const LeafFunction& f);

/// Norm of the restriction of f to the leaves outside `ball`.
double outside_norm(const BallTree& tree, const LeafFunction& f, BallIndex ball);

}  // namespace ultrametric
