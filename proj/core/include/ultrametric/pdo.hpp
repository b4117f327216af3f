#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/types.hpp"
#include "ultrametric/wavelet.hpp"

namespace ultrametric {

/// Nonnegative kernel T(I) on the internal balls of a tree. Leaf entries are
/// unused and kept at zero.
class SupKernel {
 public:
  /// `values` is indexed by ball; entries for leaves must be zero.
  static SupKernel from_values(const BallTree& tree, std::vector<double> values);
  static SupKernel constant(const BallTree& tree, double value);
  /// Every internal ball id must be present; leaf and unknown ids are rejected.
  static SupKernel from_map(const BallTree& tree, const std::map<std::string, double>& values);

  double operator()(BallIndex I) const { return values_.at(I.value); }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// T(I) = diameter(I)^(-alpha-1).
SupKernel vladimirov_preset(const BallTree& tree, double alpha);

/// Kernel file: either {"<ball id>": T, ...} or {"preset": "vladimirov", "alpha": a}.
SupKernel parse_kernel(const BallTree& tree, const nlohmann::json& doc);
SupKernel load_kernel(const BallTree& tree, const std::filesystem::path& path);

/// Closed-form eigenvalue of ball I:
///   T(I) nu(I) + sum over strict ancestors J of T(J) (nu(J) - nu(child of J toward I)),
/// accumulated from the root downwards.
double eigenvalue(const BallTree& tree, const SupKernel& kernel, BallIndex I);

/// Eigenvalue per internal ball; the constant function has eigenvalue 0.
class Spectrum {
 public:
  /// `values` is indexed by ball; leaf entries are ignored.
  static Spectrum from_values(const BallTree& tree, std::vector<double> values);

  double operator()(BallIndex I) const;
  double constant_eigenvalue() const { return 0.0; }
  std::span<const double> values() const { return values_; }

  /// Eigenvalue attached to each element of a WaveletBasis built on the same tree.
  Eigen::VectorXd basis_eigenvalues(const WaveletBasis& basis) const;

  /// Sorted multiset {lambda_I with multiplicity p_I - 1} U {0}.
  std::vector<double> multiset() const;

 private:
  std::vector<double> values_;
  std::vector<std::size_t> multiplicity_;  // p_I - 1, zero for leaves
  std::vector<bool> internal_;
};

Spectrum compute_spectrum(const BallTree& tree, const SupKernel& kernel);

/// The operator Tf(x) = sum_y T(sup(x,y)) (f(x) - f(y)) nu(y) on leaf-constant
/// functions, evaluated directly from the definition.
struct DenseOperator {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd measures;

  LeafFunction apply(const LeafFunction& f) const;
  /// diag(sqrt(nu)) M diag(sqrt(nu))^-1, symmetric because M is self-adjoint
  /// in the weighted inner product.
  Eigen::MatrixXd symmetrized() const;
};

DenseOperator dense_operator(const BallTree& tree, const SupKernel& kernel);

inline constexpr double kEigenrelationTolerance = 1e-10;
inline constexpr double kMultisetTolerance = 1e-8;

struct SpectrumReport {
  double max_residual = 0.0;     // max_k |M psi_k - lambda_k psi_k| / max(1, |M| |psi_k|)
  double max_multiset_gap = 0.0; // max_i |analytic_i - numeric_i| / max(1, |analytic_i|)
  std::size_t worst_element = 0;
  double operator_norm = 0.0;
  std::vector<double> analytic;  // sorted
  std::vector<double> numeric;   // sorted
  double residual_tolerance = kEigenrelationTolerance;
  double multiset_tolerance = kMultisetTolerance;

  bool residual_ok() const { return max_residual <= residual_tolerance; }
  bool multiset_ok() const { return max_multiset_gap <= multiset_tolerance; }
  bool passed() const { return residual_ok() && multiset_ok(); }
};

/// Checks every basis element against the dense operator and compares the
/// analytic eigenvalue multiset with a numerical eigendecomposition.
SpectrumReport verify_spectrum(const BallTree& tree, const SupKernel& kernel, const WaveletBasis& basis,
                               const Spectrum& spectrum);

/// Eigenvalues of the dense operator (ascending), computed from its symmetrized form.
Eigen::VectorXd numerical_eigenvalues(const DenseOperator& op);

}  // namespace ultrametric
