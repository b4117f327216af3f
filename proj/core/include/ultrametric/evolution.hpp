#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/pdo.hpp"
#include "ultrametric/types.hpp"
#include "ultrametric/wavelet.hpp"

namespace ultrametric {

struct EvolutionConfig {
  double hbar = 1.0;
  std::vector<double> times;

  /// Throws PreconditionError unless hbar > 0 and every time is finite.
  void validate() const;
};

/// Tree, kernel, wavelet basis and spectrum bundled for evolution.
class SpectralModel {
 public:
  SpectralModel(BallTree tree, SupKernel kernel);

  const BallTree& tree() const { return tree_; }
  const SupKernel& kernel() const { return kernel_; }
  const WaveletBasis& basis() const { return basis_; }
  const Spectrum& spectrum() const { return spectrum_; }
  /// Eigenvalue of each basis element, constant last (0).
  const Eigen::VectorXd& basis_eigenvalues() const { return basis_eigenvalues_; }

 private:
  BallTree tree_;
  SupKernel kernel_;
  WaveletBasis basis_;
  Spectrum spectrum_;
  Eigen::VectorXd basis_eigenvalues_;
};

/// State expressed by its wavelet coefficients. Refers to a SpectralModel that
/// must outlive it.
class WavePacket {
 public:
  WavePacket(const SpectralModel& model, Eigen::VectorXcd coefficients);
  static WavePacket from_function(const SpectralModel& model, const LeafFunction& f);

  const SpectralModel& model() const { return *model_; }
  const Eigen::VectorXcd& coefficients() const { return coefficients_; }

  LeafFunction synthesize() const { return model_->basis().synthesize(coefficients_); }
  /// Parseval norm sqrt(sum |c|^2).
  double norm() const { return coefficients_.norm(); }

 private:
  const SpectralModel* model_;
  Eigen::VectorXcd coefficients_;
};

/// c_k(t) = exp(-i hbar lambda_k t) c_k(0), one packet per configured time.
std::vector<WavePacket> evolve_schrodinger(const WavePacket& packet, const EvolutionConfig& config);

/// c_k(t) = exp(-lambda_k t) c_k(0). Negative times are rejected.
std::vector<WavePacket> evolve_heat(const WavePacket& packet, std::span<const double> times);

/// exp(z G) on leaf functions for a generator G = scale * M + diag(U) that is
/// self-adjoint in the weighted inner product, via eigendecomposition of its
/// symmetrized form.
class DensePropagator {
 public:
  /// G = M.
  static DensePropagator free_particle(const BallTree& tree, const SupKernel& kernel);
  /// G = hbar^2 M + diag(U), the Hamiltonian of the equation with potential.
  static DensePropagator with_potential(const BallTree& tree, const SupKernel& kernel,
                                        const RealLeafFunction& potential, double hbar);

  LeafFunction apply(const LeafFunction& f, Complex z) const;

  /// exp(-i hbar t M) f for the free generator.
  LeafFunction schrodinger(const LeafFunction& f, double t, double hbar) const {
    return apply(f, Complex(0.0, -hbar * t));
  }
  /// exp(-t M) f for the free generator.
  LeafFunction heat(const LeafFunction& f, double t) const { return apply(f, Complex(-t, 0.0)); }

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

 private:
  DensePropagator(const Eigen::MatrixXd& symmetric_generator, const Eigen::VectorXd& measures);

  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd sqrt_measures_;
};

/// Psi(t) = exp(-(i/hbar) H t) f with H = hbar^2 M + diag(U). U must be real.
std::vector<LeafFunction> evolve_with_potential(const LeafFunction& f, const LeafFunction& potential,
                                                const BallTree& tree, const SupKernel& kernel,
                                                const EvolutionConfig& config);

struct LocalizationSample {
  double time = 0.0;
  double norm = 0.0;
  double outside_mass = 0.0;  // norm of the part of Psi(t) outside the support ball
  double mean_abs = 0.0;
};

struct LocalizationReport {
  double tol = 0.0;
  bool precondition_met = false;
  std::string note;
  std::optional<BallIndex> support;
  double initial_norm = 0.0;
  double mean_scale = 0.0;       // |f| sqrt(nu(root)), the Cauchy-Schwarz bound on |mean|
  double max_outside_coefficient = 0.0;  // |c| over wavelets not inside the support, and the constant
  std::vector<LocalizationSample> samples;
  // Filled when the precondition fails: outside mass of the dense free evolution.
  std::vector<double> dense_leakage;

  bool passed() const;
};

/// Evolves f under the free equation and checks that it stays inside the
/// smallest ball containing its support and keeps zero mean. A non-mean-zero f
/// is reported (with the dense leakage) rather than thrown.
LocalizationReport check_localization(const LeafFunction& f, const SpectralModel& model,
                                      const EvolutionConfig& config, double tol);

struct SpacetimeReport {
  double lambda_space = 0.0;
  double lambda_time = 0.0;
  double residual = 0.0;  // weighted L2 norm on the product grid
  double norm = 0.0;
  double tolerance = 1e-10;

  bool passed() const { return residual <= tolerance * norm; }
};

/// Weighted L2 norm of (1/lambda_time) Psi M_t^T - (1/lambda_space) M_x Psi,
/// where Psi is indexed [space leaf, time leaf].
double spacetime_residual(const DenseOperator& space, const DenseOperator& time, double lambda_space,
                          double lambda_time, const Eigen::MatrixXcd& psi);

/// Builds psi_Ij(x) psi_Jj'(t) and measures the residual of the product
/// equation with A = 1/lambda_J, B = 1/lambda_I. Both eigenvalues must be
/// nonzero.
SpacetimeReport spacetime_product_check(const SpectralModel& space, BallIndex I, int j,
                                        const SpectralModel& time, BallIndex J, int j_time);

/// Position of wavelet (I, j) within the basis.
std::size_t wavelet_position(const WaveletBasis& basis, BallIndex I, int j);

}  // namespace ultrametric
