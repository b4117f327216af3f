#include "ultrametric/evolution.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace ultrametric {

void EvolutionConfig::validate() const {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) {
    throw PreconditionError(fmt::format("hbar must be positive and finite, got {}", hbar));
  }
  for (double t : times) {
    if (!std::isfinite(t)) throw PreconditionError("evolution times must be finite");
  }
}

SpectralModel::SpectralModel(BallTree tree, SupKernel kernel)
    : tree_(std::move(tree)),
      kernel_(std::move(kernel)),
      basis_(WaveletBasis::build(tree_)),
      spectrum_(compute_spectrum(tree_, kernel_)),
      basis_eigenvalues_(spectrum_.basis_eigenvalues(basis_)) {}

WavePacket::WavePacket(const SpectralModel& model, Eigen::VectorXcd coefficients)
    : model_(&model), coefficients_(std::move(coefficients)) {
  if (static_cast<std::size_t>(coefficients_.size()) != model.basis().size()) {
    throw DimensionError(fmt::format("wave packet has {} coefficients, basis has {} elements",
                                     coefficients_.size(), model.basis().size()));
  }
}

WavePacket WavePacket::from_function(const SpectralModel& model, const LeafFunction& f) {
  return WavePacket(model, model.basis().analyze(f));
}

std::vector<WavePacket> evolve_schrodinger(const WavePacket& packet, const EvolutionConfig& config) {
  config.validate();
  const Eigen::VectorXd& lambda = packet.model().basis_eigenvalues();
  std::vector<WavePacket> out;
  out.reserve(config.times.size());
  for (double t : config.times) {
    Eigen::VectorXcd c = packet.coefficients();
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      c[k] *= std::exp(Complex(0.0, -config.hbar * lambda[k] * t));
    }
    out.emplace_back(packet.model(), std::move(c));
  }
  return out;
}

std::vector<WavePacket> evolve_heat(const WavePacket& packet, std::span<const double> times) {
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0) {
      throw PreconditionError(fmt::format("heat evolution needs finite t >= 0, got {}", t));
    }
  }
  const Eigen::VectorXd& lambda = packet.model().basis_eigenvalues();
  std::vector<WavePacket> out;
  out.reserve(times.size());
  for (double t : times) {
    Eigen::VectorXcd c = packet.coefficients();
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(-lambda[k] * t);
    out.emplace_back(packet.model(), std::move(c));
  }
  return out;
}

DensePropagator::DensePropagator(const Eigen::MatrixXd& symmetric_generator, const Eigen::VectorXd& measures)
    : sqrt_measures_(measures.cwiseSqrt()) {
  const Eigen::MatrixXd g = 0.5 * (symmetric_generator + symmetric_generator.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success) throw Error("propagator: eigendecomposition failed");
  eigenvectors_ = solver.eigenvectors();
  eigenvalues_ = solver.eigenvalues();
}

DensePropagator DensePropagator::free_particle(const BallTree& tree, const SupKernel& kernel) {
  const DenseOperator op = dense_operator(tree, kernel);
  return DensePropagator(op.symmetrized(), op.measures);
}

DensePropagator DensePropagator::with_potential(const BallTree& tree, const SupKernel& kernel,
                                                const RealLeafFunction& potential, double hbar) {
  if (static_cast<std::size_t>(potential.size()) != tree.leaf_count()) {
    throw DimensionError(fmt::format("potential has {} values, tree has {} leaves", potential.size(),
                                     tree.leaf_count()));
  }
  const DenseOperator op = dense_operator(tree, kernel);
  Eigen::MatrixXd h = hbar * hbar * op.symmetrized();
  h.diagonal() += potential;
  return DensePropagator(h, op.measures);
}

LeafFunction DensePropagator::apply(const LeafFunction& f, Complex z) const {
  if (f.size() != sqrt_measures_.size()) throw DimensionError("propagator: length mismatch");
  const Eigen::MatrixXcd q = eigenvectors_.cast<Complex>();
  Eigen::VectorXcd g = q.adjoint() * f.cwiseProduct(sqrt_measures_.cast<Complex>());
  for (Eigen::Index k = 0; k < g.size(); ++k) g[k] *= std::exp(z * eigenvalues_[k]);
  return (q * g).cwiseQuotient(sqrt_measures_.cast<Complex>());
}

std::vector<LeafFunction> evolve_with_potential(const LeafFunction& f, const LeafFunction& potential,
                                                const BallTree& tree, const SupKernel& kernel,
                                                const EvolutionConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(f.size()) != tree.leaf_count()) {
    throw DimensionError(fmt::format("initial state has {} values, tree has {} leaves", f.size(),
                                     tree.leaf_count()));
  }
  if (static_cast<std::size_t>(potential.size()) != tree.leaf_count()) {
    throw DimensionError(fmt::format("potential has {} values, tree has {} leaves", potential.size(),
                                     tree.leaf_count()));
  }
  for (Eigen::Index k = 0; k < potential.size(); ++k) {
    if (potential[k].imag() != 0.0) {
      throw PreconditionError(fmt::format("potential must be real; leaf '{}' has imaginary part {}",
                                          tree.ball(tree.leaf(static_cast<std::size_t>(k))).id,
                                          potential[k].imag()));
    }
  }
  const auto prop = DensePropagator::with_potential(tree, kernel, potential.real(), config.hbar);
  std::vector<LeafFunction> out;
  out.reserve(config.times.size());
  for (double t : config.times) out.push_back(prop.apply(f, Complex(0.0, -t / config.hbar)));
  return out;
}

bool LocalizationReport::passed() const {
  if (!precondition_met) return false;
  if (max_outside_coefficient > tol * initial_norm) return false;
  return std::all_of(samples.begin(), samples.end(), [&](const LocalizationSample& s) {
    return s.outside_mass <= tol * initial_norm && s.mean_abs <= tol * mean_scale;
  });
}

LocalizationReport check_localization(const LeafFunction& f, const SpectralModel& model,
                                      const EvolutionConfig& config, double tol) {
  config.validate();
  const BallTree& tree = model.tree();
  if (static_cast<std::size_t>(f.size()) != tree.leaf_count()) {
    throw DimensionError(fmt::format("initial state has {} values, tree has {} leaves", f.size(),
                                     tree.leaf_count()));
  }
  LocalizationReport report;
  report.tol = tol;
  report.initial_norm = weighted_norm(tree.leaf_measures(), f);
  report.mean_scale = report.initial_norm * std::sqrt(tree.total_measure());

  const double peak = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  report.support = ball_support(tree, f, tol * peak);
  if (!report.support) {
    report.note = "initial state is zero; no support ball";
    return report;
  }
  const BallIndex B = *report.support;

  const double initial_mean = std::abs(mean(tree, f));
  if (initial_mean > tol * report.mean_scale) {
    report.note = fmt::format(
        "precondition failed: initial state has mean {:.3e} (limit {:.3e}); localization is not guaranteed",
        initial_mean, tol * report.mean_scale);
    const auto prop = DensePropagator::free_particle(tree, model.kernel());
    for (double t : config.times) {
      report.dense_leakage.push_back(outside_norm(tree, prop.schrodinger(f, t, config.hbar), B));
    }
    return report;
  }
  report.precondition_met = true;

  const WavePacket packet = WavePacket::from_function(model, f);
  const auto wavelets = model.basis().wavelets();
  const Eigen::VectorXcd& c = packet.coefficients();
  for (std::size_t k = 0; k < wavelets.size(); ++k) {
    if (!tree.contains(B, wavelets[k].ball)) {
      report.max_outside_coefficient =
          std::max(report.max_outside_coefficient, std::abs(c[static_cast<Eigen::Index>(k)]));
    }
  }
  report.max_outside_coefficient = std::max(
      report.max_outside_coefficient, std::abs(c[static_cast<Eigen::Index>(model.basis().constant_position())]));

  const auto evolved = evolve_schrodinger(packet, config);
  for (std::size_t i = 0; i < evolved.size(); ++i) {
    const LeafFunction psi = evolved[i].synthesize();
    report.samples.push_back({config.times[i], weighted_norm(tree.leaf_measures(), psi),
                              outside_norm(tree, psi, B), std::abs(mean(tree, psi))});
  }
  report.note = report.passed() ? "localized" : "localization violated";
  return report;
}

double spacetime_residual(const DenseOperator& space, const DenseOperator& time, double lambda_space,
                          double lambda_time, const Eigen::MatrixXcd& psi) {
  if (psi.rows() != space.matrix.rows() || psi.cols() != time.matrix.rows()) {
    throw DimensionError("spacetime residual: grid does not match the operators");
  }
  const Eigen::MatrixXcd r = (1.0 / lambda_time) * psi * time.matrix.transpose().cast<Complex>() -
                             (1.0 / lambda_space) * space.matrix.cast<Complex>() * psi;
  const Eigen::MatrixXd weights = space.measures * time.measures.transpose();
  return std::sqrt(r.cwiseAbs2().cwiseProduct(weights).sum());
}

std::size_t wavelet_position(const WaveletBasis& basis, BallIndex I, int j) {
  const auto wavelets = basis.wavelets();
  for (std::size_t k = 0; k < wavelets.size(); ++k) {
    if (wavelets[k].ball == I && wavelets[k].index == j) return k;
  }
  throw PreconditionError(fmt::format("no wavelet with index {} on ball {}", j, I.value));
}

SpacetimeReport spacetime_product_check(const SpectralModel& space, BallIndex I, int j,
                                        const SpectralModel& time, BallIndex J, int j_time) {
  SpacetimeReport report;
  report.lambda_space = space.spectrum()(I);
  report.lambda_time = time.spectrum()(J);
  if (report.lambda_space == 0.0 || report.lambda_time == 0.0) {
    throw PreconditionError(fmt::format(
        "space-time product solution needs nonzero eigenvalues (lambda_I = {}, lambda_J = {})",
        report.lambda_space, report.lambda_time));
  }
  const Eigen::VectorXd& psi_x = space.basis().element(wavelet_position(space.basis(), I, j));
  const Eigen::VectorXd& psi_t = time.basis().element(wavelet_position(time.basis(), J, j_time));
  const Eigen::MatrixXcd psi = (psi_x * psi_t.transpose()).cast<Complex>();

  const DenseOperator dx = dense_operator(space.tree(), space.kernel());
  const DenseOperator dt = dense_operator(time.tree(), time.kernel());
  report.residual = spacetime_residual(dx, dt, report.lambda_space, report.lambda_time, psi);
  const Eigen::MatrixXd weights = dx.measures * dt.measures.transpose();
  report.norm = std::sqrt(psi.cwiseAbs2().cwiseProduct(weights).sum());
  return report;
}

}  // namespace ultrametric
