#include "ultrametric/pdo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace ultrametric {

SupKernel SupKernel::from_values(const BallTree& tree, std::vector<double> values) {
  if (values.size() != tree.ball_count()) {
    throw DimensionError(fmt::format("kernel has {} values, tree has {} balls", values.size(),
                                     tree.ball_count()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const BallIndex b{i};
    if (tree.is_leaf(b)) {
      if (values[i] != 0.0) {
        throw PreconditionError(fmt::format("kernel: leaf '{}' must not carry a value", tree.ball(b).id));
      }
    } else if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw PreconditionError(
          fmt::format("kernel: T('{}') = {} must be finite and nonnegative", tree.ball(b).id, values[i]));
    }
  }
  SupKernel k;
  k.values_ = std::move(values);
  return k;
}

SupKernel SupKernel::constant(const BallTree& tree, double value) {
  std::vector<double> v(tree.ball_count(), 0.0);
  for (BallIndex I : tree.internal_balls()) v[I.value] = value;
  return from_values(tree, std::move(v));
}

SupKernel SupKernel::from_map(const BallTree& tree, const std::map<std::string, double>& values) {
  std::vector<double> v(tree.ball_count(), 0.0);
  for (const auto& [id, value] : values) {
    const BallIndex b = tree.index_of(id);
    if (tree.is_leaf(b)) {
      throw PreconditionError(fmt::format("kernel: '{}' is a leaf; T is defined on internal balls", id));
    }
    v[b.value] = value;
  }
  for (BallIndex I : tree.internal_balls()) {
    if (!values.contains(tree.ball(I).id)) {
      throw PreconditionError(fmt::format("kernel: no value for internal ball '{}'", tree.ball(I).id));
    }
  }
  return from_values(tree, std::move(v));
}

SupKernel vladimirov_preset(const BallTree& tree, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw PreconditionError(fmt::format("vladimirov preset: alpha must be positive, got {}", alpha));
  }
  std::vector<double> v(tree.ball_count(), 0.0);
  for (BallIndex I : tree.internal_balls()) v[I.value] = std::pow(tree.ball(I).diameter, -alpha - 1.0);
  return SupKernel::from_values(tree, std::move(v));
}

SupKernel parse_kernel(const BallTree& tree, const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("kernel: document must be a JSON object");
  if (doc.contains("preset")) {
    const auto& preset = doc.at("preset");
    if (!preset.is_string() || preset.get<std::string>() != "vladimirov") {
      throw Error("kernel: only the 'vladimirov' preset is supported");
    }
    if (!doc.contains("alpha") || !doc.at("alpha").is_number()) {
      throw Error("kernel: vladimirov preset needs a numeric 'alpha'");
    }
    return vladimirov_preset(tree, doc.at("alpha").get<double>());
  }
  std::map<std::string, double> values;
  for (const auto& [id, value] : doc.items()) {
    if (!value.is_number()) throw Error(fmt::format("kernel: value for '{}' must be a number", id));
    values[id] = value.get<double>();
  }
  return SupKernel::from_map(tree, values);
}

SupKernel load_kernel(const BallTree& tree, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open kernel file '{}'", path.string()));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("kernel file '{}': {}", path.string(), e.what()));
  }
  return parse_kernel(tree, doc);
}

double eigenvalue(const BallTree& tree, const SupKernel& kernel, BallIndex I) {
  if (tree.is_leaf(I)) {
    throw PreconditionError(fmt::format("eigenvalue: '{}' is a leaf", tree.ball(I).id));
  }
  const auto path = tree.path_from_root(I);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Ball& J = tree.ball(path[k]);
    const Ball& toward = tree.ball(path[k + 1]);
    sum += kernel(path[k]) * (J.measure - toward.measure);
  }
  return sum + kernel(I) * tree.ball(I).measure;
}

Spectrum Spectrum::from_values(const BallTree& tree, std::vector<double> values) {
  if (values.size() != tree.ball_count()) {
    throw DimensionError(fmt::format("spectrum has {} values, tree has {} balls", values.size(),
                                     tree.ball_count()));
  }
  Spectrum s;
  s.values_ = std::move(values);
  s.multiplicity_.assign(tree.ball_count(), 0);
  s.internal_.assign(tree.ball_count(), false);
  for (BallIndex I : tree.internal_balls()) {
    s.multiplicity_[I.value] = tree.ball(I).children.size() - 1;
    s.internal_[I.value] = true;
  }
  for (std::size_t i = 0; i < s.values_.size(); ++i) {
    if (!s.internal_[i]) s.values_[i] = 0.0;
  }
  return s;
}

double Spectrum::operator()(BallIndex I) const {
  if (I.value >= values_.size() || !internal_[I.value]) {
    throw PreconditionError(fmt::format("spectrum: ball index {} is not an internal ball", I.value));
  }
  return values_[I.value];
}

Eigen::VectorXd Spectrum::basis_eigenvalues(const WaveletBasis& basis) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
  const auto wavelets = basis.wavelets();
  for (std::size_t k = 0; k < wavelets.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = (*this)(wavelets[k].ball);
  }
  out[static_cast<Eigen::Index>(basis.constant_position())] = constant_eigenvalue();
  return out;
}

std::vector<double> Spectrum::multiset() const {
  std::vector<double> out{constant_eigenvalue()};
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out.insert(out.end(), multiplicity_[i], values_[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Spectrum compute_spectrum(const BallTree& tree, const SupKernel& kernel) {
  // ancestor[b] = sum over strict ancestors J of T(J)(nu(J) - nu(child toward b)).
  // Preorder visits parents first, so the sum is built root-to-ball.
  std::vector<double> ancestor(tree.ball_count(), 0.0);
  std::vector<double> values(tree.ball_count(), 0.0);
  for (std::size_t i = 0; i < tree.ball_count(); ++i) {
    const BallIndex b{i};
    const Ball& ball = tree.ball(b);
    if (ball.parent) {
      const Ball& parent = tree.ball(*ball.parent);
      ancestor[i] = ancestor[ball.parent->value] + kernel(*ball.parent) * (parent.measure - ball.measure);
    }
    if (!ball.is_leaf()) values[i] = ancestor[i] + kernel(b) * ball.measure;
  }
  return Spectrum::from_values(tree, std::move(values));
}

LeafFunction DenseOperator::apply(const LeafFunction& f) const {
  if (f.size() != matrix.cols()) throw DimensionError("dense operator: length mismatch");
  return matrix.cast<Complex>() * f;
}

Eigen::MatrixXd DenseOperator::symmetrized() const {
  const Eigen::VectorXd root = measures.cwiseSqrt();
  return root.asDiagonal() * matrix * root.cwiseInverse().asDiagonal();
}

DenseOperator dense_operator(const BallTree& tree, const SupKernel& kernel) {
  const auto n = static_cast<Eigen::Index>(tree.leaf_count());
  DenseOperator op{Eigen::MatrixXd::Zero(n, n), tree.leaf_measures()};
  for (Eigen::Index x = 0; x < n; ++x) {
    double diagonal = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (x == y) continue;
      const BallIndex s = tree.sup(tree.leaf(static_cast<std::size_t>(x)), tree.leaf(static_cast<std::size_t>(y)));
      const double w = kernel(s) * op.measures[y];
      op.matrix(x, y) = -w;
      diagonal += w;
    }
    op.matrix(x, x) = diagonal;
  }
  return op;
}

Eigen::VectorXd numerical_eigenvalues(const DenseOperator& op) {
  Eigen::MatrixXd s = op.symmetrized();
  // Remove rounding asymmetry before the symmetric solver reads one triangle.
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigenvalue solver did not converge");
  return solver.eigenvalues();
}

SpectrumReport verify_spectrum(const BallTree& tree, const SupKernel& kernel, const WaveletBasis& basis,
                               const Spectrum& spectrum) {
  if (basis.leaf_count() != tree.leaf_count()) {
    throw DimensionError(fmt::format("basis is defined on {} leaves, tree has {}", basis.leaf_count(),
                                     tree.leaf_count()));
  }
  if (spectrum.values().size() != tree.ball_count()) {
    throw DimensionError("spectrum does not match the tree");
  }

  SpectrumReport report;
  const DenseOperator op = dense_operator(tree, kernel);
  const Eigen::VectorXd numeric = numerical_eigenvalues(op);
  report.operator_norm = numeric.size() ? numeric.cwiseAbs().maxCoeff() : 0.0;

  const Eigen::VectorXd lambdas = spectrum.basis_eigenvalues(basis);
  const Eigen::VectorXd& nu = basis.measures();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Eigen::VectorXd& psi = basis.element(k);
    const Eigen::VectorXd r = op.matrix * psi - lambdas[static_cast<Eigen::Index>(k)] * psi;
    const double r_norm = std::sqrt(r.cwiseAbs2().dot(nu));
    const double psi_norm = std::sqrt(psi.cwiseAbs2().dot(nu));
    const double rel = r_norm / std::max(1.0, report.operator_norm * psi_norm);
    if (rel > report.max_residual) {
      report.max_residual = rel;
      report.worst_element = k;
    }
  }

  report.analytic = spectrum.multiset();
  report.numeric.assign(numeric.data(), numeric.data() + numeric.size());
  if (report.analytic.size() != report.numeric.size()) {
    throw DimensionError("spectrum multiset size differs from the operator dimension");
  }
  for (std::size_t i = 0; i < report.analytic.size(); ++i) {
    const double gap =
        std::abs(report.analytic[i] - report.numeric[i]) / std::max(1.0, std::abs(report.analytic[i]));
    report.max_multiset_gap = std::max(report.max_multiset_gap, gap);
  }
  return report;
}

}  // namespace ultrametric
