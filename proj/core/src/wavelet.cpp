#include "ultrametric/wavelet.hpp"

#include <cmath>

#include <fmt/format.h>

namespace ultrametric {

HelmertValues helmert_values(double leading_mass, double next_mass) {
  // Mean zero: a*S + b*w = 0; unit norm: a^2*S + b^2*w = 1.
  const double total = leading_mass + next_mass;
  return {std::sqrt(next_mass / (leading_mass * total)),
          -std::sqrt(leading_mass / (next_mass * total))};
}

WaveletBasis WaveletBasis::build(const BallTree& tree) {
  WaveletBasis basis;
  basis.measures_ = tree.leaf_measures();
  const auto n = static_cast<Eigen::Index>(tree.leaf_count());
  basis.wavelets_.reserve(tree.leaf_count() - 1);

  for (BallIndex I : tree.internal_balls()) {
    const auto& kids = tree.ball(I).children;
    double leading = 0.0;
    for (std::size_t j = 1; j < kids.size(); ++j) {
      const Ball& prev = tree.ball(kids[j - 1]);
      const Ball& next = tree.ball(kids[j]);
      leading += prev.measure;
      const auto v = helmert_values(leading, next.measure);

      Wavelet w{I, static_cast<int>(j), RealLeafFunction::Zero(n)};
      const auto begin = static_cast<Eigen::Index>(tree.ball(kids.front()).leaf_begin);
      const auto split = static_cast<Eigen::Index>(next.leaf_begin);
      const auto end = static_cast<Eigen::Index>(next.leaf_end);
      w.values.segment(begin, split - begin).setConstant(v.positive);
      w.values.segment(split, end - split).setConstant(v.negative);
      basis.ranges_.emplace_back(begin, end);
      basis.wavelets_.push_back(std::move(w));
    }
  }
  basis.constant_ = RealLeafFunction::Constant(n, 1.0 / std::sqrt(tree.total_measure()));
  return basis;
}

WaveletBasis WaveletBasis::from_wavelets(const BallTree& tree, std::vector<Wavelet> wavelets) {
  const auto n = static_cast<Eigen::Index>(tree.leaf_count());
  if (wavelets.size() + 1 != tree.leaf_count()) {
    throw DimensionError(fmt::format("expected {} wavelets for {} leaves, got {}",
                                     tree.leaf_count() - 1, tree.leaf_count(), wavelets.size()));
  }
  WaveletBasis basis;
  basis.measures_ = tree.leaf_measures();
  for (const auto& w : wavelets) {
    if (w.values.size() != n) {
      throw DimensionError(fmt::format("wavelet has {} values, tree has {} leaves", w.values.size(), n));
    }
    basis.ranges_.emplace_back(0, n);
  }
  basis.wavelets_ = std::move(wavelets);
  basis.constant_ = RealLeafFunction::Constant(n, 1.0 / std::sqrt(tree.total_measure()));
  return basis;
}

const RealLeafFunction& WaveletBasis::element(std::size_t k) const {
  if (k == constant_position()) return constant_;
  if (k > constant_position()) {
    throw DimensionError(fmt::format("basis element {} out of range (size {})", k, size()));
  }
  return wavelets_[k].values;
}

Eigen::MatrixXd WaveletBasis::matrix() const {
  Eigen::MatrixXd m(measures_.size(), static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) m.col(static_cast<Eigen::Index>(k)) = element(k);
  return m;
}

Eigen::VectorXcd WaveletBasis::analyze(const LeafFunction& f) const {
  if (f.size() != measures_.size()) {
    throw DimensionError(fmt::format("leaf function has {} values, basis expects {}", f.size(),
                                     measures_.size()));
  }
  const LeafFunction weighted = f.cwiseProduct(measures_.cast<Complex>());
  Eigen::VectorXcd c(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < wavelets_.size(); ++k) {
    const auto [begin, end] = ranges_[k];
    const auto len = end - begin;
    c[static_cast<Eigen::Index>(k)] =
        wavelets_[k].values.segment(begin, len).cast<Complex>().dot(weighted.segment(begin, len));
  }
  c[static_cast<Eigen::Index>(constant_position())] = constant_.cast<Complex>().dot(weighted);
  return c;
}

LeafFunction WaveletBasis::synthesize(const Eigen::VectorXcd& coefficients) const {
  if (static_cast<std::size_t>(coefficients.size()) != size()) {
    throw DimensionError(fmt::format("got {} coefficients, basis has {} elements", coefficients.size(),
                                     size()));
  }
  LeafFunction f = coefficients[static_cast<Eigen::Index>(constant_position())] * constant_.cast<Complex>();
  for (std::size_t k = 0; k < wavelets_.size(); ++k) {
    const auto [begin, end] = ranges_[k];
    const auto len = end - begin;
    f.segment(begin, len) +=
        coefficients[static_cast<Eigen::Index>(k)] * wavelets_[k].values.segment(begin, len).cast<Complex>();
  }
  return f;
}

Complex mean(const BallTree& tree, const LeafFunction& f) {
  if (static_cast<std::size_t>(f.size()) != tree.leaf_count()) {
    throw DimensionError(fmt::format("leaf function has {} values, tree has {} leaves", f.size(),
                                     tree.leaf_count()));
  }
  Complex sum{};
  for (Eigen::Index k = 0; k < f.size(); ++k) sum += f[k] * tree.leaf_measures()[k];
  return sum;
}

Complex inner_product(const Eigen::VectorXd& measures, const LeafFunction& f, const LeafFunction& g) {
  if (f.size() != measures.size() || g.size() != measures.size()) {
    throw DimensionError("inner product: length mismatch");
  }
  Complex sum{};
  for (Eigen::Index k = 0; k < f.size(); ++k) sum += std::conj(f[k]) * g[k] * measures[k];
  return sum;
}

double weighted_norm(const Eigen::VectorXd& measures, const LeafFunction& f) {
  if (f.size() != measures.size()) throw DimensionError("norm: length mismatch");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) sum += std::norm(f[k]) * measures[k];
  return std::sqrt(sum);
}

double outside_norm(const BallTree& tree, const LeafFunction& f, BallIndex ball) {
  if (static_cast<std::size_t>(f.size()) != tree.leaf_count()) {
    throw DimensionError("outside norm: length mismatch");
  }
  const Ball& b = tree.ball(ball);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    const auto pos = static_cast<std::size_t>(k);
    if (pos < b.leaf_begin || pos >= b.leaf_end) sum += std::norm(f[k]) * tree.leaf_measures()[k];
  }
  return std::sqrt(sum);
}

}  // namespace ultrametric
