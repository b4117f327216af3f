#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracle.hpp"
#include "ultrametric/ball_tree.hpp"
#include "ultrametric/certify.hpp"
#include "ultrametric/pdo.hpp"
#include "ultrametric/wavelet.hpp"

using namespace ultrametric;

namespace {

BallTree two_leaves() {
  TreeSpec spec;
  spec.balls = {{"r", std::nullopt, 1.0, std::nullopt}, {"a", "r", 0.5, 0.5}, {"b", "r", 0.5, 0.5}};
  return BallTree::build(spec);
}

std::vector<double> oracle_spectrum(const BallTree& tree, const SupKernel& kernel, double* max_imag = nullptr) {
  return oracle::general_eigenvalues(oracle::brute_force_operator(tree, kernel), max_imag);
}

}  // namespace

TEST(eigenvalue, binary_fixture_examples) {
  const auto fx = certify::binary_fixture();
  EXPECT_NEAR(eigenvalue(fx.tree, fx.kernel, fx.tree.root()), 1.0, 1e-15);
  EXPECT_NEAR(eigenvalue(fx.tree, fx.kernel, fx.tree.index_of("B1")), 1.5, 1e-15);
  EXPECT_NEAR(eigenvalue(fx.tree, fx.kernel, fx.tree.index_of("B2")), 1.5, 1e-15);
  EXPECT_THROW(eigenvalue(fx.tree, fx.kernel, fx.tree.index_of("B1a")), PreconditionError);

  const auto numeric = oracle_spectrum(fx.tree, fx.kernel);
  const std::vector<double> expected{0.0, 1.0, 1.5, 1.5};
  ASSERT_EQ(numeric.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(numeric[k], expected[k], 1e-12);
}

TEST(eigenvalue, zero_kernel_gives_zero_spectrum) {
  const BallTree tree = BallTree::build(padic_preset(3, 2, 1.0));
  const SupKernel zero = SupKernel::constant(tree, 0.0);
  const Spectrum s = compute_spectrum(tree, zero);
  for (double v : s.multiset()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(verify_spectrum(tree, zero, WaveletBasis::build(tree), s).passed());
}

TEST(eigenvalue, prefix_sums_agree_with_path_walk) {
  certify::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const BallTree tree = BallTree::build(certify::random_tree_spec(rng));
    const SupKernel kernel = certify::random_kernel(tree, rng);
    const Spectrum s = compute_spectrum(tree, kernel);
    for (auto I : tree.internal_balls()) {
      const double direct = eigenvalue(tree, kernel, I);
      EXPECT_NEAR(s(I), direct, 1e-13 * std::max(1.0, direct));
    }
  }
}

TEST(dense_operator, two_leaf_matrix) {
  const BallTree tree = two_leaves();
  const DenseOperator op = dense_operator(tree, SupKernel::constant(tree, 1.0));
  Eigen::Matrix2d expected;
  expected << 0.5, -0.5, -0.5, 0.5;
  EXPECT_LE((op.matrix - expected).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::VectorXcd c = op.apply(LeafFunction::Constant(2, Complex(3.0, 1.0)));
  EXPECT_LE(c.norm(), 1e-15);
}

TEST(dense_operator, matches_brute_force_and_kills_constants) {
  certify::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const BallTree tree = BallTree::build(certify::random_tree_spec(rng, {2, 90, 2, 5}));
    const SupKernel kernel = certify::random_kernel(tree, rng);
    const DenseOperator op = dense_operator(tree, kernel);
    const Eigen::MatrixXd brute = oracle::brute_force_operator(tree, kernel);
    const double scale = std::max(1.0, brute.cwiseAbs().maxCoeff());
    EXPECT_LE((op.matrix - brute).cwiseAbs().maxCoeff(), 1e-13 * scale);
    const auto n = static_cast<Eigen::Index>(tree.leaf_count());
    EXPECT_LE(op.apply(LeafFunction::Ones(n)).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(vladimirov_preset, kernel_values) {
  const BallTree tree = BallTree::build(padic_preset(2, 2, 1.0));
  const SupKernel k = vladimirov_preset(tree, 1.0);
  EXPECT_DOUBLE_EQ(k(tree.root()), 1.0);
  EXPECT_DOUBLE_EQ(k(tree.index_of("root.0")), 4.0);
  EXPECT_THROW(vladimirov_preset(tree, 0.0), PreconditionError);
  EXPECT_THROW(vladimirov_preset(tree, -1.0), PreconditionError);

  const Spectrum s = compute_spectrum(tree, k);
  EXPECT_NEAR(s(tree.root()), 1.0, 1e-15);
  EXPECT_NEAR(s(tree.index_of("root.1")), 2.5, 1e-15);
}

TEST(vladimirov_preset, padic2_depth3_half_matches_numeric_spectrum) {
  const BallTree tree = BallTree::build(padic_preset(2, 3, 1.0));
  const SupKernel k = vladimirov_preset(tree, 0.5);
  const auto analytic = compute_spectrum(tree, k).multiset();
  double imag = 0.0;
  const auto numeric = oracle_spectrum(tree, k, &imag);
  EXPECT_LE(imag, 1e-10);
  ASSERT_EQ(analytic.size(), numeric.size());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    EXPECT_NEAR(analytic[i], numeric[i], 1e-10 * std::max(1.0, std::abs(analytic[i])));
  }
}

TEST(vladimirov_preset, eigenvalues_grow_toward_small_balls) {
  const BallTree tree = BallTree::build(padic_preset(2, 4, 1.0));
  const Spectrum s = compute_spectrum(tree, vladimirov_preset(tree, 1.0));
  for (auto I : tree.internal_balls()) {
    if (const auto parent = tree.ball(I).parent) EXPECT_GT(s(I), s(*parent));
  }
}

TEST(verify_spectrum, passes_and_detects_corruption) {
  const auto fx = certify::binary_fixture();
  const WaveletBasis basis = WaveletBasis::build(fx.tree);
  const Spectrum good = compute_spectrum(fx.tree, fx.kernel);
  const auto report = verify_spectrum(fx.tree, fx.kernel, basis, good);
  EXPECT_TRUE(report.passed());
  EXPECT_LE(report.max_residual, 1e-14);

  std::vector<double> shifted(good.values().begin(), good.values().end());
  for (auto I : fx.tree.internal_balls()) shifted[I.value] += 1.0;
  const auto bad = verify_spectrum(fx.tree, fx.kernel, basis, Spectrum::from_values(fx.tree, shifted));
  EXPECT_FALSE(bad.residual_ok());
  EXPECT_FALSE(bad.multiset_ok());

  const auto wrong_basis = verify_spectrum(fx.tree, fx.kernel, certify::build_basis(fx.tree, certify::Mutation::helmert_sign), good);
  EXPECT_FALSE(wrong_basis.residual_ok());
}

TEST(spectrum, multiplicities_and_rank) {
  certify::Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const BallTree tree = BallTree::build(certify::random_tree_spec(rng, {2, 60, 2, 5}));
    const SupKernel kernel = certify::random_kernel(tree, rng, 0.1, 2.0, 0.0);
    const Spectrum s = compute_spectrum(tree, kernel);
    const auto m = s.multiset();
    ASSERT_EQ(m.size(), tree.leaf_count());
    // Strictly positive kernel: the only zero eigenvalue is the constant.
    EXPECT_EQ(std::count_if(m.begin(), m.end(), [](double v) { return v == 0.0; }), 1);
    EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
    for (double v : m) EXPECT_GE(v, 0.0);
    for (auto I : tree.internal_balls()) {
      const auto copies = std::count(m.begin(), m.end(), s(I));
      EXPECT_GE(static_cast<std::size_t>(copies), tree.ball(I).children.size() - 1);
    }
  }
}

TEST(dense_operator, self_adjoint_and_positive_semidefinite) {
  certify::Rng rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const BallTree tree = BallTree::build(certify::random_tree_spec(rng, {2, 60, 2, 5}));
    const SupKernel kernel = certify::random_kernel(tree, rng);
    const DenseOperator op = dense_operator(tree, kernel);
    const auto& nu = tree.leaf_measures();
    const LeafFunction f = certify::random_leaf_function(tree.leaf_count(), rng);
    const LeafFunction g = certify::random_leaf_function(tree.leaf_count(), rng);
    const Complex lhs = inner_product(nu, op.apply(f), g);
    const Complex rhs = inner_product(nu, f, op.apply(g));
    const double scale = std::max(1.0, op.matrix.cwiseAbs().maxCoeff()) * weighted_norm(nu, f) * weighted_norm(nu, g);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
    const Complex quad = inner_product(nu, op.apply(f), f);
    EXPECT_GE(quad.real(), -1e-12 * scale);
    EXPECT_LE(std::abs(quad.imag()), 1e-12 * scale);
  }
}

TEST(spectrum, eigenrelation_holds_for_rotated_wavelets_at_a_node) {
  // Any orthonormal recombination of the wavelets at one ball is again a set of eigenvectors.
  certify::Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const BallTree tree = BallTree::build(certify::random_tree_spec(rng, {6, 80, 3, 5}));
    const SupKernel kernel = certify::random_kernel(tree, rng);
    const WaveletBasis basis = WaveletBasis::build(tree);
    std::vector<Wavelet> ws(basis.wavelets().begin(), basis.wavelets().end());

    auto it = std::find_if(ws.begin(), ws.end(), [&](const Wavelet& w) { return w.index == 2; });
    if (it == ws.end()) continue;
    const BallIndex I = it->ball;
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < ws.size(); ++k) {
      if (ws[k].ball == I) members.push_back(k);
    }
    const auto d = static_cast<Eigen::Index>(members.size());
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) a(r, c) = gauss(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    std::vector<RealLeafFunction> rotated(members.size(), RealLeafFunction::Zero(ws[0].values.size()));
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) rotated[r] += q(c, r) * ws[members[c]].values;
    for (Eigen::Index r = 0; r < d; ++r) ws[members[r]].values = rotated[r];

    const WaveletBasis rotated_basis = WaveletBasis::from_wavelets(tree, ws);
    const auto report = verify_spectrum(tree, kernel, rotated_basis, compute_spectrum(tree, kernel));
    EXPECT_TRUE(report.passed()) << report.max_residual << " " << report.max_multiset_gap;
  }
}

TEST(spectrum, fuzz_against_numeric_eigenvalues) {
  certify::Rng rng(43);
  for (int trial = 0; trial < 15; ++trial) {
    const BallTree tree = BallTree::build(certify::random_tree_spec(rng, {2, 100, 2, 5}));
    const SupKernel kernel = certify::random_kernel(tree, rng);
    const auto analytic = compute_spectrum(tree, kernel).multiset();
    const auto numeric = oracle_spectrum(tree, kernel);
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      EXPECT_NEAR(analytic[i], numeric[i], 1e-8 * std::max(1.0, std::abs(analytic[i])));
    }
  }
}

TEST(sup_kernel, rejects_bad_values) {
  const BallTree tree = BallTree::build(padic_preset(2, 2, 1.0));
  EXPECT_THROW(SupKernel::constant(tree, -1.0), PreconditionError);
  EXPECT_THROW(SupKernel::constant(tree, std::nan("")), PreconditionError);
  EXPECT_THROW(SupKernel::from_map(tree, {{"root", 1.0}}), Error);
  EXPECT_THROW(SupKernel::from_map(tree, {{"root", 1.0}, {"root.0", 1.0}, {"root.1", 1.0}, {"root.0.0", 1.0}}), Error);
  EXPECT_NO_THROW(SupKernel::from_map(tree, {{"root", 1.0}, {"root.0", 1.0}, {"root.1", 1.0}}));
}

TEST(parse_kernel, documents) {
  const BallTree tree = BallTree::build(padic_preset(2, 2, 1.0));
  const SupKernel k = parse_kernel(tree, nlohmann::json::parse(R"({"preset": "vladimirov", "alpha": 1})"));
  EXPECT_DOUBLE_EQ(k(tree.index_of("root.1")), 4.0);
  EXPECT_THROW(parse_kernel(tree, nlohmann::json::parse(R"({"preset": "gauss", "alpha": 1})")), Error);
  EXPECT_THROW(parse_kernel(tree, nlohmann::json::parse(R"({"root": "one", "root.0": 1, "root.1": 1})")), Error);
  EXPECT_THROW(parse_kernel(tree, nlohmann::json::parse("[1, 2, 3]")), Error);
}
