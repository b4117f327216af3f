#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/evolution.hpp"
#include "ultrametric/pdo.hpp"
#include "ultrametric/tree_spec.hpp"
#include "ultrametric/wavelet.hpp"

namespace ultrametric::certify {

using Rng = std::mt19937_64;

struct TreeShape {
  std::size_t min_leaves = 2;
  std::size_t max_leaves = 200;
  std::size_t min_children = 2;
  std::size_t max_children = 5;
};

/// Random tree grown by splitting uniformly chosen leaves. Diameters shrink by
/// a random factor in [0.3, 0.9] per edge; leaf measures are random and
/// rescaled to a total in [0.5, 5]. Internal measures are left to the builder.
TreeSpec random_tree_spec(Rng& rng, const TreeShape& shape = {});

/// T(I) uniform in [low, high]; with probability `zero_probability` T(I) = 0.
SupKernel random_kernel(const BallTree& tree, Rng& rng, double low = 0.0, double high = 2.0,
                        double zero_probability = 0.1);

/// Independent standard complex Gaussian values.
LeafFunction random_leaf_function(std::size_t leaves, Rng& rng);

/// Random state supported in `ball` with zero mean, centered directly with the
/// measure weights (no wavelets involved).
LeafFunction random_mean_zero_in_ball(const BallTree& tree, BallIndex ball, Rng& rng);

/// A uniformly chosen internal ball other than the root, or the root when the
/// tree has no other internal ball.
BallIndex random_proper_internal_ball(const BallTree& tree, Rng& rng);

/// Deliberate defects used to check that the suites can fail.
enum class Mutation {
  none,
  helmert_sign,     // the negative Helmert value gets a positive sign
  spectrum_offset,  // every analytic eigenvalue is shifted by +1
};
std::optional<Mutation> parse_mutation(std::string_view name);
std::string_view to_string(Mutation m);

WaveletBasis build_basis(const BallTree& tree, Mutation mutation);
Spectrum build_spectrum(const BallTree& tree, const SupKernel& kernel, Mutation mutation);

struct Instance {
  BallTree tree;
  SupKernel kernel;
};

/// `count` instances drawn from `rng` with the given shape and random kernels.
std::vector<Instance> make_corpus(Rng& rng, std::size_t count, const TreeShape& shape = {});

/// Depth-2 uniform binary tree (leaf measure 1/4) with T(root) = 1 and T = 2 on
/// both level-1 balls. Ids: root, B1, B2, and leaves B1a, B1b, B2a, B2b.
Instance binary_fixture();

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::size_t checks = 0;
  double worst = 0.0;       // worst observed metric, in units of the tolerance's scale
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct CertifyOptions {
  std::uint64_t seed = 42;
  std::size_t instances = 100;
  Mutation mutation = Mutation::none;
  std::size_t equivalence_instances = 20;  // capped at `instances`
  std::size_t spacetime_pairs = 20;        // capped at `instances`
  std::vector<Instance> extra;             // user-supplied instances, checked first
};

struct CertifyReport {
  std::vector<SuiteResult> suites;
  std::size_t instances = 0;
  std::string note;

  bool passed() const;
};

// Individual suites. Each returns one aggregated result.
SuiteResult orthonormality_suite(const std::vector<Instance>& corpus, Mutation mutation = Mutation::none);
SuiteResult eigenrelation_suite(const std::vector<Instance>& corpus, Mutation mutation = Mutation::none);
SuiteResult eigenvalue_multiset_suite(const std::vector<Instance>& corpus, Mutation mutation = Mutation::none);
SuiteResult localization_suite(const std::vector<Instance>& corpus, Rng& rng);
SuiteResult localization_negative_control(Rng& rng);
SuiteResult unitarity_suite(const std::vector<Instance>& corpus, Rng& rng);
SuiteResult heat_suite(const std::vector<Instance>& corpus, Rng& rng);
SuiteResult propagator_equivalence_suite(Rng& rng, std::size_t count);
SuiteResult spacetime_suite(Rng& rng, std::size_t pairs);

CertifyReport run_certification(const CertifyOptions& options);

}  // namespace ultrametric::certify
