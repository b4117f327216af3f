#include "ultrametric/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace ultrametric::certify {

namespace {

constexpr double kBasisTolerance = 1e-10;
constexpr double kEvolutionTolerance = 1e-10;
constexpr double kEquivalenceTolerance = 1e-8;
constexpr double kLeakageThreshold = 1e-3;
// Slack for the monotone heat decay, relative to the initial norm.
constexpr double kMonotoneSlack = 1e-14;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<double> random_times(Rng& rng, std::size_t count, double high = 10.0) {
  std::uniform_real_distribution<double> dist(0.0, high);
  std::vector<double> t(count);
  for (auto& v : t) v = dist(rng);
  return t;
}

std::size_t uniform_index(Rng& rng, std::size_t size) {
  return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
}

void record(SuiteResult& r, double metric, bool ok, const std::string& failure) {
  ++r.checks;
  r.worst = std::max(r.worst, metric);
  if (!ok && r.passed) {
    r.passed = false;
    r.detail = failure;
  }
}

void finish(SuiteResult& r, const Timer& timer) {
  r.seconds = timer.seconds();
  if (r.passed && r.detail.empty()) {
    r.detail = fmt::format("{} checks, worst {:.3e} (tolerance {:.1e})", r.checks, r.worst, r.tolerance);
  }
}

}  // namespace

TreeSpec random_tree_spec(Rng& rng, const TreeShape& shape) {
  if (shape.min_leaves < 2 || shape.max_leaves < shape.min_leaves || shape.min_children < 2 ||
      shape.max_children < shape.min_children) {
    throw PreconditionError("random tree: invalid shape");
  }
  const std::size_t target =
      std::uniform_int_distribution<std::size_t>(shape.min_leaves, shape.max_leaves)(rng);

  struct Node {
    std::optional<std::size_t> parent;
    double diameter;
  };
  std::vector<Node> nodes{{std::nullopt, 1.0}};
  std::vector<std::size_t> leaves{0};
  std::uniform_real_distribution<double> shrink(0.3, 0.9);
  while (leaves.size() < target) {
    const std::size_t slot = uniform_index(rng, leaves.size());
    const std::size_t parent = leaves[slot];
    const std::size_t room = target - leaves.size() + 1;
    const std::size_t k = std::uniform_int_distribution<std::size_t>(
        std::min(shape.min_children, room), std::min(shape.max_children, room))(rng);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(slot));
    for (std::size_t c = 0; c < k; ++c) {
      nodes.push_back({parent, nodes[parent].diameter * shrink(rng)});
      leaves.push_back(nodes.size() - 1);
    }
  }

  std::uniform_real_distribution<double> raw(0.05, 1.0);
  std::vector<double> weight(nodes.size(), 0.0);
  double sum = 0.0;
  for (auto v : leaves) sum += (weight[v] = raw(rng));
  const double total = std::uniform_real_distribution<double>(0.5, 5.0)(rng);

  TreeSpec spec;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    BallSpec b{fmt::format("n{}", i), std::nullopt, nodes[i].diameter, std::nullopt};
    if (nodes[i].parent) b.parent = fmt::format("n{}", *nodes[i].parent);
    spec.balls.push_back(std::move(b));
  }
  for (auto v : leaves) spec.leaf_measures[fmt::format("n{}", v)] = weight[v] * total / sum;
  return spec;
}

SupKernel random_kernel(const BallTree& tree, Rng& rng, double low, double high, double zero_probability) {
  std::uniform_real_distribution<double> value(low, high);
  std::bernoulli_distribution zero(zero_probability);
  std::vector<double> v(tree.ball_count(), 0.0);
  for (BallIndex I : tree.internal_balls()) {
    const bool is_zero = zero(rng);
    const double t = value(rng);
    v[I.value] = is_zero ? 0.0 : t;
  }
  return SupKernel::from_values(tree, std::move(v));
}

LeafFunction random_leaf_function(std::size_t leaves, Rng& rng) {
  std::normal_distribution<double> normal;
  LeafFunction f(static_cast<Eigen::Index>(leaves));
  for (auto& v : f) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = Complex(re, im);
  }
  return f;
}

LeafFunction random_mean_zero_in_ball(const BallTree& tree, BallIndex ball, Rng& rng) {
  const Ball& b = tree.ball(ball);
  LeafFunction f = LeafFunction::Zero(static_cast<Eigen::Index>(tree.leaf_count()));
  const auto begin = static_cast<Eigen::Index>(b.leaf_begin);
  const auto len = static_cast<Eigen::Index>(b.leaf_count());
  f.segment(begin, len) = random_leaf_function(b.leaf_count(), rng);
  const Eigen::VectorXd nu = tree.leaf_measures().segment(begin, len);
  Complex weighted{};
  for (Eigen::Index k = 0; k < len; ++k) weighted += f[begin + k] * nu[k];
  const Complex average = weighted / nu.sum();
  f.segment(begin, len).array() -= average;
  return f;
}

BallIndex random_proper_internal_ball(const BallTree& tree, Rng& rng) {
  const auto internal = tree.internal_balls();
  if (internal.size() < 2) return tree.root();
  // internal[0] is the root.
  return internal[1 + uniform_index(rng, internal.size() - 1)];
}

std::optional<Mutation> parse_mutation(std::string_view name) {
  if (name == "none") return Mutation::none;
  if (name == "helmert-sign") return Mutation::helmert_sign;
  if (name == "spectrum-offset") return Mutation::spectrum_offset;
  return std::nullopt;
}

std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::none:
      return "none";
    case Mutation::helmert_sign:
      return "helmert-sign";
    case Mutation::spectrum_offset:
      return "spectrum-offset";
  }
  return "unknown";
}

WaveletBasis build_basis(const BallTree& tree, Mutation mutation) {
  WaveletBasis basis = WaveletBasis::build(tree);
  if (mutation != Mutation::helmert_sign) return basis;
  std::vector<Wavelet> flipped(basis.wavelets().begin(), basis.wavelets().end());
  for (auto& w : flipped) w.values = w.values.cwiseAbs();
  return WaveletBasis::from_wavelets(tree, std::move(flipped));
}

Spectrum build_spectrum(const BallTree& tree, const SupKernel& kernel, Mutation mutation) {
  Spectrum s = compute_spectrum(tree, kernel);
  if (mutation != Mutation::spectrum_offset) return s;
  std::vector<double> values(s.values().begin(), s.values().end());
  for (BallIndex I : tree.internal_balls()) values[I.value] += 1.0;
  return Spectrum::from_values(tree, std::move(values));
}

std::vector<Instance> make_corpus(Rng& rng, std::size_t count, const TreeShape& shape) {
  std::vector<Instance> corpus;
  corpus.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    BallTree tree = BallTree::build(random_tree_spec(rng, shape));
    SupKernel kernel = random_kernel(tree, rng);
    corpus.push_back({std::move(tree), std::move(kernel)});
  }
  return corpus;
}

Instance binary_fixture() {
  TreeSpec spec;
  spec.balls = {{"root", std::nullopt, 1.0, std::nullopt}, {"B1", "root", 0.5, std::nullopt},
                {"B1a", "B1", 0.25, 0.25},                  {"B1b", "B1", 0.25, 0.25},
                {"B2", "root", 0.5, std::nullopt},          {"B2a", "B2", 0.25, 0.25},
                {"B2b", "B2", 0.25, 0.25}};
  BallTree tree = BallTree::build(spec);
  SupKernel kernel = SupKernel::from_map(tree, {{"root", 1.0}, {"B1", 2.0}, {"B2", 2.0}});
  return {std::move(tree), std::move(kernel)};
}

SuiteResult orthonormality_suite(const std::vector<Instance>& corpus, Mutation mutation) {
  Timer timer;
  SuiteResult r{"orthonormality", true, 0, 0.0, kBasisTolerance, {}, 0.0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const BallTree& tree = corpus[i].tree;
    const WaveletBasis basis = build_basis(tree, mutation);
    const bool counted = basis.wavelets().size() + 1 == tree.leaf_count() && basis.size() == tree.leaf_count();
    record(r, 0.0, counted, fmt::format("instance {}: count identity fails", i));

    const Eigen::MatrixXd b = basis.matrix();
    const Eigen::MatrixXd gram = b.transpose() * tree.leaf_measures().asDiagonal() * b;
    const auto size = gram.rows();
    const double err = (gram - Eigen::MatrixXd::Identity(size, size)).cwiseAbs().maxCoeff();
    record(r, err, err <= kBasisTolerance,
           fmt::format("instance {} ({} leaves): Gram matrix deviates from identity by {:.3e}", i,
                       tree.leaf_count(), err));
  }
  finish(r, timer);
  return r;
}

SuiteResult eigenrelation_suite(const std::vector<Instance>& corpus, Mutation mutation) {
  Timer timer;
  SuiteResult r{"eigenrelation", true, 0, 0.0, kEigenrelationTolerance, {}, 0.0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& [tree, kernel] = corpus[i];
    const SpectrumReport rep =
        verify_spectrum(tree, kernel, build_basis(tree, mutation), build_spectrum(tree, kernel, mutation));
    record(r, rep.max_residual, rep.residual_ok(),
           fmt::format("instance {}: eigenrelation residual {:.3e} at basis element {}", i, rep.max_residual,
                       rep.worst_element));
  }
  finish(r, timer);
  return r;
}

SuiteResult eigenvalue_multiset_suite(const std::vector<Instance>& corpus, Mutation mutation) {
  Timer timer;
  SuiteResult r{"eigenvalue-multiset", true, 0, 0.0, kMultisetTolerance, {}, 0.0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& [tree, kernel] = corpus[i];
    const SpectrumReport rep =
        verify_spectrum(tree, kernel, build_basis(tree, mutation), build_spectrum(tree, kernel, mutation));
    record(r, rep.max_multiset_gap, rep.multiset_ok(),
           fmt::format("instance {}: eigenvalue multiset differs by {:.3e}", i, rep.max_multiset_gap));
  }
  finish(r, timer);
  return r;
}

SuiteResult localization_suite(const std::vector<Instance>& corpus, Rng& rng) {
  Timer timer;
  SuiteResult r{"localization", true, 0, 0.0, kEvolutionTolerance, {}, 0.0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SpectralModel model(corpus[i].tree, corpus[i].kernel);
    const BallIndex B = random_proper_internal_ball(model.tree(), rng);
    const LeafFunction f = random_mean_zero_in_ball(model.tree(), B, rng);
    const EvolutionConfig config{1.0, random_times(rng, 5)};
    const LocalizationReport rep = check_localization(f, model, config, kEvolutionTolerance);

    double metric = rep.max_outside_coefficient / rep.initial_norm;
    for (const auto& s : rep.samples) {
      metric = std::max({metric, s.outside_mass / rep.initial_norm, s.mean_abs / rep.mean_scale});
    }
    const bool same_ball = rep.support && *rep.support == B;
    record(r, metric, rep.passed() && same_ball,
           fmt::format("instance {}: ball '{}': {} (metric {:.3e})", i, model.tree().ball(B).id, rep.note,
                       metric));
  }
  finish(r, timer);
  return r;
}

SuiteResult localization_negative_control(Rng& rng) {
  Timer timer;
  SuiteResult r{"localization-negative-control", true, 0, 0.0, kLeakageThreshold, {}, 0.0};
  std::vector<Instance> fixtures;
  fixtures.push_back(binary_fixture());
  {
    BallTree tree = BallTree::build(padic_preset(3, 2, 1.0));
    SupKernel kernel = vladimirov_preset(tree, 1.0);
    fixtures.push_back({std::move(tree), std::move(kernel)});
  }
  bool any_leak = false;
  bool all_flagged = true;
  for (const auto& fx : fixtures) {
    const SpectralModel model(fx.tree, fx.kernel);
    LeafFunction f = LeafFunction::Zero(static_cast<Eigen::Index>(model.tree().leaf_count()));
    f[0] = 1.0;
    const EvolutionConfig config{1.0, random_times(rng, 5)};
    const LocalizationReport rep = check_localization(f, model, config, kEvolutionTolerance);
    ++r.checks;
    all_flagged = all_flagged && !rep.precondition_met;
    for (double leak : rep.dense_leakage) {
      r.worst = std::max(r.worst, leak);
      any_leak = any_leak || leak > kLeakageThreshold;
    }
  }
  r.passed = all_flagged && any_leak;
  r.seconds = timer.seconds();
  r.detail = fmt::format("leaf indicators {} flagged as non-mean-zero; max dense leakage {:.3e} (threshold {:.0e})",
                         all_flagged ? "all" : "NOT all", r.worst, kLeakageThreshold);
  return r;
}

SuiteResult unitarity_suite(const std::vector<Instance>& corpus, Rng& rng) {
  Timer timer;
  SuiteResult r{"schrodinger-unitarity", true, 0, 0.0, kEvolutionTolerance, {}, 0.0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SpectralModel model(corpus[i].tree, corpus[i].kernel);
    const Eigen::VectorXd& nu = model.tree().leaf_measures();
    const LeafFunction f = random_leaf_function(model.tree().leaf_count(), rng);
    const double norm0 = weighted_norm(nu, f);
    const WavePacket packet = WavePacket::from_function(model, f);
    const auto evolved = evolve_schrodinger(packet, {1.0, random_times(rng, 5)});
    for (const auto& p : evolved) {
      const double drift = std::abs(weighted_norm(nu, p.synthesize()) - norm0) / norm0;
      record(r, drift, drift <= kEvolutionTolerance,
             fmt::format("instance {}: norm drift {:.3e}", i, drift));
    }
    const auto t = random_times(rng, 2, 5.0);
    const auto first = evolve_schrodinger(packet, {1.0, {t[0]}}).front();
    const auto chained = evolve_schrodinger(first, {1.0, {t[1]}}).front();
    const auto direct = evolve_schrodinger(packet, {1.0, {t[0] + t[1]}}).front();
    const double gap = (chained.coefficients() - direct.coefficients()).norm() / packet.norm();
    record(r, gap, gap <= kEvolutionTolerance, fmt::format("instance {}: group law gap {:.3e}", i, gap));
  }
  finish(r, timer);
  return r;
}

SuiteResult heat_suite(const std::vector<Instance>& corpus, Rng& rng) {
  Timer timer;
  SuiteResult r{"heat-semigroup", true, 0, 0.0, kEvolutionTolerance, {}, 0.0};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SpectralModel model(corpus[i].tree, corpus[i].kernel);
    const BallTree& tree = model.tree();
    const Eigen::VectorXd& nu = tree.leaf_measures();
    const LeafFunction f = random_leaf_function(tree.leaf_count(), rng);
    const double norm0 = weighted_norm(nu, f);
    const double scale = norm0 * std::sqrt(tree.total_measure());
    const Complex mean0 = mean(tree, f);
    const WavePacket packet = WavePacket::from_function(model, f);

    auto times = random_times(rng, 5);
    times.push_back(0.0);
    std::sort(times.begin(), times.end());
    const auto evolved = evolve_heat(packet, times);
    double previous = norm0;
    for (const auto& p : evolved) {
      const LeafFunction psi = p.synthesize();
      const double norm = weighted_norm(nu, psi);
      const double rise = std::max(0.0, norm - previous) / norm0;
      record(r, rise, rise <= kMonotoneSlack, fmt::format("instance {}: heat norm increased by {:.3e}", i, rise));
      previous = norm;
      const double mean_drift = std::abs(mean(tree, psi) - mean0) / scale;
      record(r, mean_drift, mean_drift <= kEvolutionTolerance,
             fmt::format("instance {}: heat mean drift {:.3e}", i, mean_drift));
    }
    const auto t = random_times(rng, 2, 5.0);
    const std::vector<double> t0{t[0]}, t1{t[1]}, sum{t[0] + t[1]};
    const auto chained = evolve_heat(evolve_heat(packet, t0).front(), t1).front();
    const auto direct = evolve_heat(packet, sum).front();
    const double gap = (chained.coefficients() - direct.coefficients()).norm() / packet.norm();
    record(r, gap, gap <= kEvolutionTolerance, fmt::format("instance {}: heat group law gap {:.3e}", i, gap));
  }
  finish(r, timer);
  return r;
}

SuiteResult propagator_equivalence_suite(Rng& rng, std::size_t count) {
  Timer timer;
  SuiteResult r{"propagator-equivalence", true, 0, 0.0, kEquivalenceTolerance, {}, 0.0};
  const auto corpus = make_corpus(rng, count, TreeShape{2, 64, 2, 5});
  std::uniform_real_distribution<double> hbar_dist(0.5, 1.5);
  std::uniform_real_distribution<double> shift_dist(-3.0, 3.0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SpectralModel model(corpus[i].tree, corpus[i].kernel);
    const BallTree& tree = model.tree();
    const Eigen::VectorXd& nu = tree.leaf_measures();
    const LeafFunction f = random_leaf_function(tree.leaf_count(), rng);
    const double norm0 = weighted_norm(nu, f);
    const EvolutionConfig config{hbar_dist(rng), random_times(rng, 5)};
    const double shift = shift_dist(rng);

    const auto spectral = evolve_schrodinger(WavePacket::from_function(model, f), config);
    const auto dense = DensePropagator::free_particle(tree, model.kernel());
    const LeafFunction zero = LeafFunction::Zero(f.size());
    const LeafFunction constant = LeafFunction::Constant(f.size(), Complex(shift, 0.0));
    const auto with_zero = evolve_with_potential(f, zero, tree, model.kernel(), config);
    const auto with_constant = evolve_with_potential(f, constant, tree, model.kernel(), config);

    for (std::size_t k = 0; k < config.times.size(); ++k) {
      const double t = config.times[k];
      const LeafFunction psi = spectral[k].synthesize();
      const double gap_dense = weighted_norm(nu, psi - dense.schrodinger(f, t, config.hbar)) / norm0;
      record(r, gap_dense, gap_dense <= kEquivalenceTolerance,
             fmt::format("instance {}: spectral vs dense gap {:.3e} at t={}", i, gap_dense, t));
      const double gap_zero = weighted_norm(nu, psi - with_zero[k]) / norm0;
      record(r, gap_zero, gap_zero <= kEquivalenceTolerance,
             fmt::format("instance {}: U=0 reduction gap {:.3e} at t={}", i, gap_zero, t));
      const Complex phase = std::exp(Complex(0.0, -shift * t / config.hbar));
      const double gap_phase = weighted_norm(nu, phase * psi - with_constant[k]) / norm0;
      record(r, gap_phase, gap_phase <= kEquivalenceTolerance,
             fmt::format("instance {}: constant-potential phase gap {:.3e} at t={}", i, gap_phase, t));
      const double drift = std::abs(weighted_norm(nu, with_constant[k]) - norm0) / norm0;
      record(r, drift, drift <= kEquivalenceTolerance,
             fmt::format("instance {}: potential evolution norm drift {:.3e}", i, drift));
    }
  }
  finish(r, timer);
  return r;
}

SuiteResult spacetime_suite(Rng& rng, std::size_t pairs) {
  Timer timer;
  SuiteResult r{"spacetime-product", true, 0, 0.0, kEvolutionTolerance, {}, 0.0};
  const TreeShape shape{2, 48, 2, 5};
  auto pick = [&](const SpectralModel& m) {
    const auto internal = m.tree().internal_balls();
    const BallIndex I = internal[uniform_index(rng, internal.size())];
    const auto p = m.tree().ball(I).children.size();
    const int j = static_cast<int>(1 + uniform_index(rng, p - 1));
    return std::pair{I, j};
  };
  for (std::size_t i = 0; i < pairs; ++i) {
    BallTree tx = BallTree::build(random_tree_spec(rng, shape));
    BallTree ty = BallTree::build(random_tree_spec(rng, shape));
    SupKernel kx = random_kernel(tx, rng, 0.1, 2.0, 0.0);
    SupKernel ky = random_kernel(ty, rng, 0.1, 2.0, 0.0);
    const SpectralModel space(std::move(tx), std::move(kx));
    const SpectralModel time(std::move(ty), std::move(ky));
    const auto [I, j] = pick(space);
    const auto [J, jt] = pick(time);
    const SpacetimeReport rep = spacetime_product_check(space, I, j, time, J, jt);
    const double rel = rep.residual / rep.norm;
    record(r, rel, rep.passed(), fmt::format("pair {}: residual {:.3e}", i, rel));

    const SpectralModel frozen(time.tree(), SupKernel::constant(time.tree(), 0.0));
    bool rejected = false;
    try {
      spacetime_product_check(space, I, j, frozen, J, jt);
    } catch (const PreconditionError&) {
      rejected = true;
    }
    record(r, 0.0, rejected, fmt::format("pair {}: zero time eigenvalue was not rejected", i));
  }
  finish(r, timer);
  return r;
}

bool CertifyReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

CertifyReport run_certification(const CertifyOptions& options) {
  CertifyReport report;
  report.instances = options.instances + options.extra.size();
  if (report.instances == 0) {
    report.note = "no instances";
    return report;
  }

  Rng rng(options.seed);
  std::vector<Instance> corpus = options.extra;
  auto generated = make_corpus(rng, options.instances);
  corpus.insert(corpus.end(), std::make_move_iterator(generated.begin()),
                std::make_move_iterator(generated.end()));

  report.suites.push_back(orthonormality_suite(corpus, options.mutation));
  report.suites.push_back(eigenrelation_suite(corpus, options.mutation));
  report.suites.push_back(eigenvalue_multiset_suite(corpus, options.mutation));
  report.suites.push_back(localization_suite(corpus, rng));
  report.suites.push_back(localization_negative_control(rng));
  report.suites.push_back(unitarity_suite(corpus, rng));
  report.suites.push_back(heat_suite(corpus, rng));
  const std::size_t cap = std::max<std::size_t>(options.instances, 1);
  report.suites.push_back(propagator_equivalence_suite(rng, std::min(options.equivalence_instances, cap)));
  report.suites.push_back(spacetime_suite(rng, std::min(options.spacetime_pairs, cap)));
  if (options.mutation != Mutation::none) {
    report.note = fmt::format("mutation '{}' injected", to_string(options.mutation));
  }
  return report;
}

}  // namespace ultrametric::certify
