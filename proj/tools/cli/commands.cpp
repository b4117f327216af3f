#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI/CLI.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/certify.hpp"
#include "ultrametric/evolution.hpp"
#include "ultrametric/io.hpp"
#include "ultrametric/pdo.hpp"
#include "ultrametric/tree_spec.hpp"
#include "ultrametric/wavelet.hpp"

namespace ultrametric::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const TreeValidationError& e) {
    for (const auto& d : e.diagnostics()) err << "invalid tree: " << d << '\n';
    return kCheckFailed;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

SupKernel resolve_kernel(const BallTree& tree, const KernelSource& src) {
  if (src.file) return load_kernel(tree, *src.file);
  if (src.alpha) return vladimirov_preset(tree, *src.alpha);
  throw UsageError("a kernel is required: pass --kernel FILE or --alpha VALUE");
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw Error(fmt::format("cannot write '{}'", (dir / name).string()));
  f.exceptions(std::ios::badbit);
  return f;
}

template <typename Reader>
auto read_file(const fs::path& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  return reader(in);
}

// Compares computed spectrum rows with an expected spectrum CSV.
std::vector<std::string> compare_spectrum(const BallTree& tree, const Spectrum& spectrum,
                                          const std::vector<io::SpectrumRow>& expected) {
  std::vector<std::string> problems;
  const auto internal = tree.internal_balls();
  if (expected.size() != internal.size()) {
    problems.push_back(fmt::format("expected {} rows, computed {}", expected.size(), internal.size()));
  }
  const std::size_t n = std::min(expected.size(), internal.size());
  for (std::size_t k = 0; k < n; ++k) {
    const Ball& b = tree.ball(internal[k]);
    const auto& row = expected[k];
    const double lambda = spectrum(internal[k]);
    if (row.ball_id != b.id) {
      problems.push_back(fmt::format("row {}: expected ball '{}', computed '{}'", k + 1, row.ball_id, b.id));
      continue;
    }
    if (row.children != b.children.size()) {
      problems.push_back(fmt::format("ball '{}': expected p_I {}, computed {}", b.id, row.children,
                                     b.children.size()));
    }
    if (std::abs(row.lambda - lambda) > 1e-12 * std::max(1.0, std::abs(lambda))) {
      problems.push_back(fmt::format("ball '{}': expected lambda {}, computed {}", b.id,
                                     io::format_number(row.lambda), io::format_number(lambda)));
    }
  }
  return problems;
}

nlohmann::json to_json(const SpectrumReport& rep) {
  return {{"max_residual", rep.max_residual},
          {"residual_tolerance", rep.residual_tolerance},
          {"max_multiset_gap", rep.max_multiset_gap},
          {"multiset_tolerance", rep.multiset_tolerance},
          {"operator_norm", rep.operator_norm},
          {"analytic_eigenvalues", rep.analytic},
          {"numeric_eigenvalues", rep.numeric},
          {"passed", rep.passed()}};
}

nlohmann::json to_json(const certify::CertifyReport& rep) {
  nlohmann::json suites = nlohmann::json::array();
  for (const auto& s : rep.suites) {
    suites.push_back({{"name", s.name},
                      {"passed", s.passed},
                      {"checks", s.checks},
                      {"worst", s.worst},
                      {"tolerance", s.tolerance},
                      {"detail", s.detail},
                      {"seconds", s.seconds}});
  }
  return {{"instances", rep.instances}, {"note", rep.note}, {"passed", rep.passed()}, {"suites", suites}};
}

}  // namespace

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TreeSpec spec = load_tree_spec(args.tree);
    const auto diagnostics = BallTree::validate(spec);
    if (!diagnostics.empty()) {
      for (const auto& d : diagnostics) err << "invalid tree: " << d << '\n';
      return static_cast<int>(kCheckFailed);
    }
    const BallTree tree = BallTree::build(spec);
    fmt::print(out, "valid: {} balls, {} leaves, depth {}, total measure {}\n", tree.ball_count(),
               tree.leaf_count(), tree.depth(), io::format_number(tree.total_measure()));
    return static_cast<int>(kSuccess);
  });
}

int cmd_spectrum(const SpectrumArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const BallTree tree = BallTree::build(load_tree_spec(args.tree));
    const SupKernel kernel = resolve_kernel(tree, args.kernel);
    const WaveletBasis basis = WaveletBasis::build(tree);
    const Spectrum spectrum = compute_spectrum(tree, kernel);
    const SpectrumReport report = verify_spectrum(tree, kernel, basis, spectrum);

    nlohmann::json doc = to_json(report);
    bool ok = report.passed();
    if (args.expected) {
      const auto rows = read_file(*args.expected, [](std::istream& in) { return io::read_spectrum_csv(in); });
      const auto problems = compare_spectrum(tree, spectrum, rows);
      for (const auto& p : problems) err << "mismatch: " << p << '\n';
      doc["expected_match"] = problems.empty();
      ok = ok && problems.empty();
    }

    if (args.out) {
      auto csv = open_output(*args.out, "spectrum.csv");
      io::write_spectrum_csv(csv, tree, spectrum);
      auto json = open_output(*args.out, "report.json");
      json << doc.dump(2) << '\n';
    } else {
      io::write_spectrum_csv(out, tree, spectrum);
    }
    fmt::print(err, "eigenrelation residual {:.3e} (tolerance {:.0e}): {}\n", report.max_residual,
               report.residual_tolerance, report.residual_ok() ? "ok" : "FAIL");
    fmt::print(err, "eigenvalue multiset gap {:.3e} (tolerance {:.0e}): {}\n", report.max_multiset_gap,
               report.multiset_tolerance, report.multiset_ok() ? "ok" : "FAIL");
    return static_cast<int>(ok ? kSuccess : kCheckFailed);
  });
}

int cmd_evolve(const EvolveArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (args.mode != "schrodinger" && args.mode != "heat" && args.mode != "potential") {
      throw UsageError(fmt::format("unknown mode '{}' (schrodinger, heat, potential)", args.mode));
    }
    if (args.mode == "potential" && !args.potential) {
      throw UsageError("mode 'potential' needs --potential FILE");
    }
    if (!(args.tol >= 0.0)) throw UsageError("--tol must be nonnegative");

    const BallTree tree = BallTree::build(load_tree_spec(args.tree));
    const SpectralModel spectral(tree, resolve_kernel(tree, args.kernel));
    const LeafFunction initial =
        read_file(args.initial, [&](std::istream& in) { return io::read_leaf_values_csv(in, tree); });
    const EvolutionConfig config{args.hbar, args.times};
    config.validate();

    std::vector<LeafFunction> states;
    if (args.mode == "schrodinger") {
      for (const auto& p : evolve_schrodinger(WavePacket::from_function(spectral, initial), config)) {
        states.push_back(p.synthesize());
      }
    } else if (args.mode == "heat") {
      for (const auto& p : evolve_heat(WavePacket::from_function(spectral, initial), config.times)) {
        states.push_back(p.synthesize());
      }
    } else {
      const RealLeafFunction u =
          read_file(*args.potential, [&](std::istream& in) { return io::read_potential_csv(in, tree); });
      states = evolve_with_potential(initial, u.cast<Complex>(), tree, spectral.kernel(), config);
    }

    const double peak0 = initial.size() ? initial.cwiseAbs().maxCoeff() : 0.0;
    const auto support0 = ball_support(tree, initial, args.tol * peak0);

    auto trajectory = open_output(args.out, "trajectory.csv");
    io::write_trajectory_header(trajectory);
    std::vector<io::SummaryRow> summary;
    double max_outside = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      const LeafFunction& psi = states[k];
      io::write_trajectory_rows(trajectory, tree, config.times[k], psi);
      const double peak = psi.size() ? psi.cwiseAbs().maxCoeff() : 0.0;
      const auto support = ball_support(tree, psi, args.tol * peak);
      const double outside = support0 ? outside_norm(tree, psi, *support0) : 0.0;
      max_outside = std::max(max_outside, outside);
      summary.push_back({config.times[k], weighted_norm(tree.leaf_measures(), psi), mean(tree, psi), outside,
                         support ? tree.ball(*support).id : std::string{}});
    }
    auto summary_file = open_output(args.out, "summary.csv");
    io::write_summary_csv(summary_file, summary);

    fmt::print(out, "mode {}: {} time samples on {} leaves; initial support '{}'; max outside mass {:.3e}\n",
               args.mode, states.size(), tree.leaf_count(), support0 ? tree.ball(*support0).id : "",
               max_outside);
    return kSuccess;
  });
}

int cmd_certify(const CertifyArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto mutation = certify::parse_mutation(args.mutate);
    if (!mutation) throw UsageError(fmt::format("unknown mutation '{}'", args.mutate));

    certify::CertifyOptions options;
    options.seed = args.seed;
    options.instances = args.instances;
    options.mutation = *mutation;
    if (args.tree) {
      BallTree tree = BallTree::build(load_tree_spec(*args.tree));
      SupKernel kernel = resolve_kernel(tree, args.kernel);
      options.extra.push_back({std::move(tree), std::move(kernel)});
    }

    const certify::CertifyReport report = certify::run_certification(options);
    if (!report.note.empty()) fmt::print(out, "note: {}\n", report.note);
    for (const auto& s : report.suites) {
      fmt::print(out, "[{}] {}: {} ({:.2f} s)\n", s.passed ? "PASS" : "FAIL", s.name, s.detail, s.seconds);
    }
    fmt::print(out, "certify: {} ({} instances, seed {})\n", report.passed() ? "PASS" : "FAIL",
               report.instances, args.seed);
    if (args.out) {
      auto json = open_output(*args.out, "certify.json");
      json << to_json(report).dump(2) << '\n';
    }
    return report.passed() ? kSuccess : kCheckFailed;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultrametric wavelets, sup-type operators and wave packet evolution"};
  app.require_subcommand(1);

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check a tree spec against the ball-tree invariants");
  validate_cmd->add_option("--tree", validate.tree, "Tree spec JSON")->required();

  auto add_kernel = [](CLI::App* cmd, KernelSource& k) {
    cmd->add_option("--kernel", k.file, "Kernel JSON (ball id -> T, or a vladimirov preset)");
    cmd->add_option("--alpha", k.alpha, "Use the vladimirov preset T(I) = diam(I)^(-alpha-1)");
  };

  SpectrumArgs spectrum;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Compute and verify the wavelet spectrum");
  spectrum_cmd->add_option("--tree", spectrum.tree, "Tree spec JSON")->required();
  add_kernel(spectrum_cmd, spectrum.kernel);
  spectrum_cmd->add_option("--out", spectrum.out, "Directory for spectrum.csv and report.json");
  spectrum_cmd->add_option("--expected", spectrum.expected, "Spectrum CSV the result must match");

  EvolveArgs evolve;
  auto* evolve_cmd = app.add_subcommand("evolve", "Evolve an initial state and export the trajectory");
  evolve_cmd->add_option("--tree", evolve.tree, "Tree spec JSON")->required();
  add_kernel(evolve_cmd, evolve.kernel);
  evolve_cmd->add_option("--initial", evolve.initial, "Initial state CSV (leaf_id,re,im)")->required();
  evolve_cmd->add_option("--mode", evolve.mode, "schrodinger | heat | potential")->capture_default_str();
  evolve_cmd->add_option("--times", evolve.times, "Comma-separated sample times")->delimiter(',');
  evolve_cmd->add_option("--hbar", evolve.hbar, "Planck constant")->capture_default_str();
  evolve_cmd->add_option("--potential", evolve.potential, "Potential CSV (leaf_id,value) for mode potential");
  evolve_cmd->add_option("--tol", evolve.tol, "Support threshold relative to max |value|")->capture_default_str();
  evolve_cmd->add_option("--out", evolve.out, "Directory for trajectory.csv and summary.csv")->required();

  CertifyArgs cert;
  auto* certify_cmd = app.add_subcommand("certify", "Run the randomized property suites");
  certify_cmd->add_option("--tree", cert.tree, "Optional extra tree spec to include");
  add_kernel(certify_cmd, cert.kernel);
  certify_cmd->add_option("--seed", cert.seed, "Random seed")->capture_default_str();
  certify_cmd->add_option("--instances", cert.instances, "Number of random instances")->capture_default_str();
  certify_cmd->add_option("--mutate", cert.mutate, "Inject a defect: none | helmert-sign | spectrum-offset")
      ->capture_default_str();
  certify_cmd->add_option("--out", cert.out, "Directory for certify.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e_out;
    const int code = app.exit(e, o, e_out);
    out << o.str();
    err << e_out.str();
    return code == 0 ? kSuccess : kUsageError;
  }

  if (*validate_cmd) return cmd_validate(validate, out, err);
  if (*spectrum_cmd) return cmd_spectrum(spectrum, out, err);
  if (*evolve_cmd) return cmd_evolve(evolve, out, err);
  return cmd_certify(cert, out, err);
}

}  // namespace ultrametric::cli
