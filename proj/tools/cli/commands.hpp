#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ultrametric::cli {

// Exit-code contract shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,  // validation or verification failure
  kUsageError = 2,   // bad arguments, unreadable or malformed files
};

struct KernelSource {
  std::optional<std::filesystem::path> file;
  std::optional<double> alpha;  // Vladimirov preset when no file is given
};

struct ValidateArgs {
  std::filesystem::path tree;
};

struct SpectrumArgs {
  std::filesystem::path tree;
  KernelSource kernel;
  std::optional<std::filesystem::path> out;       // writes spectrum.csv and report.json
  std::optional<std::filesystem::path> expected;  // spectrum CSV to compare against
};

struct EvolveArgs {
  std::filesystem::path tree;
  KernelSource kernel;
  std::filesystem::path initial;
  std::string mode = "schrodinger";  // schrodinger | heat | potential
  std::vector<double> times{0.0};
  double hbar = 1.0;
  std::optional<std::filesystem::path> potential;
  double tol = 1e-12;  // support threshold relative to max |value|
  std::filesystem::path out;
};

struct CertifyArgs {
  std::optional<std::filesystem::path> tree;
  KernelSource kernel;
  std::uint64_t seed = 42;
  std::size_t instances = 100;
  std::string mutate = "none";
  std::optional<std::filesystem::path> out;
};

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err);
int cmd_spectrum(const SpectrumArgs& args, std::ostream& out, std::ostream& err);
int cmd_evolve(const EvolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_certify(const CertifyArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ultrametric::cli
