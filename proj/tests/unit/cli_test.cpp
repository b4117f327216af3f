#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "cli/commands.hpp"
#include "ultrametric/ball_tree.hpp"
#include "ultrametric/io.hpp"

namespace fs = std::filesystem;
using namespace ultrametric;

namespace {

const fs::path kFixtures{ULTRAMETRIC_FIXTURE_DIR};

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ultrametric");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("ultrametric_cli_test_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

io::CsvTable read_table(const fs::path& p) {
  std::ifstream in(p);
  return io::read_csv(in);
}

}  // namespace

TEST(cli_validate, exit_codes) {
  EXPECT_EQ(run({"validate", "--tree", fixture("padic3_depth2.json")}).code, 0);
  const auto single = run({"validate", "--tree", fixture("single_child.json")});
  EXPECT_EQ(single.code, 1);
  EXPECT_NE(single.err.find("single child"), std::string::npos);
  EXPECT_EQ(run({"validate", "--tree", fixture("nonadditive.json")}).code, 1);
  EXPECT_EQ(run({"validate", "--tree", fixture("does_not_exist.json")}).code, 2);
  EXPECT_EQ(run({"validate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(cli_spectrum, writes_rows_and_report) {
  TempDir dir;
  const auto r = run({"spectrum", "--tree", fixture("binary_depth2.json"), "--kernel", fixture("binary_kernel.json"),
                      "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir.path() / "spectrum.csv"), "ball_id,p_I,lambda\nroot,2,1\nB1,2,1.5\nB2,2,1.5\n");
  EXPECT_NE(slurp(dir.path() / "report.json").find("\"passed\": true"), std::string::npos);
}

TEST(cli_spectrum, stdout_and_expected_comparison) {
  const auto r = run({"spectrum", "--tree", fixture("binary_depth2.json"), "--kernel", fixture("binary_kernel.json"),
                      "--expected", fixture("binary_spectrum.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("B2,2,1.5"), std::string::npos);
  const auto tampered = run({"spectrum", "--tree", fixture("binary_depth2.json"), "--kernel",
                             fixture("binary_kernel.json"), "--expected", fixture("binary_spectrum_tampered.csv")});
  EXPECT_EQ(tampered.code, 1);
  EXPECT_NE(tampered.err.find("B2"), std::string::npos);
}

TEST(cli_spectrum, zero_kernel_gives_zero_column) {
  const auto r = run({"spectrum", "--tree", fixture("binary_depth2.json"), "--kernel", fixture("zero_kernel.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  for (const auto& row : io::read_spectrum_csv(in)) EXPECT_EQ(row.lambda, 0.0);
}

TEST(cli_spectrum, alpha_and_kernel_errors) {
  EXPECT_EQ(run({"spectrum", "--tree", fixture("padic3_depth2.json"), "--alpha", "1"}).code, 0);
  EXPECT_EQ(run({"spectrum", "--tree", fixture("padic3_depth2.json"), "--kernel",
                 fixture("vladimirov_alpha1.json")}).code, 0);
  EXPECT_EQ(run({"spectrum", "--tree", fixture("padic3_depth2.json")}).code, 2);
  EXPECT_EQ(run({"spectrum", "--tree", fixture("padic3_depth2.json"), "--alpha", "-1"}).code, 1);
  // Kernel names balls that are not in this tree: a malformed input file.
  EXPECT_EQ(run({"spectrum", "--tree", fixture("padic3_depth2.json"), "--kernel", fixture("binary_kernel.json")}).code, 2);
}

TEST(cli_evolve, schrodinger_preserves_norm) {
  TempDir dir;
  const auto r = run({"evolve", "--tree", fixture("binary_depth2.json"), "--kernel", fixture("binary_kernel.json"),
                      "--initial", fixture("wavelet_b1.csv"), "--mode", "schrodinger", "--times", "0,0.5,1,10",
                      "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = read_table(dir.path() / "summary.csv");
  ASSERT_EQ(summary.rows.size(), 4u);
  for (const auto& row : summary.rows) {
    EXPECT_NEAR(io::parse_number(row[summary.column("norm")]), 1.0, 1e-10);
    EXPECT_LE(io::parse_number(row[summary.column("outside_mass")]), 1e-10);
    EXPECT_EQ(row[summary.column("support_ball")], "B1");
  }
  const auto trajectory = read_table(dir.path() / "trajectory.csv");
  EXPECT_EQ(trajectory.rows.size(), 16u);
}

TEST(cli_evolve, heat_decays_by_eigenvalue) {
  TempDir dir;
  const auto r = run({"evolve", "--tree", fixture("binary_depth2.json"), "--kernel", fixture("binary_kernel.json"),
                      "--initial", fixture("wavelet_b1.csv"), "--mode", "heat", "--times", "1", "--out",
                      dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = read_table(dir.path() / "summary.csv");
  EXPECT_NEAR(io::parse_number(summary.rows.at(0)[summary.column("norm")]), std::exp(-1.5), 1e-14);
}

TEST(cli_evolve, time_zero_reproduces_input) {
  TempDir dir;
  ASSERT_EQ(run({"evolve", "--tree", fixture("binary_depth2.json"), "--kernel", fixture("binary_kernel.json"),
                 "--initial", fixture("leaf_indicator.csv"), "--out", dir.path().string()})
                .code,
            0);
  const BallTree tree = BallTree::build(load_tree_spec(fixture("binary_depth2.json")));
  std::ifstream in(dir.path() / "trajectory.csv");
  const auto slices = io::read_trajectory_csv(in, tree);
  ASSERT_EQ(slices.size(), 1u);
  std::ifstream init(fixture("leaf_indicator.csv"));
  const LeafFunction f = io::read_leaf_values_csv(init, tree);
  EXPECT_LE((slices[0].values - f).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(cli_evolve, potential_mode_and_usage_errors) {
  TempDir dir;
  const std::vector<std::string> base{"evolve", "--tree", fixture("binary_depth2.json"), "--kernel",
                                      fixture("binary_kernel.json"), "--initial", fixture("wavelet_b1.csv"),
                                      "--out", dir.path().string()};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  const auto r = with({"--mode", "potential", "--potential", fixture("potential_constant.csv"), "--times", "0,2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = read_table(dir.path() / "summary.csv");
  for (const auto& row : summary.rows) EXPECT_NEAR(io::parse_number(row[summary.column("norm")]), 1.0, 1e-10);

  EXPECT_EQ(with({"--mode", "potential"}).code, 2);
  EXPECT_EQ(with({"--mode", "sideways"}).code, 2);
  EXPECT_EQ(with({"--mode", "heat", "--times", "-1"}).code, 1);
  EXPECT_EQ(with({"--hbar", "0"}).code, 1);
  EXPECT_EQ(with({"--times", "abc"}).code, 2);
}

TEST(cli_certify, passes_and_mutations_fail) {
  const auto ok = run({"certify", "--seed", "7", "--instances", "5"});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("[PASS] orthonormality"), std::string::npos);
  EXPECT_EQ(run({"certify", "--seed", "7", "--instances", "5", "--mutate", "helmert-sign"}).code, 1);
  EXPECT_EQ(run({"certify", "--seed", "7", "--instances", "5", "--mutate", "spectrum-offset"}).code, 1);
  EXPECT_EQ(run({"certify", "--mutate", "bogus"}).code, 2);
  const auto none = run({"certify", "--instances", "0"});
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.out.find("no instances"), std::string::npos);
}

TEST(cli_certify, report_is_reproducible) {
  TempDir a, b;
  ASSERT_EQ(run({"certify", "--seed", "3", "--instances", "4", "--tree", fixture("binary_depth2.json"), "--kernel",
                 fixture("binary_kernel.json"), "--out", a.path().string()})
                .code,
            0);
  ASSERT_EQ(run({"certify", "--seed", "3", "--instances", "4", "--tree", fixture("binary_depth2.json"), "--kernel",
                 fixture("binary_kernel.json"), "--out", b.path().string()})
                .code,
            0);
  // Everything except wall-clock seconds must match.
  auto strip = [](std::string s) {
    std::string out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) {
      if (line.find("\"seconds\"") == std::string::npos) out += line + '\n';
    }
    return out;
  };
  EXPECT_EQ(strip(slurp(a.path() / "certify.json")), strip(slurp(b.path() / "certify.json")));
}
