#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ultrametric/ball_tree.hpp"
#include "ultrametric/pdo.hpp"
#include "ultrametric/types.hpp"
#include "ultrametric/wavelet.hpp"

namespace ultrametric::io {

/// Shortest-exact decimal form ("%.17g"); parsing it back gives the same double.
std::string format_number(double value);

/// Splits one CSV line on commas and trims surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);
double parse_number(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

/// Reads a headed CSV. Blank lines are skipped; every row must have as many
/// fields as the header.
CsvTable read_csv(std::istream& in);

// ball_id,p_I,lambda -- internal balls in preorder.
void write_spectrum_csv(std::ostream& out, const BallTree& tree, const Spectrum& spectrum);

struct SpectrumRow {
  std::string ball_id;
  std::size_t children = 0;
  double lambda = 0.0;
};
std::vector<SpectrumRow> read_spectrum_csv(std::istream& in);

// ball_id,index,re,im -- wavelets in basis order, then the constant ("const").
void write_coefficients_csv(std::ostream& out, const BallTree& tree, const WaveletBasis& basis,
                            const Eigen::VectorXcd& coefficients);

/// Initial-condition CSV (leaf_id,re,im). Every leaf must appear exactly once.
LeafFunction read_leaf_values_csv(std::istream& in, const BallTree& tree);
void write_leaf_values_csv(std::ostream& out, const BallTree& tree, const LeafFunction& f);

/// Potential CSV (leaf_id,value). Every leaf must appear exactly once.
RealLeafFunction read_potential_csv(std::istream& in, const BallTree& tree);

// time,leaf_id,re,im,abs2
void write_trajectory_header(std::ostream& out);
void write_trajectory_rows(std::ostream& out, const BallTree& tree, double time, const LeafFunction& psi);

struct TrajectorySlice {
  double time = 0.0;
  LeafFunction values;
};
/// Groups a trajectory CSV by time, in order of first appearance.
std::vector<TrajectorySlice> read_trajectory_csv(std::istream& in, const BallTree& tree);

struct SummaryRow {
  double time = 0.0;
  double norm = 0.0;
  Complex mean{};
  double outside_mass = 0.0;
  std::string support_ball;  // empty when the state vanishes
};
// time,norm,mean_re,mean_im,outside_mass,support_ball
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace ultrametric::io
