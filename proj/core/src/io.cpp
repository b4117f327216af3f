#include "ultrametric/io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace ultrametric::io {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

LeafFunction collect_leaf_values(const CsvTable& table, const BallTree& tree, std::size_t id_col,
                                 std::size_t re_col, std::optional<std::size_t> im_col) {
  LeafFunction f = LeafFunction::Zero(static_cast<Eigen::Index>(tree.leaf_count()));
  std::vector<bool> seen(tree.leaf_count(), false);
  for (const auto& row : table.rows) {
    const BallIndex b = tree.index_of(row[id_col]);
    if (!tree.is_leaf(b)) throw Error(fmt::format("'{}' is not a leaf", row[id_col]));
    const auto pos = tree.ball(b).leaf_begin;
    if (seen[pos]) throw Error(fmt::format("leaf '{}' appears more than once", row[id_col]));
    seen[pos] = true;
    const double im = im_col ? parse_number(row[*im_col]) : 0.0;
    f[static_cast<Eigen::Index>(pos)] = Complex(parse_number(row[re_col]), im);
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) throw Error(fmt::format("no value for leaf '{}'", tree.ball(tree.leaf(k)).id));
  }
  return f;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) throw Error(fmt::format("not a number: '{}'", text));
  return value;
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(fmt::format("CSV is missing column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(fmt::format("CSV line {}: expected {} fields, got {}", line_no, table.header.size(),
                              fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw Error("CSV is empty");
  return table;
}

void write_spectrum_csv(std::ostream& out, const BallTree& tree, const Spectrum& spectrum) {
  out << "ball_id,p_I,lambda\n";
  for (BallIndex I : tree.internal_balls()) {
    out << tree.ball(I).id << ',' << tree.ball(I).children.size() << ',' << format_number(spectrum(I))
        << '\n';
  }
}

std::vector<SpectrumRow> read_spectrum_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const auto id = table.column("ball_id");
  const auto p = table.column("p_I");
  const auto lambda = table.column("lambda");
  std::vector<SpectrumRow> rows;
  for (const auto& r : table.rows) {
    const double children = parse_number(r[p]);
    if (children < 0 || children != static_cast<double>(static_cast<std::size_t>(children))) {
      throw Error(fmt::format("spectrum CSV: p_I must be a nonnegative integer, got '{}'", r[p]));
    }
    rows.push_back({r[id], static_cast<std::size_t>(children), parse_number(r[lambda])});
  }
  return rows;
}

void write_coefficients_csv(std::ostream& out, const BallTree& tree, const WaveletBasis& basis,
                            const Eigen::VectorXcd& coefficients) {
  if (static_cast<std::size_t>(coefficients.size()) != basis.size()) {
    throw DimensionError("coefficient count does not match the basis");
  }
  out << "ball_id,index,re,im\n";
  const auto wavelets = basis.wavelets();
  for (std::size_t k = 0; k < wavelets.size(); ++k) {
    const Complex c = coefficients[static_cast<Eigen::Index>(k)];
    out << tree.ball(wavelets[k].ball).id << ',' << wavelets[k].index << ',' << format_number(c.real())
        << ',' << format_number(c.imag()) << '\n';
  }
  const Complex c = coefficients[static_cast<Eigen::Index>(basis.constant_position())];
  out << tree.ball(tree.root()).id << ",const," << format_number(c.real()) << ','
      << format_number(c.imag()) << '\n';
}

LeafFunction read_leaf_values_csv(std::istream& in, const BallTree& tree) {
  const CsvTable table = read_csv(in);
  return collect_leaf_values(table, tree, table.column("leaf_id"), table.column("re"), table.column("im"));
}

void write_leaf_values_csv(std::ostream& out, const BallTree& tree, const LeafFunction& f) {
  out << "leaf_id,re,im\n";
  for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
    const Complex v = f[static_cast<Eigen::Index>(k)];
    out << tree.ball(tree.leaf(k)).id << ',' << format_number(v.real()) << ',' << format_number(v.imag())
        << '\n';
  }
}

RealLeafFunction read_potential_csv(std::istream& in, const BallTree& tree) {
  const CsvTable table = read_csv(in);
  return collect_leaf_values(table, tree, table.column("leaf_id"), table.column("value"), std::nullopt)
      .real();
}

void write_trajectory_header(std::ostream& out) { out << "time,leaf_id,re,im,abs2\n"; }

void write_trajectory_rows(std::ostream& out, const BallTree& tree, double time, const LeafFunction& psi) {
  const std::string t = format_number(time);
  for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
    const Complex v = psi[static_cast<Eigen::Index>(k)];
    out << t << ',' << tree.ball(tree.leaf(k)).id << ',' << format_number(v.real()) << ','
        << format_number(v.imag()) << ',' << format_number(std::norm(v)) << '\n';
  }
}

std::vector<TrajectorySlice> read_trajectory_csv(std::istream& in, const BallTree& tree) {
  const CsvTable table = read_csv(in);
  const auto time_col = table.column("time");
  std::vector<std::string> order;
  std::vector<CsvTable> groups;
  for (const auto& row : table.rows) {
    auto it = std::find(order.begin(), order.end(), row[time_col]);
    if (it == order.end()) {
      order.push_back(row[time_col]);
      groups.push_back({table.header, {}});
      it = order.end() - 1;
    }
    groups[static_cast<std::size_t>(it - order.begin())].rows.push_back(row);
  }
  std::vector<TrajectorySlice> slices;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    slices.push_back({parse_number(order[g]),
                      collect_leaf_values(groups[g], tree, table.column("leaf_id"), table.column("re"),
                                          table.column("im"))});
  }
  return slices;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "time,norm,mean_re,mean_im,outside_mass,support_ball\n";
  for (const auto& r : rows) {
    out << format_number(r.time) << ',' << format_number(r.norm) << ',' << format_number(r.mean.real()) << ','
        << format_number(r.mean.imag()) << ',' << format_number(r.outside_mass) << ',' << r.support_ball
        << '\n';
  }
}

}  // namespace ultrametric::io
