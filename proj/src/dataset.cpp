#include "aqmsense/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aqmsense/errors.hpp"

namespace aqmsense {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset d;
  d.feature_names = feature_names;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    d.y.push_back(y[rows[i]]);
    d.topology_seed.push_back(topology_seed.empty() ? 0 : topology_seed[rows[i]]);
  }
  return d;
}

Dataset Dataset::from_features(std::span<const FeatureVector> rows) {
  Dataset d;
  d.feature_names = aqmsense::feature_names();
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].features[j];
    d.y.push_back(rows[i].label == QueueLabel::Pie ? 1 : 0);
    d.topology_seed.push_back(rows[i].topology_seed);
  }
  return d;
}

Dataset Dataset::from_matrix(Eigen::MatrixXd x, std::vector<int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("row count differs from label count");
  Dataset d;
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  d.topology_seed.assign(y.size(), 0);
  d.x = std::move(x);
  d.y = std::move(y);
  return d;
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& name : d.feature_names) out << name << ',';
  out << "label,topology_seed\n";
  char buf[32];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d.x(static_cast<Eigen::Index>(i), j));
      out << buf << ',';
    }
    out << (d.y[i] == 1 ? "pie" : "droptail") << ',' << d.topology_seed[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "topology_seed")
    throw IoError(path.string() + ": header must end with label,topology_seed");

  Dataset d;
  d.feature_names.assign(header.begin(), header.end() - 2);
  const std::size_t nf = d.feature_names.size();
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != nf + 2) throw IoError("line " + std::to_string(line_no) + ": wrong column count");
    for (std::size_t j = 0; j < nf; ++j) values.push_back(parse_double(cells[j], line_no));
    if (cells[nf] != "pie" && cells[nf] != "droptail")
      throw IoError("line " + std::to_string(line_no) + ": label must be droptail or pie");
    d.y.push_back(cells[nf] == "pie" ? 1 : 0);
    std::uint64_t seed = 0;
    auto [p, ec] = std::from_chars(cells[nf + 1].data(), cells[nf + 1].data() + cells[nf + 1].size(), seed);
    if (ec != std::errc()) throw IoError("line " + std::to_string(line_no) + ": bad topology_seed");
    d.topology_seed.push_back(seed);
  }
  d.x.resize(static_cast<Eigen::Index>(d.y.size()), static_cast<Eigen::Index>(nf));
  for (std::size_t i = 0; i < d.y.size(); ++i)
    for (std::size_t j = 0; j < nf; ++j)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * nf + j];
  return d;
}

}  // namespace aqmsense
