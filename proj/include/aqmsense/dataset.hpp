#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aqmsense/features.hpp"

namespace aqmsense {

/// Labelled feature rows. Label 1 means PIE, 0 drop-tail.
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd x;  // one row per example
  std::vector<int> y;
  std::vector<std::uint64_t> topology_seed;

  std::size_t size() const { return y.size(); }
  std::size_t n_features() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t count(int label) const;

  Dataset subset(std::span<const std::size_t> rows) const;

  static Dataset from_features(std::span<const FeatureVector> rows);
  /// Unlabelled-seed convenience for tests and synthetic data.
  static Dataset from_matrix(Eigen::MatrixXd x, std::vector<int> y);
};

/// CSV with the feature columns, then `label` (droptail|pie) and `topology_seed`.
void write_dataset_csv(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace aqmsense
