#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aqmsense/dataset.hpp"
#include "aqmsense/mlp.hpp"

namespace aqmsense {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k folds; every index lands in exactly one test fold and each fold's class
/// counts are within one of the proportional share. Throws
/// StratificationError when a class has fewer than k members.
std::vector<Split> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed);

/// One stratified shuffle split with round(test_fraction * n_c) (at least
/// one) test examples per class.
Split stratified_shuffle_split(std::span<const int> y, double test_fraction, std::uint64_t seed);

/// Counts use PIE as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;  // PIE predicted PIE
  std::size_t fp = 0;  // drop-tail predicted PIE
  std::size_t tn = 0;  // drop-tail predicted drop-tail
  std::size_t fn = 0;  // PIE predicted drop-tail

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  double pie_accuracy() const;
  double droptail_accuracy() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Predict PIE iff P(PIE) >= threshold.
ConfusionMatrix evaluate(const MlpModel& m, const Dataset& data, double threshold = 0.5);

/// Mean k-fold accuracy of `cfg`.
double cross_val_accuracy(const Dataset& data, const TrainConfig& cfg, int k, std::uint64_t seed,
                          int parallelism = 1);

struct SearchSpace {
  int min_layers = 1;
  int max_layers = 4;
  int min_neurons = 2;
  int max_neurons = 20;
  double min_alpha = 1e-12;
  double max_alpha = 1e-1;
  std::vector<Solver> solvers{Solver::SGD, Solver::ADAM, Solver::LBFGS};
  int max_iter = 200;
  double tol = 1e-5;
  /// Stratified 90/10 shuffles scored per configuration.
  int repeats = 100;
  double test_fraction = 0.1;

  void validate() const;
  bool contains(const TrainConfig& cfg) const;
};

/// Draws one configuration from the space.
TrainConfig sample_config(const SearchSpace& space, Rng& rng);

struct Trial {
  std::size_t index = 0;
  TrainConfig config;
  double score = 0;
};

struct SearchResult {
  TrainConfig best_config;
  double best_score = 0;
  std::vector<Trial> trials;  // in trial-index order
};

/// Randomized search: each sampled configuration is scored by its mean
/// accuracy over `space.repeats` stratified shuffles. Trials may run
/// concurrently; the log is ordered by trial index and ties keep the
/// earliest trial.
SearchResult random_search(const Dataset& data, const SearchSpace& space, int n_evals, std::uint64_t seed,
                           int parallelism = 1);

struct Importance {
  std::string feature;
  double importance = 0;
};

/// Sorted by decreasing importance (feature order on ties).
using ImportanceReport = std::vector<Importance>;

/// Baseline accuracy minus mean accuracy with column j shuffled, over
/// `repeats` shuffles per column.
ImportanceReport permutation_importance(const MlpModel& m, const Dataset& data, int repeats, std::uint64_t seed);

}  // namespace aqmsense
