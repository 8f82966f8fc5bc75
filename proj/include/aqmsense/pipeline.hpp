#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqmsense/dataset.hpp"
#include "aqmsense/io.hpp"
#include "aqmsense/learner.hpp"
#include "aqmsense/mlp.hpp"
#include "aqmsense/topology.hpp"

namespace aqmsense {

struct ExperimentConfig {
  int n_topologies = 1100;
  double duration_s = 20.0;
  /// Share of topology pairs held out; 1/11 turns 1,100 pairs into 200 test rows.
  double held_out_fraction = 1.0 / 11.0;
  std::uint64_t base_seed = 2016;
  ComplexityProfile profile;
  TrainConfig train;
  /// Run a randomized search and train the winner instead of `train`.
  bool search = false;
  SearchSpace search_space;
  int search_evals = 20;
  int importance_repeats = 10;
  /// Paired complex-profile topologies for the generalization test; 0 skips it.
  int generalization_topologies = 0;
  ComplexityProfile complex_profile = ComplexityProfile::complex();
  int parallelism = 4;

  void validate() const;
};

Json experiment_config_to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults.
ExperimentConfig experiment_config_from_json(const Json& j);

/// AQMSENSE_SEED, when set, replaces base_seed.
void apply_env_overrides(ExperimentConfig& c);

/// Seed of the i-th topology of an experiment.
std::uint64_t topology_seed(std::uint64_t base_seed, std::size_t index);

/// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Both runs of one topology.
struct PairResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  FeatureVector droptail;
  FeatureVector pie;
};

/// Generates the scenario for `seed`, simulates it under drop-tail and PIE
/// with the same simulation seed and featurizes both traces. Failures are
/// reported in the result, not thrown.
PairResult run_pair(std::uint64_t seed, const ComplexityProfile& profile, double duration_s);

struct ManifestEntry {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string file;  // relative to the work directory
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::string created_utc;
  std::string updated_utc;
  std::vector<ManifestEntry> entries;
  std::vector<std::uint64_t> held_out_seeds;
  std::vector<std::pair<std::string, std::string>> outputs;  // (file, sha256)

  std::size_t skipped() const;
};

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

struct BuiltDataset {
  Dataset train;
  Dataset held_out;
  RunManifest manifest;
};

/// Simulates every topology under both disciplines and splits whole pairs
/// into train and held-out sets. With a work directory, per-pair rows, the
/// two datasets and manifest.json are written there and a rerun reuses
/// every pair file whose hash still matches.
BuiltDataset build_dataset(const ExperimentConfig& cfg,
                           const std::optional<std::filesystem::path>& work_dir = std::nullopt);

/// Number of pairs held out of n usable pairs.
std::size_t held_out_pairs(std::size_t n_pairs, double fraction);

/// Evaluates `model` on `n` fresh paired topologies drawn from
/// `complex_profile`. The model is only read. Throws ConfigError unless the
/// complex profile strictly dominates `train_profile`.
ConfusionMatrix run_generalization_test(const MlpModel& model, const ComplexityProfile& complex_profile,
                                        const ComplexityProfile& train_profile, int n, std::uint64_t seed,
                                        double duration_s = 20.0, int parallelism = 1);

/// confusion_matrix.csv, importance.csv and summary.txt under out_dir.
void emit_report(const ConfusionMatrix& cm, const ImportanceReport& imp, const std::filesystem::path& out_dir);

struct PipelineOutput {
  MlpModel model;
  ConfusionMatrix held_out;
  ImportanceReport importance;
  std::optional<ConfusionMatrix> generalization;
  std::optional<SearchResult> search;
};

/// End to end: dataset, optional search, training, held-out evaluation,
/// importance, optional generalization test, reports under out_dir.
PipelineOutput run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace aqmsense
