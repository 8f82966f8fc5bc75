#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aqmsense/dataset.hpp"

namespace aqmsense {

enum class Solver { SGD, ADAM, LBFGS };

std::string to_string(Solver s);
Solver parse_solver(const std::string& s);

struct TrainConfig {
  std::vector<int> hidden_layers{14};
  double l2_alpha = 0.5e-10;
  Solver solver = Solver::LBFGS;
  int max_iter = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  // first-order solvers
  double learning_rate = 0.0;  // 0 picks the solver default (SGD 0.1, Adam 0.01)
  std::size_t batch_size = 200;
  double momentum = 0.9;
  // L-BFGS
  int lbfgs_memory = 10;

  /// Throws ConfigError for negative sizes or penalties.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Fully connected net: tanh hidden layers, one sigmoid output giving
/// P(label = PIE). No hidden layers is plain logistic regression.
struct MlpModel {
  std::vector<int> layer_sizes;           // input, hidden..., 1
  std::vector<Eigen::MatrixXd> weights;   // weights[l] is (out x in)
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd norm_mean;
  Eigen::VectorXd norm_std;
  TrainConfig config;
  std::vector<std::string> feature_names;

  /// All-zero parameters and identity normalization.
  static MlpModel zeros(std::vector<int> layer_sizes);

  std::size_t n_inputs() const { return static_cast<std::size_t>(layer_sizes.front()); }
  std::size_t n_params() const;

  /// Weights then bias of each layer, weights row-major.
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& params);

  /// z-score rows of raw inputs.
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& raw) const;
};

/// P(PIE) for one raw (unnormalized) input.
double mlp_forward(const MlpModel& m, std::span<const double> x);

/// P(PIE) for every row of raw inputs.
Eigen::VectorXd predict_proba(const MlpModel& m, const Eigen::MatrixXd& raw);

struct LossGrad {
  double loss = 0;
  Eigen::VectorXd grad;  // same layout as MlpModel::pack
};

/// Mean binary cross-entropy plus l2_alpha * sum of squared weights (biases
/// are not penalised), with its gradient by backpropagation. `xn` holds
/// already-normalized rows.
LossGrad loss_and_grad(const MlpModel& m, const Eigen::MatrixXd& xn, std::span<const int> y, double l2_alpha);

/// Fits normalization on `data`, initializes weights from cfg.seed and runs
/// the configured solver. Deterministic given the config.
MlpModel train(const Dataset& data, const TrainConfig& cfg);

}  // namespace aqmsense
