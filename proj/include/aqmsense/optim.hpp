#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Dense>

namespace aqmsense {

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Objective restricted to a minibatch of example indices.
using BatchObjective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad, std::span<const std::size_t> batch)>;

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0;
  int iterations = 0;
  bool converged = false;
  double grad_inf = 0;
};

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 200;
  double tol = 1e-6;     // on the gradient infinity norm
  int max_backtracks = 40;
  double c1 = 1e-4;      // sufficient-decrease constant
};

/// Limited-memory BFGS: two-loop recursion for the direction, Armijo
/// backtracking for the step. When the line search cannot decrease f the
/// best point so far is returned with converged = false.
OptimResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts = {});

struct FirstOrderOptions {
  double learning_rate = 0.01;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9;     // Adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 200;
  std::size_t batch_size = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Minibatch SGD with classical momentum. One iteration is one epoch; the
/// full-batch gradient is checked against `tol` after every epoch.
OptimResult sgd_minimize(const BatchObjective& f, std::size_t n_examples, Eigen::VectorXd x0,
                         const FirstOrderOptions& opts);

OptimResult adam_minimize(const BatchObjective& f, std::size_t n_examples, Eigen::VectorXd x0,
                          const FirstOrderOptions& opts);

}  // namespace aqmsense
