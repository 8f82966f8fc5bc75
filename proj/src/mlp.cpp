#include "aqmsense/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aqmsense/errors.hpp"
#include "aqmsense/optim.hpp"
#include "aqmsense/rng.hpp"

namespace aqmsense {

std::string to_string(Solver s) {
  switch (s) {
    case Solver::SGD: return "sgd";
    case Solver::ADAM: return "adam";
    default: return "lbfgs";
  }
}

Solver parse_solver(const std::string& s) {
  if (s == "sgd") return Solver::SGD;
  if (s == "adam") return Solver::ADAM;
  if (s == "lbfgs") return Solver::LBFGS;
  throw ConfigError("unknown solver '" + s + "'");
}

void TrainConfig::validate() const {
  if (hidden_layers.size() > 4) throw ConfigError("at most four hidden layers");
  for (int h : hidden_layers)
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  if (!(l2_alpha >= 0)) throw ConfigError("l2_alpha must be non-negative");
  if (max_iter < 0) throw ConfigError("max_iter must be non-negative");
  if (!(tol >= 0)) throw ConfigError("tol must be non-negative");
  if (learning_rate < 0) throw ConfigError("learning_rate must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (lbfgs_memory < 1) throw ConfigError("lbfgs_memory must be at least 1");
}

MlpModel MlpModel::zeros(std::vector<int> layer_sizes) {
  if (layer_sizes.size() < 2 || layer_sizes.back() != 1) throw ShapeError("layer sizes must end in a single output");
  MlpModel m;
  m.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    m.weights.push_back(Eigen::MatrixXd::Zero(m.layer_sizes[l + 1], m.layer_sizes[l]));
    m.biases.push_back(Eigen::VectorXd::Zero(m.layer_sizes[l + 1]));
  }
  m.norm_mean = Eigen::VectorXd::Zero(m.layer_sizes.front());
  m.norm_std = Eigen::VectorXd::Ones(m.layer_sizes.front());
  return m;
}

std::size_t MlpModel::n_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Eigen::VectorXd MlpModel::pack() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(n_params()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < weights[l].cols(); ++j) p[k++] = weights[l](i, j);
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) p[k++] = biases[l][i];
  }
  return p;
}

void MlpModel::unpack(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != n_params()) throw ShapeError("parameter vector has wrong length");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < weights[l].cols(); ++j) weights[l](i, j) = p[k++];
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l][i] = p[k++];
  }
}

Eigen::MatrixXd MlpModel::normalize(const Eigen::MatrixXd& raw) const {
  if (static_cast<std::size_t>(raw.cols()) != n_inputs()) throw ShapeError("input width does not match model");
  return (raw.rowwise() - norm_mean.transpose()).array().rowwise() / norm_std.transpose().array();
}

namespace {

// Stable log(1 + e^z).
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// activations[0] = input, activations[l] post-tanh, last entry holds output logits
std::vector<Eigen::MatrixXd> forward_pass(const MlpModel& m, const Eigen::MatrixXd& xn) {
  std::vector<Eigen::MatrixXd> acts{xn};
  const std::size_t L = m.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = acts.back() * m.weights[l].transpose();
    z.rowwise() += m.biases[l].transpose();
    if (l + 1 < L) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

Eigen::VectorXd predict_proba(const MlpModel& m, const Eigen::MatrixXd& raw) {
  const auto acts = forward_pass(m, m.normalize(raw));
  Eigen::VectorXd p(acts.back().rows());
  // saturated logits round to exactly 0 or 1; keep outputs strictly inside
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::clamp(sigmoid(acts.back()(i, 0)), lo, hi);
  return p;
}

double mlp_forward(const MlpModel& m, std::span<const double> x) {
  if (x.size() != m.n_inputs()) throw ShapeError("input width does not match model");
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  return predict_proba(m, row)[0];
}

LossGrad loss_and_grad(const MlpModel& m, const Eigen::MatrixXd& xn, std::span<const int> y, double l2_alpha) {
  const auto n = xn.rows();
  if (n == 0) throw InsufficientDataError("loss_and_grad: empty batch");
  if (static_cast<std::size_t>(n) != y.size()) throw ShapeError("loss_and_grad: label count mismatch");
  if (static_cast<std::size_t>(xn.cols()) != m.n_inputs()) throw ShapeError("input width does not match model");

  const auto acts = forward_pass(m, xn);
  const Eigen::MatrixXd& logits = acts.back();
  LossGrad out;
  Eigen::MatrixXd delta(n, 1);
  double ce = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = logits(i, 0);
    ce += softplus(z) - y[static_cast<std::size_t>(i)] * z;
    delta(i, 0) = (sigmoid(z) - y[static_cast<std::size_t>(i)]) / static_cast<double>(n);
  }
  out.loss = ce / static_cast<double>(n);

  const std::size_t L = m.weights.size();
  std::vector<Eigen::MatrixXd> dw(L);
  std::vector<Eigen::VectorXd> db(L);
  for (std::size_t l = L; l-- > 0;) {
    dw[l] = delta.transpose() * acts[l] + 2.0 * l2_alpha * m.weights[l];
    db[l] = delta.colwise().sum().transpose();
    out.loss += l2_alpha * m.weights[l].squaredNorm();
    if (l > 0) delta = (delta * m.weights[l]).array() * (1.0 - acts[l].array().square());
  }

  out.grad.resize(static_cast<Eigen::Index>(m.n_params()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < L; ++l) {
    for (Eigen::Index i = 0; i < dw[l].rows(); ++i)
      for (Eigen::Index j = 0; j < dw[l].cols(); ++j) out.grad[k++] = dw[l](i, j);
    for (Eigen::Index i = 0; i < db[l].size(); ++i) out.grad[k++] = db[l][i];
  }
  return out;
}

MlpModel train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() < 2) throw DegenerateDatasetError("training needs at least two examples");
  if (data.count(0) == 0 || data.count(1) == 0) throw DegenerateDatasetError("training data holds a single class");

  std::vector<int> sizes{static_cast<int>(data.n_features())};
  sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  sizes.push_back(1);
  MlpModel m = MlpModel::zeros(sizes);
  m.config = cfg;
  m.feature_names = data.feature_names;

  const auto n = static_cast<double>(data.size());
  m.norm_mean = data.x.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const double var = (data.x.col(j).array() - m.norm_mean[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    m.norm_std[j] = sd > 0 && std::isfinite(sd) ? sd : 1.0;
  }

  // symmetric uniform init scaled by fan-in + fan-out
  Rng init = Rng(cfg.seed).child(stream::kInit);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double bound = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < m.weights[l].cols(); ++j) m.weights[l](i, j) = init.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) m.biases[l][i] = init.uniform(-bound, bound);
  }

  const Eigen::MatrixXd xn = m.normalize(data.x);
  MlpModel work = m;
  auto full = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
    work.unpack(p);
    auto lg = loss_and_grad(work, xn, data.y, cfg.l2_alpha);
    g = std::move(lg.grad);
    return lg.loss;
  };
  auto batch = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g, std::span<const std::size_t> rows) {
    work.unpack(p);
    if (rows.size() == data.size()) return full(p, g);
    Eigen::MatrixXd xb(static_cast<Eigen::Index>(rows.size()), xn.cols());
    std::vector<int> yb(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      xb.row(static_cast<Eigen::Index>(i)) = xn.row(static_cast<Eigen::Index>(rows[i]));
      yb[i] = data.y[rows[i]];
    }
    auto lg = loss_and_grad(work, xb, yb, cfg.l2_alpha);
    g = std::move(lg.grad);
    return lg.loss;
  };

  OptimResult r;
  if (cfg.solver == Solver::LBFGS) {
    LbfgsOptions o;
    o.memory = cfg.lbfgs_memory;
    o.max_iter = cfg.max_iter;
    o.tol = cfg.tol;
    r = lbfgs_minimize(full, m.pack(), o);
  } else {
    FirstOrderOptions o;
    o.max_epochs = cfg.max_iter;
    o.tol = cfg.tol;
    o.batch_size = cfg.batch_size;
    o.momentum = cfg.momentum;
    o.seed = Rng(cfg.seed).child(stream::kShuffle).seed();
    if (cfg.solver == Solver::SGD) {
      o.learning_rate = cfg.learning_rate > 0 ? cfg.learning_rate : 0.1;
      r = sgd_minimize(batch, data.size(), m.pack(), o);
    } else {
      o.learning_rate = cfg.learning_rate > 0 ? cfg.learning_rate : 0.01;
      r = adam_minimize(batch, data.size(), m.pack(), o);
    }
  }
  // a diverged first-order run keeps its initial weights rather than NaNs
  if (r.x.allFinite()) m.unpack(r.x);
  return m;
}

}  // namespace aqmsense
