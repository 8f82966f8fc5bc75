#include "aqmsense/optim.hpp"

#include <cmath>
#include <deque>
#include <numeric>
#include <vector>

#include "aqmsense/errors.hpp"
#include "aqmsense/rng.hpp"

namespace aqmsense {

namespace {

double inf_norm(const Eigen::VectorXd& g) { return g.size() ? g.cwiseAbs().maxCoeff() : 0.0; }

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop(const Eigen::VectorXd& g, const std::deque<Correction>& mem) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

}  // namespace

OptimResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts) {
  if (opts.memory < 1) throw ConfigError("lbfgs: memory must be at least 1");
  OptimResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(r.x.size());
  r.f = f(r.x, g);
  r.grad_inf = inf_norm(g);

  std::deque<Correction> mem;
  Eigen::VectorXd g_new(r.x.size());
  while (r.grad_inf >= opts.tol) {
    if (r.iterations >= opts.max_iter) return r;
    Eigen::VectorXd d = two_loop(g, mem);
    double slope = g.dot(d);
    if (!(slope < 0)) {  // lost descent; restart from steepest descent
      mem.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    // the first step has no curvature information to scale it
    double step = mem.empty() && r.iterations == 0 ? std::min(1.0, 1.0 / r.grad_inf) : 1.0;
    Eigen::VectorXd x_new;
    double f_new = 0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_backtracks; ++k) {
      x_new = r.x + step * d;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.f + opts.c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return r;

    Correction c{x_new - r.x, g_new - g, 0.0};
    const double sy = c.s.dot(c.y);
    if (sy > 1e-12 * c.y.squaredNorm()) {
      c.rho = 1.0 / sy;
      mem.push_back(std::move(c));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    r.x = std::move(x_new);
    r.f = f_new;
    g = g_new;
    r.grad_inf = inf_norm(g);
    ++r.iterations;
  }
  r.converged = true;
  return r;
}

namespace {

template <class Update>
OptimResult first_order(const BatchObjective& f, std::size_t n, Eigen::VectorXd x0,
                        const FirstOrderOptions& opts, Update&& update) {
  if (n == 0) throw ConfigError("optimizer: no examples");
  if (opts.batch_size == 0) throw ConfigError("optimizer: batch size must be positive");
  OptimResult r;
  r.x = std::move(x0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opts.seed);
  Eigen::VectorXd g(r.x.size());

  r.f = f(r.x, g, order);
  r.grad_inf = inf_norm(g);
  long step = 0;
  while (r.grad_inf >= opts.tol) {
    if (r.iterations >= opts.max_epochs) return r;
    if (opts.batch_size < n) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += opts.batch_size) {
      const std::size_t len = std::min(opts.batch_size, n - start);
      f(r.x, g, std::span<const std::size_t>(order).subspan(start, len));
      update(r.x, g, ++step);
    }
    ++r.iterations;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    r.f = f(r.x, g, all);
    r.grad_inf = inf_norm(g);
    if (!std::isfinite(r.f)) return r;
  }
  r.converged = true;
  return r;
}

}  // namespace

OptimResult sgd_minimize(const BatchObjective& f, std::size_t n_examples, Eigen::VectorXd x0,
                         const FirstOrderOptions& opts) {
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(x0.size());
  return first_order(f, n_examples, std::move(x0), opts,
                     [&](Eigen::VectorXd& x, const Eigen::VectorXd& g, long) {
                       velocity = opts.momentum * velocity - opts.learning_rate * g;
                       x += velocity;
                     });
}

OptimResult adam_minimize(const BatchObjective& f, std::size_t n_examples, Eigen::VectorXd x0,
                          const FirstOrderOptions& opts) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(x0.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x0.size());
  return first_order(f, n_examples, std::move(x0), opts,
                     [&](Eigen::VectorXd& x, const Eigen::VectorXd& g, long t) {
                       m = opts.beta1 * m + (1 - opts.beta1) * g;
                       v = opts.beta2 * v + (1 - opts.beta2) * g.cwiseAbs2();
                       const double c1 = 1 - std::pow(opts.beta1, static_cast<double>(t));
                       const double c2 = 1 - std::pow(opts.beta2, static_cast<double>(t));
                       x.array() -= opts.learning_rate * (m.array() / c1) /
                                    ((v.array() / c2).sqrt() + opts.epsilon);
                     });
}

}  // namespace aqmsense
