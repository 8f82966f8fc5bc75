// Straightforward reference implementations used as test oracles. Written
// for clarity over speed and kept independent of the library code paths.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "aqmsense/mlp.hpp"
#include "aqmsense/rng.hpp"

namespace oracle {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) return 0;
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double var(const std::vector<double>& x) {
  if (x.size() < 2) return 0;
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// s_t written out as the explicit weighted sum of all inputs
inline std::vector<double> ewma(const std::vector<double>& x, double a) {
  std::vector<double> out;
  for (std::size_t t = 0; t < x.size(); ++t) {
    double s = std::pow(1 - a, static_cast<double>(t)) * x[0];
    for (std::size_t k = 1; k <= t; ++k) s += a * std::pow(1 - a, static_cast<double>(t - k)) * x[k];
    out.push_back(s);
  }
  return out;
}

inline std::vector<double> diff1(const std::vector<double>& x) {
  std::vector<double> g;
  for (std::size_t i = 1; i < x.size(); ++i) g.push_back(x[i] - x[i - 1]);
  return g;
}

// second difference from the three-point stencil
inline std::vector<double> diff2(const std::vector<double>& x) {
  std::vector<double> g;
  for (std::size_t i = 2; i < x.size(); ++i) g.push_back(x[i] - 2 * x[i - 1] + x[i - 2]);
  return g;
}

inline std::vector<std::size_t> maxima(const std::vector<double>& x) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    bool ok = true;
    for (std::size_t j : {i - 1, i + 1}) ok = ok && x[i] > x[j];
    if (ok) idx.push_back(i);
  }
  return idx;
}

inline std::vector<std::size_t> minima(const std::vector<double>& x) {
  std::vector<double> neg;
  for (double v : x) neg.push_back(-v);
  return maxima(neg);
}

// every contiguous nonempty window
inline double max_subarray(const std::vector<double>& x) {
  double best = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0;
    for (std::size_t j = i; j < x.size(); ++j) {
      s += x[j];
      best = std::max(best, s);
    }
  }
  return best;
}

inline double tv(const std::vector<double>& x, int power) {
  double s = 0;
  for (std::size_t i = 1; i < x.size(); ++i) s += std::pow(std::abs(x[i] - x[i - 1]), power);
  return s;
}

// longest window x[i..j] whose every step is strictly rising (or falling), in steps
inline double longest_run(const std::vector<double>& x, bool rising) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      bool ok = true;
      for (std::size_t k = i + 1; k <= j && ok; ++k) ok = rising ? x[k] > x[k - 1] : x[k] < x[k - 1];
      if (!ok) break;
      best = std::max(best, j - i);
    }
  return static_cast<double>(best);
}

inline double acf(const std::vector<double>& x, std::size_t lag) {
  if (x.size() <= lag) return 0;
  const double m = mean(x);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i >= lag) num += (x[i] - m) * (x[i - lag] - m);
  }
  return den == 0 ? 0 : num / den;
}

inline std::array<double, 36> series_features(const std::vector<double>& x, double dt) {
  std::array<double, 36> f{};
  const double n = static_cast<double>(x.size());
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double m = mean(x), v = var(x);
  f[0] = m;
  f[1] = v;
  f[2] = sorted.front();
  f[3] = sorted.back();
  f[4] = x.size() % 2 ? sorted[x.size() / 2] : 0.5 * (sorted[x.size() / 2 - 1] + sorted[x.size() / 2]);
  double m3 = 0, m4 = 0;
  for (double xi : x) {
    m3 += (xi - m) * (xi - m) * (xi - m) / n;
    m4 += (xi - m) * (xi - m) * (xi - m) * (xi - m) / n;
  }
  f[5] = v > 0 ? m3 / (v * std::sqrt(v)) : 0;
  f[6] = v > 0 ? m4 / (v * v) - 3 : 0;
  f[7] = sorted.back() - sorted.front();

  const auto g1 = diff1(x);
  f[8] = mean(g1);
  f[9] = var(g1);
  f[10] = *std::min_element(g1.begin(), g1.end());
  f[11] = *std::max_element(g1.begin(), g1.end());
  for (double g : g1) f[12] += std::abs(g) / static_cast<double>(g1.size());
  f[13] = max_subarray(g1);
  for (std::size_t i = 1; i < g1.size(); ++i)
    f[14] += (g1[i - 1] > 0 && g1[i] < 0) || (g1[i - 1] < 0 && g1[i] > 0);

  const auto g2 = diff2(x);
  f[15] = mean(g2);
  f[16] = var(g2);
  f[17] = *std::min_element(g2.begin(), g2.end());
  f[18] = *std::max_element(g2.begin(), g2.end());
  for (double g : g2) f[19] += std::abs(g) / static_cast<double>(g2.size());

  const auto mx = maxima(x), mn = minima(x);
  std::vector<double> mxv, mnv, gaps;
  for (auto i : mx) mxv.push_back(x[i]);
  for (auto i : mn) mnv.push_back(x[i]);
  for (std::size_t i = 1; i < mx.size(); ++i) gaps.push_back(dt * static_cast<double>(mx[i] - mx[i - 1]));
  f[20] = static_cast<double>(mx.size());
  f[21] = mean(mxv);
  f[22] = var(mxv);
  f[23] = static_cast<double>(mn.size());
  f[24] = mean(mnv);
  f[25] = var(mnv);
  f[26] = mean(gaps);
  f[27] = var(gaps);

  f[28] = tv(x, 1);
  f[29] = tv(x, 2);
  f[30] = longest_run(x, true);
  f[31] = longest_run(x, false);
  f[32] = acf(x, 1);
  f[33] = acf(x, 5);

  // normal equations for x ~ a + b t
  double st = 0, sx = 0, stt = 0, stx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = dt * static_cast<double>(i);
    st += t;
    sx += x[i];
    stt += t * t;
    stx += t * x[i];
  }
  const double b = (n * stx - st * sx) / (n * stt - st * st);
  const double a = (sx - b * st) / n;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - a - b * dt * static_cast<double>(i);
    rss += r * r;
  }
  f[34] = b;
  f[35] = rss / n;
  return f;
}

// |a - b| relative to the larger magnitude, with unit floor for values near zero
inline bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Random walk with occasional repeated values so plateaus get exercised.
inline std::vector<double> random_series(aqmsense::Rng& r, std::size_t n) {
  std::vector<double> x{r.uniform(-50, 50)};
  while (x.size() < n) {
    const double u = r.uniform01();
    if (u < 0.1)
      x.push_back(x.back());
    else
      x.push_back(x.back() + r.uniform(-5, 5));
  }
  return x;
}

// Random MLP with parameters and a batch of normalized inputs/labels.
struct RandomNet {
  aqmsense::MlpModel model;
  Eigen::MatrixXd x;
  std::vector<int> y;
  double alpha = 0;
};

inline RandomNet random_net(std::uint64_t seed) {
  aqmsense::Rng r(seed);
  const int n_in = static_cast<int>(r.uniform_int(1, 6));
  const int depth = static_cast<int>(r.uniform_int(0, 3));
  std::vector<int> sizes{n_in};
  for (int i = 0; i < depth; ++i) sizes.push_back(static_cast<int>(r.uniform_int(1, 6)));
  sizes.push_back(1);
  RandomNet net{aqmsense::MlpModel::zeros(sizes), {}, {}, 0};
  Eigen::VectorXd p(static_cast<Eigen::Index>(net.model.n_params()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = r.uniform(-1, 1);
  net.model.unpack(p);
  const int rows = static_cast<int>(r.uniform_int(1, 12));
  net.x.resize(rows, n_in);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n_in; ++j) net.x(i, j) = r.uniform(-2, 2);
    net.y.push_back(r.bernoulli(0.5) ? 1 : 0);
  }
  net.alpha = r.bernoulli(0.5) ? r.uniform(0, 0.1) : 0.0;
  return net;
}

// Largest relative gap between backprop and central differences.
inline double fd_gradient_error(const RandomNet& net, double eps = 1e-5) {
  const auto lg = aqmsense::loss_and_grad(net.model, net.x, net.y, net.alpha);
  const Eigen::VectorXd p0 = net.model.pack();
  aqmsense::MlpModel m = net.model;
  double worst = 0;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Eigen::VectorXd p = p0;
    p[i] += eps;
    m.unpack(p);
    const double fp = aqmsense::loss_and_grad(m, net.x, net.y, net.alpha).loss;
    p[i] -= 2 * eps;
    m.unpack(p);
    const double fm = aqmsense::loss_and_grad(m, net.x, net.y, net.alpha).loss;
    const double num = (fp - fm) / (2 * eps);
    const double ana = lg.grad[i];
    const double denom = std::max({std::abs(num), std::abs(ana), 1e-6});
    worst = std::max(worst, std::abs(num - ana) / denom);
  }
  return worst;
}

}  // namespace oracle
