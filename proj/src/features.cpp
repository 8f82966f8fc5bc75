#include "aqmsense/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aqmsense/errors.hpp"

namespace aqmsense {

namespace {

double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// central moment of order k (population)
double central_moment(std::span<const double> x, double mean, int k) {
  double acc = 0;
  for (double v : x) acc += std::pow(v - mean, k);
  return acc / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return central_moment(x, mean_of(x), 2);
}

double min_of(std::span<const double> x) { return x.empty() ? 0.0 : *std::min_element(x.begin(), x.end()); }
double max_of(std::span<const double> x) { return x.empty() ? 0.0 : *std::max_element(x.begin(), x.end()); }

double median_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  std::vector<double> v(x.begin(), x.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double mean_abs(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0;
  for (double v : x) acc += std::abs(v);
  return acc / static_cast<double>(x.size());
}

double autocorrelation(std::span<const double> x, std::size_t lag) {
  if (x.size() <= lag) return 0.0;
  const double m = mean_of(x);
  double den = 0;
  for (double v : x) den += (v - m) * (v - m);
  if (den == 0.0) return 0.0;
  double num = 0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) num += (x[i] - m) * (x[i + lag] - m);
  return num / den;
}

std::size_t longest_run(std::span<const double> x, bool increasing) {
  std::size_t best = 0, cur = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const bool step = increasing ? x[i] > x[i - 1] : x[i] < x[i - 1];
    cur = step ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

std::vector<double> pick(std::span<const double> x, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(x[i]);
  return out;
}

}  // namespace

std::vector<double> ewma(std::span<const double> x, double alpha) {
  if (x.empty()) throw InsufficientDataError("ewma: empty series");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ewma: alpha must lie in (0, 1]");
  std::vector<double> s(x.size());
  s[0] = x[0];
  for (std::size_t t = 1; t < x.size(); ++t) s[t] = alpha * x[t] + (1.0 - alpha) * s[t - 1];
  return s;
}

double interpolate_at(std::span<const Sample> samples, double t) {
  if (samples.empty()) throw InsufficientDataError("interpolate_at: no samples");
  if (t <= samples.front().t_s) return samples.front().value;
  if (t >= samples.back().t_s) return samples.back().value;
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double v, const Sample& s) { return v < s.t_s; });
  const Sample& hi = *it;
  const Sample& lo = *(it - 1);
  const double w = (t - lo.t_s) / (hi.t_s - lo.t_s);
  return lo.value + w * (hi.value - lo.value);
}

Series resample_uniform(std::span<const Sample> samples, double dt_s) {
  if (samples.size() < 2) throw InsufficientDataError("resample_uniform: need at least two samples");
  if (!(dt_s > 0)) throw ConfigError("resample_uniform: dt must be positive");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t_s > samples[i - 1].t_s))
      throw InsufficientDataError("resample_uniform: timestamps not strictly increasing");

  const double t0 = samples.front().t_s;
  const double span = samples.back().t_s - t0;
  const auto n = static_cast<std::size_t>(std::floor(span / dt_s + 1e-9)) + 1;
  Series out{{}, dt_s};
  out.values.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt_s;
    while (seg + 1 < samples.size() && samples[seg + 1].t_s < t) ++seg;
    if (seg + 1 >= samples.size() || t >= samples.back().t_s) {
      out.values.push_back(samples.back().value);
    } else if (t <= samples[seg].t_s) {
      out.values.push_back(samples[seg].value);
    } else {
      const Sample& lo = samples[seg];
      const Sample& hi = samples[seg + 1];
      out.values.push_back(lo.value + (t - lo.t_s) / (hi.t_s - lo.t_s) * (hi.value - lo.value));
    }
  }
  return out;
}

std::vector<double> gradient(std::span<const double> x, int order) {
  if (order != 1 && order != 2) throw ConfigError("gradient: order must be 1 or 2");
  if (x.size() < static_cast<std::size_t>(order) + 1) throw InsufficientDataError("gradient: series too short");
  std::vector<double> g(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) g[i] = x[i + 1] - x[i];
  return order == 1 ? g : gradient(g, 1);
}

Extrema local_extrema(std::span<const double> x) {
  Extrema e;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] > x[i - 1] && x[i] > x[i + 1]) e.maxima.push_back(i);
    if (x[i] < x[i - 1] && x[i] < x[i + 1]) e.minima.push_back(i);
  }
  return e;
}

double max_sum_subsequence(std::span<const double> x) {
  if (x.empty()) throw InsufficientDataError("max_sum_subsequence: empty series");
  double best = x[0], cur = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    cur = std::max(x[i], cur + x[i]);
    best = std::max(best, cur);
  }
  return best;
}

double total_variation(std::span<const double> x, TvNorm norm) {
  double acc = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double d = x[i + 1] - x[i];
    acc += norm == TvNorm::L1 ? std::abs(d) : d * d;
  }
  return acc;
}

const std::array<std::string, kFeaturesPerSeries>& stat_names() {
  static const std::array<std::string, kFeaturesPerSeries> names{
      "mean",          "var",           "min",           "max",           "median",
      "skew",          "kurtosis",      "range",         "grad1_mean",    "grad1_var",
      "grad1_min",     "grad1_max",     "grad1_absmean", "grad1_maxsum",  "grad1_zerocross",
      "grad2_mean",    "grad2_var",     "grad2_min",     "grad2_max",     "grad2_absmean",
      "maxima_count",  "maxima_mean",   "maxima_var",    "minima_count",  "minima_mean",
      "minima_var",    "maxima_gap_mean", "maxima_gap_var", "tv_l1",      "tv_l2sq",
      "longest_rise",  "longest_fall",  "acf1",          "acf5",          "trend_slope",
      "trend_resid_var"};
  return names;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const char* prefix : {"rtt_", "cwnd_"})
      for (const auto& s : stat_names()) out.push_back(prefix + s);
    return out;
  }();
  return names;
}

std::array<double, kFeaturesPerSeries> series_features(std::span<const double> x, double dt_s) {
  if (x.size() < kMinSeriesLength) throw InsufficientDataError("series shorter than 8 samples");
  std::array<double, kFeaturesPerSeries> f{};
  const double m = mean_of(x);
  const double m2 = variance_of(x);
  f[0] = m;
  f[1] = m2;
  f[2] = min_of(x);
  f[3] = max_of(x);
  f[4] = median_of(x);
  if (m2 > 0) {
    f[5] = central_moment(x, m, 3) / std::pow(m2, 1.5);
    f[6] = central_moment(x, m, 4) / (m2 * m2) - 3.0;
  }
  f[7] = f[3] - f[2];

  const auto g1 = gradient(x, 1);
  f[8] = mean_of(g1);
  f[9] = variance_of(g1);
  f[10] = min_of(g1);
  f[11] = max_of(g1);
  f[12] = mean_abs(g1);
  f[13] = max_sum_subsequence(g1);
  std::size_t crossings = 0;
  for (std::size_t i = 0; i + 1 < g1.size(); ++i)
    if (g1[i] * g1[i + 1] < 0) ++crossings;
  f[14] = static_cast<double>(crossings);

  const auto g2 = gradient(x, 2);
  f[15] = mean_of(g2);
  f[16] = variance_of(g2);
  f[17] = min_of(g2);
  f[18] = max_of(g2);
  f[19] = mean_abs(g2);

  const auto ext = local_extrema(x);
  const auto maxv = pick(x, ext.maxima);
  const auto minv = pick(x, ext.minima);
  f[20] = static_cast<double>(maxv.size());
  f[21] = mean_of(maxv);
  f[22] = variance_of(maxv);
  f[23] = static_cast<double>(minv.size());
  f[24] = mean_of(minv);
  f[25] = variance_of(minv);
  if (ext.maxima.size() >= 2) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < ext.maxima.size(); ++i)
      gaps.push_back(static_cast<double>(ext.maxima[i] - ext.maxima[i - 1]) * dt_s);
    f[26] = mean_of(gaps);
    f[27] = variance_of(gaps);
  }

  f[28] = total_variation(x, TvNorm::L1);
  f[29] = total_variation(x, TvNorm::L2sq);
  f[30] = static_cast<double>(longest_run(x, true));
  f[31] = static_cast<double>(longest_run(x, false));
  f[32] = autocorrelation(x, 1);
  f[33] = autocorrelation(x, 5);

  // least-squares line against t = i * dt
  const auto n = static_cast<double>(x.size());
  const double t_mean = 0.5 * (n - 1.0) * dt_s;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dt = static_cast<double>(i) * dt_s - t_mean;
    sxy += dt * (x[i] - m);
    sxx += dt * dt;
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  double resid = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - (m + slope * (static_cast<double>(i) * dt_s - t_mean));
    resid += r * r;
  }
  f[34] = slope;
  f[35] = resid / n;

  for (double& v : f)
    if (!std::isfinite(v)) v = 0.0;
  return f;
}

namespace {

std::vector<double> smooth(std::span<const Sample> samples, const char* what) {
  Series s = resample_uniform(samples, kGridDt);
  if (s.values.size() < kMinSeriesLength)
    throw InsufficientDataError(std::string(what) + " series shorter than 8 grid points");
  return ewma(s.values, kEwmaAlpha);
}

}  // namespace

std::vector<double> smoothed_rtt(const Trace& trace) { return smooth(trace.rtt, "rtt"); }

FeatureVector featurize(const Trace& trace) {
  FeatureVector fv;
  fv.label = trace.label;
  fv.topology_seed = trace.topology_seed;
  const auto rtt = series_features(smooth(trace.rtt, "rtt"), kGridDt);
  const auto cwnd = series_features(smooth(trace.cwnd, "cwnd"), kGridDt);
  std::copy(rtt.begin(), rtt.end(), fv.features.begin());
  std::copy(cwnd.begin(), cwnd.end(), fv.features.begin() + kFeaturesPerSeries);
  return fv;
}

}  // namespace aqmsense
