#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqmsense/netsim.hpp"

namespace aqmsense {

inline constexpr std::size_t kFeaturesPerSeries = 36;
inline constexpr std::size_t kFeatureCount = 2 * kFeaturesPerSeries;
inline constexpr double kEwmaAlpha = 0.3;
inline constexpr double kGridDt = 0.1;
inline constexpr std::size_t kMinSeriesLength = 8;

/// Uniformly sampled series.
struct Series {
  std::vector<double> values;
  double dt_s = kGridDt;
};

/// s0 = x0, s_t = alpha * x_t + (1 - alpha) * s_{t-1}.
std::vector<double> ewma(std::span<const double> x, double alpha);

/// Piecewise-linear value at t, clamped to the end values outside the span.
double interpolate_at(std::span<const Sample> samples, double t);

/// Linear interpolation onto t0, t0 + dt, ..., up to the last sample time;
/// grid points past the last sample take its value.
Series resample_uniform(std::span<const Sample> samples, double dt_s);

/// order 1: x[i+1] - x[i]; order 2: the same applied twice.
std::vector<double> gradient(std::span<const double> x, int order);

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;
};

/// Strict interior extrema; plateaus and endpoints never qualify.
Extrema local_extrema(std::span<const double> x);

/// Largest sum over contiguous nonempty runs (Kadane).
double max_sum_subsequence(std::span<const double> x);

enum class TvNorm { L1, L2sq };
double total_variation(std::span<const double> x, TvNorm norm);

/// The 36 statistics of one smoothed series, in canonical order.
std::array<double, kFeaturesPerSeries> series_features(std::span<const double> x, double dt_s);

/// Canonical feature names: "rtt_<stat>" for 0..35, "cwnd_<stat>" for 36..71.
const std::vector<std::string>& feature_names();

/// Short statistic names shared by both blocks.
const std::array<std::string, kFeaturesPerSeries>& stat_names();

struct FeatureVector {
  std::array<double, kFeatureCount> features{};
  QueueLabel label = QueueLabel::DropTail;
  std::uint64_t topology_seed = 0;
};

/// Resample both series onto the 0.1 s grid, smooth with EWMA(0.3), and
/// concatenate the RTT block then the CWND block.
FeatureVector featurize(const Trace& trace);

/// Grid-resampled and smoothed RTT series, as seen by featurize.
std::vector<double> smoothed_rtt(const Trace& trace);

}  // namespace aqmsense
