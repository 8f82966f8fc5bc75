#include "aqmsense/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "aqmsense/errors.hpp"
#include "aqmsense/parallel.hpp"

namespace aqmsense {

namespace {

std::map<int, std::vector<std::size_t>> by_class(std::span<const int> y) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < y.size(); ++i) out[y[i]].push_back(i);
  return out;
}

double ratio(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

std::vector<Split> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be at least 2");
  auto classes = by_class(y);
  for (const auto& [label, idx] : classes)
    if (idx.size() < static_cast<std::size_t>(k))
      throw StratificationError("class " + std::to_string(label) + " has fewer members than folds");

  Rng rng = Rng(seed).child(stream::kSplits);
  std::vector<std::vector<std::size_t>> test(static_cast<std::size_t>(k));
  std::size_t offset = 0;
  for (auto& [label, idx] : classes) {
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i = 0; i < idx.size(); ++i) test[(offset + i) % static_cast<std::size_t>(k)].push_back(idx[i]);
    offset += idx.size();
  }

  std::vector<Split> folds;
  for (auto& t : test) {
    std::sort(t.begin(), t.end());
    Split s;
    s.test = t;
    std::vector<bool> in_test(y.size(), false);
    for (auto i : t) in_test[i] = true;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (!in_test[i]) s.train.push_back(i);
    folds.push_back(std::move(s));
  }
  return folds;
}

Split stratified_shuffle_split(std::span<const int> y, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("test fraction must lie in (0, 1)");
  Rng rng = Rng(seed).child(stream::kSplits);
  Split s;
  for (auto& [label, idx] : by_class(y)) {
    rng.shuffle(std::span<std::size_t>(idx));
    std::size_t n_test = 0;
    if (idx.size() >= 2) {
      n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    }
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

double ConfusionMatrix::accuracy() const { return ratio(tp + tn, total()); }
double ConfusionMatrix::pie_accuracy() const { return ratio(tp, tp + fn); }
double ConfusionMatrix::droptail_accuracy() const { return ratio(tn, tn + fp); }

ConfusionMatrix evaluate(const MlpModel& m, const Dataset& data, double threshold) {
  if (data.size() == 0) throw InsufficientDataError("evaluate: empty dataset");
  const Eigen::VectorXd p = predict_proba(m, data.x);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool pie = p[static_cast<Eigen::Index>(i)] >= threshold;
    if (data.y[i] == 1)
      (pie ? cm.tp : cm.fn)++;
    else
      (pie ? cm.fp : cm.tn)++;
  }
  return cm;
}

double cross_val_accuracy(const Dataset& data, const TrainConfig& cfg, int k, std::uint64_t seed, int parallelism) {
  const auto folds = stratified_kfold(data.y, k, seed);
  std::vector<double> acc(folds.size());
  parallel_for(folds.size(), parallelism, [&](std::size_t f) {
    const MlpModel m = train(data.subset(folds[f].train), cfg);
    acc[f] = evaluate(m, data.subset(folds[f].test)).accuracy();
  });
  return std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
}

void SearchSpace::validate() const {
  if (min_layers < 1 || min_layers > max_layers || max_layers > 4) throw ConfigError("layer range must lie in [1, 4]");
  if (min_neurons < 1 || min_neurons > max_neurons) throw ConfigError("bad neuron range");
  if (!(min_alpha > 0) || min_alpha > max_alpha) throw ConfigError("bad l2_alpha range");
  if (solvers.empty()) throw ConfigError("search space lists no solver");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("test fraction must lie in (0, 1)");
}

bool SearchSpace::contains(const TrainConfig& cfg) const {
  const auto layers = static_cast<int>(cfg.hidden_layers.size());
  if (layers < min_layers || layers > max_layers) return false;
  for (int h : cfg.hidden_layers)
    if (h < min_neurons || h > max_neurons) return false;
  if (cfg.l2_alpha < min_alpha || cfg.l2_alpha > max_alpha) return false;
  return std::find(solvers.begin(), solvers.end(), cfg.solver) != solvers.end();
}

TrainConfig sample_config(const SearchSpace& space, Rng& rng) {
  TrainConfig cfg;
  const auto layers = rng.uniform_int(space.min_layers, space.max_layers);
  cfg.hidden_layers.clear();
  for (std::int64_t l = 0; l < layers; ++l)
    cfg.hidden_layers.push_back(static_cast<int>(rng.uniform_int(space.min_neurons, space.max_neurons)));
  cfg.l2_alpha = std::clamp(rng.log_uniform(space.min_alpha, space.max_alpha), space.min_alpha, space.max_alpha);
  cfg.solver = space.solvers[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(space.solvers.size()) - 1))];
  cfg.max_iter = space.max_iter;
  cfg.tol = space.tol;
  cfg.seed = rng.next_u64();
  return cfg;
}

SearchResult random_search(const Dataset& data, const SearchSpace& space, int n_evals, std::uint64_t seed,
                           int parallelism) {
  if (n_evals < 1) throw ConfigError("random_search: need at least one evaluation");
  space.validate();

  Rng rng = Rng(seed).child(stream::kSearch);
  SearchResult result;
  for (int i = 0; i < n_evals; ++i)
    result.trials.push_back({static_cast<std::size_t>(i), sample_config(space, rng), 0.0});

  parallel_for(result.trials.size(), parallelism, [&](std::size_t t) {
    Trial& trial = result.trials[t];
    double acc = 0;
    for (int r = 0; r < space.repeats; ++r) {
      const Split s = stratified_shuffle_split(data.y, space.test_fraction,
                                               derive_seed(trial.config.seed, static_cast<std::uint64_t>(r)));
      acc += evaluate(train(data.subset(s.train), trial.config), data.subset(s.test)).accuracy();
    }
    trial.score = acc / space.repeats;
  });

  const auto best = std::max_element(result.trials.begin(), result.trials.end(),
                                     [](const Trial& a, const Trial& b) { return a.score < b.score; });
  result.best_config = best->config;
  result.best_score = best->score;
  return result;
}

ImportanceReport permutation_importance(const MlpModel& m, const Dataset& data, int repeats, std::uint64_t seed) {
  if (data.size() == 0) throw InsufficientDataError("permutation_importance: empty dataset");
  if (repeats < 1) throw ConfigError("permutation_importance: repeats must be at least 1");
  const double baseline = evaluate(m, data).accuracy();

  Dataset work = data;
  std::vector<double> column(data.size());
  ImportanceReport report;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    Rng rng = Rng(seed).child(stream::kImportance).child(static_cast<std::uint64_t>(j));
    double acc = 0;
    for (int r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < data.size(); ++i) column[i] = data.x(static_cast<Eigen::Index>(i), j);
      rng.shuffle(std::span<double>(column));
      for (std::size_t i = 0; i < data.size(); ++i) work.x(static_cast<Eigen::Index>(i), j) = column[i];
      acc += evaluate(m, work).accuracy();
    }
    work.x.col(j) = data.x.col(j);
    const std::string name = static_cast<std::size_t>(j) < data.feature_names.size()
                                 ? data.feature_names[static_cast<std::size_t>(j)]
                                 : "f" + std::to_string(j);
    report.push_back({name, baseline - acc / repeats});
  }
  std::stable_sort(report.begin(), report.end(),
                   [](const Importance& a, const Importance& b) { return a.importance > b.importance; });
  return report;
}

}  // namespace aqmsense
