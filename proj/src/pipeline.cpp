#include "aqmsense/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <numeric>
#include <sstream>

#include "aqmsense/errors.hpp"
#include "aqmsense/features.hpp"
#include "aqmsense/netsim.hpp"
#include "aqmsense/parallel.hpp"

namespace aqmsense {

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dataset_csv_text(const Dataset& d, const std::filesystem::path& tmp) {
  write_dataset_csv(d, tmp);
  return read_text_file(tmp);
}

Dataset pair_dataset(const PairResult& p) {
  std::vector<FeatureVector> rows{p.droptail, p.pie};
  return Dataset::from_features(rows);
}

// Hash of the settings that shape the dataset; parallelism is excluded.
std::string dataset_config_hash(const ExperimentConfig& c) {
  Json j{{"n_topologies", c.n_topologies},
         {"duration_s", c.duration_s},
         {"held_out_fraction", c.held_out_fraction},
         {"base_seed", c.base_seed},
         {"profile", profile_to_json(c.profile)}};
  return sha256_hex(j.dump());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_topologies < 1) throw ConfigError("n_topologies must be at least 1");
  if (!(duration_s > 0)) throw ConfigError("duration_s must be positive");
  if (!(held_out_fraction > 0 && held_out_fraction < 1)) throw ConfigError("held_out_fraction must lie in (0, 1)");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (search_evals < 1) throw ConfigError("search_evals must be at least 1");
  if (importance_repeats < 1) throw ConfigError("importance_repeats must be at least 1");
  if (generalization_topologies < 0) throw ConfigError("generalization_topologies must be non-negative");
  profile.validate();
  complex_profile.validate();
  train.validate();
  search_space.validate();
}

Json experiment_config_to_json(const ExperimentConfig& c) {
  return {{"n_topologies", c.n_topologies},
          {"duration_s", c.duration_s},
          {"held_out_fraction", c.held_out_fraction},
          {"base_seed", c.base_seed},
          {"profile", profile_to_json(c.profile)},
          {"train", train_config_to_json(c.train)},
          {"search", c.search},
          {"search_space", search_space_to_json(c.search_space)},
          {"search_evals", c.search_evals},
          {"importance_repeats", c.importance_repeats},
          {"generalization_topologies", c.generalization_topologies},
          {"complex_profile", profile_to_json(c.complex_profile)},
          {"parallelism", c.parallelism}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.n_topologies = j.value("n_topologies", c.n_topologies);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.held_out_fraction = j.value("held_out_fraction", c.held_out_fraction);
    c.base_seed = j.value("base_seed", c.base_seed);
    if (j.contains("profile")) c.profile = profile_from_json(j.at("profile"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.search = j.value("search", c.search);
    if (j.contains("search_space")) c.search_space = search_space_from_json(j.at("search_space"));
    c.search_evals = j.value("search_evals", c.search_evals);
    c.importance_repeats = j.value("importance_repeats", c.importance_repeats);
    c.generalization_topologies = j.value("generalization_topologies", c.generalization_topologies);
    if (j.contains("complex_profile")) c.complex_profile = profile_from_json(j.at("complex_profile"));
    c.parallelism = j.value("parallelism", c.parallelism);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

void apply_env_overrides(ExperimentConfig& c) {
  const char* v = std::getenv("AQMSENSE_SEED");
  if (!v || !*v) return;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(v, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("AQMSENSE_SEED is not an unsigned integer: ") + v);
  c.base_seed = seed;
}

std::uint64_t topology_seed(std::uint64_t base_seed, std::size_t index) {
  return derive_seed(derive_seed(base_seed, stream::kTopologySeeds), index);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

PairResult run_pair(std::uint64_t seed, const ComplexityProfile& profile, double duration_s) {
  PairResult r;
  r.seed = seed;
  try {
    const Scenario sc = generate_scenario(seed, profile);
    const std::uint64_t sim_seed = derive_seed(seed, stream::kSimulation);
    SimConfig cfg;
    cfg.duration_s = duration_s;
    r.droptail = featurize(
        simulate_detailed(sc.topology, sc.flows, make_discipline(QueueLabel::DropTail, sc.topology), cfg, sim_seed).trace);
    r.pie = featurize(
        simulate_detailed(sc.topology, sc.flows, make_discipline(QueueLabel::Pie, sc.topology), cfg, sim_seed).trace);
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::size_t RunManifest::skipped() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.ok; }));
}

Json manifest_to_json(const RunManifest& m) {
  Json entries = Json::array();
  for (const auto& e : m.entries)
    entries.push_back({{"index", e.index}, {"seed", e.seed}, {"status", e.ok ? "ok" : "skipped"},
                       {"error", e.error}, {"file", e.file}, {"sha256", e.sha256}});
  Json outputs = Json::array();
  for (const auto& [file, hash] : m.outputs) outputs.push_back({{"file", file}, {"sha256", hash}});
  return {{"config_hash", m.config_hash}, {"tool_version", m.tool_version}, {"created_utc", m.created_utc},
          {"updated_utc", m.updated_utc}, {"entries", entries},         {"held_out_seeds", m.held_out_seeds},
          {"outputs", outputs}};
}

RunManifest manifest_from_json(const Json& j) {
  try {
    RunManifest m;
    m.config_hash = j.at("config_hash");
    m.tool_version = j.value("tool_version", "");
    m.created_utc = j.value("created_utc", "");
    m.updated_utc = j.value("updated_utc", "");
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("index").get<std::size_t>(), e.at("seed").get<std::uint64_t>(),
                           e.at("status").get<std::string>() == "ok", e.value("error", ""), e.value("file", ""),
                           e.value("sha256", "")});
    m.held_out_seeds = j.value("held_out_seeds", std::vector<std::uint64_t>{});
    for (const auto& o : j.value("outputs", Json::array()))
      m.outputs.emplace_back(o.at("file").get<std::string>(), o.at("sha256").get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
}

std::size_t held_out_pairs(std::size_t n_pairs, double fraction) {
  if (n_pairs < 2) return 0;
  const auto h = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_pairs)));
  return std::clamp<std::size_t>(h, 1, n_pairs - 1);
}

BuiltDataset build_dataset(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& work_dir) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_topologies);
  const std::string config_hash = dataset_config_hash(cfg);

  std::optional<RunManifest> previous;
  if (work_dir) {
    std::filesystem::create_directories(*work_dir / "pairs");
    const auto mpath = *work_dir / "manifest.json";
    if (std::filesystem::exists(mpath)) {
      RunManifest m = manifest_from_json(read_json_file(mpath));
      if (m.config_hash == config_hash) previous = std::move(m);
    }
  }

  std::vector<PairResult> pairs(n);
  std::vector<ManifestEntry> entries(n);
  parallel_for(n, cfg.parallelism, [&](std::size_t i) {
    const std::uint64_t seed = topology_seed(cfg.base_seed, i);
    ManifestEntry& e = entries[i];
    e.index = i;
    e.seed = seed;

    if (previous && i < previous->entries.size() && previous->entries[i].seed == seed) {
      const ManifestEntry& old = previous->entries[i];
      if (!old.ok) {  // failures are deterministic
        e = old;
        pairs[i].seed = seed;
        return;
      }
      const auto file = *work_dir / old.file;
      if (std::filesystem::exists(file) && sha256_hex(read_text_file(file)) == old.sha256) {
        const Dataset d = read_dataset_csv(file);
        PairResult& p = pairs[i];
        p.seed = seed;
        p.ok = true;
        p.droptail.label = QueueLabel::DropTail;
        p.pie.label = QueueLabel::Pie;
        p.droptail.topology_seed = p.pie.topology_seed = seed;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
          p.droptail.features[j] = d.x(0, static_cast<Eigen::Index>(j));
          p.pie.features[j] = d.x(1, static_cast<Eigen::Index>(j));
        }
        e = old;
        return;
      }
    }

    pairs[i] = run_pair(seed, cfg.profile, cfg.duration_s);
    e.ok = pairs[i].ok;
    e.error = pairs[i].error;
    if (work_dir && e.ok) {
      e.file = "pairs/pair_" + std::to_string(i) + ".csv";
      const auto path = *work_dir / e.file;
      write_dataset_csv(pair_dataset(pairs[i]), path);
      e.sha256 = sha256_hex(read_text_file(path));
    }
  });

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n; ++i)
    if (pairs[i].ok) ok.push_back(i);

  std::vector<std::size_t> shuffled = ok;
  Rng(cfg.base_seed).child(stream::kHeldOut).shuffle(std::span<std::size_t>(shuffled));
  std::vector<bool> held(n, false);
  for (std::size_t k = 0; k < held_out_pairs(ok.size(), cfg.held_out_fraction); ++k) held[shuffled[k]] = true;

  std::vector<FeatureVector> train_rows, held_rows;
  RunManifest manifest;
  for (std::size_t i : ok) {
    auto& dst = held[i] ? held_rows : train_rows;
    dst.push_back(pairs[i].droptail);
    dst.push_back(pairs[i].pie);
    if (held[i]) manifest.held_out_seeds.push_back(pairs[i].seed);
  }

  BuiltDataset out;
  out.train = Dataset::from_features(train_rows);
  out.held_out = Dataset::from_features(held_rows);

  manifest.config_hash = config_hash;
  manifest.tool_version = AQMSENSE_VERSION;
  manifest.created_utc = previous ? previous->created_utc : utc_now();
  manifest.updated_utc = utc_now();
  manifest.entries = std::move(entries);
  if (work_dir) {
    for (const auto& [name, data] : {std::pair{"train.csv", &out.train}, std::pair{"held_out.csv", &out.held_out}}) {
      const std::string text = dataset_csv_text(*data, *work_dir / name);
      manifest.outputs.emplace_back(name, sha256_hex(text));
    }
    write_text_file(*work_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  }
  out.manifest = std::move(manifest);
  return out;
}

ConfusionMatrix run_generalization_test(const MlpModel& model, const ComplexityProfile& complex_profile,
                                        const ComplexityProfile& train_profile, int n, std::uint64_t seed,
                                        double duration_s, int parallelism) {
  complex_profile.validate();
  if (!strictly_dominates(complex_profile, train_profile))
    throw ConfigError("generalization profile must strictly dominate the training profile");
  if (n < 1) throw ConfigError("generalization test needs at least one topology");

  std::vector<PairResult> pairs(static_cast<std::size_t>(n));
  parallel_for(pairs.size(), parallelism, [&](std::size_t i) {
    pairs[i] = run_pair(topology_seed(seed, i), complex_profile, duration_s);
  });
  std::vector<FeatureVector> rows;
  for (const auto& p : pairs)
    if (p.ok) {
      rows.push_back(p.droptail);
      rows.push_back(p.pie);
    }
  if (rows.empty()) throw Error("every generalization topology failed to simulate");
  return evaluate(model, Dataset::from_features(rows));
}

void emit_report(const ConfusionMatrix& cm, const ImportanceReport& imp, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::ostringstream c;
  c << "actual,predicted_droptail,predicted_pie\n"
    << "droptail," << cm.tn << ',' << cm.fp << '\n'
    << "pie," << cm.fn << ',' << cm.tp << '\n';
  write_text_file(out_dir / "confusion_matrix.csv", c.str());

  std::ostringstream i;
  i << "rank,feature,importance\n";
  char buf[64];
  for (std::size_t k = 0; k < imp.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", imp[k].importance);
    i << k + 1 << ',' << imp[k].feature << ',' << buf << '\n';
  }
  write_text_file(out_dir / "importance.csv", i.str());

  std::ostringstream s;
  auto line = [&s, &buf](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.4f", v);
    s << key << ' ' << buf << '\n';
  };
  s << "examples " << cm.total() << '\n';
  line("accuracy", cm.accuracy());
  line("droptail_accuracy", cm.droptail_accuracy());
  line("pie_accuracy", cm.pie_accuracy());
  s << "top_features";
  for (std::size_t k = 0; k < std::min<std::size_t>(10, imp.size()); ++k) s << ' ' << imp[k].feature;
  s << '\n';
  write_text_file(out_dir / "summary.txt", s.str());
}

PipelineOutput run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const BuiltDataset data = build_dataset(cfg, out_dir / "work");
  if (data.held_out.size() == 0) throw Error("held-out split is empty");

  PipelineOutput out;
  TrainConfig train_cfg = cfg.train;
  if (cfg.search) {
    out.search = random_search(data.train, cfg.search_space, cfg.search_evals, cfg.base_seed, cfg.parallelism);
    train_cfg = out.search->best_config;
    Json log = Json::array();
    for (const auto& t : out.search->trials)
      log.push_back({{"index", t.index}, {"score", t.score}, {"config", train_config_to_json(t.config)}});
    write_text_file(out_dir / "search.json",
                    Json{{"best_score", out.search->best_score},
                         {"best_config", train_config_to_json(out.search->best_config)},
                         {"trials", log}}
                            .dump(2) +
                        "\n");
  }
  out.model = train(data.train, train_cfg);
  write_text_file(out_dir / "model.json", model_to_json(out.model).dump() + "\n");

  out.held_out = evaluate(out.model, data.held_out);
  out.importance = permutation_importance(out.model, data.held_out, cfg.importance_repeats, cfg.base_seed);
  emit_report(out.held_out, out.importance, out_dir / "report");

  if (cfg.generalization_topologies > 0) {
    out.generalization =
        run_generalization_test(out.model, cfg.complex_profile, cfg.profile, cfg.generalization_topologies,
                                derive_seed(cfg.base_seed, stream::kHeldOut), cfg.duration_s, cfg.parallelism);
    emit_report(*out.generalization, out.importance, out_dir / "report_generalization");
  }
  return out;
}

}  // namespace aqmsense
