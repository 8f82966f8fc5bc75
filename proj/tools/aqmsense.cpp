// aqmsense: generate topologies, simulate, featurize, train and evaluate
// bottleneck queue-discipline classifiers.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aqmsense/dataset.hpp"
#include "aqmsense/errors.hpp"
#include "aqmsense/features.hpp"
#include "aqmsense/io.hpp"
#include "aqmsense/learner.hpp"
#include "aqmsense/netsim.hpp"
#include "aqmsense/pipeline.hpp"
#include "aqmsense/topology.hpp"

namespace fs = std::filesystem;
using namespace aqmsense;

namespace {

void print_confusion(const ConfusionMatrix& cm) {
  std::printf("examples %zu\n", cm.total());
  std::printf("                 pred_droptail  pred_pie\n");
  std::printf("actual_droptail  %13zu  %8zu\n", cm.tn, cm.fp);
  std::printf("actual_pie       %13zu  %8zu\n", cm.fn, cm.tp);
  std::printf("accuracy %.4f  droptail %.4f  pie %.4f\n", cm.accuracy(), cm.droptail_accuracy(), cm.pie_accuracy());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bottleneck queue-discipline detection from RTT and CWND traces"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write random topologies as JSON");
  std::uint64_t gen_seed = 0;
  int gen_count = 1;
  std::string gen_out, gen_profile;
  gen->add_option("--seed", gen_seed, "Seed of the first topology; the i-th uses seed + i")->required();
  gen->add_option("--count", gen_count, "Number of topologies")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--profile", gen_profile, "Complexity profile JSON");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one topology and write the RTT/CWND trace");
  std::string sim_topology, sim_discipline, sim_out;
  double sim_duration = 20.0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--topology", sim_topology, "Topology JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--discipline", sim_discipline, "Bottleneck queue")
      ->required()
      ->check(CLI::IsMember({"droptail", "pie"}));
  sim->add_option("--duration", sim_duration, "Simulated seconds")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Simulation seed");
  sim->add_option("--out", sim_out, "Trace CSV (metadata goes next to it as .json)")->required();

  // featurize
  auto* feat = app.add_subcommand("featurize", "Turn a directory of traces into a dataset CSV");
  std::string feat_traces, feat_out;
  feat->add_option("--traces", feat_traces, "Directory of trace CSVs")->required()->check(CLI::ExistingDirectory);
  feat->add_option("--out", feat_out, "Dataset CSV")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a classifier");
  std::string tr_data, tr_config, tr_out;
  tr->add_option("--data", tr_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", tr_config, "Training config JSON (defaults: 1x14 tanh, LBFGS, alpha 5e-11)");
  tr->add_option("--out", tr_out, "Model JSON")->required();

  // search
  auto* se = app.add_subcommand("search", "Randomized hyperparameter search");
  std::string se_data, se_space, se_out;
  int se_evals = 10, se_parallel = 1, se_repeats = -1;
  std::uint64_t se_seed = 0;
  se->add_option("--data", se_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  se->add_option("--evals", se_evals, "Configurations to try")->check(CLI::PositiveNumber);
  se->add_option("--seed", se_seed, "Search seed");
  se->add_option("--repeats", se_repeats, "Stratified 90/10 shuffles per configuration (default 100)");
  se->add_option("--space", se_space, "Search space JSON");
  se->add_option("--parallelism", se_parallel, "Worker threads")->check(CLI::PositiveNumber);
  se->add_option("--out", se_out, "Write best config and trial log as JSON");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Confusion matrix of a model on a dataset");
  std::string ev_model, ev_data, ev_report;
  double ev_threshold = 0.5;
  ev->add_option("--model", ev_model, "Model JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--threshold", ev_threshold, "Predict PIE when P(PIE) >= threshold");
  ev->add_option("--report", ev_report, "Write confusion_matrix.csv here");

  // importance
  auto* im = app.add_subcommand("importance", "Permutation feature importance");
  std::string im_model, im_data, im_report;
  int im_repeats = 10;
  std::uint64_t im_seed = 0;
  im->add_option("--model", im_model, "Model JSON")->required()->check(CLI::ExistingFile);
  im->add_option("--data", im_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  im->add_option("--repeats", im_repeats, "Shuffles per feature")->check(CLI::PositiveNumber);
  im->add_option("--seed", im_seed, "Shuffle seed");
  im->add_option("--report", im_report, "Write confusion_matrix.csv, importance.csv, summary.txt here");

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run the whole experiment from one config file");
  std::string pl_config, pl_out;
  pl->add_option("--config", pl_config, "Experiment config JSON (see `config --dump`)");
  pl->add_option("--out", pl_out, "Output directory")->required();

  // config
  auto* cf = app.add_subcommand("config", "Show the experiment configuration");
  bool cf_dump = false;
  cf->add_flag("--dump", cf_dump, "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const ComplexityProfile profile = gen_profile.empty() ? ComplexityProfile{} : profile_from_json(read_json_file(gen_profile));
      fs::create_directories(gen_out);
      for (int i = 0; i < gen_count; ++i) {
        const std::uint64_t seed = gen_seed + static_cast<std::uint64_t>(i);
        const Scenario sc = generate_scenario(seed, profile);
        const fs::path path = fs::path(gen_out) / ("topology_" + std::to_string(seed) + ".json");
        write_text_file(path, scenario_to_json(sc).dump(2) + "\n");
      }
      std::printf("wrote %d topologies to %s\n", gen_count, gen_out.c_str());
    } else if (sim->parsed()) {
      const Scenario sc = scenario_from_json(read_json_file(sim_topology));
      const QueueDiscipline disc = make_discipline(parse_label(sim_discipline), sc.topology);
      SimConfig cfg;
      cfg.duration_s = sim_duration;
      const SimResult r = simulate_detailed(sc.topology, sc.flows, disc, cfg, sim_seed);
      write_trace(r.trace, disc, sim_seed, sim_out);
      std::printf("%zu rtt samples, %zu cwnd samples -> %s\n", r.trace.rtt.size(), r.trace.cwnd.size(),
                  sim_out.c_str());
    } else if (feat->parsed()) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(feat_traces))
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw ConfigError("no trace CSVs in " + feat_traces);
      std::vector<FeatureVector> rows;
      for (const auto& f : files) rows.push_back(featurize(read_trace(f)));
      write_dataset_csv(Dataset::from_features(rows), feat_out);
      std::printf("featurized %zu traces -> %s\n", rows.size(), feat_out.c_str());
    } else if (tr->parsed()) {
      const TrainConfig cfg = tr_config.empty() ? TrainConfig{} : train_config_from_json(read_json_file(tr_config));
      const Dataset d = read_dataset_csv(tr_data);
      const MlpModel m = train(d, cfg);
      write_text_file(tr_out, model_to_json(m).dump() + "\n");
      std::printf("trained on %zu examples, training accuracy %.4f -> %s\n", d.size(), evaluate(m, d).accuracy(),
                  tr_out.c_str());
    } else if (se->parsed()) {
      SearchSpace space = se_space.empty() ? SearchSpace{} : search_space_from_json(read_json_file(se_space));
      if (se_repeats > 0) space.repeats = se_repeats;
      const Dataset d = read_dataset_csv(se_data);
      const SearchResult r = random_search(d, space, se_evals, se_seed, se_parallel);
      for (const auto& t : r.trials)
        std::printf("trial %zu score %.4f %s\n", t.index, t.score, train_config_to_json(t.config).dump().c_str());
      std::printf("best score %.4f %s\n", r.best_score, train_config_to_json(r.best_config).dump().c_str());
      if (!se_out.empty()) {
        Json log = Json::array();
        for (const auto& t : r.trials)
          log.push_back({{"index", t.index}, {"score", t.score}, {"config", train_config_to_json(t.config)}});
        write_text_file(se_out, Json{{"best_score", r.best_score},
                                     {"best_config", train_config_to_json(r.best_config)},
                                     {"trials", log}}
                                        .dump(2) +
                                    "\n");
      }
    } else if (ev->parsed()) {
      const MlpModel m = model_from_json(read_json_file(ev_model));
      const ConfusionMatrix cm = evaluate(m, read_dataset_csv(ev_data), ev_threshold);
      print_confusion(cm);
      if (!ev_report.empty()) emit_report(cm, {}, ev_report);
    } else if (im->parsed()) {
      const MlpModel m = model_from_json(read_json_file(im_model));
      const Dataset d = read_dataset_csv(im_data);
      const ImportanceReport rep = permutation_importance(m, d, im_repeats, im_seed);
      for (std::size_t k = 0; k < rep.size(); ++k)
        std::printf("%3zu  %-28s %.6f\n", k + 1, rep[k].feature.c_str(), rep[k].importance);
      if (!im_report.empty()) emit_report(evaluate(m, d), rep, im_report);
    } else if (pl->parsed()) {
      ExperimentConfig cfg = pl_config.empty() ? ExperimentConfig{} : experiment_config_from_json(read_json_file(pl_config));
      apply_env_overrides(cfg);
      const PipelineOutput out = run_pipeline(cfg, pl_out);
      std::printf("held-out:\n");
      print_confusion(out.held_out);
      if (out.generalization) {
        std::printf("generalization:\n");
        print_confusion(*out.generalization);
      }
      std::printf("reports in %s\n", pl_out.c_str());
    } else if (cf->parsed()) {
      ExperimentConfig cfg;
      apply_env_overrides(cfg);
      std::printf("%s\n", experiment_config_to_json(cfg).dump(2).c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
