#include <gtest/gtest.h>

#include <filesystem>

#include "aqmsense/dataset.hpp"
#include "aqmsense/errors.hpp"
#include "aqmsense/io.hpp"
#include "aqmsense/mlp.hpp"
#include "aqmsense/netsim.hpp"
#include "oracle.hpp"

using namespace aqmsense;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aqmsense_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Io, ScenarioRoundTrip) {
  const Scenario sc = generate_scenario(21);
  EXPECT_EQ(scenario_from_json(scenario_to_json(sc)), sc);
  EXPECT_EQ(scenario_from_json(Json::parse(scenario_to_json(sc).dump())), sc);
}

TEST(Io, ScenarioWithoutFlowsGetsPrimary) {
  Json j = scenario_to_json(generate_scenario(21));
  j.erase("flows");
  const Scenario sc = scenario_from_json(j);
  ASSERT_EQ(sc.flows.size(), 1u);
  EXPECT_EQ(sc.flows[0].kind, FlowKind::Primary);
}

TEST(Io, ProfileRoundTripAndPartialKeys) {
  const ComplexityProfile c = ComplexityProfile::complex();
  EXPECT_EQ(profile_from_json(profile_to_json(c)), c);
  const ComplexityProfile p = profile_from_json(Json{{"switches", {4, 6}}});
  EXPECT_EQ(p.switches, (IntRange{4, 6}));
  EXPECT_EQ(p.hosts_per_switch, ComplexityProfile{}.hosts_per_switch);
  EXPECT_THROW(profile_from_json(Json{{"switches", {6, 4}}}), ConfigError);
}

TEST(Io, TrainConfigRoundTrip) {
  TrainConfig c;
  c.hidden_layers = {7, 3};
  c.solver = Solver::ADAM;
  c.l2_alpha = 1.25e-7;
  c.seed = 123456789012345ULL;
  EXPECT_EQ(train_config_from_json(train_config_to_json(c)), c);
  EXPECT_THROW(train_config_from_json(Json{{"solver", "newton"}}), ConfigError);
}

TEST(Io, ModelRoundTripKeepsPredictions) {
  auto net = oracle::random_net(5);
  net.model.norm_mean.setRandom();
  net.model.norm_std.setConstant(1.7);
  const MlpModel back = model_from_json(Json::parse(model_to_json(net.model).dump()));
  EXPECT_EQ(back.pack(), net.model.pack());
  EXPECT_EQ(back.layer_sizes, net.model.layer_sizes);
  EXPECT_EQ(predict_proba(back, net.x), predict_proba(net.model, net.x));
  EXPECT_EQ(model_to_json(net.model)["format_version"], 1);
}

TEST(Io, ModelRejectsBadShapes) {
  Json j = model_to_json(MlpModel::zeros({3, 2, 1}));
  j["weights"][0] = Json::array({1.0, 2.0});
  EXPECT_THROW(model_from_json(j), ShapeError);
  Json v = model_to_json(MlpModel::zeros({3, 1}));
  v["format_version"] = 99;
  EXPECT_THROW(model_from_json(v), IoError);
}

TEST(Io, TraceCsvRoundTripIsExact) {
  const Scenario sc = generate_scenario(2);
  const Trace t = simulate(sc.topology, sc.flows, make_discipline(QueueLabel::DropTail, sc.topology), 5.0, 3);
  const Trace back = trace_from_csv(trace_to_csv(t));
  EXPECT_EQ(back.rtt, t.rtt);
  EXPECT_EQ(back.cwnd, t.cwnd);
}

TEST(Io, TraceWithSidecar) {
  const auto dir = scratch("trace");
  Scenario sc = generate_scenario(2);
  Trace t = simulate(sc.topology, sc.flows, make_discipline(QueueLabel::Pie, sc.topology), 3.0, 3);
  t.topology_seed = 2;
  write_trace(t, make_discipline(QueueLabel::Pie, sc.topology), 3, dir / "t.csv");
  EXPECT_TRUE(fs::exists(dir / "t.json"));
  EXPECT_EQ(read_trace(dir / "t.csv"), t);
}

TEST(Io, DatasetCsvRoundTripIsExact) {
  const auto dir = scratch("dataset");
  Rng r(1);
  std::vector<FeatureVector> rows(6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (auto& v : rows[i].features) v = r.uniform(-1e6, 1e6) / 3.0;
    rows[i].label = i % 2 ? QueueLabel::Pie : QueueLabel::DropTail;
    rows[i].topology_seed = 1000 + i / 2;
  }
  const Dataset d = Dataset::from_features(rows);
  write_dataset_csv(d, dir / "d.csv");
  const Dataset back = read_dataset_csv(dir / "d.csv");
  EXPECT_EQ(back.feature_names, d.feature_names);
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.y, d.y);
  EXPECT_EQ(back.topology_seed, d.topology_seed);
}

TEST(Io, MalformedInputsRaiseIoError) {
  const auto dir = scratch("bad");
  write_text_file(dir / "bad.json", "{ not json");
  EXPECT_THROW(read_json_file(dir / "bad.json"), IoError);
  EXPECT_THROW(read_json_file(dir / "missing.json"), IoError);
  write_text_file(dir / "bad.csv", "a,label,topology_seed\n1.0,maybe,3\n");
  EXPECT_THROW(read_dataset_csv(dir / "bad.csv"), IoError);
  EXPECT_THROW(trace_from_csv("series,t_s,value\nrtt_ms,zero,1\n"), IoError);
}

TEST(Io, WriteCreatesParentDirectories) {
  const auto dir = scratch("nested");
  write_text_file(dir / "a" / "b" / "c.txt", "x");
  EXPECT_EQ(read_text_file(dir / "a" / "b" / "c.txt"), "x");
}
