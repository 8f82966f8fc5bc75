#include "aqmsense/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aqmsense/errors.hpp"

namespace aqmsense {

namespace {

NodeKind parse_kind(const std::string& s) {
  if (s == "switch") return NodeKind::Switch;
  if (s == "host") return NodeKind::Host;
  throw IoError("unknown node kind '" + s + "'");
}

NodeRole parse_role(const std::string& s) {
  if (s == "source") return NodeRole::Source;
  if (s == "sink") return NodeRole::Sink;
  if (s == "interior") return NodeRole::Interior;
  throw IoError("unknown node role '" + s + "'");
}

FlowKind parse_flow_kind(const std::string& s) {
  if (s == "primary") return FlowKind::Primary;
  if (s == "auxiliary") return FlowKind::Auxiliary;
  throw IoError("unknown flow kind '" + s + "'");
}

Json range_json(const IntRange& r) { return Json::array({r.lo, r.hi}); }
Json range_json(const RealRange& r) { return Json::array({r.lo, r.hi}); }

template <class R>
void read_range(const Json& j, const char* key, R& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string("profile key ") + key + " must be [min, max]");
  v.at(0).get_to(out.lo);
  v.at(1).get_to(out.hi);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// nlohmann throws its own exception types; surface them as IoError
template <class Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json scenario_to_json(const Scenario& s) {
  const Topology& t = s.topology;
  Json j;
  j["nodes"] = Json::array();
  for (const auto& n : t.nodes) j["nodes"].push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"role", to_string(n.role)}});
  j["links"] = Json::array();
  for (const auto& l : t.links)
    j["links"].push_back({{"a", l.a}, {"b", l.b}, {"delay_ms", l.delay_ms}, {"capacity_mbps", l.capacity_mbps}});
  j["path"] = t.path;
  j["bottleneck_link"] = t.bottleneck_link ? Json(*t.bottleneck_link) : Json(nullptr);
  j["n_switches"] = t.n_switches;
  j["seed"] = t.rng_seed;
  j["flows"] = Json::array();
  for (const auto& f : s.flows)
    j["flows"].push_back({{"src", f.src}, {"dst", f.dst}, {"start_s", f.start_s}, {"kind", to_string(f.kind)}});
  return j;
}

Scenario scenario_from_json(const Json& j) {
  return guarded("topology JSON", [&] {
    Scenario s;
    Topology& t = s.topology;
    for (const auto& n : j.at("nodes"))
      t.nodes.push_back({n.at("id").get<int>(), parse_kind(n.at("kind")), parse_role(n.at("role"))});
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
      if (t.nodes[i].id != static_cast<int>(i)) throw IoError("node ids must be 0..n-1 in order");
    for (const auto& l : j.at("links")) {
      Link link{l.at("a").get<int>(), l.at("b").get<int>(), l.at("delay_ms").get<double>(),
                l.at("capacity_mbps").get<double>()};
      const auto n = static_cast<int>(t.nodes.size());
      if (link.a < 0 || link.b < 0 || link.a >= n || link.b >= n || link.a == link.b)
        throw IoError("link endpoints invalid");
      if (!(link.delay_ms > 0 && link.capacity_mbps > 0)) throw IoError("link delay and capacity must be positive");
      t.links.push_back(link);
    }
    t.path = j.at("path").get<std::vector<NodeId>>();
    if (t.path.size() < 2) throw IoError("path needs a source and a sink");
    if (!j.at("bottleneck_link").is_null()) t.bottleneck_link = j.at("bottleneck_link").get<std::size_t>();
    if (t.bottleneck_link && *t.bottleneck_link >= t.links.size()) throw IoError("bottleneck_link out of range");
    t.n_switches = j.value("n_switches", static_cast<int>(t.path.size()) - 2);
    t.rng_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("flows")) {
      for (const auto& f : j.at("flows"))
        s.flows.push_back({f.at("src").get<int>(), f.at("dst").get<int>(), f.at("start_s").get<double>(),
                           parse_flow_kind(f.at("kind"))});
    } else {
      s.flows.push_back({t.source(), t.sink(), 0.0, FlowKind::Primary});
    }
    return s;
  });
}

Json profile_to_json(const ComplexityProfile& p) {
  return {{"switches", range_json(p.switches)},
          {"component_nodes", range_json(p.component_nodes)},
          {"hosts_per_switch", range_json(p.hosts_per_switch)},
          {"edge_prob", range_json(p.edge_prob)},
          {"aux_flows", range_json(p.aux_flows)},
          {"aux_start_s", range_json(p.aux_start_s)},
          {"delay_ms", range_json(p.delay_ms)},
          {"capacity_mbps", range_json(p.capacity_mbps)}};
}

ComplexityProfile profile_from_json(const Json& j) {
  return guarded("profile", [&] {
    ComplexityProfile p;
    read_range(j, "switches", p.switches);
    read_range(j, "component_nodes", p.component_nodes);
    read_range(j, "hosts_per_switch", p.hosts_per_switch);
    read_range(j, "edge_prob", p.edge_prob);
    read_range(j, "aux_flows", p.aux_flows);
    read_range(j, "aux_start_s", p.aux_start_s);
    read_range(j, "delay_ms", p.delay_ms);
    read_range(j, "capacity_mbps", p.capacity_mbps);
    p.validate();
    return p;
  });
}

Json train_config_to_json(const TrainConfig& c) {
  return {{"hidden_layers", c.hidden_layers}, {"l2_alpha", c.l2_alpha},      {"solver", to_string(c.solver)},
          {"max_iter", c.max_iter},           {"tol", c.tol},                {"seed", c.seed},
          {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},  {"momentum", c.momentum},
          {"lbfgs_memory", c.lbfgs_memory}};
}

TrainConfig train_config_from_json(const Json& j) {
  return guarded("train config", [&] {
    TrainConfig c;
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.l2_alpha = j.value("l2_alpha", c.l2_alpha);
    c.solver = parse_solver(j.value("solver", to_string(c.solver)));
    c.max_iter = j.value("max_iter", c.max_iter);
    c.tol = j.value("tol", c.tol);
    c.seed = j.value("seed", c.seed);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.momentum = j.value("momentum", c.momentum);
    c.lbfgs_memory = j.value("lbfgs_memory", c.lbfgs_memory);
    c.validate();
    return c;
  });
}

Json search_space_to_json(const SearchSpace& s) {
  Json solvers = Json::array();
  for (auto v : s.solvers) solvers.push_back(to_string(v));
  return {{"layers", {s.min_layers, s.max_layers}},
          {"neurons", {s.min_neurons, s.max_neurons}},
          {"l2_alpha", {s.min_alpha, s.max_alpha}},
          {"solvers", solvers},
          {"max_iter", s.max_iter},
          {"tol", s.tol},
          {"repeats", s.repeats},
          {"test_fraction", s.test_fraction}};
}

SearchSpace search_space_from_json(const Json& j) {
  return guarded("search space", [&] {
    SearchSpace s;
    if (j.contains("layers")) {
      s.min_layers = j.at("layers").at(0);
      s.max_layers = j.at("layers").at(1);
    }
    if (j.contains("neurons")) {
      s.min_neurons = j.at("neurons").at(0);
      s.max_neurons = j.at("neurons").at(1);
    }
    if (j.contains("l2_alpha")) {
      s.min_alpha = j.at("l2_alpha").at(0);
      s.max_alpha = j.at("l2_alpha").at(1);
    }
    if (j.contains("solvers")) {
      s.solvers.clear();
      for (const auto& v : j.at("solvers")) s.solvers.push_back(parse_solver(v.get<std::string>()));
    }
    s.max_iter = j.value("max_iter", s.max_iter);
    s.tol = j.value("tol", s.tol);
    s.repeats = j.value("repeats", s.repeats);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    s.validate();
    return s;
  });
}

Json discipline_to_json(const QueueDiscipline& d) {
  if (const auto* p = std::get_if<PieParams>(&d))
    return {{"kind", "pie"},
            {"target_delay_ms", p->target_delay_ms},
            {"alpha", p->alpha},
            {"beta", p->beta},
            {"update_interval_ms", p->update_interval_ms},
            {"buffer_pkts", p->buffer_pkts}};
  return {{"kind", "droptail"}, {"buffer_pkts", std::get<DropTailParams>(d).buffer_pkts}};
}

Json model_to_json(const MlpModel& m) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["layer_sizes"] = m.layer_sizes;
  j["weights"] = Json::array();
  j["biases"] = Json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    std::vector<double> w;
    for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) w.push_back(m.weights[l](r, c));
    j["weights"].push_back(w);
    j["biases"].push_back(std::vector<double>(m.biases[l].data(), m.biases[l].data() + m.biases[l].size()));
  }
  j["norm_mean"] = std::vector<double>(m.norm_mean.data(), m.norm_mean.data() + m.norm_mean.size());
  j["norm_std"] = std::vector<double>(m.norm_std.data(), m.norm_std.data() + m.norm_std.size());
  j["feature_names"] = m.feature_names;
  j["config"] = train_config_to_json(m.config);
  return j;
}

MlpModel model_from_json(const Json& j) {
  return guarded("model JSON", [&] {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) throw IoError("unsupported model format version " + std::to_string(version));
    MlpModel m = MlpModel::zeros(j.at("layer_sizes").get<std::vector<int>>());
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() != m.weights.size() || bs.size() != m.biases.size()) throw ShapeError("model layer count mismatch");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const auto w = ws[l].get<std::vector<double>>();
      const auto b = bs[l].get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(m.weights[l].size()) ||
          b.size() != static_cast<std::size_t>(m.biases[l].size()))
        throw ShapeError("model layer " + std::to_string(l) + " has the wrong shape");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) m.weights[l](r, c) = w[k++];
      for (std::size_t i = 0; i < b.size(); ++i) m.biases[l][static_cast<Eigen::Index>(i)] = b[i];
    }
    const auto mean = j.at("norm_mean").get<std::vector<double>>();
    const auto sd = j.at("norm_std").get<std::vector<double>>();
    if (mean.size() != m.n_inputs() || sd.size() != m.n_inputs()) throw ShapeError("normalization width mismatch");
    for (std::size_t i = 0; i < mean.size(); ++i) {
      if (!(sd[i] > 0)) throw IoError("normalization std must be positive");
      m.norm_mean[static_cast<Eigen::Index>(i)] = mean[i];
      m.norm_std[static_cast<Eigen::Index>(i)] = sd[i];
    }
    m.feature_names = j.value("feature_names", std::vector<std::string>{});
    if (j.contains("config")) m.config = train_config_from_json(j.at("config"));
    return m;
  });
}

std::string trace_to_csv(const Trace& t) {
  std::string out = "series,t_s,value\n";
  for (const auto& s : t.rtt) out += "rtt_ms," + fmt(s.t_s) + "," + fmt(s.value) + "\n";
  for (const auto& s : t.cwnd) out += "cwnd_pkts," + fmt(s.t_s) + "," + fmt(s.value) + "\n";
  return out;
}

Trace trace_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "series,t_s,value") throw IoError("trace CSV: missing header");
  Trace t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw IoError("trace CSV line " + std::to_string(line_no) + ": expected three fields");
    const std::string series = line.substr(0, c1);
    Sample s;
    try {
      s.t_s = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      s.value = std::stod(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw IoError("trace CSV line " + std::to_string(line_no) + ": bad number");
    }
    if (series == "rtt_ms")
      t.rtt.push_back(s);
    else if (series == "cwnd_pkts")
      t.cwnd.push_back(s);
    else
      throw IoError("trace CSV line " + std::to_string(line_no) + ": unknown series '" + series + "'");
  }
  return t;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_trace(const Trace& t, const QueueDiscipline& disc, std::uint64_t sim_seed,
                 const std::filesystem::path& path) {
  write_text_file(path, trace_to_csv(t));
  Json meta{{"label", to_string(t.label)},
            {"topology_seed", t.topology_seed},
            {"sim_seed", sim_seed},
            {"duration_s", t.duration_s},
            {"discipline", discipline_to_json(disc)}};
  write_text_file(sidecar_path(path), meta.dump(2) + "\n");
}

Trace read_trace(const std::filesystem::path& path) {
  Trace t = trace_from_csv(read_text_file(path));
  const Json meta = read_json_file(sidecar_path(path));
  guarded("trace metadata", [&] {
    t.label = parse_label(meta.at("label").get<std::string>());
    t.topology_seed = meta.at("topology_seed").get<std::uint64_t>();
    t.duration_s = meta.at("duration_s").get<double>();
    return 0;
  });
  return t;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace aqmsense
