#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "aqmsense/learner.hpp"
#include "aqmsense/mlp.hpp"
#include "aqmsense/netsim.hpp"
#include "aqmsense/topology.hpp"

namespace aqmsense {

using Json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

/// {nodes:[{id,kind,role}], links:[{a,b,delay_ms,capacity_mbps}], path:[ids],
///  bottleneck_link, seed, flows:[{src,dst,start_s,kind}]}
Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

Json profile_to_json(const ComplexityProfile& p);
/// Missing keys keep their defaults.
ComplexityProfile profile_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

Json search_space_to_json(const SearchSpace& s);
SearchSpace search_space_from_json(const Json& j);

Json discipline_to_json(const QueueDiscipline& d);

/// Architecture, row-major weights, biases, normalization, config, version.
Json model_to_json(const MlpModel& m);
MlpModel model_from_json(const Json& j);

/// CSV with header `series,t_s,value`, series in {rtt_ms, cwnd_pkts}.
std::string trace_to_csv(const Trace& t);
Trace trace_from_csv(const std::string& csv);

/// Writes `path` (CSV) and the sidecar sidecar_path(path) with run metadata.
void write_trace(const Trace& t, const QueueDiscipline& disc, std::uint64_t sim_seed,
                 const std::filesystem::path& path);
/// Reads a trace CSV plus its sidecar (label, seed, duration).
Trace read_trace(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace aqmsense
