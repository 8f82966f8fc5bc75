#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aqmsense/rng.hpp"

namespace aqmsense {

using NodeId = int;

enum class NodeKind { Switch, Host };
enum class NodeRole { Source, Sink, Interior };

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::Switch;
  NodeRole role = NodeRole::Interior;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Undirected link. Each direction has its own egress queue in the simulator.
struct Link {
  NodeId a = 0;
  NodeId b = 0;
  double delay_ms = 0;
  double capacity_mbps = 0;

  friend bool operator==(const Link&, const Link&) = default;
};

struct Topology {
  std::vector<Node> nodes;
  std::vector<Link> links;
  /// source, v1..vn, sink
  std::vector<NodeId> path;
  std::optional<std::size_t> bottleneck_link;
  int n_switches = 0;
  std::uint64_t rng_seed = 0;

  NodeId source() const { return path.front(); }
  NodeId sink() const { return path.back(); }

  /// Index of the link joining a and b, if any.
  std::optional<std::size_t> find_link(NodeId a, NodeId b) const;

  /// Link indices along `path`, in order from source to sink.
  std::vector<std::size_t> path_links() const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

enum class FlowKind { Primary, Auxiliary };

struct FlowSpec {
  NodeId src = 0;
  NodeId dst = 0;
  double start_s = 0;
  FlowKind kind = FlowKind::Primary;

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct RealRange {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const RealRange&, const RealRange&) = default;
};

/// Ranges for every random draw of the generator. Defaults are the
/// training-scale profile.
struct ComplexityProfile {
  IntRange switches{3, 5};
  IntRange component_nodes{1, 5};
  IntRange hosts_per_switch{1, 5};
  RealRange edge_prob{0.0, 1.0};
  IntRange aux_flows{1, 3};
  RealRange aux_start_s{0.0, 5.0};
  RealRange delay_ms{10.0, 100.0};
  RealRange capacity_mbps{10.0, 1000.0};

  /// Throws ConfigError on an empty or out-of-domain range.
  void validate() const;

  /// Larger topologies used for the generalization test.
  static ComplexityProfile complex();

  friend bool operator==(const ComplexityProfile&, const ComplexityProfile&) = default;
};

/// True when every size range of `bigger` starts no lower and ends strictly
/// higher than the corresponding range of `base`.
bool strictly_dominates(const ComplexityProfile& bigger, const ComplexityProfile& base);

/// Simple undirected graph on nodes 0..n-1.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // (u, v) with u < v

  std::vector<std::vector<int>> adjacency() const;
};

/// G(n, p): each of the n(n-1)/2 pairs present independently with probability p.
Graph erdos_renyi(int n, double p, Rng& rng);

/// Node ids (sorted) of the largest connected component. Ties go to the
/// component holding the smallest node id.
std::vector<int> largest_component(const Graph& g);

/// Path graph plus Erdős–Rényi blobs and extra hosts hung off each path
/// switch. Links carry no parameters yet.
Topology gen_topology(std::uint64_t seed, const ComplexityProfile& profile);

/// Draws link delays/capacities, `n_aux` auxiliary flows and the primary flow.
std::pair<Topology, std::vector<FlowSpec>> assign_links_and_flows(
    Topology t, Rng& rng, int n_aux, const ComplexityProfile& profile = {});

/// Caps the access link of every auxiliary flow that joins the path below
/// the bottleneck, so that those flows use at most half of the spare
/// capacity of the path links they share with the primary flow.
void limit_downstream_aux(Topology& t, const std::vector<FlowSpec>& flows);

/// Picks a path link uniformly and makes it the unique bottleneck, then
/// applies limit_downstream_aux.
Topology enforce_bottleneck(Topology t, const std::vector<FlowSpec>& flows, Rng& rng);

/// Number of auxiliary flows whose route crosses each link.
std::vector<int> aux_load_per_link(const Topology& t, const std::vector<FlowSpec>& flows);

/// Capacity the bottleneck is rescaled to: half the smallest aux-adjusted
/// capacity among the other path links.
double bottleneck_target_capacity(const Topology& t, std::size_t bottleneck,
                                  const std::vector<int>& aux_load);

struct Scenario {
  Topology topology;
  std::vector<FlowSpec> flows;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Full generation pipeline: structure, parameters, flows, bottleneck. Pure
/// function of (seed, profile); the aux flow count is drawn from the profile
/// unless `n_aux` is given.
Scenario generate_scenario(std::uint64_t seed, const ComplexityProfile& profile = {},
                           std::optional<int> n_aux = std::nullopt);

/// One hop of a route: link index and travel direction (true when a -> b).
struct Hop {
  std::size_t link = 0;
  bool forward = true;

  friend bool operator==(const Hop&, const Hop&) = default;
};

/// Fewest-hop route, neighbours visited in increasing id order. Throws
/// TopologyError when dst is unreachable.
std::vector<Hop> shortest_route(const Topology& t, NodeId src, NodeId dst);

bool is_connected(const Topology& t);

std::string to_string(NodeKind k);
std::string to_string(NodeRole r);
std::string to_string(FlowKind k);

}  // namespace aqmsense
