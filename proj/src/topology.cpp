#include "aqmsense/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "aqmsense/errors.hpp"

namespace aqmsense {

namespace {

void check_range(const IntRange& r, int floor, const char* name) {
  if (r.lo > r.hi) throw ConfigError(std::string("profile range ") + name + ": min > max");
  if (r.lo < floor) throw ConfigError(std::string("profile range ") + name + ": below minimum");
}

void check_range(const RealRange& r, double floor, const char* name) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string("profile range ") + name + ": min > max");
  if (r.lo < floor) throw ConfigError(std::string("profile range ") + name + ": below minimum");
}

bool dominates(const IntRange& big, const IntRange& base) {
  return big.lo >= base.lo && big.hi > base.hi;
}

// (neighbour, link index), neighbours ascending
std::vector<std::vector<std::pair<NodeId, std::size_t>>> link_adjacency(const Topology& t) {
  std::vector<std::vector<std::pair<NodeId, std::size_t>>> adj(t.nodes.size());
  for (std::size_t i = 0; i < t.links.size(); ++i) {
    adj[t.links[i].a].emplace_back(t.links[i].b, i);
    adj[t.links[i].b].emplace_back(t.links[i].a, i);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

}  // namespace

std::optional<std::size_t> Topology::find_link(NodeId a, NodeId b) const {
  for (std::size_t i = 0; i < links.size(); ++i) {
    if ((links[i].a == a && links[i].b == b) || (links[i].a == b && links[i].b == a)) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Topology::path_links() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto l = find_link(path[i], path[i + 1]);
    if (!l) throw TopologyError("path nodes not joined by a link");
    out.push_back(*l);
  }
  return out;
}

void ComplexityProfile::validate() const {
  check_range(switches, 1, "switches");
  check_range(component_nodes, 1, "component_nodes");
  check_range(hosts_per_switch, 0, "hosts_per_switch");
  check_range(edge_prob, 0.0, "edge_prob");
  if (edge_prob.hi > 1.0) throw ConfigError("profile range edge_prob: above 1");
  check_range(aux_flows, 0, "aux_flows");
  check_range(aux_start_s, 0.0, "aux_start_s");
  check_range(delay_ms, 0.0, "delay_ms");
  check_range(capacity_mbps, 0.0, "capacity_mbps");
  if (!(delay_ms.lo > 0) || !(capacity_mbps.lo > 0))
    throw ConfigError("link delay and capacity ranges must be strictly positive");
}

ComplexityProfile ComplexityProfile::complex() {
  ComplexityProfile p;
  p.switches = {6, 10};
  p.component_nodes = {3, 8};
  p.hosts_per_switch = {3, 8};
  p.aux_flows = {3, 6};
  return p;
}

bool strictly_dominates(const ComplexityProfile& bigger, const ComplexityProfile& base) {
  return dominates(bigger.switches, base.switches) &&
         dominates(bigger.component_nodes, base.component_nodes) &&
         dominates(bigger.hosts_per_switch, base.hosts_per_switch) &&
         dominates(bigger.aux_flows, base.aux_flows);
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

Graph erdos_renyi(int n, double p, Rng& rng) {
  if (n < 1) throw ConfigError("erdos_renyi: need at least one node");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("erdos_renyi: p outside [0,1]");
  Graph g{n, {}};
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) g.edges.emplace_back(u, v);
  return g;
}

std::vector<int> largest_component(const Graph& g) {
  const auto adj = g.adjacency();
  std::vector<int> comp_of(static_cast<std::size_t>(g.n), -1);
  std::vector<int> best;
  for (int start = 0; start < g.n; ++start) {
    if (comp_of[start] >= 0) continue;
    std::vector<int> members{start};
    comp_of[start] = start;
    for (std::size_t k = 0; k < members.size(); ++k)
      for (int w : adj[members[k]])
        if (comp_of[w] < 0) {
          comp_of[w] = start;
          members.push_back(w);
        }
    // components are discovered in order of their smallest id, so strict >
    // keeps the earliest on ties
    if (members.size() > best.size()) best = std::move(members);
  }
  std::sort(best.begin(), best.end());
  return best;
}

Topology gen_topology(std::uint64_t seed, const ComplexityProfile& profile) {
  profile.validate();
  Rng rng = Rng(seed).child(stream::kStructure);

  Topology t;
  t.rng_seed = seed;
  t.n_switches = static_cast<int>(rng.uniform_int(profile.switches.lo, profile.switches.hi));

  auto add_node = [&t](NodeKind kind, NodeRole role) {
    NodeId id = static_cast<NodeId>(t.nodes.size());
    t.nodes.push_back({id, kind, role});
    return id;
  };
  auto add_link = [&t](NodeId a, NodeId b) { t.links.push_back({a, b, 0.0, 0.0}); };

  t.path.push_back(add_node(NodeKind::Host, NodeRole::Source));
  for (int i = 0; i < t.n_switches; ++i) t.path.push_back(add_node(NodeKind::Switch, NodeRole::Interior));
  t.path.push_back(add_node(NodeKind::Host, NodeRole::Sink));
  for (std::size_t i = 0; i + 1 < t.path.size(); ++i) add_link(t.path[i], t.path[i + 1]);

  for (int i = 1; i <= t.n_switches; ++i) {
    const NodeId v = t.path[i];
    const int n_p = static_cast<int>(rng.uniform_int(profile.component_nodes.lo, profile.component_nodes.hi));
    const double p = rng.uniform(profile.edge_prob.lo, profile.edge_prob.hi);
    Graph g = erdos_renyi(n_p, p, rng);
    std::vector<NodeKind> kinds(static_cast<std::size_t>(n_p));
    for (auto& k : kinds) k = rng.bernoulli(0.5) ? NodeKind::Host : NodeKind::Switch;

    const auto comp = largest_component(g);
    std::vector<NodeId> new_id(static_cast<std::size_t>(n_p), -1);
    for (int local : comp) new_id[local] = add_node(kinds[local], NodeRole::Interior);
    for (auto [a, b] : g.edges)
      if (new_id[a] >= 0 && new_id[b] >= 0) add_link(new_id[a], new_id[b]);
    add_link(v, new_id[comp.front()]);

    const int h = static_cast<int>(rng.uniform_int(profile.hosts_per_switch.lo, profile.hosts_per_switch.hi));
    for (int k = 0; k < h; ++k) add_link(v, add_node(NodeKind::Host, NodeRole::Interior));
  }
  return t;
}

std::pair<Topology, std::vector<FlowSpec>> assign_links_and_flows(
    Topology t, Rng& rng, int n_aux, const ComplexityProfile& profile) {
  if (n_aux < 0) throw ConfigError("negative auxiliary flow count");
  Rng link_rng = rng.child(stream::kLinks);
  Rng flow_rng = rng.child(stream::kFlows);

  for (auto& l : t.links) {
    l.delay_ms = link_rng.uniform(profile.delay_ms.lo, profile.delay_ms.hi);
    l.capacity_mbps = link_rng.uniform(profile.capacity_mbps.lo, profile.capacity_mbps.hi);
  }

  std::vector<FlowSpec> flows{{t.source(), t.sink(), 0.0, FlowKind::Primary}};
  std::vector<NodeId> hosts;
  for (const auto& n : t.nodes)
    if (n.kind == NodeKind::Host && n.role == NodeRole::Interior) hosts.push_back(n.id);
  if (n_aux > 0 && hosts.empty()) throw TopologyError("no hosts available for auxiliary flows");

  // distinct senders while they last, then with replacement
  std::vector<NodeId> order = hosts;
  flow_rng.shuffle(std::span<NodeId>(order));
  for (int i = 0; i < n_aux; ++i) {
    NodeId src = static_cast<std::size_t>(i) < order.size()
                     ? order[i]
                     : hosts[flow_rng.uniform_int(0, static_cast<std::int64_t>(hosts.size()) - 1)];
    double start = flow_rng.uniform(profile.aux_start_s.lo, profile.aux_start_s.hi);
    flows.push_back({src, t.sink(), start, FlowKind::Auxiliary});
  }
  return {std::move(t), std::move(flows)};
}

std::vector<int> aux_load_per_link(const Topology& t, const std::vector<FlowSpec>& flows) {
  std::vector<int> load(t.links.size(), 0);
  for (const auto& f : flows) {
    if (f.kind != FlowKind::Auxiliary) continue;
    for (const auto& hop : shortest_route(t, f.src, f.dst)) ++load[hop.link];
  }
  return load;
}

double bottleneck_target_capacity(const Topology& t, std::size_t bottleneck,
                                  const std::vector<int>& aux_load) {
  double min_effective = std::numeric_limits<double>::infinity();
  for (std::size_t l : t.path_links()) {
    if (l == bottleneck) continue;
    // the auxiliary flows' fair share of the link, discounted to 80%
    const double a = aux_load[l];
    const double effective = t.links[l].capacity_mbps * (1.0 - 0.8 * a / (a + 1.0));
    min_effective = std::min(min_effective, effective);
  }
  return 0.5 * min_effective;
}

void limit_downstream_aux(Topology& t, const std::vector<FlowSpec>& flows) {
  const std::size_t b = t.bottleneck_link.value();
  const double cap_b = t.links[b].capacity_mbps;
  const auto pl = t.path_links();

  std::vector<std::vector<Hop>> routes;
  std::vector<std::vector<std::size_t>> users(t.links.size());  // aux flows bypassing b, per path link
  for (const auto& f : flows) {
    routes.push_back(f.kind == FlowKind::Auxiliary ? shortest_route(t, f.src, f.dst) : std::vector<Hop>{});
    const auto& r = routes.back();
    if (r.empty() || std::any_of(r.begin(), r.end(), [b](const Hop& h) { return h.link == b; })) continue;
    for (const auto& h : r)
      if (std::find(pl.begin(), pl.end(), h.link) != pl.end()) users[h.link].push_back(routes.size() - 1);
  }

  std::vector<double> limit(flows.size(), std::numeric_limits<double>::infinity());
  for (std::size_t e : pl) {
    if (users[e].empty()) continue;
    const double share = 0.5 * (t.links[e].capacity_mbps - cap_b) / static_cast<double>(users[e].size());
    for (std::size_t f : users[e]) limit[f] = std::min(limit[f], share);
  }
  for (std::size_t f = 0; f < flows.size(); ++f) {
    if (!std::isfinite(limit[f])) continue;
    auto& access = t.links[routes[f].front().link];
    access.capacity_mbps = std::min(access.capacity_mbps, limit[f]);
  }
}

Topology enforce_bottleneck(Topology t, const std::vector<FlowSpec>& flows, Rng& rng) {
  const auto pl = t.path_links();
  if (pl.size() < 2) throw TopologyError("path needs at least two links to place a bottleneck");
  Rng pick = rng.child(stream::kBottleneck);
  const auto idx = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(pl.size()) - 1));
  const std::size_t b = pl[idx];
  t.links[b].capacity_mbps = bottleneck_target_capacity(t, b, aux_load_per_link(t, flows));
  t.bottleneck_link = b;
  limit_downstream_aux(t, flows);
  return t;
}

Scenario generate_scenario(std::uint64_t seed, const ComplexityProfile& profile,
                           std::optional<int> n_aux) {
  profile.validate();
  Rng root(seed);
  Topology t = gen_topology(seed, profile);
  Rng count_rng = root.child(stream::kAuxCount);
  const int aux = n_aux.value_or(
      static_cast<int>(count_rng.uniform_int(profile.aux_flows.lo, profile.aux_flows.hi)));
  auto [linked, flows] = assign_links_and_flows(std::move(t), root, aux, profile);
  Topology final_t = enforce_bottleneck(std::move(linked), flows, root);
  return {std::move(final_t), std::move(flows)};
}

std::vector<Hop> shortest_route(const Topology& t, NodeId src, NodeId dst) {
  const auto n = t.nodes.size();
  if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= n || static_cast<std::size_t>(dst) >= n)
    throw TopologyError("route endpoint outside topology");
  const auto adj = link_adjacency(t);
  std::vector<std::optional<std::pair<NodeId, std::size_t>>> parent(n);
  std::vector<bool> seen(n, false);
  std::deque<NodeId> frontier{src};
  seen[src] = true;
  while (!frontier.empty() && !seen[dst]) {
    NodeId u = frontier.front();
    frontier.pop_front();
    for (auto [w, l] : adj[u]) {
      if (seen[w]) continue;
      seen[w] = true;
      parent[w] = {u, l};
      frontier.push_back(w);
    }
  }
  if (!seen[dst]) throw TopologyError("destination unreachable from source");
  std::vector<Hop> route;
  for (NodeId v = dst; v != src;) {
    auto [u, l] = *parent[v];
    route.push_back({l, t.links[l].a == u});
    v = u;
  }
  std::reverse(route.begin(), route.end());
  return route;
}

bool is_connected(const Topology& t) {
  if (t.nodes.empty()) return true;
  const auto adj = link_adjacency(t);
  std::vector<bool> seen(t.nodes.size(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (auto [w, l] : adj[u])
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
  }
  return count == t.nodes.size();
}

std::string to_string(NodeKind k) { return k == NodeKind::Switch ? "switch" : "host"; }

std::string to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Source: return "source";
    case NodeRole::Sink: return "sink";
    default: return "interior";
  }
}

std::string to_string(FlowKind k) { return k == FlowKind::Primary ? "primary" : "auxiliary"; }

}  // namespace aqmsense
