#include "aqmsense/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>

#include "aqmsense/errors.hpp"

namespace aqmsense {

QueueLabel label_of(const QueueDiscipline& d) {
  return std::holds_alternative<PieParams>(d) ? QueueLabel::Pie : QueueLabel::DropTail;
}

std::string to_string(QueueLabel l) { return l == QueueLabel::Pie ? "pie" : "droptail"; }

QueueLabel parse_label(const std::string& s) {
  if (s == "pie") return QueueLabel::Pie;
  if (s == "droptail") return QueueLabel::DropTail;
  throw ConfigError("unknown queue discipline '" + s + "'");
}

void validate(const QueueDiscipline& d) {
  if (const auto* dt = std::get_if<DropTailParams>(&d)) {
    if (dt->buffer_pkts < 1) throw ConfigError("drop-tail buffer must hold at least one packet");
    return;
  }
  const auto& p = std::get<PieParams>(d);
  if (p.buffer_pkts < 1) throw ConfigError("PIE buffer must hold at least one packet");
  if (!(p.target_delay_ms > 0 && p.alpha > 0 && p.beta > 0 && p.update_interval_ms > 0))
    throw ConfigError("PIE parameters must be strictly positive");
}

namespace {

double path_delay_s(const Topology& t) {
  double sum = 0;
  for (auto l : t.path_links()) sum += t.links[l].delay_ms;
  return sum / 1000.0;
}

int buffer_for(double capacity_mbps, double base_rtt_s, int packet_bytes) {
  const double bdp = capacity_mbps * 1e6 * base_rtt_s / (8.0 * packet_bytes);
  return std::max(20, static_cast<int>(std::ceil(2.0 * bdp)));
}

}  // namespace

int default_buffer_pkts(const Topology& t, int packet_bytes) {
  double cap;
  if (t.bottleneck_link) {
    cap = t.links[*t.bottleneck_link].capacity_mbps;
  } else {
    cap = std::numeric_limits<double>::infinity();
    for (auto l : t.path_links()) cap = std::min(cap, t.links[l].capacity_mbps);
  }
  return buffer_for(cap, 2.0 * path_delay_s(t), packet_bytes);
}

QueueDiscipline make_discipline(QueueLabel label, const Topology& t) {
  const int buf = default_buffer_pkts(t);
  if (label == QueueLabel::Pie) {
    PieParams p;
    p.buffer_pkts = buf;
    return p;
  }
  return DropTailParams{buf};
}

Admit droptail_enqueue(int qlen, int buffer_pkts) {
  return qlen >= buffer_pkts ? Admit::Drop : Admit::Accept;
}

PieState pie_update(PieState s, double qdelay_ms, const PieParams& params) {
  const double p = s.drop_prob + params.alpha * (qdelay_ms - params.target_delay_ms) / 1000.0 +
                   params.beta * (qdelay_ms - s.qdelay_old_ms) / 1000.0;
  s.drop_prob = std::clamp(p, 0.0, 1.0);
  s.qdelay_old_ms = qdelay_ms;
  return s;
}

Admit pie_enqueue(const PieState& s, int qlen, const PieParams& params, Rng& rng) {
  if (qlen >= params.buffer_pkts) return Admit::Drop;
  return rng.bernoulli(s.drop_prob) ? Admit::Drop : Admit::Accept;
}

double queue_delay_estimate(int qlen_pkts, double depart_rate_est) {
  if (qlen_pkts <= 0 || !(depart_rate_est > 0)) return 0.0;
  return 1000.0 * qlen_pkts / depart_rate_est;
}

TcpState tcp_step(TcpState s, TcpEvent ev) {
  switch (ev) {
    case TcpEvent::Ack:
      if (s.mode == TcpMode::SlowStart) {
        s.cwnd_pkts += 1.0;
        if (s.cwnd_pkts >= s.ssthresh_pkts) s.mode = TcpMode::CongestionAvoidance;
      } else {
        s.cwnd_pkts += 1.0 / s.cwnd_pkts;
      }
      break;
    case TcpEvent::Loss:
      s.ssthresh_pkts = std::max(s.cwnd_pkts / 2.0, 2.0);
      s.cwnd_pkts = s.ssthresh_pkts;
      s.mode = TcpMode::CongestionAvoidance;
      break;
    case TcpEvent::Timeout:
      s.ssthresh_pkts = std::max(s.cwnd_pkts / 2.0, 2.0);
      s.cwnd_pkts = 1.0;
      s.mode = TcpMode::SlowStart;
      break;
  }
  return s;
}

namespace {

enum class EventKind : std::uint8_t {
  Arrival,
  Departure,
  PieTimer,
  ProbeSend,
  ProbeReturn,
  Timeout,
  AckArrival,
  LossNotify,
  FlowStart,
};

constexpr int kProbeFlow = -1;

struct Packet {
  int flow = kProbeFlow;
  int hop = 0;
  std::uint64_t seq = 0;
  double sent_s = 0;
  double enq_s = 0;
  int bytes = 0;
};

struct Event {
  double time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Arrival;
  int target = 0;  // queue index or flow index
  Packet pkt;
};

struct EventOrder {
  bool operator()(const Event& x, const Event& y) const {
    return x.time > y.time || (x.time == y.time && x.seq > y.seq);
  }
};

struct EgressQueue {
  double rate_bps = 0;
  double delay_s = 0;
  int buffer_pkts = 0;
  bool pie = false;
  PieParams pie_params;
  PieState pie_state;
  std::deque<Packet> pkts;
  bool busy = false;
  // departures and busy time since the last PIE update
  std::uint64_t interval_departures = 0;
  double interval_busy_s = 0;
  QueueStats stats;
};

struct Route {
  std::vector<int> queues;
  std::vector<double> remaining_s;  // propagation from the start of hop i to the destination
  double one_way_s = 0;
};

struct Flow {
  Route route;
  double start_s = 0;
  bool primary = false;
  TcpState tcp;
  std::uint64_t next_seq = 0;
  std::uint64_t recover_seq = 0;
  std::uint64_t timeout_floor = 0;
  double srtt_s = -1;
  double timer_deadline = 0;
  bool timer_pending = false;
};

class Simulator {
 public:
  Simulator(const Topology& t, const std::vector<FlowSpec>& flows, const QueueDiscipline& disc,
            const SimConfig& cfg, std::uint64_t seed)
      : topo_(t), cfg_(cfg), rng_(Rng(seed).child(stream::kSimulation)) {
    if (!(cfg.duration_s > 0)) throw ConfigError("simulation duration must be positive");
    validate(disc);
    if (!t.bottleneck_link) throw TopologyError("topology has no bottleneck link");

    const double base_rtt = 2.0 * path_delay_s(t);
    queues_.resize(2 * t.links.size());
    for (std::size_t l = 0; l < t.links.size(); ++l) {
      for (int dir = 0; dir < 2; ++dir) {
        auto& q = queues_[2 * l + dir];
        q.rate_bps = t.links[l].capacity_mbps * 1e6;
        q.delay_s = t.links[l].delay_ms / 1000.0;
        q.buffer_pkts = buffer_for(t.links[l].capacity_mbps, base_rtt, cfg.packet_bytes);
      }
    }

    const auto primary_route = shortest_route(t, t.source(), t.sink());
    bottleneck_queue_ = -1;
    for (const auto& hop : primary_route)
      if (hop.link == *t.bottleneck_link) bottleneck_queue_ = queue_index(hop);
    if (bottleneck_queue_ < 0) throw TopologyError("bottleneck link is not on the primary route");

    auto& bq = queues_[bottleneck_queue_];
    if (const auto* pie = std::get_if<PieParams>(&disc)) {
      bq.pie = true;
      bq.pie_params = *pie;
      bq.buffer_pkts = pie->buffer_pkts;
    } else {
      bq.buffer_pkts = std::get<DropTailParams>(disc).buffer_pkts;
    }

    probe_route_ = make_route(primary_route);
    bool have_primary = false;
    for (const auto& f : flows) {
      if (f.kind == FlowKind::Primary) {
        if (have_primary) throw TopologyError("more than one primary flow");
        if (f.src != t.source() || f.dst != t.sink())
          throw TopologyError("primary flow must run from source to sink");
        have_primary = true;
      } else if (cfg.primary_only) {
        continue;
      }
      Flow fl;
      fl.route = make_route(shortest_route(t, f.src, f.dst));
      fl.start_s = f.kind == FlowKind::Primary ? 0.0 : f.start_s;
      fl.primary = f.kind == FlowKind::Primary;
      fl.tcp.cwnd_pkts = cfg.initial_cwnd;
      fl.tcp.rto_s = cfg.initial_rto_s;
      if (fl.primary) primary_flow_ = static_cast<int>(flows_.size());
      flows_.push_back(std::move(fl));
    }
    if (!have_primary) throw TopologyError("flow set has no primary flow");

    result_.trace.label = label_of(disc);
    result_.trace.topology_seed = t.rng_seed;
    result_.trace.duration_s = cfg.duration_s;
  }

  SimResult run() {
    for (std::size_t i = 0; i < flows_.size(); ++i)
      schedule(flows_[i].start_s, EventKind::FlowStart, static_cast<int>(i));
    schedule(0.0, EventKind::ProbeSend, 0);
    if (queues_[bottleneck_queue_].pie)
      schedule(queues_[bottleneck_queue_].pie_params.update_interval_ms / 1000.0, EventKind::PieTimer,
               bottleneck_queue_);

    while (!events_.empty()) {
      Event ev = events_.top();
      if (ev.time > cfg_.duration_s) break;
      events_.pop();
      now_ = ev.time;
      if (++processed_ > cfg_.max_events) throw ResourceError("event budget exhausted");
      dispatch(ev);
    }

    result_.stats.queues.reserve(queues_.size());
    for (auto& q : queues_) {
      q.stats.in_queue = q.pkts.size();
      result_.stats.queues.push_back(q.stats);
    }
    result_.stats.bottleneck_queue = static_cast<std::size_t>(bottleneck_queue_);
    result_.stats.events = processed_;
    return std::move(result_);
  }

 private:
  int queue_index(const Hop& hop) const { return static_cast<int>(2 * hop.link + (hop.forward ? 0 : 1)); }

  Route make_route(const std::vector<Hop>& hops) const {
    Route r;
    for (const auto& h : hops) r.queues.push_back(queue_index(h));
    r.remaining_s.resize(hops.size());
    double acc = 0;
    for (std::size_t i = hops.size(); i-- > 0;) {
      acc += queues_[r.queues[i]].delay_s;
      r.remaining_s[i] = acc;
    }
    r.one_way_s = acc;
    return r;
  }

  const Route& route_of(const Packet& p) const {
    return p.flow == kProbeFlow ? probe_route_ : flows_[p.flow].route;
  }

  void schedule(double time, EventKind kind, int target, const Packet& pkt = {}) {
    events_.push(Event{time, next_event_seq_++, kind, target, pkt});
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::Arrival: on_arrival(ev.target, ev.pkt); break;
      case EventKind::Departure: on_departure(ev.target); break;
      case EventKind::PieTimer: on_pie_timer(ev.target); break;
      case EventKind::ProbeSend: on_probe_send(ev.pkt.seq); break;
      case EventKind::ProbeReturn: record(result_.trace.rtt, 1000.0 * (now_ - ev.pkt.sent_s)); break;
      case EventKind::Timeout: on_timeout(ev.target); break;
      case EventKind::AckArrival: on_ack(ev.target, ev.pkt); break;
      case EventKind::LossNotify: on_loss(ev.target, ev.pkt); break;
      case EventKind::FlowStart: send_window(ev.target); break;
    }
  }

  void record(std::vector<Sample>& series, double value) {
    if (!series.empty() && series.back().t_s == now_)
      series.back().value = value;
    else
      series.push_back({now_, value});
  }

  void on_arrival(int qi, Packet pkt) {
    auto& q = queues_[qi];
    const int qlen = static_cast<int>(q.pkts.size());
    const Admit admit =
        q.pie ? pie_enqueue(q.pie_state, qlen, q.pie_params, rng_) : droptail_enqueue(qlen, q.buffer_pkts);
    ++q.stats.enqueued;
    if (admit == Admit::Drop) {
      ++q.stats.dropped;
      if (pkt.flow != kProbeFlow) {
        // the sender learns of the loss when the duplicate ACKs for the
        // following packets come back
        const Route& r = route_of(pkt);
        schedule(now_ + r.remaining_s[pkt.hop] + r.one_way_s, EventKind::LossNotify, pkt.flow, pkt);
      }
      return;
    }
    pkt.enq_s = now_;
    q.pkts.push_back(pkt);
    if (!q.busy) start_service(qi);
  }

  void start_service(int qi) {
    auto& q = queues_[qi];
    q.busy = true;
    const Packet& head = q.pkts.front();
    q.stats.wait_sum_s += now_ - head.enq_s;
    schedule(now_ + service_time(q, head), EventKind::Departure, qi);
  }

  static double service_time(const EgressQueue& q, const Packet& p) { return 8.0 * p.bytes / q.rate_bps; }

  void on_departure(int qi) {
    auto& q = queues_[qi];
    Packet pkt = q.pkts.front();
    q.pkts.pop_front();
    ++q.stats.departed;
    ++q.interval_departures;
    q.interval_busy_s += service_time(q, pkt);

    const Route& r = route_of(pkt);
    const double arrive = now_ + q.delay_s;
    if (static_cast<std::size_t>(pkt.hop + 1) < r.queues.size()) {
      ++pkt.hop;
      schedule(arrive, EventKind::Arrival, r.queues[pkt.hop], pkt);
    } else if (pkt.flow == kProbeFlow) {
      schedule(arrive + r.one_way_s, EventKind::ProbeReturn, 0, pkt);
    } else {
      schedule(arrive + r.one_way_s, EventKind::AckArrival, pkt.flow, pkt);
    }

    if (q.pkts.empty())
      q.busy = false;
    else
      start_service(qi);
  }

  void on_pie_timer(int qi) {
    auto& q = queues_[qi];
    if (q.interval_departures > 0 && q.interval_busy_s > 0)
      q.pie_state.depart_rate_est = static_cast<double>(q.interval_departures) / q.interval_busy_s;
    q.interval_departures = 0;
    q.interval_busy_s = 0;
    const double qdelay = queue_delay_estimate(static_cast<int>(q.pkts.size()), q.pie_state.depart_rate_est);
    q.pie_state = pie_update(q.pie_state, qdelay, q.pie_params);
    q.pie_state.last_update_s = now_;
    schedule(now_ + q.pie_params.update_interval_ms / 1000.0, EventKind::PieTimer, qi);
  }

  void on_probe_send(std::uint64_t index) {
    Packet p;
    p.flow = kProbeFlow;
    p.seq = index;
    p.sent_s = now_;
    p.bytes = cfg_.probe_bytes;
    on_arrival(probe_route_.queues.front(), p);
    Packet next;
    next.seq = index + 1;
    schedule(static_cast<double>(index + 1) * cfg_.probe_interval_s, EventKind::ProbeSend, 0, next);
  }

  int usable_window(const Flow& f) const {
    double w = f.tcp.cwnd_pkts;
    if (cfg_.max_cwnd) w = std::min(w, *cfg_.max_cwnd);
    return std::max(1, static_cast<int>(w));
  }

  void send_window(int fi) {
    auto& f = flows_[fi];
    while (f.tcp.in_flight < usable_window(f)) {
      Packet p;
      p.flow = fi;
      p.seq = f.next_seq++;
      p.sent_s = now_;
      p.bytes = cfg_.packet_bytes;
      ++f.tcp.in_flight;
      schedule(now_, EventKind::Arrival, f.route.queues.front(), p);
    }
    if (!f.timer_pending) {
      f.timer_deadline = now_ + f.tcp.rto_s;
      f.timer_pending = true;
      schedule(f.timer_deadline, EventKind::Timeout, fi);
    }
  }

  void sample_cwnd(const Flow& f) {
    if (f.primary) record(result_.trace.cwnd, f.tcp.cwnd_pkts);
  }

  void on_ack(int fi, const Packet& p) {
    auto& f = flows_[fi];
    if (p.seq < f.timeout_floor) return;
    --f.tcp.in_flight;
    const double sample = now_ - p.sent_s;
    f.srtt_s = f.srtt_s < 0 ? sample : 0.875 * f.srtt_s + 0.125 * sample;
    f.tcp.rto_s = std::max(cfg_.min_rto_s, 2.0 * f.srtt_s);
    f.tcp = tcp_step(f.tcp, TcpEvent::Ack);
    f.timer_deadline = now_ + f.tcp.rto_s;
    sample_cwnd(f);
    send_window(fi);
  }

  void on_loss(int fi, const Packet& p) {
    auto& f = flows_[fi];
    if (p.seq < f.timeout_floor) return;
    --f.tcp.in_flight;
    // one window reduction per round trip
    if (p.seq >= f.recover_seq) {
      f.tcp = tcp_step(f.tcp, TcpEvent::Loss);
      f.recover_seq = f.next_seq;
      sample_cwnd(f);
    }
    send_window(fi);
  }

  void on_timeout(int fi) {
    auto& f = flows_[fi];
    f.timer_pending = false;
    if (f.tcp.in_flight == 0) return;
    if (now_ < f.timer_deadline) {
      f.timer_pending = true;
      schedule(f.timer_deadline, EventKind::Timeout, fi);
      return;
    }
    f.tcp = tcp_step(f.tcp, TcpEvent::Timeout);
    f.tcp.in_flight = 0;
    f.timeout_floor = f.next_seq;
    f.recover_seq = f.next_seq;
    f.tcp.rto_s = std::min(60.0, 2.0 * f.tcp.rto_s);
    sample_cwnd(f);
    send_window(fi);
  }

  const Topology& topo_;
  SimConfig cfg_;
  Rng rng_;
  std::vector<EgressQueue> queues_;
  std::vector<Flow> flows_;
  Route probe_route_;
  int bottleneck_queue_ = -1;
  int primary_flow_ = -1;
  std::priority_queue<Event, std::vector<Event>, EventOrder> events_;
  std::uint64_t next_event_seq_ = 0;
  std::uint64_t processed_ = 0;
  double now_ = 0;
  SimResult result_;
};

}  // namespace

SimResult simulate_detailed(const Topology& t, const std::vector<FlowSpec>& flows,
                            const QueueDiscipline& disc, const SimConfig& cfg, std::uint64_t seed) {
  return Simulator(t, flows, disc, cfg, seed).run();
}

Trace simulate(const Topology& t, const std::vector<FlowSpec>& flows, const QueueDiscipline& disc,
               double duration_s, std::uint64_t seed) {
  SimConfig cfg;
  cfg.duration_s = duration_s;
  return simulate_detailed(t, flows, disc, cfg, seed).trace;
}

}  // namespace aqmsense
