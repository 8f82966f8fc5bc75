#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aqmsense/rng.hpp"
#include "aqmsense/topology.hpp"

namespace aqmsense {

struct DropTailParams {
  int buffer_pkts = 100;

  friend bool operator==(const DropTailParams&, const DropTailParams&) = default;
};

/// PIE controller constants; defaults are the commonly published ones.
struct PieParams {
  double target_delay_ms = 15.0;
  double alpha = 0.125;
  double beta = 1.25;
  double update_interval_ms = 16.0;
  int buffer_pkts = 100;

  friend bool operator==(const PieParams&, const PieParams&) = default;
};

using QueueDiscipline = std::variant<DropTailParams, PieParams>;

enum class QueueLabel { DropTail = 0, Pie = 1 };

QueueLabel label_of(const QueueDiscipline& d);
std::string to_string(QueueLabel l);
/// Accepts "droptail" / "pie"; throws ConfigError otherwise.
QueueLabel parse_label(const std::string& s);

/// Throws ConfigError on a non-positive buffer or PIE constant.
void validate(const QueueDiscipline& d);

/// Bottleneck buffer: twice the path bandwidth-delay product in packets,
/// never fewer than 20.
int default_buffer_pkts(const Topology& t, int packet_bytes = 1500);

QueueDiscipline make_discipline(QueueLabel label, const Topology& t);

enum class Admit { Accept, Drop };

/// Drop iff the queue is full.
Admit droptail_enqueue(int qlen, int buffer_pkts);

struct PieState {
  double drop_prob = 0.0;
  double qdelay_old_ms = 0.0;
  double last_update_s = 0.0;
  double depart_rate_est = 0.0;  // packets/s, 0 until a departure is seen
};

/// One controller step:
///   p += alpha * (qdelay - target) / 1000 + beta * (qdelay - qdelay_old) / 1000
/// clamped to [0, 1]. Delays are in ms.
PieState pie_update(PieState s, double qdelay_ms, const PieParams& params);

/// Random early drop with probability s.drop_prob; always drops at the hard cap.
Admit pie_enqueue(const PieState& s, int qlen, const PieParams& params, Rng& rng);

/// Little's-law queueing delay in ms; 0 while no departure rate is known.
double queue_delay_estimate(int qlen_pkts, double depart_rate_est);

enum class TcpMode { SlowStart, CongestionAvoidance };
enum class TcpEvent { Ack, Loss, Timeout };

struct TcpState {
  double cwnd_pkts = 1.0;
  double ssthresh_pkts = 1e9;
  int in_flight = 0;
  TcpMode mode = TcpMode::SlowStart;
  double rto_s = 3.0;
};

/// Reno window update for a single event.
TcpState tcp_step(TcpState s, TcpEvent ev);

struct Sample {
  double t_s = 0;
  double value = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Trace {
  std::vector<Sample> rtt;   // ms
  std::vector<Sample> cwnd;  // packets
  QueueLabel label = QueueLabel::DropTail;
  std::uint64_t topology_seed = 0;
  double duration_s = 0;

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct SimConfig {
  double duration_s = 20.0;
  double probe_interval_s = 0.1;
  int packet_bytes = 1500;
  int probe_bytes = 64;
  double initial_cwnd = 10.0;
  /// Caps the usable send window of every flow when set.
  std::optional<double> max_cwnd;
  /// Simulate only the primary flow.
  bool primary_only = false;
  double initial_rto_s = 3.0;
  double min_rto_s = 0.2;
  std::uint64_t max_events = 400'000'000;
};

struct QueueStats {
  std::uint64_t enqueued = 0;  // every arrival offered to the queue, dropped or not
  std::uint64_t departed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_queue = 0;
  double wait_sum_s = 0;  // arrival to start of service, departed packets

  double mean_wait_ms() const { return departed ? 1000.0 * wait_sum_s / static_cast<double>(departed) : 0.0; }
};

struct SimStats {
  /// Indexed by 2 * link + (0 for a->b, 1 for b->a).
  std::vector<QueueStats> queues;
  std::size_t bottleneck_queue = 0;
  std::uint64_t events = 0;
};

struct SimResult {
  Trace trace;
  SimStats stats;
};

/// Packet-level discrete-event run. The primary flow's CWND is sampled on
/// every ACK and loss signal; RTT comes from periodic probes that share the
/// data queues. Only the bottleneck egress uses `disc`; every other egress is
/// drop-tail. Pure function of its arguments.
SimResult simulate_detailed(const Topology& t, const std::vector<FlowSpec>& flows,
                            const QueueDiscipline& disc, const SimConfig& cfg, std::uint64_t seed);

Trace simulate(const Topology& t, const std::vector<FlowSpec>& flows, const QueueDiscipline& disc,
               double duration_s, std::uint64_t seed);

}  // namespace aqmsense
