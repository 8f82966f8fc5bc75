#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aqmsense/errors.hpp"
#include "aqmsense/io.hpp"
#include "aqmsense/netsim.hpp"
#include "aqmsense/rng.hpp"
#include "aqmsense/topology.hpp"

using namespace aqmsense;

namespace {

double path_delay_ms(const Topology& t) {
  double d = 0;
  for (auto e : t.path_links()) d += t.links[e].delay_ms;
  return d;
}

double serialization_ms(const Topology& t, int bytes) {
  double s = 0;
  for (auto e : t.path_links()) s += bytes * 8.0 / (t.links[e].capacity_mbps * 1e3);
  return s;
}

}  // namespace

// ---- drop-tail ----

TEST(DropTail, AcceptsBelowCapacity) { EXPECT_EQ(droptail_enqueue(0, 50), Admit::Accept); }

TEST(DropTail, DropsWhenFull) { EXPECT_EQ(droptail_enqueue(50, 50), Admit::Drop); }

TEST(DropTail, FiftyOneIntoFiftyDropsOne) {
  int qlen = 0, drops = 0;
  for (int i = 0; i < 51; ++i) {
    if (droptail_enqueue(qlen, 50) == Admit::Drop)
      ++drops;
    else
      ++qlen;
  }
  EXPECT_EQ(drops, 1);
  EXPECT_EQ(qlen, 50);
}

// ---- PIE ----

TEST(Pie, SteadyAtTargetLeavesProbability) {
  PieState s;
  s.drop_prob = 0.3;
  s.qdelay_old_ms = 15.0;
  EXPECT_DOUBLE_EQ(pie_update(s, 15.0, PieParams{}).drop_prob, 0.3);
}

TEST(Pie, UpdateFormulaByHand) {
  PieState s;
  s.qdelay_old_ms = 15.0;
  const PieState out = pie_update(s, 30.0, PieParams{});
  EXPECT_NEAR(out.drop_prob, 0.125 * 0.015 + 1.25 * 0.015, 1e-15);
  EXPECT_NEAR(out.drop_prob, 0.020625, 1e-15);
  EXPECT_DOUBLE_EQ(out.qdelay_old_ms, 30.0);
}

TEST(Pie, ProbabilityStaysClamped) {
  Rng r(12);
  PieState s;
  for (int i = 0; i < 100000; ++i) {
    s = pie_update(s, r.uniform(0.0, 5000.0) * (r.bernoulli(0.5) ? 1 : 0), PieParams{});
    ASSERT_GE(s.drop_prob, 0.0);
    ASSERT_LE(s.drop_prob, 1.0);
  }
}

TEST(Pie, ZeroProbabilityAlwaysAccepts) {
  Rng r(1);
  PieState s;
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(pie_enqueue(s, i % 99, PieParams{}, r), Admit::Accept);
}

TEST(Pie, FullProbabilityAlwaysDrops) {
  Rng r(1);
  PieState s;
  s.drop_prob = 1.0;
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(pie_enqueue(s, 0, PieParams{}, r), Admit::Drop);
}

TEST(Pie, HardCapDrops) {
  Rng r(1);
  PieParams p;
  p.buffer_pkts = 10;
  EXPECT_EQ(pie_enqueue(PieState{}, 10, p, r), Admit::Drop);
}

TEST(Pie, EmpiricalDropRate) {
  Rng r(99);
  PieState s;
  s.drop_prob = 0.25;
  const int n = 100000;
  int drops = 0;
  for (int i = 0; i < n; ++i) drops += pie_enqueue(s, 0, PieParams{}, r) == Admit::Drop;
  EXPECT_LT(std::abs(drops - 0.25 * n), 3 * std::sqrt(n * 0.25 * 0.75));
}

TEST(Pie, QueueDelayEstimate) {
  EXPECT_DOUBLE_EQ(queue_delay_estimate(0, 1000.0), 0.0);
  EXPECT_DOUBLE_EQ(queue_delay_estimate(50, 1000.0), 50.0);
  EXPECT_DOUBLE_EQ(queue_delay_estimate(50, 0.0), 0.0);
}

TEST(Discipline, Validation) {
  EXPECT_THROW(validate(QueueDiscipline{DropTailParams{0}}), ConfigError);
  PieParams p;
  p.alpha = 0;
  EXPECT_THROW(validate(QueueDiscipline{p}), ConfigError);
  EXPECT_NO_THROW(validate(QueueDiscipline{PieParams{}}));
  EXPECT_EQ(parse_label("pie"), QueueLabel::Pie);
  EXPECT_EQ(parse_label("droptail"), QueueLabel::DropTail);
  EXPECT_THROW(parse_label("red"), ConfigError);
}

TEST(Discipline, BufferAtLeastTwenty) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Topology t = generate_scenario(seed).topology;
    EXPECT_GE(default_buffer_pkts(t), 20);
  }
}

// ---- TCP ----

TEST(Tcp, CongestionAvoidanceAck) {
  TcpState s;
  s.cwnd_pkts = 10;
  s.mode = TcpMode::CongestionAvoidance;
  EXPECT_NEAR(tcp_step(s, TcpEvent::Ack).cwnd_pkts, 10.1, 1e-12);
}

TEST(Tcp, LossHalves) {
  TcpState s;
  s.cwnd_pkts = 10;
  const TcpState out = tcp_step(s, TcpEvent::Loss);
  EXPECT_DOUBLE_EQ(out.cwnd_pkts, 5.0);
  EXPECT_EQ(out.mode, TcpMode::CongestionAvoidance);
}

TEST(Tcp, TimeoutResetsToOne) {
  TcpState s;
  s.cwnd_pkts = 20;
  const TcpState out = tcp_step(s, TcpEvent::Timeout);
  EXPECT_DOUBLE_EQ(out.cwnd_pkts, 1.0);
  EXPECT_DOUBLE_EQ(out.ssthresh_pkts, 10.0);
  EXPECT_EQ(out.mode, TcpMode::SlowStart);
}

TEST(Tcp, SlowStartDoublesPerRound) {
  TcpState s;
  s.ssthresh_pkts = 64;
  double expected = 1;
  while (s.mode == TcpMode::SlowStart) {
    const int window = static_cast<int>(s.cwnd_pkts);
    for (int i = 0; i < window; ++i) s = tcp_step(s, TcpEvent::Ack);
    expected *= 2;
    ASSERT_DOUBLE_EQ(s.cwnd_pkts, expected);
  }
  EXPECT_DOUBLE_EQ(s.cwnd_pkts, 64.0);
}

TEST(Tcp, CwndNeverBelowOne) {
  Rng r(3);
  TcpState s;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    s = tcp_step(s, u < 0.9 ? TcpEvent::Ack : (u < 0.98 ? TcpEvent::Loss : TcpEvent::Timeout));
    ASSERT_GE(s.cwnd_pkts, 1.0);
  }
}

// ---- simulator ----

TEST(Simulate, TwentySecondRunEndsNearTwenty) {
  const Scenario sc = generate_scenario(1);
  const Trace tr = simulate(sc.topology, sc.flows, make_discipline(QueueLabel::Pie, sc.topology), 20.0, 1);
  ASSERT_FALSE(tr.rtt.empty());
  EXPECT_GE(tr.rtt.back().t_s, 19.9);
  EXPECT_LE(tr.rtt.back().t_s, 20.0);
  EXPECT_DOUBLE_EQ(tr.duration_s, 20.0);
}

TEST(Simulate, PinnedWindowRttIsPropagation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario sc = generate_scenario(seed);
    SimConfig cfg;
    cfg.duration_s = 10;
    cfg.max_cwnd = 1.0;
    cfg.primary_only = true;
    const auto r = simulate_detailed(sc.topology, sc.flows, make_discipline(QueueLabel::DropTail, sc.topology), cfg, seed);
    const double base = 2 * path_delay_ms(sc.topology);
    const double lo = base + serialization_ms(sc.topology, cfg.probe_bytes);
    const double hi = lo + serialization_ms(sc.topology, cfg.packet_bytes);
    ASSERT_GT(r.trace.rtt.size(), 90u);
    for (const auto& s : r.trace.rtt) {
      ASSERT_GE(s.value, lo - 1e-9);
      ASSERT_LE(s.value, hi + 1e-9);
      // queueing-free: within a few ms of twice the summed propagation delay
      ASSERT_NEAR(s.value, base, 0.5 + serialization_ms(sc.topology, cfg.packet_bytes + cfg.probe_bytes));
    }
    for (const auto& q : r.stats.queues) EXPECT_EQ(q.dropped, 0u);
  }
}

TEST(Simulate, DeterministicTrace) {
  const Scenario sc = generate_scenario(8);
  const auto disc = make_discipline(QueueLabel::DropTail, sc.topology);
  const Trace a = simulate(sc.topology, sc.flows, disc, 20.0, 5);
  const Trace b = simulate(sc.topology, sc.flows, disc, 20.0, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(trace_to_csv(a), trace_to_csv(b));
}

TEST(Simulate, ConservationCausalityOrdering) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario sc = generate_scenario(seed);
    for (QueueLabel label : {QueueLabel::DropTail, QueueLabel::Pie}) {
      SimConfig cfg;
      cfg.duration_s = 10;
      const auto r = simulate_detailed(sc.topology, sc.flows, make_discipline(label, sc.topology), cfg, seed);
      for (const auto& q : r.stats.queues) ASSERT_EQ(q.enqueued, q.departed + q.dropped + q.in_queue);
      const double floor_ms = 2 * path_delay_ms(sc.topology);
      for (std::size_t i = 0; i < r.trace.rtt.size(); ++i) {
        ASSERT_GE(r.trace.rtt[i].value, floor_ms);
        if (i) ASSERT_GT(r.trace.rtt[i].t_s, r.trace.rtt[i - 1].t_s);
      }
      for (std::size_t i = 0; i < r.trace.cwnd.size(); ++i) {
        ASSERT_GE(r.trace.cwnd[i].value, 1.0);
        if (i) ASSERT_GT(r.trace.cwnd[i].t_s, r.trace.cwnd[i - 1].t_s);
      }
    }
  }
}

TEST(Simulate, PieKeepsBottleneckDelayLower) {
  int pie_lower = 0;
  const int pairs = 30;
  for (int i = 0; i < pairs; ++i) {
    const auto seed = static_cast<std::uint64_t>(1000 + i);
    const Scenario sc = generate_scenario(seed);
    SimConfig cfg;
    const auto dt = simulate_detailed(sc.topology, sc.flows, make_discipline(QueueLabel::DropTail, sc.topology), cfg, seed);
    const auto pie = simulate_detailed(sc.topology, sc.flows, make_discipline(QueueLabel::Pie, sc.topology), cfg, seed);
    pie_lower += pie.stats.queues[pie.stats.bottleneck_queue].mean_wait_ms() <=
                 dt.stats.queues[dt.stats.bottleneck_queue].mean_wait_ms();
  }
  EXPECT_GE(pie_lower, (3 * pairs + 3) / 4);
}

TEST(Simulate, RejectsMissingBottleneck) {
  Scenario sc = generate_scenario(2);
  const auto disc = make_discipline(QueueLabel::Pie, sc.topology);
  sc.topology.bottleneck_link.reset();
  EXPECT_THROW(simulate(sc.topology, sc.flows, disc, 1.0, 1), TopologyError);
}

TEST(Simulate, RejectsMissingPrimaryFlow) {
  Scenario sc = generate_scenario(2);
  const auto disc = make_discipline(QueueLabel::Pie, sc.topology);
  sc.flows.erase(sc.flows.begin());
  EXPECT_THROW(simulate(sc.topology, sc.flows, disc, 1.0, 1), TopologyError);
}

TEST(Simulate, EventBudgetEnforced) {
  const Scenario sc = generate_scenario(2);
  SimConfig cfg;
  cfg.max_events = 1000;
  EXPECT_THROW(simulate_detailed(sc.topology, sc.flows, make_discipline(QueueLabel::Pie, sc.topology), cfg, 1),
               ResourceError);
}
