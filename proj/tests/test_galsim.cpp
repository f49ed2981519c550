#include <map>

#include "doctest.h"
#include "ocm/errors.hpp"
#include "ocm/galsim.hpp"
#include "ocm/packer.hpp"

using namespace ocm;

namespace {

Bin make_bin(int n, std::vector<std::int64_t> depths = {}) {
  Bin bin;
  bin.aspect = {18, 1024};
  std::int64_t row = 0;
  for (int i = 1; i <= n; ++i) {
    Placement p;
    p.slice.buffer = "s" + std::to_string(i);
    p.slice.width_bits = 18;
    p.slice.depth_words = depths.empty() ? 1024 / n : depths[i - 1];
    p.row_offset = row;
    row += p.slice.depth_words;
    bin.placements.push_back(std::move(p));
  }
  return bin;
}

ClockPlan clock_ratio(const Rat& rf) {
  ClockPlan c;
  c.f_compute_mhz = Rat(200);
  c.f_memory_mhz = Rat(200) * rf;
  return c;
}

SimConfig sim_for(const Rat& rf) {
  SimConfig sim;
  sim.clock = clock_ratio(rf);
  return sim;
}

}  // namespace

TEST_CASE("four buffers at double clock sustain exactly one word per cycle each") {
  const auto cfg = build_streamer(make_bin(4), clock_ratio(Rat(2)), false);
  const auto rep = simulate(cfg, sim_for(Rat(2)));
  REQUIRE(rep.per_stream_rate.size() == 4);
  for (const auto& [stream, rate] : rep.per_stream_rate) CHECK(rate == Rat(1));
  CHECK(rep.violations == 0);
  CHECK(rep.starvation_events == 0);
  CHECK(rep.port_busy_fraction.at('A') <= Rat(1));
  CHECK(rep.port_busy_fraction.at('B') <= Rat(1));
}

TEST_CASE("co-located tiles of one parent are independent full-rate streams") {
  // Four quarter-depth tiles of a single buffer: the simulator must feed all
  // four concurrently, exactly like four unrelated buffers.
  Bin bin = make_bin(4);
  for (int i = 0; i < 4; ++i) {
    bin.placements[i].slice.buffer = "a";
    bin.placements[i].slice.part = PartKind::tile;
    bin.placements[i].slice.tile_index = i;
    bin.placements[i].slice.parent_row = 256 * i;
  }
  const auto cfg = build_streamer(bin, clock_ratio(Rat(2)), false);
  const auto rep = simulate(cfg, sim_for(Rat(2)));
  REQUIRE(rep.per_stream_rate.size() == 4);
  for (int i = 1; i <= 4; ++i)
    CHECK(rep.per_stream_rate.at("a#" + std::to_string(i)) == Rat(1));
  CHECK(rep.violations == 0);
  CHECK(rep.starvation_events == 0);
}

TEST_CASE("three buffers at 1.5x reach full rate only with adaptive slots") {
  const Bin bin = make_bin(3, {300, 401, 300});

  const auto adaptive = build_streamer(bin, clock_ratio(Rat(3, 2)), true);
  const auto rep = simulate(adaptive, sim_for(Rat(3, 2)));
  REQUIRE(rep.per_stream_rate.size() == 3);
  for (const auto& [stream, rate] : rep.per_stream_rate) CHECK(rate == Rat(1));
  CHECK(rep.starvation_events == 0);
  CHECK(rep.violations == 0);

  const auto fixed = build_streamer(bin, clock_ratio(Rat(3, 2)), false);
  const auto rep2 = simulate(fixed, sim_for(Rat(3, 2)));
  CHECK(rep2.per_stream_rate.at("s2") == Rat(1));  // the split stream is over-served
  CHECK(rep2.per_stream_rate.at("s1") < Rat(1));   // the static slots starve the rest
  CHECK(rep2.per_stream_rate.at("s3") < Rat(1));
  CHECK(rep2.starvation_events > 0);
  CHECK(rep2.violations == 0);
  const Rat tol(1, 100);
  CHECK(rep2.per_stream_rate.at("s1") >= Rat(3, 4) - tol);
  CHECK(rep2.per_stream_rate.at("s1") <= Rat(3, 4) + tol);
}

TEST_CASE("under-provisioned bins degrade to the fair bandwidth share") {
  const auto cfg = build_streamer(make_bin(4), clock_ratio(Rat(1)), false);
  CHECK_FALSE(cfg.feasible);  // floor(2*1) = 2 < 4
  const auto sim = sim_for(Rat(1));
  const auto rep = simulate(cfg, sim);
  const Rat tol(1, sim.measure_compute_cycles);
  for (const auto& [stream, rate] : rep.per_stream_rate) {
    CHECK(rate >= Rat(1, 2) - tol);
    CHECK(rate <= Rat(1, 2) + tol);
    CHECK(rate <= Rat(1));  // never above demand
  }
  CHECK(rep.violations == 0);
  CHECK(rep.starvation_events > 0);
}

TEST_CASE("word order is sequential per stream, across the split merge") {
  const Bin bin = make_bin(3, {5, 7, 6});
  const auto cfg = build_streamer(bin, clock_ratio(Rat(3, 2)), true);
  REQUIRE(cfg.merge_plan.has_value());
  SimConfig sim = sim_for(Rat(3, 2));
  sim.measure_compute_cycles = 256;
  std::vector<std::pair<std::string, std::int64_t>> log;
  const auto rep = simulate(cfg, sim, nullptr, &log);
  CHECK(rep.starvation_events == 0);
  std::map<std::string, std::int64_t> depth = {{"s1", 5}, {"s2", 7}, {"s3", 6}};
  std::map<std::string, std::int64_t> next;
  std::map<std::string, std::int64_t> count;
  for (const auto& [stream, addr] : log) {
    auto [it, fresh] = next.emplace(stream, addr);
    CHECK(addr == it->second);
    it->second = (it->second + 1) % depth.at(stream);
    ++count[stream];
  }
  for (const auto& [stream, n] : count) CHECK(n > 256);  // wrapped many times
}

TEST_CASE("a throttled consumer is served exactly at its demand") {
  const auto cfg = build_streamer(make_bin(4), clock_ratio(Rat(1)), false);
  SimConfig sim = sim_for(Rat(1));
  sim.consumer_rate = Rat(1, 2);
  const auto rep = simulate(cfg, sim);
  for (const auto& [stream, rate] : rep.per_stream_rate) CHECK(rate == Rat(1, 2));
  CHECK(rep.starvation_events == 0);
  CHECK(rep.violations == 0);
}

TEST_CASE("FIFO occupancy respects the configured depth") {
  for (int depth : {2, 3, 8, 32}) {
    const auto cfg = build_streamer(make_bin(2), clock_ratio(Rat(3)), false);
    SimConfig sim = sim_for(Rat(3));
    sim.fifo_depth = depth;
    const auto rep = simulate(cfg, sim);  // heavy oversupply pushes FIFOs to the cap
    for (const auto& [stream, peak] : rep.fifo_peak) {
      CHECK(peak <= depth);
      CHECK(peak >= 1);
    }
    CHECK(rep.violations == 0);
    for (const auto& [stream, rate] : rep.per_stream_rate) CHECK(rate == Rat(1));
  }
}

TEST_CASE("simulation is deterministic") {
  const auto cfg = build_streamer(make_bin(3, {128, 257, 128}), clock_ratio(Rat(3, 2)), true);
  const auto a = simulate(cfg, sim_for(Rat(3, 2)));
  const auto b = simulate(cfg, sim_for(Rat(3, 2)));
  CHECK(a.per_stream_rate == b.per_stream_rate);
  CHECK(a.fifo_peak == b.fifo_peak);
  CHECK(a.port_busy_fraction == b.port_busy_fraction);
  CHECK(a.starvation_events == b.starvation_events);
}

TEST_CASE("trace events are tick-ordered and cover grants and pops") {
  const auto cfg = build_streamer(make_bin(2), clock_ratio(Rat(2)), false);
  SimConfig sim = sim_for(Rat(2));
  sim.warmup_compute_cycles = 4;
  sim.measure_compute_cycles = 64;
  std::vector<TraceEvent> events;
  simulate(cfg, sim, &events);
  REQUIRE_FALSE(events.empty());
  std::int64_t last = 0;
  int grants = 0, pops = 0;
  for (const auto& e : events) {
    CHECK(e.tick >= last);
    last = e.tick;
    if (e.event == "grant") ++grants;
    if (e.event == "pop") ++pops;
  }
  CHECK(grants > 0);
  CHECK(pops > 0);
}

TEST_CASE("invalid simulation configs are rejected") {
  const auto cfg = build_streamer(make_bin(2), clock_ratio(Rat(2)), false);
  SimConfig sim = sim_for(Rat(2));
  sim.fifo_depth = 1;
  CHECK_THROWS_AS(simulate(cfg, sim), InputError);
  sim = sim_for(Rat(2));
  sim.measure_compute_cycles = 0;
  CHECK_THROWS_AS(simulate(cfg, sim), InputError);
  sim = sim_for(Rat(2));
  sim.consumer_rate = Rat(0);
  CHECK_THROWS_AS(simulate(cfg, sim), InputError);
  sim = sim_for(Rat(2));
  sim.consumer_rate = Rat(3, 2);
  CHECK_THROWS_AS(simulate(cfg, sim), InputError);
  sim = sim_for(Rat(2));
  sim.measure_compute_cycles = 4;  // 8 memory cycles < 10 periods of 1
  CHECK_THROWS_AS(simulate(cfg, sim), InputError);
}

TEST_CASE("solution verification ties the packer to the simulator") {
  RamSpec ram;
  std::vector<Slice> slices;
  for (int i = 0; i < 8; ++i) {
    Slice s;
    s.buffer = "b" + std::to_string(i);
    s.width_bits = 9;
    s.depth_words = 500;
    slices.push_back(std::move(s));
  }

  // Height-2 bins at ratio 1: the two ports suffice.
  const auto sol2 = pack_greedy(slices, ram, 2);
  const auto v1 = verify_solution(sol2, clock_ratio(Rat(1)), sim_for(Rat(1)), false);
  CHECK(v1.pass);
  REQUIRE(v1.bins.size() == (std::size_t)sol2.n_ram);

  // Height-4 bins pass at ratio 2 and fail at 1.5 with rates near 3/4.
  std::vector<Slice> quarters;
  for (int i = 0; i < 8; ++i) {
    Slice s;
    s.buffer = "q" + std::to_string(i);
    s.width_bits = 9;
    s.depth_words = 512;
    quarters.push_back(std::move(s));
  }
  const auto sol4 = pack_greedy(quarters, ram, 4);
  REQUIRE(sol4.n_ram == 2);
  CHECK(verify_solution(sol4, clock_ratio(Rat(2)), sim_for(Rat(2)), false).pass);

  const auto fail = verify_solution(sol4, clock_ratio(Rat(3, 2)), sim_for(Rat(3, 2)), true);
  CHECK_FALSE(fail.pass);
  const Rat tol(1, 1024);
  for (const auto& [ram_index, rep] : fail.bins)
    for (const auto& [stream, rate] : rep.per_stream_rate) {
      CHECK(rate >= Rat(3, 4) - tol);
      CHECK(rate <= Rat(3, 4) + tol);
    }
}
