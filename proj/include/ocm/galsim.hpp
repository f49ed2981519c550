#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ocm/streamer.hpp"

namespace ocm {

struct SimConfig {
  ClockPlan clock;
  std::int64_t fifo_depth = 32;  // words per CDC FIFO
  // Long enough for adaptive arbitration to reach its steady state: donated
  // slots only appear once the over-served stream's FIFO fills, which takes
  // fifo_depth / (supply - demand) compute cycles (~128 at the default sizes).
  std::int64_t warmup_compute_cycles = 512;
  std::int64_t measure_compute_cycles = 1024;
  Rat consumer_rate{1};  // words demanded per compute cycle per stream, in (0,1]
};

struct TraceEvent {
  std::int64_t tick = 0;  // base ticks (gcd of the two clock periods)
  char domain = 'M';      // 'M' memory tick, 'C' compute tick
  char port = '-';        // 'A'/'B' for grants, '-' for consumer events
  std::string stream;
  std::string event;  // grant | donate | pop | starve
};

struct SimReport {
  std::map<std::string, Rat> per_stream_rate;  // measured words per compute cycle
  std::map<std::string, std::int64_t> fifo_peak;
  std::map<char, Rat> port_busy_fraction;
  std::int64_t violations = 0;         // conservation/port/FIFO invariant breaches
  std::int64_t starvation_events = 0;  // demanded words not served inside the window
};

// Cycle-accurate walk of one bin's readback: memory-domain ports issue
// round-robin grants (donating slots to the next non-full stream when
// adaptive), words cross a 2-memory-cycle synchronizer into per-stream FIFOs,
// and compute-domain consumers pop at consumer_rate with backpressure.
// delivered_log, when given, receives (stream, word address) per pop in
// order; split streams log merged parent addresses.
SimReport simulate(const StreamerConfig& config, const SimConfig& sim,
                   std::vector<TraceEvent>* trace = nullptr,
                   std::vector<std::pair<std::string, std::int64_t>>* delivered_log = nullptr);

struct VerifyResult {
  bool pass = true;
  std::vector<std::pair<std::int64_t, SimReport>> bins;  // (ram_index, report)
};

// Builds a streamer for every bin and simulates it. Pass requires every bin
// feasible, every stream served at exactly consumer_rate over the window
// (zero starvation), and zero invariant violations.
VerifyResult verify_solution(const PackingSolution& solution, const ClockPlan& clock,
                             const SimConfig& sim, bool adaptive);

}  // namespace ocm
