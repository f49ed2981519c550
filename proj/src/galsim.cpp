#include "ocm/galsim.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "ocm/errors.hpp"

namespace ocm {

namespace {

// One CDC FIFO fed by one port. Split streams own two (even, odd).
struct HalfState {
  std::int64_t slice_depth = 0;
  std::int64_t fifo = 0;
  std::deque<std::int64_t> inflight;  // arrival ticks, in grant order
  std::int64_t granted = 0;
  std::int64_t peak = 0;

  bool full(std::int64_t depth) const { return fifo + (std::int64_t)inflight.size() >= depth; }
};

struct StreamState {
  std::string name;
  bool split = false;
  HalfState half[2];  // [0] even/only, [1] odd
  std::int64_t parent_depth = 0;
  std::int64_t merge_addr = 0;  // next parent word the consumer expects
  Rat acc{0};
  std::int64_t delivered_window = 0;
  std::int64_t popped_total = 0;
};

}  // namespace

SimReport simulate(const StreamerConfig& config, const SimConfig& sim,
                   std::vector<TraceEvent>* trace,
                   std::vector<std::pair<std::string, std::int64_t>>* delivered_log) {
  if (sim.fifo_depth < 2) throw InputError("simulate: fifo_depth must be at least 2");
  if (sim.measure_compute_cycles < 1) throw InputError("simulate: empty measurement window");
  if (sim.consumer_rate <= Rat(0) || sim.consumer_rate > Rat(1))
    throw InputError("simulate: consumer_rate must be in (0,1]");
  const Rat ratio = sim.clock.ratio();
  if (ratio < Rat(1)) throw InputError("simulate: memory clock below compute clock");

  // Base tick = gcd of the two clock periods: compute ticks every p, memory
  // ticks every q base ticks, where ratio = p/q in lowest terms.
  const std::int64_t t_cmp = ratio.numerator();
  const std::int64_t t_mem = ratio.denominator();

  const std::int64_t la = (std::int64_t)config.slots[0].size();
  const std::int64_t lb = (std::int64_t)config.slots[1].size();
  const std::int64_t period = la && lb ? std::lcm(la, lb) : std::max(la, lb);
  if (period > 0 && Rat(sim.measure_compute_cycles) * ratio < Rat(10 * period))
    throw InputError("simulate: measurement window shorter than 10 schedule periods");

  // Streams in slot-table order; the split stream appears on both ports.
  // Slots name streams by placement label, so several slices of one parent
  // buffer in the bin are distinct streams.
  const std::vector<std::string> labels = stream_labels(config.bin);
  std::vector<StreamState> streams;
  auto stream_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < streams.size(); ++i)
      if (streams[i].name == name) return i;
    streams.push_back({});
    streams.back().name = name;
    return streams.size() - 1;
  };
  for (int port = 0; port < 2; ++port)
    for (const auto& s : config.slots[port]) stream_index(s);
  for (auto& st : streams) {
    for (std::size_t pi = 0; pi < config.bin.placements.size(); ++pi) {
      const auto& p = config.bin.placements[pi];
      if (labels[pi] != st.name) continue;
      if (p.slice.part == PartKind::even) {
        st.split = true;
        st.half[0].slice_depth = p.slice.depth_words;
      } else if (p.slice.part == PartKind::odd) {
        st.split = true;
        st.half[1].slice_depth = p.slice.depth_words;
      } else {
        st.half[0].slice_depth = p.slice.depth_words;
      }
    }
    st.parent_depth = st.half[0].slice_depth + st.half[1].slice_depth;
    if (st.parent_depth == 0)
      throw InputError("simulate: stream '" + st.name + "' has no placement in the bin");
    // FIFOs are primed before compute is released (the words are cyclic, so
    // priming is a one-time latency, not a rate change). Starting full puts
    // the arbiter in its steady state from the first tick: backpressure-driven
    // slot donation otherwise switches on only after an O(depth * fifo_depth)
    // cycle transient while the over-served streams' FIFOs fill.
    for (auto& h : st.half)
      if (h.slice_depth > 0) {
        h.fifo = sim.fifo_depth;
        h.granted = sim.fifo_depth;
        h.peak = sim.fifo_depth;
      }
  }

  // Port slot tables resolved to (stream, half): port A feeds the even half.
  std::array<std::vector<std::pair<std::size_t, int>>, 2> slot_of;
  for (int port = 0; port < 2; ++port)
    for (const auto& s : config.slots[port]) {
      const std::size_t si = stream_index(s);
      slot_of[port].push_back({si, streams[si].split ? port : 0});
    }

  const std::int64_t start = sim.warmup_compute_cycles * t_cmp;
  const std::int64_t end = (sim.warmup_compute_cycles + sim.measure_compute_cycles) * t_cmp;
  auto in_window = [&](std::int64_t t) { return t >= start && t < end; };

  SimReport rep;
  std::int64_t busy[2] = {0, 0};
  std::int64_t mem_ticks_window = 0;
  std::int64_t next_cmp = 0, next_mem = 0, k_mem = 0;

  auto log = [&](std::int64_t t, char domain, char port, const std::string& stream,
                 const char* event) {
    if (trace) trace->push_back({t, domain, port, stream, event});
  };

  while (next_cmp < end || next_mem < end) {
    const std::int64_t t = std::min(next_cmp, next_mem);
    if (t >= end) break;
    const bool is_cmp = t == next_cmp;
    const bool is_mem = t == next_mem;

    // 1) Words emerge from the synchronizer into their FIFOs.
    for (auto& st : streams)
      for (auto& h : st.half)
        while (!h.inflight.empty() && h.inflight.front() <= t) {
          h.inflight.pop_front();
          ++h.fifo;
          h.peak = std::max(h.peak, h.fifo);
        }

    // 2) Compute-domain consumers fire at consumer_rate with backpressure.
    if (is_cmp) {
      for (auto& st : streams) {
        st.acc += sim.consumer_rate;
        if (st.acc >= Rat(1)) {
          st.acc -= Rat(1);
          const int need = st.split ? (int)(st.merge_addr % 2) : 0;
          if (st.half[need].fifo > 0) {
            --st.half[need].fifo;
            ++st.popped_total;
            if (delivered_log) delivered_log->push_back({st.name, st.merge_addr});
            st.merge_addr = (st.merge_addr + 1) % st.parent_depth;
            if (in_window(t)) ++st.delivered_window;
            log(t, 'C', '-', st.name, "pop");
          } else {
            if (in_window(t)) ++rep.starvation_events;
            log(t, 'C', '-', st.name, "starve");
          }
        }
      }
      next_cmp += t_cmp;
    }

    // 3) Memory-domain ports issue their round-robin grants.
    if (is_mem) {
      if (in_window(t)) ++mem_ticks_window;
      for (int port = 0; port < 2; ++port) {
        const auto& slots = slot_of[port];
        if (slots.empty()) continue;
        const std::size_t base = (std::size_t)(k_mem % (std::int64_t)slots.size());
        // Grant candidates: this port's slot table rotated to the scheduled
        // stream, then — adaptive only — the other port's table. Cross-port
        // donation keeps the arbiter work-conserving: an odd-depth split
        // consumes its halves unevenly (ceil(d/2) even vs floor(d/2) odd
        // words per pass), so one port's scheduled load can exceed its
        // bandwidth while the other port idles on a backpressured stream.
        std::vector<std::pair<std::size_t, int>> cand;  // (stream, half)
        for (std::size_t probe = 0; probe < slots.size(); ++probe)
          cand.push_back(slots[(base + probe) % slots.size()]);
        if (config.adaptive)
          for (const auto& s : slot_of[1 - port]) cand.push_back(s);
        for (std::size_t probe = 0; probe < cand.size(); ++probe) {
          const auto [si, half] = cand[probe];
          auto& h = streams[si].half[half];
          if (h.full(sim.fifo_depth)) {
            if (!config.adaptive) break;  // static slot wasted
            continue;                     // donate to the next non-full stream
          }
          h.inflight.push_back(t + 2 * t_mem);  // synchronizer latency
          ++h.granted;
          if (in_window(t)) ++busy[port];
          log(t, 'M', port == 0 ? 'A' : 'B', streams[si].name, probe == 0 ? "grant" : "donate");
          break;
        }
      }
      ++k_mem;
      next_mem += t_mem;
    }

    // Word conservation: granted = resident + in flight + popped, per half.
    for (auto& st : streams)
      for (auto& h : st.half)
        if (h.granted < h.fifo + (std::int64_t)h.inflight.size()) ++rep.violations;
    for (auto& st : streams) {
      const std::int64_t got = st.half[0].granted + st.half[1].granted;
      const std::int64_t held = st.half[0].fifo + st.half[1].fifo +
                                (std::int64_t)st.half[0].inflight.size() +
                                (std::int64_t)st.half[1].inflight.size();
      if (got != held + st.popped_total) ++rep.violations;
      if (st.half[0].fifo > sim.fifo_depth || st.half[1].fifo > sim.fifo_depth)
        ++rep.violations;
    }
  }

  for (const auto& st : streams) {
    rep.per_stream_rate[st.name] = Rat(st.delivered_window, sim.measure_compute_cycles);
    rep.fifo_peak[st.name] = std::max(st.half[0].peak, st.half[1].peak);
  }
  rep.port_busy_fraction['A'] = mem_ticks_window ? Rat(busy[0], mem_ticks_window) : Rat(0);
  rep.port_busy_fraction['B'] = mem_ticks_window ? Rat(busy[1], mem_ticks_window) : Rat(0);
  return rep;
}

VerifyResult verify_solution(const PackingSolution& solution, const ClockPlan& clock,
                             const SimConfig& sim, bool adaptive) {
  VerifyResult out;
  for (const auto& bin : solution.bins) {
    StreamerConfig cfg = build_streamer(bin, clock, adaptive);
    SimReport rep = simulate(cfg, sim);
    const bool bin_ok = cfg.feasible && rep.violations == 0 && rep.starvation_events == 0;
    out.pass &= bin_ok;
    out.bins.push_back({bin.ram_index, std::move(rep)});
  }
  return out;
}

}  // namespace ocm
