#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ocm/packer.hpp"

namespace ocm {

// Recombination plan for a slice split by address parity: the even half
// holds source words 0,2,4,..., the odd half 1,3,5,...; interleaving them
// even-first reconstructs the slice's sequential address stream.
struct MergePlan {
  Slice even_slice;
  Slice odd_slice;
  std::string output_stream;  // stream label of the split slice
};

// Readback plan of one packed RAM: which parent streams each of the two
// ports serves round-robin, and whether one buffer is split across ports.
struct StreamerConfig {
  Bin bin;  // copy of the packed bin with any split applied
  Rat ratio{1};
  std::array<std::vector<std::string>, 2> slots;  // [0] = port A, [1] = port B
  std::optional<MergePlan> merge_plan;
  bool adaptive = false;
  bool feasible = true;
  Rat sustained_bound{0};  // fair bandwidth share 2*ratio/height; the shortfall when infeasible
};

struct Grant {
  std::int64_t mem_cycle = 0;
  char port = 'A';
  std::string stream;
  std::int64_t address_stride = 1;  // slices are laid out contiguously
};

struct ReadSchedule {
  std::int64_t period_mem_cycles = 1;
  std::vector<Grant> grants;
};

// Stream label of each placement, parallel to bin.placements. A placement
// streams under its parent buffer's name; when several slices of one parent
// share a bin each source slice gets an ordinal suffix ("name#1", ...). The
// odd/even halves of one source slice share a label: they are one stream.
std::vector<std::string> stream_labels(const Bin& bin);

// Assigns streams to port slots (balanced within one), splits the deepest
// slice by address parity when the stream count is odd and the ratio is
// fractional, and checks the static port-bandwidth bound
// height <= floor(2 * ratio). Bins that already contain a split pair are
// adopted as-is. Never degrades silently: infeasible configs carry their
// sustained-rate shortfall.
StreamerConfig build_streamer(const Bin& bin, const ClockPlan& clock, bool adaptive);

// Words per compute cycle each parent stream receives from the static
// round-robin, before any backpressure or slot donation.
std::map<std::string, Rat> nominal_rates(const StreamerConfig& config);

// Static unrolling of the round-robin over one period (lcm of the two ports'
// slot counts). Requires a feasible config.
ReadSchedule emit_schedule(const StreamerConfig& config);

}  // namespace ocm
