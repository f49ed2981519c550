#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ocm/model.hpp"

namespace ocm {

enum class PartKind { whole, odd, even, tile };

// A rectangular piece of one parent buffer. parent_row/parent_bit locate the
// piece inside the parent so solutions can be checked for exact coverage.
// For odd/even halves they locate the *source slice* that was split; the two
// halves of a pair carry identical source coordinates.
struct Slice {
  std::string buffer;  // parent buffer (layer) name
  PartKind part = PartKind::whole;
  std::int64_t tile_index = -1;  // >= 0 iff part == tile
  std::int64_t depth_words = 0;
  std::int64_t width_bits = 0;
  std::int64_t parent_row = 0;
  std::int64_t parent_bit = 0;
};

struct Placement {
  Slice slice;
  std::int64_t row_offset = 0;
  std::int64_t bit_offset = 0;
  char port = 'A';
};

// One physical RAM. Placements are disjoint rectangles inside `aspect`.
// Each placement is one concurrent stream, so a bin holds at most h_b of
// them (the number of distinct parent buffers is then <= h_b as well); the
// odd/even halves of one source slice count as a single stream and must sit
// on different ports.
struct Bin {
  std::int64_t ram_index = 0;
  Aspect aspect;
  std::vector<Placement> placements;
};

enum class Engine { greedy, ga, exhaustive };

std::string engine_name(Engine e);
std::optional<Engine> engine_from_name(const std::string& name);

struct PackingSolution {
  std::vector<Bin> bins;
  std::int64_t n_ram = 0;
  Rat efficiency{0};
  std::string island;
  std::uint64_t seed = 0;
  Engine engine = Engine::greedy;
  std::int64_t total_bits = 0;
};

// GA knobs. p_adm_h admits moves that target an already-full-height bin
// (resolved by evicting that bin's smallest slice); p_adm_w admits moves
// that would widen a bin's aspect (structurally impossible with the default
// single-aspect RAM, hence the conventional value 0).
struct GaParams {
  std::int64_t h_b = 4;
  std::int64_t pop_size = 50;
  std::int64_t tourney = 5;
  double p_adm_w = 0.0;
  double p_adm_h = 0.1;
  double p_mut = 0.3;
  std::int64_t generations = 500;
  std::uint64_t seed = 1;
};

struct TileResult {
  std::vector<Slice> full_tiles;  // each exactly fills one RAM at some aspect
  std::vector<Slice> residuals;   // sub-RAM leftovers, eligible for co-location
};

// Grid decomposition at the aspect that minimizes the direct RAM count.
// Slice count equals direct_ram_count; bits are conserved exactly.
TileResult tile_buffer(const WeightBuffer& buffer, const RamSpec& ram);

// First-fit decreasing by slice area. Deterministic.
PackingSolution pack_greedy(const std::vector<Slice>& slices, const RamSpec& ram, std::int64_t h_b);

// Grouping GA over slice->bin assignments, seeded with the greedy solution,
// so the result is never worse than greedy. Deterministic for a fixed seed.
PackingSolution pack_ga(const std::vector<Slice>& slices, const RamSpec& ram, const GaParams& params);

// Provably minimal bin count over all set partitions into groups of <= h_b
// slices, each group placed by exact rectangle search. At most 10 slices.
PackingSolution pack_exhaustive(const std::vector<Slice>& slices, const RamSpec& ram, std::int64_t h_b);

// Tiles every buffer, packs residuals per island with the requested engine,
// and maps full tiles and non-packable buffers one slice per RAM. Returns one
// solution per island, in first-appearance order of the island labels.
std::vector<PackingSolution> pack_islands(const std::vector<WeightBuffer>& buffers,
                                          const RamSpec& ram, const GaParams& params,
                                          Engine engine = Engine::ga);

// Checks every structural invariant of a solution against its source buffers:
// exact word coverage (bijection), rectangle disjointness, bin height <= h_b
// counting streams (odd/even pairs of one source slice count once and must
// sit on distinct ports), and efficiency == recomputed storage ratio.
// Returns an explanation for the first violation found, or nothing if the
// solution is sound.
std::optional<std::string> validate_solution(const PackingSolution& solution,
                                             const std::vector<WeightBuffer>& buffers,
                                             const RamSpec& ram, std::int64_t h_b);

}  // namespace ocm
