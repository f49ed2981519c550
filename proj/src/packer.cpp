#include "ocm/packer.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <random>

#include "ocm/errors.hpp"

namespace ocm {

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::greedy: return "greedy";
    case Engine::ga: return "ga";
    case Engine::exhaustive: return "exhaustive";
  }
  return "?";
}

std::optional<Engine> engine_from_name(const std::string& name) {
  if (name == "greedy") return Engine::greedy;
  if (name == "ga") return Engine::ga;
  if (name == "exhaustive") return Engine::exhaustive;
  return std::nullopt;
}

namespace {

struct Dim {
  std::int64_t w = 0, d = 0;
};

using Pos = std::pair<std::int64_t, std::int64_t>;  // (bit offset, row offset)

bool fit_backtrack(const std::vector<Dim>& dims, std::size_t i, std::vector<Pos>& pos,
                   std::int64_t W, std::int64_t D) {
  if (i == dims.size()) return true;
  std::vector<std::int64_t> xs{0}, ys{0};
  for (std::size_t j = 0; j < i; ++j) {
    xs.push_back(pos[j].first + dims[j].w);
    ys.push_back(pos[j].second + dims[j].d);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  for (std::int64_t y : ys) {
    if (y + dims[i].d > D) continue;
    for (std::int64_t x : xs) {
      if (x + dims[i].w > W) continue;
      bool clash = false;
      for (std::size_t j = 0; j < i && !clash; ++j)
        clash = x < pos[j].first + dims[j].w && pos[j].first < x + dims[i].w &&
                y < pos[j].second + dims[j].d && pos[j].second < y + dims[i].d;
      if (clash) continue;
      pos[i] = {x, y};
      if (fit_backtrack(dims, i + 1, pos, W, D)) return true;
    }
  }
  return false;
}

// Exact feasibility of a rectangle set inside W x D. Normal-position search is
// complete for this decision; fast paths cover the dominant one-dimensional
// cases without allocation. pos_out, when given, receives placements in input
// order.
bool fit_rects(const std::vector<Dim>& dims, std::int64_t W, std::int64_t D,
               std::vector<Pos>* pos_out = nullptr) {
  std::int64_t area = 0, sum_w = 0, sum_d = 0;
  bool all_full_w = true, all_full_d = true;
  for (const auto& r : dims) {
    if (r.w > W || r.d > D) return false;
    area += r.w * r.d;
    sum_w += r.w;
    sum_d += r.d;
    all_full_w &= r.w == W;
    all_full_d &= r.d == D;
  }
  if (area > W * D) return false;
  auto emit_stacked = [&](bool vertical) {
    if (!pos_out) return;
    pos_out->resize(dims.size());
    std::int64_t at = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      (*pos_out)[i] = vertical ? Pos{0, at} : Pos{at, 0};
      at += vertical ? dims[i].d : dims[i].w;
    }
  };
  if (dims.size() == 1) {
    emit_stacked(true);
    return true;
  }
  if (all_full_w) {  // full-width rectangles can only stack
    if (sum_d > D) return false;
    emit_stacked(true);
    return true;
  }
  if (all_full_d) {
    if (sum_w > W) return false;
    emit_stacked(false);
    return true;
  }
  if (dims.size() == 2) {
    if (sum_w <= W && std::max(dims[0].d, dims[1].d) <= D) {
      emit_stacked(false);
      return true;
    }
    if (sum_d <= D && std::max(dims[0].w, dims[1].w) <= W) {
      emit_stacked(true);
      return true;
    }
    return false;
  }
  // General case: memoized on the sorted multiset of rectangles.
  static std::map<std::vector<std::int64_t>, bool> memo;
  std::vector<std::size_t> order(dims.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::int64_t aa = dims[a].w * dims[a].d, ab = dims[b].w * dims[b].d;
    if (aa != ab) return aa > ab;
    if (dims[a].w != dims[b].w) return dims[a].w > dims[b].w;
    return dims[a].d > dims[b].d;
  });
  std::vector<Dim> sorted(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) sorted[i] = dims[order[i]];
  bool ok;
  std::vector<Pos> pos(sorted.size());
  if (!pos_out) {
    std::vector<std::int64_t> key{W, D};
    for (const auto& r : sorted) {
      key.push_back(r.w);
      key.push_back(r.d);
    }
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    ok = fit_backtrack(sorted, 0, pos, W, D);
    memo.emplace(std::move(key), ok);
    return ok;
  }
  ok = fit_backtrack(sorted, 0, pos, W, D);
  if (ok) {
    pos_out->resize(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) (*pos_out)[order[i]] = pos[i];
  }
  return ok;
}

// Mutable bin under construction: slice indices and dims.
struct BinState {
  std::vector<std::int32_t> idx;
  std::vector<Dim> dims;
  std::int64_t used_bits = 0;
  std::int32_t aspect_idx = 0;
};

struct Instance {
  const std::vector<Slice>* slices = nullptr;
  const RamSpec* ram = nullptr;
  std::int64_t h_b = 1;
  std::vector<Dim> dim_of;
  std::vector<std::int64_t> area_of;
  std::vector<std::int32_t> ffd_order;  // indices by decreasing area
};

Instance make_instance(const std::vector<Slice>& slices, const RamSpec& ram, std::int64_t h_b) {
  Instance in;
  in.slices = &slices;
  in.ram = &ram;
  in.h_b = h_b;
  for (const auto& s : slices) {
    in.dim_of.push_back({s.width_bits, s.depth_words});
    in.area_of.push_back(s.width_bits * s.depth_words);
  }
  in.ffd_order.resize(slices.size());
  std::iota(in.ffd_order.begin(), in.ffd_order.end(), 0);
  std::stable_sort(in.ffd_order.begin(), in.ffd_order.end(), [&](auto a, auto b) {
    if (in.area_of[a] != in.area_of[b]) return in.area_of[a] > in.area_of[b];
    if (in.dim_of[a].w != in.dim_of[b].w) return in.dim_of[a].w > in.dim_of[b].w;
    return a < b;
  });
  return in;
}

// Tries to add slice `s` to `bin`; legality = height cap (each placed slice is
// one always-active stream, so the cap counts slices, same parent or not) and
// an exact-fit aspect. Non-widening unless allow_widen. Updates on success.
bool try_add(const Instance& in, BinState& bin, std::int32_t s, bool allow_widen = false) {
  if ((std::int64_t)bin.idx.size() + 1 > in.h_b) return false;
  if (bin.used_bits + in.area_of[s] > in.ram->capacity_bits) return false;
  bin.dims.push_back(in.dim_of[s]);
  const auto& aspects = in.ram->aspect_ratios;
  const std::int64_t cur_width = bin.idx.empty() ? 0 : aspects[bin.aspect_idx].width_bits;
  for (std::size_t ai = 0; ai < aspects.size(); ++ai) {
    if (!bin.idx.empty() && !allow_widen && aspects[ai].width_bits > cur_width) continue;
    if (fit_rects(bin.dims, aspects[ai].width_bits, aspects[ai].depth_words)) {
      bin.aspect_idx = (std::int32_t)ai;
      bin.idx.push_back(s);
      bin.used_bits += in.area_of[s];
      return true;
    }
  }
  bin.dims.pop_back();
  return false;
}

void remove_slice(const Instance& in, BinState& bin, std::size_t k) {
  bin.used_bits -= in.area_of[bin.idx[k]];
  bin.idx.erase(bin.idx.begin() + k);
  bin.dims.erase(bin.dims.begin() + k);
}

void require_each_fits_alone(const Instance& in) {
  for (std::size_t s = 0; s < in.slices->size(); ++s) {
    BinState b;
    if (!try_add(in, b, (std::int32_t)s))
      throw InfeasibleError("slice of buffer '" + (*in.slices)[s].buffer +
                            "' exceeds every RAM aspect; decompose it first");
  }
}

// First-fit in bin order; appends a new bin when nothing takes the slice.
void ffd_insert(const Instance& in, std::vector<BinState>& bins, std::int32_t s) {
  for (auto& b : bins)
    if (try_add(in, b, s)) return;
  bins.emplace_back();
  if (!try_add(in, bins.back(), s))
    throw InfeasibleError("slice of buffer '" + (*in.slices)[s].buffer +
                          "' exceeds every RAM aspect; decompose it first");
}

std::vector<BinState> greedy_bins(const Instance& in) {
  std::vector<BinState> bins;
  for (std::int32_t s : in.ffd_order) ffd_insert(in, bins, s);
  return bins;
}

PackingSolution finalize(const Instance& in, std::vector<BinState> bins, Engine engine,
                         std::uint64_t seed) {
  // Canonical bin order: by smallest slice index they contain.
  std::stable_sort(bins.begin(), bins.end(), [](const BinState& a, const BinState& b) {
    return *std::min_element(a.idx.begin(), a.idx.end()) <
           *std::min_element(b.idx.begin(), b.idx.end());
  });
  PackingSolution sol;
  sol.engine = engine;
  sol.seed = seed;
  for (const auto& bs : bins) {
    Bin bin;
    bin.ram_index = (std::int64_t)sol.bins.size();
    bin.aspect = in.ram->aspect_ratios[bs.aspect_idx];
    std::vector<Pos> pos;
    if (!fit_rects(bs.dims, bin.aspect.width_bits, bin.aspect.depth_words, &pos))
      throw InputError("internal: committed bin no longer fits its aspect");
    for (std::size_t k = 0; k < bs.idx.size(); ++k) {
      Placement p;
      p.slice = (*in.slices)[bs.idx[k]];
      p.bit_offset = pos[k].first;
      p.row_offset = pos[k].second;
      bin.placements.push_back(std::move(p));
    }
    std::stable_sort(bin.placements.begin(), bin.placements.end(),
                     [](const Placement& a, const Placement& b) {
                       if (a.bit_offset != b.bit_offset) return a.bit_offset < b.bit_offset;
                       return a.row_offset < b.row_offset;
                     });
    sol.total_bits += bs.used_bits;
    sol.bins.push_back(std::move(bin));
  }
  sol.n_ram = (std::int64_t)sol.bins.size();
  sol.efficiency = sol.n_ram ? efficiency(sol.total_bits, sol.n_ram, *in.ram) : Rat(0);
  return sol;
}

// ---- GA engine ----

std::uint64_t rnd_index(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }
double rnd01(std::mt19937_64& rng) { return (rng() >> 11) * (1.0 / 9007199254740992.0); }

struct Pheno {
  std::vector<std::int32_t> labels;  // slice -> canonical bin id, -1 unassigned
  std::vector<BinState> bins;
  std::int64_t n_ram = 0;
  std::int64_t fill2 = 0;  // sum of squared per-bin fill, tie-break (higher = tighter)
};

bool better(const Pheno& a, const Pheno& b) {
  if (a.n_ram != b.n_ram) return a.n_ram < b.n_ram;
  return a.fill2 > b.fill2;
}

void canonicalize(Pheno& ph, std::size_t n_slices) {
  std::stable_sort(ph.bins.begin(), ph.bins.end(), [](const BinState& a, const BinState& b) {
    return *std::min_element(a.idx.begin(), a.idx.end()) <
           *std::min_element(b.idx.begin(), b.idx.end());
  });
  ph.labels.assign(n_slices, -1);
  ph.n_ram = (std::int64_t)ph.bins.size();
  ph.fill2 = 0;
  for (std::size_t bi = 0; bi < ph.bins.size(); ++bi) {
    for (auto s : ph.bins[bi].idx) ph.labels[s] = (std::int32_t)bi;
    ph.fill2 += ph.bins[bi].used_bits * ph.bins[bi].used_bits;
  }
}

// Rebuilds bins from an arbitrary label vector; slices whose group is illegal
// or label is -1 fall into a repair pool re-inserted first-fit decreasing.
Pheno decode(const Instance& in, const std::vector<std::int32_t>& labels) {
  Pheno ph;
  const std::size_t n = in.slices->size();
  std::map<std::int32_t, std::size_t> bin_of_label;
  std::vector<std::int32_t> pool;
  for (std::size_t s = 0; s < n; ++s) {
    if (labels[s] < 0) {
      pool.push_back((std::int32_t)s);
      continue;
    }
    auto [it, fresh] = bin_of_label.emplace(labels[s], ph.bins.size());
    if (fresh) ph.bins.emplace_back();
    if (!try_add(in, ph.bins[it->second], (std::int32_t)s)) pool.push_back((std::int32_t)s);
  }
  std::stable_sort(pool.begin(), pool.end(), [&](auto a, auto b) {
    if (in.area_of[a] != in.area_of[b]) return in.area_of[a] > in.area_of[b];
    if (in.dim_of[a].w != in.dim_of[b].w) return in.dim_of[a].w > in.dim_of[b].w;
    return a < b;
  });
  for (auto s : pool) ffd_insert(in, ph.bins, s);
  ph.bins.erase(std::remove_if(ph.bins.begin(), ph.bins.end(),
                               [](const BinState& b) { return b.idx.empty(); }),
                ph.bins.end());
  canonicalize(ph, n);
  return ph;
}

// Eliminates one random bin and redistributes its slices. With probability
// p_adm_h an evicted slice targets a random bin directly, displacing that
// bin's smallest slice when the height cap binds (a swap move); aspect
// widening in that move is admitted with probability p_adm_w.
void mutate(const Instance& in, Pheno& ph, const GaParams& params, std::mt19937_64& rng) {
  if (ph.bins.size() < 2) return;
  const std::size_t victim = rnd_index(rng, ph.bins.size());
  std::vector<std::int32_t> pool = ph.bins[victim].idx;
  ph.bins.erase(ph.bins.begin() + victim);
  std::vector<std::int32_t> rest;
  for (auto s : pool) {
    if (rnd01(rng) < params.p_adm_h && !ph.bins.empty()) {
      BinState& t = ph.bins[rnd_index(rng, ph.bins.size())];
      if ((std::int64_t)t.idx.size() >= in.h_b) {
        std::size_t smallest = 0;
        for (std::size_t k = 1; k < t.idx.size(); ++k)
          if (in.area_of[t.idx[k]] < in.area_of[t.idx[smallest]]) smallest = k;
        rest.push_back(t.idx[smallest]);
        remove_slice(in, t, smallest);
      }
      const bool widen = rnd01(rng) < params.p_adm_w;
      if (try_add(in, t, s, widen)) continue;
    }
    rest.push_back(s);
  }
  std::stable_sort(rest.begin(), rest.end(), [&](auto a, auto b) {
    if (in.area_of[a] != in.area_of[b]) return in.area_of[a] > in.area_of[b];
    return a < b;
  });
  for (auto s : rest) ffd_insert(in, ph.bins, s);
  ph.bins.erase(std::remove_if(ph.bins.begin(), ph.bins.end(),
                               [](const BinState& b) { return b.idx.empty(); }),
                ph.bins.end());
  canonicalize(ph, in.slices->size());
}

// Deterministic descent: repeatedly try to dissolve the sparsest bins into the
// rest. Improvement-only; used to polish the final GA champion.
void polish(const Instance& in, Pheno& ph) {
  bool improved = true;
  int rounds = 0;
  while (improved && rounds++ < 50) {
    improved = false;
    std::vector<std::size_t> order(ph.bins.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ph.bins[a].used_bits < ph.bins[b].used_bits;
    });
    for (std::size_t cand : order) {
      std::vector<std::pair<std::size_t, std::size_t>> placed;  // (bin, slot)
      bool all = true;
      for (auto s : ph.bins[cand].idx) {
        bool ok = false;
        for (std::size_t bi = 0; bi < ph.bins.size() && !ok; ++bi) {
          if (bi == cand) continue;
          if (try_add(in, ph.bins[bi], s)) {
            placed.push_back({bi, ph.bins[bi].idx.size() - 1});
            ok = true;
          }
        }
        if (!ok) {
          all = false;
          break;
        }
      }
      if (all) {
        ph.bins.erase(ph.bins.begin() + cand);
        improved = true;
        break;
      }
      for (auto it = placed.rbegin(); it != placed.rend(); ++it)
        remove_slice(in, ph.bins[it->first], it->second);
    }
  }
  canonicalize(ph, in.slices->size());
}

void validate_params(const GaParams& p) {
  if (p.h_b < 1 || p.pop_size < 1 || p.tourney < 1 || p.tourney > p.pop_size ||
      p.generations < 1 || p.p_adm_w < 0 || p.p_adm_w > 1 || p.p_adm_h < 0 || p.p_adm_h > 1 ||
      p.p_mut < 0 || p.p_mut > 1)
    throw InputError("invalid GA parameters");
}

}  // namespace

TileResult tile_buffer(const WeightBuffer& buffer, const RamSpec& ram) {
  if (buffer.width_bits < 1 || buffer.depth_words < 1)
    throw InputError("tile_buffer: empty buffer '" + buffer.layer + "'");
  // Decompose at the aspect the direct mapping would pick.
  const Aspect* best = nullptr;
  std::int64_t best_n = 0;
  for (const auto& a : ram.aspect_ratios) {
    const std::int64_t n = ((buffer.width_bits + a.width_bits - 1) / a.width_bits) *
                           ((buffer.depth_words + a.depth_words - 1) / a.depth_words);
    if (!best || n < best_n) {
      best = &a;
      best_n = n;
    }
  }
  if (!best) throw InputError("RamSpec has no aspect ratios");
  const std::int64_t wa = best->width_bits, da = best->depth_words;
  const std::int64_t cols = buffer.width_bits / wa, bands = buffer.depth_words / da;
  const std::int64_t rw = buffer.width_bits - cols * wa, rd = buffer.depth_words - bands * da;

  TileResult out;
  std::int64_t index = 0;
  const bool single = best_n == 1;
  auto make = [&](std::int64_t bit, std::int64_t row, std::int64_t w, std::int64_t d) {
    Slice s;
    s.buffer = buffer.layer;
    s.part = single ? PartKind::whole : PartKind::tile;
    s.tile_index = single ? -1 : index++;
    s.width_bits = w;
    s.depth_words = d;
    s.parent_bit = bit;
    s.parent_row = row;
    return s;
  };
  for (std::int64_t c = 0; c < cols; ++c)
    for (std::int64_t b = 0; b < bands; ++b)
      out.full_tiles.push_back(make(c * wa, b * da, wa, da));
  for (std::int64_t c = 0; c < cols; ++c)
    if (rd > 0) out.residuals.push_back(make(c * wa, bands * da, wa, rd));
  for (std::int64_t b = 0; b < bands; ++b)
    if (rw > 0) out.residuals.push_back(make(cols * wa, b * da, rw, da));
  if (rw > 0 && rd > 0) out.residuals.push_back(make(cols * wa, bands * da, rw, rd));
  // A buffer that exactly fills whole RAMs has no residual; one that fits a
  // single RAM is a lone "whole" residual eligible for co-location.
  if (single) {
    out.residuals.insert(out.residuals.end(), out.full_tiles.begin(), out.full_tiles.end());
    if (out.residuals.size() != 1) throw InputError("internal: single-RAM tiling fault");
    if (out.residuals[0].width_bits == wa && out.residuals[0].depth_words == da) {
      out.full_tiles = {out.residuals[0]};
      out.residuals.clear();
    } else {
      out.full_tiles.clear();
    }
  }
  return out;
}

PackingSolution pack_greedy(const std::vector<Slice>& slices, const RamSpec& ram,
                            std::int64_t h_b) {
  if (h_b < 1) throw InputError("pack_greedy: h_b must be positive");
  Instance in = make_instance(slices, ram, h_b);
  require_each_fits_alone(in);
  return finalize(in, greedy_bins(in), Engine::greedy, 0);
}

PackingSolution pack_ga(const std::vector<Slice>& slices, const RamSpec& ram,
                        const GaParams& params) {
  validate_params(params);
  Instance in = make_instance(slices, ram, params.h_b);
  if (slices.empty()) return finalize(in, {}, Engine::ga, params.seed);
  require_each_fits_alone(in);
  std::mt19937_64 rng(params.seed);

  std::vector<Pheno> pop;
  pop.reserve(params.pop_size);
  {
    Pheno seed_ph;
    seed_ph.bins = greedy_bins(in);
    canonicalize(seed_ph, slices.size());
    pop.push_back(std::move(seed_ph));
  }
  while ((std::int64_t)pop.size() < params.pop_size) {
    std::vector<std::int32_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rnd_index(rng, i)]);
    std::vector<BinState> bins;
    for (auto s : order) ffd_insert(in, bins, s);
    Pheno ph;
    ph.bins = std::move(bins);
    canonicalize(ph, slices.size());
    pop.push_back(std::move(ph));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (better(pop[i], pop[best])) best = i;

  auto tournament = [&]() -> const Pheno& {
    std::size_t pick = rnd_index(rng, pop.size());
    for (std::int64_t t = 1; t < params.tourney; ++t) {
      std::size_t c = rnd_index(rng, pop.size());
      if (better(pop[c], pop[pick])) pick = c;
    }
    return pop[pick];
  };

  constexpr std::int32_t kLabelOffset = 1 << 20;  // keeps parent label spaces apart
  std::int64_t stagnant = 0;
  for (std::int64_t gen = 0; gen < params.generations && stagnant < 100; ++gen) {
    std::vector<Pheno> next;
    next.reserve(params.pop_size);
    next.push_back(pop[best]);
    while ((std::int64_t)next.size() < params.pop_size) {
      const Pheno& pa = tournament();
      const Pheno& pb = tournament();
      std::vector<std::int32_t> child(slices.size());
      for (std::size_t s = 0; s < slices.size(); ++s)
        child[s] = (rng() & 1) ? pa.labels[s] : pb.labels[s] + kLabelOffset;
      Pheno ph = decode(in, child);
      if (rnd01(rng) < params.p_mut) mutate(in, ph, params, rng);
      next.push_back(std::move(ph));
    }
    pop = std::move(next);
    std::size_t new_best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
      if (better(pop[i], pop[new_best])) new_best = i;
    if (better(pop[new_best], pop[0])) {
      stagnant = 0;
    } else {
      ++stagnant;
    }
    best = better(pop[new_best], pop[0]) ? new_best : 0;
  }

  Pheno champion = pop[best];
  polish(in, champion);
  return finalize(in, std::move(champion.bins), Engine::ga, params.seed);
}

PackingSolution pack_exhaustive(const std::vector<Slice>& slices, const RamSpec& ram,
                                std::int64_t h_b) {
  if (h_b < 1) throw InputError("pack_exhaustive: h_b must be positive");
  const std::size_t n = slices.size();
  if (n > 10)
    throw InfeasibleError("pack_exhaustive supports at most 10 slices, got " +
                          std::to_string(n));
  Instance in = make_instance(slices, ram, h_b);
  if (n == 0) return finalize(in, {}, Engine::exhaustive, 0);
  require_each_fits_alone(in);

  const std::uint32_t full = (1u << n) - 1;
  std::vector<char> feasible(full + 1, 0);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    if ((std::int64_t)std::popcount(mask) > h_b) continue;
    BinState b;
    bool ok = true;
    for (std::size_t s = 0; s < n && ok; ++s)
      if (mask & (1u << s)) ok = try_add(in, b, (std::int32_t)s);
    feasible[mask] = ok;
  }
  constexpr std::int32_t kInf = 1 << 28;
  std::vector<std::int32_t> dp(full + 1, kInf);
  std::vector<std::uint32_t> choice(full + 1, 0);
  dp[0] = 0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    for (std::uint32_t sub = mask; sub; sub = (sub - 1) & mask) {
      if (!(sub & low) || !feasible[sub]) continue;
      if (dp[mask ^ sub] + 1 < dp[mask]) {
        dp[mask] = dp[mask ^ sub] + 1;
        choice[mask] = sub;
      }
    }
  }
  if (dp[full] >= kInf) throw InfeasibleError("pack_exhaustive: no feasible partition");
  std::vector<BinState> bins;
  for (std::uint32_t mask = full; mask;) {
    const std::uint32_t grp = choice[mask];
    BinState b;
    for (std::size_t s = 0; s < n; ++s)
      if (grp & (1u << s)) try_add(in, b, (std::int32_t)s);
    bins.push_back(std::move(b));
    mask ^= grp;
  }
  return finalize(in, std::move(bins), Engine::exhaustive, 0);
}

std::vector<PackingSolution> pack_islands(const std::vector<WeightBuffer>& buffers,
                                          const RamSpec& ram, const GaParams& params,
                                          Engine engine) {
  validate_params(params);
  std::vector<std::string> island_order;
  for (const auto& b : buffers)
    if (std::find(island_order.begin(), island_order.end(), b.island) == island_order.end())
      island_order.push_back(b.island);

  std::vector<PackingSolution> out;
  for (const auto& island : island_order) {
    std::vector<Slice> fixed;      // full tiles and non-packable slices: one per RAM
    std::vector<Slice> residuals;  // free to co-locate
    std::int64_t island_bits = 0;
    for (const auto& b : buffers) {
      if (b.island != island) continue;
      island_bits += b.total_param_bits;
      TileResult t = tile_buffer(b, ram);
      if (!b.packable) {
        fixed.insert(fixed.end(), t.full_tiles.begin(), t.full_tiles.end());
        fixed.insert(fixed.end(), t.residuals.begin(), t.residuals.end());
      } else {
        fixed.insert(fixed.end(), t.full_tiles.begin(), t.full_tiles.end());
        residuals.insert(residuals.end(), t.residuals.begin(), t.residuals.end());
      }
    }
    PackingSolution packed;
    switch (engine) {
      case Engine::greedy: packed = pack_greedy(residuals, ram, params.h_b); break;
      case Engine::ga: packed = pack_ga(residuals, ram, params); break;
      case Engine::exhaustive: packed = pack_exhaustive(residuals, ram, params.h_b); break;
    }
    PackingSolution sol;
    sol.engine = engine;
    sol.seed = engine == Engine::ga ? params.seed : 0;
    sol.island = island;
    for (const auto& s : fixed) {
      Bin bin;
      bin.ram_index = (std::int64_t)sol.bins.size();
      // A fixed slice occupies its own RAM at the aspect it was tiled for.
      for (const auto& a : ram.aspect_ratios)
        if (s.width_bits <= a.width_bits && s.depth_words <= a.depth_words) {
          bin.aspect = a;
          break;
        }
      Placement p;
      p.slice = s;
      bin.placements.push_back(std::move(p));
      sol.bins.push_back(std::move(bin));
    }
    for (auto& bin : packed.bins) {
      bin.ram_index = (std::int64_t)sol.bins.size();
      sol.bins.push_back(std::move(bin));
    }
    sol.n_ram = (std::int64_t)sol.bins.size();
    sol.total_bits = island_bits;
    sol.efficiency = sol.n_ram ? efficiency(sol.total_bits, sol.n_ram, ram) : Rat(0);
    out.push_back(std::move(sol));
  }
  return out;
}

std::optional<std::string> validate_solution(const PackingSolution& solution,
                                             const std::vector<WeightBuffer>& buffers,
                                             const RamSpec& ram, std::int64_t h_b) {
  struct Cover {
    std::int64_t bit, row, w, d;
  };
  std::map<std::string, std::vector<Cover>> covers;
  std::map<std::string, std::vector<const Placement*>> halves;  // odd/even placements
  std::int64_t placed_bits = 0;

  for (const auto& bin : solution.bins) {
    bool aspect_ok = false;
    for (const auto& a : ram.aspect_ratios) aspect_ok |= a == bin.aspect;
    if (!aspect_ok) return "bin " + std::to_string(bin.ram_index) + ": unknown aspect";
    for (const auto& p : bin.placements) {
      if (p.bit_offset < 0 || p.row_offset < 0 ||
          p.bit_offset + p.slice.width_bits > bin.aspect.width_bits ||
          p.row_offset + p.slice.depth_words > bin.aspect.depth_words)
        return "bin " + std::to_string(bin.ram_index) + ": placement out of bounds";
      placed_bits += p.slice.width_bits * p.slice.depth_words;
    }
    // Height = concurrent streams the bin must feed. Every placement is one
    // stream, except that the odd/even halves of one source slice together
    // make a single half-rate pair and count once.
    std::int64_t height = (std::int64_t)bin.placements.size();
    for (std::size_t i = 0; i < bin.placements.size(); ++i)
      for (std::size_t j = i + 1; j < bin.placements.size(); ++j) {
        const auto& a = bin.placements[i];
        const auto& b = bin.placements[j];
        const bool overlap = a.bit_offset < b.bit_offset + b.slice.width_bits &&
                             b.bit_offset < a.bit_offset + a.slice.width_bits &&
                             a.row_offset < b.row_offset + b.slice.depth_words &&
                             b.row_offset < a.row_offset + a.slice.depth_words;
        if (overlap) return "bin " + std::to_string(bin.ram_index) + ": overlapping placements";
        if (a.slice.buffer == b.slice.buffer &&
            a.slice.parent_bit == b.slice.parent_bit &&
            a.slice.parent_row == b.slice.parent_row) {
          const bool pair = (a.slice.part == PartKind::odd && b.slice.part == PartKind::even) ||
                            (a.slice.part == PartKind::even && b.slice.part == PartKind::odd);
          if (!pair)
            return "bin " + std::to_string(bin.ram_index) + ": duplicated source slice";
          if (a.port == b.port)
            return "bin " + std::to_string(bin.ram_index) + ": split pair on one port";
          --height;
        }
      }
    if (height > h_b)
      return "bin " + std::to_string(bin.ram_index) + ": height exceeds cap";
    for (const auto& p : bin.placements) {
      if (p.slice.part == PartKind::odd || p.slice.part == PartKind::even)
        halves[p.slice.buffer].push_back(&p);
      else
        covers[p.slice.buffer].push_back(
            {p.slice.parent_bit, p.slice.parent_row, p.slice.width_bits, p.slice.depth_words});
    }
  }

  // Re-join odd/even pairs into the source-slice rectangles they came from.
  for (auto& [buf, hs] : halves) {
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<const Placement*>> by_src;
    for (auto* p : hs) by_src[{p->slice.parent_bit, p->slice.parent_row}].push_back(p);
    for (auto& [src, pair] : by_src) {
      if (pair.size() != 2) return "buffer '" + buf + "': unpaired split half";
      const auto *e = pair[0], *o = pair[1];
      if (e->slice.part == PartKind::odd) std::swap(e, o);
      if (e->slice.part != PartKind::even || o->slice.part != PartKind::odd)
        return "buffer '" + buf + "': malformed split pair";
      if (e->slice.width_bits != o->slice.width_bits)
        return "buffer '" + buf + "': split halves differ in width";
      const std::int64_t d = e->slice.depth_words + o->slice.depth_words;
      if (e->slice.depth_words - o->slice.depth_words != d % 2)
        return "buffer '" + buf + "': split halves unbalanced";
      covers[buf].push_back({src.first, src.second, e->slice.width_bits, d});
    }
  }

  std::int64_t want_bits = 0;
  for (const auto& b : buffers) {
    want_bits += b.total_param_bits;
    auto it = covers.find(b.layer);
    if (it == covers.end()) return "buffer '" + b.layer + "': not placed";
    std::int64_t area = 0;
    for (const auto& c : it->second) {
      if (c.bit < 0 || c.row < 0 || c.bit + c.w > b.width_bits || c.d + c.row > b.depth_words)
        return "buffer '" + b.layer + "': coverage outside buffer";
      area += c.w * c.d;
    }
    for (std::size_t i = 0; i < it->second.size(); ++i)
      for (std::size_t j = i + 1; j < it->second.size(); ++j) {
        const auto& x = it->second[i];
        const auto& y = it->second[j];
        if (x.bit < y.bit + y.w && y.bit < x.bit + x.w && x.row < y.row + y.d &&
            y.row < x.row + x.d)
          return "buffer '" + b.layer + "': doubly covered words";
      }
    if (area != b.total_param_bits) return "buffer '" + b.layer + "': incomplete coverage";
  }
  if (covers.size() != buffers.size()) return "solution places unknown buffers";
  if (placed_bits != want_bits) return "placed bits differ from buffer bits";
  if (solution.n_ram != (std::int64_t)solution.bins.size()) return "n_ram mismatch";
  if (solution.total_bits != want_bits) return "total_bits mismatch";
  const Rat want_e =
      solution.n_ram ? efficiency(want_bits, solution.n_ram, ram) : Rat(0);
  if (solution.efficiency != want_e) return "efficiency not recomputable";
  return std::nullopt;
}

}  // namespace ocm
