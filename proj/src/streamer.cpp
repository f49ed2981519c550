#include "ocm/streamer.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "ocm/errors.hpp"

namespace ocm {

namespace {

// Key identifying one source slice: parent name plus its rectangle origin in
// the parent. The odd/even halves of a split share the key.
struct SrcKey {
  std::string buffer;
  std::int64_t bit, row;
  bool operator<(const SrcKey& o) const {
    return std::tie(buffer, bit, row) < std::tie(o.buffer, o.bit, o.row);
  }
  bool operator==(const SrcKey& o) const {
    return std::tie(buffer, bit, row) == std::tie(o.buffer, o.bit, o.row);
  }
};

SrcKey src_key(const Placement& p) {
  return {p.slice.buffer, p.slice.parent_bit, p.slice.parent_row};
}

// Distinct stream labels in placement order of first appearance.
std::vector<std::string> distinct_streams(const Bin& bin) {
  std::vector<std::string> out;
  for (const auto& l : stream_labels(bin))
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  return out;
}

}  // namespace

std::vector<std::string> stream_labels(const Bin& bin) {
  std::map<std::string, std::vector<SrcKey>> rects;  // buffer -> source slices, in order
  for (const auto& p : bin.placements) {
    auto& v = rects[p.slice.buffer];
    const SrcKey k = src_key(p);
    if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
  }
  std::vector<std::string> labels;
  for (const auto& p : bin.placements) {
    const auto& v = rects[p.slice.buffer];
    if (v.size() == 1) {
      labels.push_back(p.slice.buffer);
    } else {
      const auto it = std::find(v.begin(), v.end(), src_key(p));
      const auto ord = (std::size_t)(it - v.begin()) + 1;
      labels.push_back(p.slice.buffer + "#" + std::to_string(ord));
    }
  }
  return labels;
}

StreamerConfig build_streamer(const Bin& bin, const ClockPlan& clock, bool adaptive) {
  if (bin.placements.empty()) throw InputError("build_streamer: empty bin");
  StreamerConfig cfg;
  cfg.bin = bin;
  cfg.ratio = clock.ratio();
  cfg.adaptive = adaptive;
  if (cfg.ratio < Rat(1)) throw InputError("build_streamer: memory clock below compute clock");

  std::vector<std::string> streams = distinct_streams(cfg.bin);
  const std::int64_t height = (std::int64_t)streams.size();
  cfg.sustained_bound = Rat(2) * cfg.ratio / Rat(height);
  cfg.feasible = height <= rat_floor(Rat(2) * cfg.ratio);

  // A previously split pair marks its label as the port-straddling stream.
  std::vector<std::string> labels = stream_labels(cfg.bin);
  std::string split_label;
  for (std::size_t i = 0; i < cfg.bin.placements.size(); ++i) {
    const auto part = cfg.bin.placements[i].slice.part;
    if (part == PartKind::odd || part == PartKind::even) split_label = labels[i];
  }

  const bool fractional = cfg.ratio.denominator() != 1;
  if (split_label.empty() && cfg.feasible && fractional && height >= 3 && height % 2 == 1) {
    // Split the deepest slice by address parity so both ports can serve it.
    std::size_t deepest = 0;
    for (std::size_t i = 1; i < cfg.bin.placements.size(); ++i)
      if (cfg.bin.placements[i].slice.depth_words >
          cfg.bin.placements[deepest].slice.depth_words)
        deepest = i;
    Placement src = cfg.bin.placements[deepest];
    split_label = labels[deepest];
    const std::int64_t d = src.slice.depth_words;
    Placement even = src, odd = src;
    even.slice.part = PartKind::even;
    even.slice.depth_words = (d + 1) / 2;  // source words 0,2,4,...
    even.port = 'A';
    odd.slice.part = PartKind::odd;
    odd.slice.depth_words = d / 2;
    odd.row_offset = src.row_offset + even.slice.depth_words;
    odd.port = 'B';
    cfg.bin.placements[deepest] = even;
    cfg.bin.placements.insert(cfg.bin.placements.begin() + deepest + 1, odd);
    labels = stream_labels(cfg.bin);  // halves share the source, labels are stable
  }

  if (!split_label.empty()) {
    std::vector<std::string> others;
    for (const auto& s : streams)
      if (s != split_label) others.push_back(s);
    const std::size_t first = (others.size() + 1) / 2;
    cfg.slots[0].push_back(split_label);
    cfg.slots[1].push_back(split_label);
    for (std::size_t i = 0; i < others.size(); ++i) cfg.slots[i < first ? 0 : 1].push_back(others[i]);
    MergePlan plan;
    plan.output_stream = split_label;
    for (std::size_t i = 0; i < cfg.bin.placements.size(); ++i) {
      if (labels[i] != split_label) continue;
      const auto& p = cfg.bin.placements[i];
      if (p.slice.part == PartKind::even) plan.even_slice = p.slice;
      if (p.slice.part == PartKind::odd) plan.odd_slice = p.slice;
    }
    cfg.merge_plan = plan;
  } else {
    const std::size_t first = (streams.size() + 1) / 2;
    for (std::size_t i = 0; i < streams.size(); ++i)
      cfg.slots[i < first ? 0 : 1].push_back(streams[i]);
  }

  // Stamp each placement with the port that serves its stream.
  for (std::size_t i = 0; i < cfg.bin.placements.size(); ++i) {
    if (labels[i] == split_label) continue;  // pair already stamped A/B
    const auto& a = cfg.slots[0];
    cfg.bin.placements[i].port =
        std::find(a.begin(), a.end(), labels[i]) != a.end() ? 'A' : 'B';
  }
  return cfg;
}

std::map<std::string, Rat> nominal_rates(const StreamerConfig& config) {
  std::map<std::string, Rat> rates;
  for (int port = 0; port < 2; ++port) {
    const auto& slots = config.slots[port];
    if (slots.empty()) continue;
    const Rat per_slot = config.ratio / Rat((std::int64_t)slots.size());
    for (const auto& s : slots) {
      auto [it, fresh] = rates.emplace(s, Rat(0));
      it->second += per_slot;
    }
  }
  return rates;
}

ReadSchedule emit_schedule(const StreamerConfig& config) {
  if (!config.feasible)
    throw InfeasibleError("emit_schedule: config infeasible (sustainable rate " +
                          rat_to_string(config.sustained_bound) + " words/compute cycle)");
  ReadSchedule sched;
  const std::int64_t la = (std::int64_t)config.slots[0].size();
  const std::int64_t lb = (std::int64_t)config.slots[1].size();
  if (la == 0 && lb == 0) return sched;
  sched.period_mem_cycles = la == 0 ? lb : lb == 0 ? la : std::lcm(la, lb);
  for (std::int64_t c = 0; c < sched.period_mem_cycles; ++c) {
    if (la > 0) sched.grants.push_back({c, 'A', config.slots[0][c % la], 1});
    if (lb > 0) sched.grants.push_back({c, 'B', config.slots[1][c % lb], 1});
  }
  return sched;
}

}  // namespace ocm
