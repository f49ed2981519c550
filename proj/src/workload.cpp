#include "ocm/workload.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ocm/errors.hpp"
#include "ocm/streamer.hpp"

namespace ocm {

using json = nlohmann::ordered_json;

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  try {
    return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path, e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "missing required field");
  return *it;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

std::int64_t as_int(const json& v, const std::string& path, std::int64_t min_value = 1) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  const auto n = v.get<std::int64_t>();
  if (n < min_value)
    throw SchemaError(path, "must be at least " + std::to_string(min_value));
  return n;
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path, "expected a boolean");
  return v.get<bool>();
}

double as_prob(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  const double p = v.get<double>();
  if (p < 0.0 || p > 1.0) throw SchemaError(path, "must lie in [0, 1]");
  return p;
}

// Frequencies and rates accept an integer, a decimal, or an exact "p/q"
// string; all three parse to the same exact rational.
Rat as_rat(const json& v, const std::string& path, bool positive = true) {
  Rat r;
  try {
    if (v.is_number_integer())
      r = Rat(v.get<std::int64_t>());
    else if (v.is_number_float())
      r = rat_from_double(v.get<double>());
    else if (v.is_string())
      r = rat_from_string(v.get<std::string>());
    else
      throw SchemaError(path, "expected a number or a \"p/q\" string");
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
  if (positive && r <= Rat(0)) throw SchemaError(path, "must be positive");
  return r;
}

// Rationals serialize as a bare integer when whole, else as "p/q" — both
// re-parse exactly, and the choice is deterministic for byte-stable files.
json rat_json(const Rat& r) {
  if (r.denominator() == 1) return json(r.numerator());
  return json(rat_to_string(r));
}

const char* part_name(PartKind part) {
  switch (part) {
    case PartKind::whole: return "whole";
    case PartKind::odd: return "odd";
    case PartKind::even: return "even";
    case PartKind::tile: return "tile";
  }
  return "whole";
}

PartKind part_from_name(const std::string& name, const std::string& path) {
  if (name == "whole") return PartKind::whole;
  if (name == "odd") return PartKind::odd;
  if (name == "even") return PartKind::even;
  if (name == "tile") return PartKind::tile;
  throw SchemaError(path, "unknown slice part '" + name + "'");
}

RamSpec ram_from_json(const json& j, const std::string& path) {
  RamSpec ram;
  ram.capacity_bits = as_int(field(j, "capacity_bits", path), path + ".capacity_bits");
  const json& aspects = field(j, "aspects", path);
  if (!aspects.is_array() || aspects.empty())
    throw SchemaError(path + ".aspects", "expected a non-empty array of [width, depth] pairs");
  ram.aspect_ratios.clear();
  for (std::size_t i = 0; i < aspects.size(); ++i) {
    const std::string apath = path + ".aspects[" + std::to_string(i) + "]";
    const json& a = aspects[i];
    if (!a.is_array() || a.size() != 2)
      throw SchemaError(apath, "expected a [width, depth] pair");
    Aspect aspect{as_int(a[0], apath + "[0]"), as_int(a[1], apath + "[1]")};
    if (aspect.width_bits * aspect.depth_words > ram.capacity_bits)
      throw SchemaError(apath, "aspect exceeds capacity_bits");
    ram.aspect_ratios.push_back(aspect);
  }
  ram.num_ports = as_int(field(j, "ports", path), path + ".ports");
  if (ram.num_ports > 2) throw SchemaError(path + ".ports", "at most 2 ports supported");
  ram.f_max_mhz = as_rat(field(j, "f_max_mhz", path), path + ".f_max_mhz");
  return ram;
}

json ram_to_json(const RamSpec& ram) {
  json j = json::object();
  j["capacity_bits"] = ram.capacity_bits;
  json aspects = json::array();
  for (const auto& a : ram.aspect_ratios) aspects.push_back({a.width_bits, a.depth_words});
  j["aspects"] = std::move(aspects);
  j["ports"] = ram.num_ports;
  j["f_max_mhz"] = rat_json(ram.f_max_mhz);
  return j;
}

ClockPlan clock_from_json(const json& j, const std::string& path) {
  ClockPlan clock;
  clock.f_compute_mhz = as_rat(field(j, "f_compute_mhz", path), path + ".f_compute_mhz");
  clock.f_memory_mhz = as_rat(field(j, "f_memory_mhz", path), path + ".f_memory_mhz");
  if (j.contains("f_base_mhz"))
    clock.f_base_mhz = as_rat(j["f_base_mhz"], path + ".f_base_mhz");
  return clock;
}

json clock_to_json(const ClockPlan& clock) {
  json j = json::object();
  j["f_compute_mhz"] = rat_json(clock.f_compute_mhz);
  j["f_memory_mhz"] = rat_json(clock.f_memory_mhz);
  if (clock.f_base_mhz > Rat(0)) j["f_base_mhz"] = rat_json(clock.f_base_mhz);
  return j;
}

}  // namespace

WorkloadSpec load_workload(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw SchemaError("$", "workload file must be a JSON object");
  WorkloadSpec spec;
  spec.name = as_string(field(j, "name", "$"), "$.name");
  spec.ram = ram_from_json(field(j, "ram", "$"), "$.ram");
  spec.clock = clock_from_json(field(j, "clock", "$"), "$.clock");

  const json& islands = field(j, "islands", "$");
  if (!islands.is_array())
    throw SchemaError("$.islands", "expected an array of island names");
  std::set<std::string> island_set;
  for (std::size_t i = 0; i < islands.size(); ++i) {
    const std::string ipath = "$.islands[" + std::to_string(i) + "]";
    std::string name = as_string(islands[i], ipath);
    if (name.empty()) throw SchemaError(ipath, "island name must be non-empty");
    if (!island_set.insert(name).second) throw SchemaError(ipath, "duplicate island name");
    spec.islands.push_back(std::move(name));
  }

  const json& layers = field(j, "layers", "$");
  if (!layers.is_array()) throw SchemaError("$.layers", "expected an array of layers");
  std::set<std::string> layer_names;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lpath = "$.layers[" + std::to_string(i) + "]";
    const json& l = layers[i];
    LayerSpec layer;
    layer.name = as_string(field(l, "name", lpath), lpath + ".name");
    if (layer.name.empty()) throw SchemaError(lpath + ".name", "layer name must be non-empty");
    if (!layer_names.insert(layer.name).second)
      throw SchemaError(lpath + ".name", "duplicate layer name '" + layer.name + "'");
    layer.kernel_k = as_int(field(l, "k", lpath), lpath + ".k");
    layer.c_in = as_int(field(l, "c_in", lpath), lpath + ".c_in");
    layer.c_out = as_int(field(l, "c_out", lpath), lpath + ".c_out");
    layer.weight_bits = as_int(field(l, "w_bits", lpath), lpath + ".w_bits");
    layer.pe = as_int(field(l, "pe", lpath), lpath + ".pe");
    layer.simd = as_int(field(l, "simd", lpath), lpath + ".simd");
    layer.island = as_string(field(l, "island", lpath), lpath + ".island");
    if (!island_set.count(layer.island))
      throw SchemaError(lpath + ".island", "island '" + layer.island + "' is not declared");
    if (l.contains("packable")) layer.packable = as_bool(l["packable"], lpath + ".packable");
    spec.layers.push_back(std::move(layer));
  }

  if (j.contains("ga")) {
    const json& g = j["ga"];
    if (!g.is_object()) throw SchemaError("$.ga", "expected an object");
    spec.has_ga = true;
    if (g.contains("pop_size")) spec.ga.pop_size = as_int(g["pop_size"], "$.ga.pop_size", 2);
    if (g.contains("tourney")) spec.ga.tourney = as_int(g["tourney"], "$.ga.tourney", 1);
    if (g.contains("p_adm_w")) spec.ga.p_adm_w = as_prob(g["p_adm_w"], "$.ga.p_adm_w");
    if (g.contains("p_adm_h")) spec.ga.p_adm_h = as_prob(g["p_adm_h"], "$.ga.p_adm_h");
    if (g.contains("p_mut")) spec.ga.p_mut = as_prob(g["p_mut"], "$.ga.p_mut");
    if (g.contains("generations"))
      spec.ga.generations = as_int(g["generations"], "$.ga.generations", 1);
  }
  return spec;
}

void save_workload(const WorkloadSpec& spec, const std::string& path) {
  json j = json::object();
  j["name"] = spec.name;
  j["ram"] = ram_to_json(spec.ram);
  j["clock"] = clock_to_json(spec.clock);
  j["islands"] = spec.islands;
  json layers = json::array();
  for (const auto& l : spec.layers) {
    json lj = json::object();
    lj["name"] = l.name;
    lj["k"] = l.kernel_k;
    lj["c_in"] = l.c_in;
    lj["c_out"] = l.c_out;
    lj["w_bits"] = l.weight_bits;
    lj["pe"] = l.pe;
    lj["simd"] = l.simd;
    lj["island"] = l.island;
    if (!l.packable) lj["packable"] = false;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  if (spec.has_ga) {
    json g = json::object();
    g["pop_size"] = spec.ga.pop_size;
    g["tourney"] = spec.ga.tourney;
    g["p_adm_w"] = spec.ga.p_adm_w;
    g["p_adm_h"] = spec.ga.p_adm_h;
    g["p_mut"] = spec.ga.p_mut;
    j["ga"] = std::move(g);
  }
  write_file(path, j.dump(2) + "\n");
}

std::int64_t SolutionSet::n_ram() const {
  std::int64_t n = 0;
  for (const auto& s : islands) n += s.n_ram;
  return n;
}

std::int64_t SolutionSet::total_bits() const {
  std::int64_t n = 0;
  for (const auto& s : islands) n += s.total_bits;
  return n;
}

Rat SolutionSet::efficiency() const { return ocm::efficiency(total_bits(), n_ram(), ram); }

namespace {

json placement_to_json(const Placement& p) {
  json j = json::object();
  j["buffer"] = p.slice.buffer;
  j["part"] = part_name(p.slice.part);
  if (p.slice.part == PartKind::tile) j["tile_index"] = p.slice.tile_index;
  j["width_bits"] = p.slice.width_bits;
  j["depth_words"] = p.slice.depth_words;
  j["parent_row"] = p.slice.parent_row;
  j["parent_bit"] = p.slice.parent_bit;
  j["row_offset"] = p.row_offset;
  j["bit_offset"] = p.bit_offset;
  j["port"] = std::string(1, p.port);
  return j;
}

Placement placement_from_json(const json& j, const std::string& path) {
  Placement p;
  p.slice.buffer = as_string(field(j, "buffer", path), path + ".buffer");
  p.slice.part = part_from_name(as_string(field(j, "part", path), path + ".part"), path + ".part");
  if (p.slice.part == PartKind::tile)
    p.slice.tile_index = as_int(field(j, "tile_index", path), path + ".tile_index", 0);
  p.slice.width_bits = as_int(field(j, "width_bits", path), path + ".width_bits");
  p.slice.depth_words = as_int(field(j, "depth_words", path), path + ".depth_words");
  p.slice.parent_row = as_int(field(j, "parent_row", path), path + ".parent_row", 0);
  p.slice.parent_bit = as_int(field(j, "parent_bit", path), path + ".parent_bit", 0);
  p.row_offset = as_int(field(j, "row_offset", path), path + ".row_offset", 0);
  p.bit_offset = as_int(field(j, "bit_offset", path), path + ".bit_offset", 0);
  const std::string port = as_string(field(j, "port", path), path + ".port");
  if (port != "A" && port != "B") throw SchemaError(path + ".port", "port must be \"A\" or \"B\"");
  p.port = port[0];
  return p;
}

// The streamer block is derived data: regenerated from the bin at save time,
// skipped on load. Solo-stream bins carry none — the readback is trivial.
json streamer_to_json(const Bin& bin, const ClockPlan& clock) {
  StreamerConfig cfg = build_streamer(bin, clock, /*adaptive=*/false);
  json j = json::object();
  j["feasible"] = cfg.feasible;
  j["ratio"] = rat_json(cfg.ratio);
  json slots = json::object();
  slots["A"] = cfg.slots[0];
  slots["B"] = cfg.slots[1];
  j["slots"] = std::move(slots);
  if (cfg.merge_plan) {
    json m = json::object();
    m["output"] = cfg.merge_plan->output_stream;
    m["even_depth"] = cfg.merge_plan->even_slice.depth_words;
    m["odd_depth"] = cfg.merge_plan->odd_slice.depth_words;
    j["merge"] = std::move(m);
  }
  if (cfg.feasible) {
    ReadSchedule sched = emit_schedule(cfg);
    j["period_mem_cycles"] = sched.period_mem_cycles;
    json grants = json::array();
    for (const auto& g : sched.grants)
      grants.push_back({g.mem_cycle, std::string(1, g.port), g.stream, g.address_stride});
    j["grants"] = std::move(grants);
  } else {
    j["sustained_bound"] = rat_json(cfg.sustained_bound);
  }
  return j;
}

}  // namespace

std::string solution_to_json(const SolutionSet& set) {
  json j = json::object();
  j["workload"] = set.workload;
  j["engine"] = engine_name(set.engine);
  j["h_b"] = set.h_b;
  j["seed"] = set.seed;
  j["ram"] = ram_to_json(set.ram);
  j["clock"] = clock_to_json(set.clock);
  json islands = json::array();
  for (const auto& sol : set.islands) {
    json sj = json::object();
    sj["island"] = sol.island;
    sj["engine"] = engine_name(sol.engine);
    sj["seed"] = sol.seed;
    sj["n_ram"] = sol.n_ram;
    sj["total_bits"] = sol.total_bits;
    sj["efficiency"] = rat_json(sol.efficiency);
    json bins = json::array();
    for (const auto& bin : sol.bins) {
      json bj = json::object();
      bj["ram_index"] = bin.ram_index;
      bj["aspect"] = {bin.aspect.width_bits, bin.aspect.depth_words};
      json placements = json::array();
      for (const auto& p : bin.placements) placements.push_back(placement_to_json(p));
      bj["placements"] = std::move(placements);
      if (bin.placements.size() >= 2) bj["streamer"] = streamer_to_json(bin, set.clock);
      bins.push_back(std::move(bj));
    }
    sj["bins"] = std::move(bins);
    islands.push_back(std::move(sj));
  }
  j["islands"] = std::move(islands);
  json totals = json::object();
  totals["n_ram"] = set.n_ram();
  totals["total_bits"] = set.total_bits();
  totals["efficiency"] = rat_json(set.efficiency());
  j["totals"] = std::move(totals);
  return j.dump(2) + "\n";
}

void save_solution(const SolutionSet& set, const std::string& path) {
  write_file(path, solution_to_json(set));
}

SolutionSet load_solution(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw SchemaError("$", "solution file must be a JSON object");
  SolutionSet set;
  set.workload = as_string(field(j, "workload", "$"), "$.workload");
  const std::string ename = as_string(field(j, "engine", "$"), "$.engine");
  if (auto e = engine_from_name(ename))
    set.engine = *e;
  else
    throw SchemaError("$.engine", "unknown engine '" + ename + "'");
  set.h_b = (int)as_int(field(j, "h_b", "$"), "$.h_b");
  set.seed = (std::uint64_t)as_int(field(j, "seed", "$"), "$.seed", 0);
  set.ram = ram_from_json(field(j, "ram", "$"), "$.ram");
  set.clock = clock_from_json(field(j, "clock", "$"), "$.clock");
  const json& islands = field(j, "islands", "$");
  if (!islands.is_array()) throw SchemaError("$.islands", "expected an array");
  for (std::size_t i = 0; i < islands.size(); ++i) {
    const std::string ipath = "$.islands[" + std::to_string(i) + "]";
    const json& sj = islands[i];
    PackingSolution sol;
    sol.island = as_string(field(sj, "island", ipath), ipath + ".island");
    const std::string iename = as_string(field(sj, "engine", ipath), ipath + ".engine");
    if (auto e = engine_from_name(iename))
      sol.engine = *e;
    else
      throw SchemaError(ipath + ".engine", "unknown engine '" + iename + "'");
    sol.seed = (std::uint64_t)as_int(field(sj, "seed", ipath), ipath + ".seed", 0);
    sol.n_ram = as_int(field(sj, "n_ram", ipath), ipath + ".n_ram", 0);
    sol.total_bits = as_int(field(sj, "total_bits", ipath), ipath + ".total_bits", 0);
    sol.efficiency = as_rat(field(sj, "efficiency", ipath), ipath + ".efficiency", false);
    const json& bins = field(sj, "bins", ipath);
    if (!bins.is_array()) throw SchemaError(ipath + ".bins", "expected an array");
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const std::string bpath = ipath + ".bins[" + std::to_string(b) + "]";
      const json& bj = bins[b];
      Bin bin;
      bin.ram_index = as_int(field(bj, "ram_index", bpath), bpath + ".ram_index", 0);
      const json& aspect = field(bj, "aspect", bpath);
      if (!aspect.is_array() || aspect.size() != 2)
        throw SchemaError(bpath + ".aspect", "expected a [width, depth] pair");
      bin.aspect = {as_int(aspect[0], bpath + ".aspect[0]"), as_int(aspect[1], bpath + ".aspect[1]")};
      const json& placements = field(bj, "placements", bpath);
      if (!placements.is_array() || placements.empty())
        throw SchemaError(bpath + ".placements", "expected a non-empty array");
      for (std::size_t p = 0; p < placements.size(); ++p)
        bin.placements.push_back(placement_from_json(
            placements[p], bpath + ".placements[" + std::to_string(p) + "]"));
      sol.bins.push_back(std::move(bin));
    }
    if (sol.bins.size() != (std::size_t)sol.n_ram)
      throw SchemaError(ipath + ".n_ram", "does not match the number of bins");
    set.islands.push_back(std::move(sol));
  }
  return set;
}

}  // namespace ocm
