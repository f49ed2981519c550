#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocm/errors.hpp"
#include "ocm/galsim.hpp"
#include "ocm/model.hpp"
#include "ocm/packer.hpp"
#include "ocm/report.hpp"
#include "ocm/streamer.hpp"
#include "ocm/workload.hpp"

namespace {

using namespace ocm;

// Exit codes: 0 success, 1 invalid input value, 2 schema violation,
// 3 infeasible request, 4 verification failure.
constexpr int kExitInput = 1;
constexpr int kExitSchema = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerifyFail = 4;

std::string pct(const Rat& fraction) { return rat_to_fixed(fraction * Rat(100), 2) + "%"; }

// Rates print as decimals trimmed of trailing zeros: 3/4 -> "0.75", 1 -> "1".
std::string rate_str(const Rat& r) {
  std::string s = rat_to_fixed(r, 4);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

void print_table(const std::vector<std::vector<std::string>>& rows,
                 const std::vector<bool>& right_align) {
  if (rows.empty()) return;
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      const std::string pad(width[c] - row[c].size(), ' ');
      line += right_align[c] ? pad + row[c] : row[c] + pad;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    std::cout << line << '\n';
  }
}

int cmd_derive(const std::string& spec_path) {
  const WorkloadSpec spec = load_workload(spec_path);
  const auto buffers = derive_buffers(spec.layers);
  std::cout << "workload: " << spec.name << '\n';
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"layer", "width_bits", "depth_words", "total_bits", "island", "packable",
                  "direct_rams"});
  std::int64_t n_direct = 0, bits = 0;
  for (const auto& b : buffers) {
    const std::int64_t n = direct_ram_count(b, spec.ram);
    n_direct += n;
    bits += b.total_param_bits;
    rows.push_back({b.layer, std::to_string(b.width_bits), std::to_string(b.depth_words),
                    std::to_string(b.total_param_bits), b.island, b.packable ? "yes" : "no",
                    std::to_string(n)});
  }
  print_table(rows, {false, true, true, true, false, false, true});
  std::cout << "clock ratio: " << rat_to_string(spec.clock.ratio())
            << "  max bin height: " << max_bin_height(spec.clock, spec.ram) << '\n';
  std::cout << "direct mapping: " << n_direct << " RAMs, " << bits
            << " stored bits, baseline efficiency " << pct(efficiency(bits, n_direct, spec.ram))
            << '\n';
  return 0;
}

int cmd_pack(const std::string& spec_path, const std::string& engine_str, std::int64_t height,
             std::uint64_t seed, std::int64_t generations, const std::string& out_path) {
  const WorkloadSpec spec = load_workload(spec_path);
  const Engine engine = *engine_from_name(engine_str);
  const std::int64_t h_max = max_bin_height(spec.clock, spec.ram);
  const std::int64_t h_b = height > 0 ? height : h_max;
  if (h_b > h_max)
    throw InfeasibleError("bin height " + std::to_string(h_b) +
                          " violates the port bandwidth bound floor(ports * ratio) = " +
                          std::to_string(h_max) + " at clock ratio " +
                          rat_to_string(spec.clock.ratio()));

  GaParams params = spec.ga;
  params.h_b = h_b;
  params.seed = seed;
  if (generations > 0) params.generations = generations;

  const auto buffers = derive_buffers(spec.layers);
  SolutionSet set;
  set.workload = spec.name;
  set.engine = engine;
  set.h_b = (int)h_b;
  set.seed = seed;
  set.ram = spec.ram;
  set.clock = spec.clock;
  set.islands = pack_islands(buffers, spec.ram, params, engine);

  // Bake port assignments and any parity split into the stored placements so
  // the solution file is self-describing and round-trips byte-identically.
  bool all_feasible = true;
  for (auto& sol : set.islands)
    for (auto& bin : sol.bins) {
      StreamerConfig cfg = build_streamer(bin, spec.clock, /*adaptive=*/false);
      all_feasible = all_feasible && cfg.feasible;
      bin = cfg.bin;
    }

  std::cout << "workload: " << spec.name << "  engine: " << engine_name(engine)
            << "  h_b: " << h_b << "  seed: " << seed << '\n';
  for (const auto& sol : set.islands)
    std::cout << "island " << sol.island << ": " << sol.n_ram << " RAMs, " << sol.total_bits
              << " bits, efficiency " << pct(sol.efficiency) << '\n';
  std::cout << "total: " << set.n_ram() << " RAMs, efficiency " << pct(set.efficiency()) << '\n';
  if (!out_path.empty()) {
    save_solution(set, out_path);
    std::cout << "solution written to " << out_path << '\n';
  }
  if (!all_feasible) {
    std::cerr << "error: a packed bin violates the port bandwidth bound\n";
    return kExitInfeasible;
  }
  return 0;
}

int cmd_verify(const std::string& solution_path, const std::string& rf_str, bool adaptive,
               std::int64_t cycles, const std::string& trace_path) {
  const SolutionSet set = load_solution(solution_path);
  ClockPlan clock = set.clock;
  if (!rf_str.empty()) {
    const Rat rf = rat_from_string(rf_str);
    if (rf <= Rat(0)) throw InputError("--rf must be positive");
    clock.f_memory_mhz = clock.f_compute_mhz * rf;
  }
  SimConfig sim;
  sim.clock = clock;
  if (cycles > 0) sim.measure_compute_cycles = cycles;

  std::size_t total_bins = 0;
  for (const auto& sol : set.islands) total_bins += sol.bins.size();
  const bool multi_island = set.islands.size() > 1;

  std::string trace_csv = "tick,domain,port,stream,event\n";
  bool all_pass = true;
  std::int64_t bins_failed = 0;
  for (const auto& sol : set.islands) {
    const VerifyResult vr = verify_solution(sol, clock, sim, adaptive);
    all_pass = all_pass && vr.pass;
    for (std::size_t i = 0; i < vr.bins.size(); ++i) {
      const auto& [ram_index, rep] = vr.bins[i];
      const StreamerConfig cfg = build_streamer(sol.bins[i], clock, adaptive);
      const bool bin_ok =
          cfg.feasible && rep.violations == 0 && rep.starvation_events == 0;
      if (!bin_ok) ++bins_failed;
      std::cout << "bin " << (multi_island ? sol.island + "/" : "") << ram_index << ": "
                << (bin_ok ? "pass" : "FAIL");
      std::cout << "  rates:";
      for (const auto& [stream, rate] : rep.per_stream_rate)
        std::cout << ' ' << stream << '=' << rate_str(rate);
      if (!cfg.feasible)
        std::cout << "  infeasible: sustained bound " << rate_str(cfg.sustained_bound);
      if (rep.starvation_events) std::cout << "  starvation_events: " << rep.starvation_events;
      if (rep.violations) std::cout << "  violations: " << rep.violations;
      std::cout << '\n';

      if (!trace_path.empty()) {
        std::vector<TraceEvent> events;
        simulate(cfg, sim, &events);
        const std::string prefix =
            total_bins > 1 ? std::to_string(ram_index) + ":" : std::string();
        for (const auto& e : events)
          trace_csv += std::to_string(e.tick) + "," + e.domain + std::string(",") + e.port +
                       "," + prefix + e.stream + "," + e.event + "\n";
      }
    }
  }
  if (!trace_path.empty()) {
    write_text_file(trace_path, trace_csv);
    std::cout << "trace written to " << trace_path << '\n';
  }
  std::cout << "verified: "
            << (all_pass ? "pass"
                         : "FAIL (" + std::to_string(bins_failed) + " of " +
                               std::to_string(total_bins) + " bins)")
            << '\n';
  return all_pass ? 0 : kExitVerifyFail;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& format,
               const std::string& out_path) {
  std::vector<ReportRow> rows;
  for (const auto& path : paths) {
    const SolutionSet set = load_solution(path);
    SimConfig sim;
    sim.clock = set.clock;
    const Rat delta =
        delta_fps(set.clock.f_compute_mhz, set.clock.f_memory_mhz, set.clock.base());

    // Efficiency is recomputed from the placements, never copied from the file.
    std::int64_t n_total = 0, bits_total = 0;
    bool all_verified = true;
    std::vector<ReportRow> island_rows;
    for (const auto& sol : set.islands) {
      std::int64_t bits = 0;
      for (const auto& bin : sol.bins)
        for (const auto& p : bin.placements)
          bits += p.slice.width_bits * p.slice.depth_words;
      const std::int64_t n = (std::int64_t)sol.bins.size();
      const bool verified = verify_solution(sol, set.clock, sim, /*adaptive=*/true).pass;
      n_total += n;
      bits_total += bits;
      all_verified = all_verified && verified;
      island_rows.push_back({set.workload + ":" + sol.island, engine_name(sol.engine), set.h_b,
                             n, efficiency(bits, n, set.ram), delta, verified});
    }
    if (set.islands.size() > 1)
      rows.insert(rows.end(), island_rows.begin(), island_rows.end());
    rows.push_back({set.workload, engine_name(set.engine), set.h_b, n_total,
                    efficiency(bits_total, n_total, set.ram), delta, all_verified});
  }
  std::string text;
  if (format == "csv")
    text = render_report_csv(rows);
  else if (format == "json")
    text = render_report_json(rows);
  else
    text = render_report_text(rows);
  if (!out_path.empty()) {
    write_text_file(out_path, text);
    std::cout << "report written to " << out_path << '\n';
  } else {
    std::cout << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weight-buffer packing and readback verification for dataflow FPGA accelerators"};
  app.require_subcommand(1);

  auto* derive = app.add_subcommand(
      "derive", "List the weight buffers a workload implies and its direct-mapped baseline");
  std::string derive_spec;
  derive->add_option("spec", derive_spec, "workload JSON file")->required();

  auto* pack =
      app.add_subcommand("pack", "Pack weight buffers into RAMs and write a solution file");
  std::string pack_spec;
  std::string pack_engine = "ga";
  std::int64_t pack_height = 0;
  std::uint64_t pack_seed = 1;
  std::int64_t pack_generations = 0;
  std::string pack_out;
  pack->add_option("spec", pack_spec, "workload JSON file")->required();
  pack->add_option("--engine", pack_engine, "packing engine")
      ->check(CLI::IsMember({"greedy", "ga", "exhaustive"}));
  pack->add_option("--height", pack_height, "bin height H_B (default: floor(ports * ratio))")
      ->check(CLI::PositiveNumber);
  pack->add_option("--seed", pack_seed, "search seed");
  pack->add_option("--generations", pack_generations, "GA generation budget")
      ->check(CLI::PositiveNumber);
  pack->add_option("--out", pack_out, "solution JSON output path");

  auto* verify = app.add_subcommand(
      "verify", "Cycle-simulate a solution's readback and check sustained stream rates");
  std::string verify_path;
  std::string verify_rf;
  bool verify_adaptive = false;
  std::int64_t verify_cycles = 0;
  std::string verify_trace;
  verify->add_option("solution", verify_path, "solution JSON file")->required();
  verify->add_option("--rf", verify_rf,
                     "override the memory:compute clock ratio (integer, decimal, or p/q)");
  verify->add_flag("--adaptive", verify_adaptive, "enable adaptive slot donation");
  verify->add_option("--cycles", verify_cycles, "measurement window in compute cycles")
      ->check(CLI::PositiveNumber);
  verify->add_option("--trace", verify_trace, "write a per-cycle event trace CSV to this path");

  auto* report =
      app.add_subcommand("report", "Render a comparison table over one or more solution files");
  std::vector<std::string> report_paths;
  std::string report_format = "text";
  std::string report_out;
  report->add_option("solutions", report_paths, "solution JSON files")->required();
  report->add_option("--format", report_format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  report->add_option("--out", report_out, "write the table to this path instead of stdout");

  try {
    app.parse(argc, argv);
    if (derive->parsed()) return cmd_derive(derive_spec);
    if (pack->parsed())
      return cmd_pack(pack_spec, pack_engine, pack_height, pack_seed, pack_generations,
                      pack_out);
    if (verify->parsed())
      return cmd_verify(verify_path, verify_rf, verify_adaptive, verify_cycles, verify_trace);
    if (report->parsed()) return cmd_report(report_paths, report_format, report_out);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
