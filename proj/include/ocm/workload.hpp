#pragma once

#include <string>
#include <vector>

#include "ocm/model.hpp"
#include "ocm/packer.hpp"

namespace ocm {

// A network description plus the RAM primitive and clock plan it targets.
struct WorkloadSpec {
  std::string name;
  RamSpec ram;
  ClockPlan clock;
  std::vector<std::string> islands;
  std::vector<LayerSpec> layers;
  GaParams ga;          // tuned search knobs; defaults when the file has no "ga" block
  bool has_ga = false;  // whether the file carried explicit knobs
};

WorkloadSpec load_workload(const std::string& path);
void save_workload(const WorkloadSpec& spec, const std::string& path);

// A full packing run: one PackingSolution per island plus run-level settings.
struct SolutionSet {
  std::string workload;
  Engine engine = Engine::ga;
  int h_b = 0;
  std::uint64_t seed = 0;
  RamSpec ram;
  ClockPlan clock;
  std::vector<PackingSolution> islands;

  std::int64_t n_ram() const;
  std::int64_t total_bits() const;
  Rat efficiency() const;
};

std::string solution_to_json(const SolutionSet& set);
void save_solution(const SolutionSet& set, const std::string& path);
SolutionSet load_solution(const std::string& path);

}  // namespace ocm
