#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocm/rational.hpp"

namespace ocm {

// One convolution/FC layer of the dataflow accelerator, as folded.
// For FC layers kernel_k is 1 and c_in/c_out are the matrix dimensions.
struct LayerSpec {
  std::string name;
  std::int64_t kernel_k = 1;   // square kernel side K
  std::int64_t c_in = 1;
  std::int64_t c_out = 1;
  std::int64_t weight_bits = 1;  // W, bits per weight
  std::int64_t pe = 1;           // output-channel parallelism
  std::int64_t simd = 1;         // input parallelism across K*K*c_in
  std::string island;            // floorplan region label
  bool packable = true;          // false for excluded top/bottom layers
};

// The logical weight memory implied by one layer's folding.
struct WeightBuffer {
  std::string layer;
  std::int64_t depth_words = 0;
  std::int64_t width_bits = 0;
  std::int64_t total_param_bits = 0;
  std::string island;
  bool packable = true;
};

struct Aspect {
  std::int64_t width_bits = 0;
  std::int64_t depth_words = 0;
  bool operator==(const Aspect&) const = default;
};

// One physical RAM primitive class (default: 18 Kb dual-port block RAM).
struct RamSpec {
  std::int64_t capacity_bits = 18432;
  std::vector<Aspect> aspect_ratios{{18, 1024}};
  std::int64_t num_ports = 2;
  Rat f_max_mhz{650};
};

// Compute and memory clock domains; ratio() is the memory:compute ratio.
struct ClockPlan {
  Rat f_compute_mhz{1};
  Rat f_memory_mhz{1};
  Rat f_base_mhz{0};  // reference compute clock for throughput deltas; 0 = use f_compute
  Rat ratio() const { return f_memory_mhz / f_compute_mhz; }
  Rat base() const { return f_base_mhz > Rat(0) ? f_base_mhz : f_compute_mhz; }
};

// depth = K^2*c_in*c_out/(pe*simd), width = pe*simd*W for every layer.
// Throws InputError naming the layer if pe or simd do not divide evenly.
std::vector<WeightBuffer> derive_buffers(const std::vector<LayerSpec>& layers);

// BRAM count of the plain per-buffer mapping: best aspect by
// ceil(width/w_a) * ceil(depth/d_a).
std::int64_t direct_ram_count(const WeightBuffer& buffer, const RamSpec& ram);

// E = total bits stored / total bits allocated. Exact rational in [0,1].
Rat efficiency(std::int64_t total_param_bits, std::int64_t n_ram, const RamSpec& ram);

// Upper bound K^2 / 2^ceil(log2(K^2)) on direct-mapped efficiency caused by
// power-of-two RAM depths versus K^2-multiple buffer depths.
Rat kernel_efficiency_bound(std::int64_t kernel_k);

// Largest number of buffers one RAM can serve: floor(num_ports * ratio).
std::int64_t max_bin_height(const ClockPlan& clock, const RamSpec& ram);

// Relative throughput reduction 1 - min(f_c, f_m/2) / f_base.
Rat delta_fps(const Rat& f_c, const Rat& f_m, const Rat& f_base);

}  // namespace ocm
