#include "ocm/model.hpp"

#include <algorithm>
#include <bit>

#include "ocm/errors.hpp"

namespace ocm {

std::vector<WeightBuffer> derive_buffers(const std::vector<LayerSpec>& layers) {
  std::vector<WeightBuffer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    if (l.kernel_k < 1 || l.c_in < 1 || l.c_out < 1 || l.weight_bits < 1 || l.pe < 1 || l.simd < 1)
      throw InputError("layer '" + l.name + "': all shape and folding parameters must be positive");
    if (l.c_out % l.pe != 0)
      throw InputError("layer '" + l.name + "': pe does not divide c_out");
    const std::int64_t kk_cin = l.kernel_k * l.kernel_k * l.c_in;
    if (kk_cin % l.simd != 0)
      throw InputError("layer '" + l.name + "': simd does not divide k*k*c_in");
    WeightBuffer b;
    b.layer = l.name;
    b.width_bits = l.pe * l.simd * l.weight_bits;
    b.depth_words = kk_cin * l.c_out / (l.pe * l.simd);
    b.total_param_bits = b.depth_words * b.width_bits;
    b.island = l.island;
    b.packable = l.packable;
    out.push_back(std::move(b));
  }
  return out;
}

std::int64_t direct_ram_count(const WeightBuffer& buffer, const RamSpec& ram) {
  std::int64_t best = -1;
  for (const auto& a : ram.aspect_ratios) {
    const std::int64_t cols = (buffer.width_bits + a.width_bits - 1) / a.width_bits;
    const std::int64_t rows = (buffer.depth_words + a.depth_words - 1) / a.depth_words;
    const std::int64_t n = cols * rows;
    if (best < 0 || n < best) best = n;
  }
  if (best < 0) throw InputError("RamSpec has no aspect ratios");
  return best;
}

Rat efficiency(std::int64_t total_param_bits, std::int64_t n_ram, const RamSpec& ram) {
  if (total_param_bits == 0) return Rat(0);
  if (n_ram < 1) throw InputError("efficiency undefined: nonzero bits in zero RAMs");
  return Rat(total_param_bits, n_ram * ram.capacity_bits);
}

Rat kernel_efficiency_bound(std::int64_t kernel_k) {
  if (kernel_k < 1) throw InputError("kernel_k must be positive");
  const std::uint64_t kk = static_cast<std::uint64_t>(kernel_k) * kernel_k;
  return Rat(static_cast<std::int64_t>(kk), static_cast<std::int64_t>(std::bit_ceil(kk)));
}

std::int64_t max_bin_height(const ClockPlan& clock, const RamSpec& ram) {
  return rat_floor(Rat(ram.num_ports) * clock.ratio());
}

Rat delta_fps(const Rat& f_c, const Rat& f_m, const Rat& f_base) {
  if (f_c <= Rat(0) || f_m <= Rat(0) || f_base <= Rat(0))
    throw InputError("delta_fps: frequencies must be positive");
  return Rat(1) - std::min(f_c, f_m / 2) / f_base;
}

}  // namespace ocm
