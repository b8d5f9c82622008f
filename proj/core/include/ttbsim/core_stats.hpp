#pragma once

#include <cstdint>

namespace ttbsim {

// Counters produced by one core simulation. Memory-side event energy is
// accounted by the memory system; compute_energy_pj is the core's own.
struct CoreStats {
  std::uint64_t cycles = 0;
  std::uint64_t mac_equivalents = 0;   // SAC / AAC / accumulate operations
  std::uint64_t weight_glb_reads = 0;  // weight elements fetched from the weight GLB
  std::uint64_t activation_reads = 0;  // spike bits read
  std::uint64_t psum_writebacks = 0;
  double compute_energy_pj = 0.0;

  void merge(const CoreStats& o) {
    cycles += o.cycles;
    mac_equivalents += o.mac_equivalents;
    weight_glb_reads += o.weight_glb_reads;
    activation_reads += o.activation_reads;
    psum_writebacks += o.psum_writebacks;
    compute_energy_pj += o.compute_energy_pj;
  }
};

}  // namespace ttbsim
