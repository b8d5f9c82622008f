#pragma once

#include <cstdint>

#include "ttbsim/core_stats.hpp"
#include "ttbsim/int_tensor.hpp"
#include "ttbsim/memsys.hpp"
#include "ttbsim/spike_tensor.hpp"
#include "ttbsim/ttb_grid.hpp"

namespace ttbsim {

// Occupancy model of the sparse partition's processing units. Work items are
// the active (bundle, feature) pairs; each costs z spike-accumulates per
// output-feature pass plus a dispatch overhead, scheduled greedily in
// longest-processing-time order onto the parallel units. Only active spikes
// consume compute energy.
struct SparseCoreConfig {
  std::uint32_t units = 128;
  std::uint32_t out_par = 32;            // output features per unit per cycle
  std::uint32_t dispatch_overhead = 1;   // cycles per active bundle item
  double e_op = 0.4;                     // pJ per spike-accumulate

  void validate() const;

  // Makespan estimate (total work / units, rounded up) for the stratifier's
  // balance policy.
  std::uint64_t work_estimate(std::uint64_t active_items, std::uint64_t total_spikes,
                              std::uint32_t d_out) const;
};

struct SparseSimResult {
  IntTensor psum;
  CoreStats stats;
};

// Simulate one layer's sparse partition. x may be null for an empty
// partition. Cycles are the LPT list-scheduling makespan; ties break toward
// the lower (bundle row, feature) index and the lower unit id.
SparseSimResult simulate_sparse(const SpikeTensor* x, BundleShape shape, const IntMatrix& w,
                                std::uint32_t t, std::uint32_t n, std::uint32_t d_out,
                                std::uint32_t weight_bits, const SparseCoreConfig& cfg,
                                const MemConfig& mem_cfg, MemEventLog* mem);

}  // namespace ttbsim
