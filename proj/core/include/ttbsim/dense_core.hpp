#pragma once

#include <cstdint>

#include "ttbsim/core_stats.hpp"
#include "ttbsim/int_tensor.hpp"
#include "ttbsim/memsys.hpp"
#include "ttbsim/spike_tensor.hpp"
#include "ttbsim/ttb_grid.hpp"

namespace ttbsim {

// Output-stationary select-accumulate array. Bundles map to PE rows, output
// features to PE columns; weights stream left to right and are reused by all
// bundles in a tile. PEs draw energy every occupied cycle; sparsity savings
// belong to the sparse core.
struct DenseCoreConfig {
  std::uint32_t rows = 16;    // bundles per tile
  std::uint32_t cols = 32;    // output features per tile
  std::uint32_t lanes = 10;   // spikes processed per PE per cycle
  double e_pe = 0.3;          // pJ per PE-cycle

  void validate() const;

  // Cycle estimate for the tile model, used by the stratifier's balance
  // policy. Matches simulate_dense exactly for divisible tiles.
  std::uint64_t work_estimate(std::uint64_t bundles, std::uint32_t volume,
                              std::uint32_t d_in, std::uint32_t d_out) const;
};

struct DenseSimResult {
  IntTensor psum;
  CoreStats stats;
};

// Simulate one layer's dense partition. x may be null for an empty partition
// (zero-cost stats, zero psum of shape t x n x d_out). Tile timing per the
// model: (R_t-1) + (C_t-1) skew fill, d_in * ceil(volume/lanes) accumulation,
// R_t row-sequential drain. Weights are re-fetched from the weight GLB per
// (bundle-tile, feature-tile).
DenseSimResult simulate_dense(const SpikeTensor* x, BundleShape shape, const IntMatrix& w,
                              std::uint32_t t, std::uint32_t n, std::uint32_t d_out,
                              std::uint32_t weight_bits, const DenseCoreConfig& cfg,
                              const MemConfig& mem_cfg, MemEventLog* mem);

}  // namespace ttbsim
