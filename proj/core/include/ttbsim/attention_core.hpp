#pragma once

#include <cstdint>

#include "ttbsim/core_stats.hpp"
#include "ttbsim/ecp.hpp"
#include "ttbsim/int_tensor.hpp"
#include "ttbsim/memsys.hpp"
#include "ttbsim/spike_tensor.hpp"

namespace ttbsim {

// Reconfigurable attention array. Mode 1 runs and-accumulate units with an
// S-stationary dataflow (Q flows left to right, K top to bottom); mode 2
// keeps S resident and streams V to form Y with select-accumulate units.
// Scores are held in s_bits-wide registers, so the head dimension must not
// exceed 2^s_bits - 1.
struct AttnCoreConfig {
  std::uint32_t rows = 16;               // kept Q bundle rows per tile
  std::uint32_t cols = 32;               // kept K bundle rows per tile
  std::uint32_t s_bits = 8;              // score register width, 6..10
  std::uint32_t mode_switch_cycles = 1;  // per-tile mode-1 -> mode-2 reconfiguration
  std::uint32_t groups = 0;              // time groups per PE; 0 means bs_t
  double e_and = 0.08;                   // pJ per AAC op
  double e_sac = 0.25;                   // pJ per SAC op

  void validate(std::uint32_t head_dim) const;
};

struct AttnSimResult {
  IntTensor out;     // mode 1: scores (t, n, m); mode 2: outputs (t, n, D/H)
  CoreStats stats;
};

// Mode 1: compute S exactly on kept (Q row, K row) pairs of one head; pruned
// coordinates stay zero. Per tile of R_t kept-Q rows x C_t kept-K rows the
// cycle cost is (R_t-1) + (C_t-1) + D/H. K token sets are reused across the
// tokens and time groups inside a PE and down each column, so K reads per
// tile are C_t * (D/H) sets, independent of R_t.
AttnSimResult simulate_mode1(const SpikeTensor& q, const SpikeTensor& k, const PruneMask& mask,
                             const AttnCoreConfig& cfg, const MemConfig& mem_cfg,
                             MemEventLog* mem);

// Mode 2: Y on kept rows from the resident S and streaming V, with the scale
// shift applied to each S value as it leaves its register. V is reused like K
// in mode 1; Y partial sums aggregate in the Y bundle buffers.
AttnSimResult simulate_mode2(const IntTensor& s, const SpikeTensor& v, const PruneMask& mask,
                             std::uint32_t s_shift, const AttnCoreConfig& cfg,
                             const MemConfig& mem_cfg, MemEventLog* mem);

}  // namespace ttbsim
