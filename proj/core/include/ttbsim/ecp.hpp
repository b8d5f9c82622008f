#pragma once

#include <cstdint>
#include <vector>

#include "ttbsim/int_tensor.hpp"
#include "ttbsim/ttb_grid.hpp"

namespace ttbsim {

// Error-constrained bundle-row pruning thresholds. A threshold of 0 disables
// pruning on that side: no row satisfies n_ab < 0.
struct EcpConfig {
  std::uint32_t theta_q = 0;
  std::uint32_t theta_k = 0;
};

// Keep/prune decision per bundle row of one head's Q and K tensors, plus the
// data needed to derive the induced S/V/Y skip sets. Rows are (bn, bt) pairs
// flattened as bn * bundles_t + bt; a row spans bs_n tokens and bs_t time
// points across all features of the head.
struct PruneMask {
  BundleShape shape;
  std::uint32_t nbt = 0;
  std::uint32_t nbn = 0;
  std::uint32_t theta_q = 0;
  std::uint32_t theta_k = 0;
  std::vector<std::uint32_t> n_ab_q;   // active-bundle totals per Q row
  std::vector<std::uint32_t> n_ab_k;
  std::vector<std::uint8_t> keep_q;    // keep iff n_ab >= theta (strict '<' prunes)
  std::vector<std::uint8_t> keep_k;

  std::uint32_t row_count() const { return nbn * nbt; }
  std::uint32_t row_of(std::uint32_t t, std::uint32_t n) const {
    return (n / shape.bs_n) * nbt + (t / shape.bs_t);
  }
  bool token_kept_q(std::uint32_t t, std::uint32_t n) const {
    return keep_q[row_of(t, n)] != 0;
  }
  bool token_kept_k(std::uint32_t t, std::uint32_t m) const {
    return keep_k[row_of(t, m)] != 0;
  }
  std::uint32_t kept_q_rows() const;
  std::uint32_t kept_k_rows() const;

  static PruneMask keep_all(BundleShape shape, std::uint32_t nbn, std::uint32_t nbt);
};

// n_ab per bundle row: the number of features whose bundle in that row is
// active. Computable from tags alone.
std::vector<std::uint32_t> row_active_counts(const TTBGrid& grid);

// Apply the pruning rule to one head's Q and K grids. Grids must share the
// bundle layout.
PruneMask ecp_prune(const TTBGrid& q_grid, const TTBGrid& k_grid, const EcpConfig& cfg);

// Operation counts performed by the pruned attention versus the unpruned
// baseline, in exact MAC / read / writeback units.
struct PrunedAttnCounts {
  std::uint64_t s_macs = 0;
  std::uint64_t s_macs_baseline = 0;
  std::uint64_t v_reads = 0;            // V bits read for retained score columns
  std::uint64_t v_reads_baseline = 0;
  std::uint64_t y_writebacks = 0;       // Y values written for kept rows
  std::uint64_t y_writebacks_baseline = 0;
};

struct PrunedAttention {
  IntTensor s;        // scores, zero at pruned coordinates
  IntTensor y;        // outputs, zero rows where the Q row was pruned
  PrunedAttnCounts counts;
};

// Compute attention for one head under a mask: S only on kept (row, column)
// pairs, Y only on kept rows, pruned entries materialized as zeros. The scale
// shift is applied to S entries before the S*V accumulation, matching the
// reference model.
PrunedAttention pruned_attention(const SpikeTensor& q, const SpikeTensor& k,
                                 const SpikeTensor& v, const PruneMask& mask,
                                 std::uint32_t s_shift);

// Maximum true score value over the pruned entries (0 over an empty set).
// Soundness requires max_pruned_q < theta_q and max_pruned_k < theta_k.
struct ErrorBoundReport {
  std::int32_t max_pruned_q = 0;
  std::int32_t max_pruned_k = 0;
  bool ok = true;
};

ErrorBoundReport error_bound_check(const IntTensor& full_s, const PruneMask& mask,
                                   const EcpConfig& cfg);

}  // namespace ttbsim
