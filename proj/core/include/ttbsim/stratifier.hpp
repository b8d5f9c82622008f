#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ttbsim/int_tensor.hpp"
#include "ttbsim/lif.hpp"
#include "ttbsim/ttb_grid.hpp"

namespace ttbsim {

// Per-feature split of a bundled workload into a dense and a sparse
// partition, with the weight rows permuted to match. A feature is dense iff
// its active-bundle count exceeds theta_s (strict '>'). Index lists preserve
// ascending source order, so x_dense * w_dense + x_sparse * w_sparse equals
// x * w exactly.
struct Stratification {
  std::uint32_t theta_s = 0;
  std::vector<std::uint32_t> dense_features;   // R_D
  std::vector<std::uint32_t> sparse_features;  // R_S
  SpikeTensor x_dense;                         // empty (features()==0 sentinel via flag below)
  SpikeTensor x_sparse;
  IntMatrix w_dense;
  IntMatrix w_sparse;
  std::vector<std::uint32_t> active_counts;    // active bundles per source feature

  bool has_dense() const { return !dense_features.empty(); }
  bool has_sparse() const { return !sparse_features.empty(); }
};

Stratification stratify(const TTBGrid& grid, const IntMatrix& w, std::uint32_t theta_s);

// Spike generator: merge the dense and sparse partial sums into the membrane
// current and fire. Equals lif_layer over the elementwise sum.
SpikeTensor merge_and_fire(const IntTensor& psum_dense, const IntTensor& psum_sparse,
                           const LifParams& p, LifState* final_state = nullptr);

// Threshold selection policy.
enum class ThetaPolicyKind { fixed, balance };

struct ThetaPolicy {
  ThetaPolicyKind kind = ThetaPolicyKind::fixed;
  std::uint32_t fixed_value = 0;

  static ThetaPolicy fixed(std::uint32_t v) { return {ThetaPolicyKind::fixed, v}; }
  static ThetaPolicy balance() { return {ThetaPolicyKind::balance, 0}; }
};

// Work estimators supplied by the core models. Dense work depends only on how
// many features go dense; sparse work depends on the active items and total
// spikes routed sparse.
using DenseWorkEstimator = std::function<std::uint64_t(std::uint32_t dense_feature_count)>;
using SparseWorkEstimator =
    std::function<std::uint64_t(std::uint64_t active_items, std::uint64_t total_spikes)>;

// For `balance`, picks the threshold minimizing |dense work - sparse work|
// over all thresholds that produce distinct splits. Ties go to the smaller
// dense set.
std::uint32_t choose_theta_s(const TTBGrid& grid, const ThetaPolicy& policy,
                             const DenseWorkEstimator& dense_work,
                             const SparseWorkEstimator& sparse_work);

}  // namespace ttbsim
