#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ttbsim/spike_tensor.hpp"

namespace ttbsim {

// Token-time bundle geometry: each bundle packs bs_n tokens across bs_t time
// points for one feature.
struct BundleShape {
  std::uint32_t bs_t = 1;
  std::uint32_t bs_n = 1;

  std::uint32_t volume() const { return bs_t * bs_n; }
  void validate() const;

  friend bool operator==(const BundleShape&, const BundleShape&) = default;
};

// The activations of one tensor re-indexed into ceil(T/bs_t) x ceil(N/bs_n)
// bundles per feature, with a per-bundle spike-count tag Z. Trailing bundles
// are zero-padded; padded cells never count as spikes. The grid keeps a
// non-owning pointer to its backing tensor, which must outlive it.
class TTBGrid {
 public:
  TTBGrid() = default;

  BundleShape shape() const { return shape_; }
  std::uint32_t bundles_t() const { return nbt_; }   // ceil(T/bs_t)
  std::uint32_t bundles_n() const { return nbn_; }   // ceil(N/bs_n)
  std::uint32_t features() const { return d_; }
  std::uint32_t row_count() const { return nbn_ * nbt_; }
  std::uint64_t bundle_count() const {
    return static_cast<std::uint64_t>(row_count()) * d_;
  }

  // Bundle activity tag: spike count in the (bn, bt) window of feature d.
  // Out-of-range indices throw std::out_of_range.
  std::uint16_t tag(std::uint32_t bn, std::uint32_t bt, std::uint32_t d) const;

  // Bundle rows are (bn, bt) pairs flattened as bn * bundles_t() + bt.
  std::uint32_t row_index(std::uint32_t bn, std::uint32_t bt) const {
    return bn * nbt_ + bt;
  }
  std::uint32_t row_of(std::uint32_t t, std::uint32_t n) const {
    return row_index(n / shape_.bs_n, t / shape_.bs_t);
  }

  std::uint64_t tag_total() const;
  std::uint64_t active_bundles() const;

  // Count of active bundles (tag > 0) for one feature across all rows.
  std::uint32_t feature_active_bundles(std::uint32_t d) const;

  const SpikeTensor& backing() const { return *backing_; }

  friend TTBGrid pack_ttb(const SpikeTensor& x, BundleShape shape);

 private:
  std::size_t tag_index(std::uint32_t bn, std::uint32_t bt, std::uint32_t d) const {
    return (static_cast<std::size_t>(bn) * nbt_ + bt) * d_ + d;
  }

  BundleShape shape_;
  std::uint32_t nbt_ = 0;
  std::uint32_t nbn_ = 0;
  std::uint32_t d_ = 0;
  std::vector<std::uint16_t> tags_;
  const SpikeTensor* backing_ = nullptr;
};

// Pack a spike tensor into bundles and compute all tags. Lossless: unpack()
// reproduces the tensor exactly, padding dropped.
TTBGrid pack_ttb(const SpikeTensor& x, BundleShape shape);

// Rebuild the original tensor by walking the grid's bundle regions.
SpikeTensor unpack(const TTBGrid& grid);

// Aggregate bundle-sparsity metrics over the grids of one or more layers.
struct SparsityMetrics {
  std::uint64_t l_bsp = 0;            // sum of all tags across layers
  double lambda = 0.0;                // weighting hyperparameter
  double active_fraction = 0.0;       // active bundles / total bundles
  double dead_feature_fraction = 0.0; // features with no active bundle / total features
};

SparsityMetrics sparsity_metrics(std::span<const TTBGrid* const> grids, double lambda);

}  // namespace ttbsim
