#include "ttbsim/ttb_grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace ttbsim {

void BundleShape::validate() const {
  if (bs_t == 0 || bs_n == 0) {
    throw ShapeError("BundleShape: bs_t and bs_n must be >= 1");
  }
}

TTBGrid pack_ttb(const SpikeTensor& x, BundleShape shape) {
  shape.validate();
  TTBGrid g;
  g.shape_ = shape;
  g.nbt_ = (x.time_points() + shape.bs_t - 1) / shape.bs_t;
  g.nbn_ = (x.tokens() + shape.bs_n - 1) / shape.bs_n;
  g.d_ = x.features();
  g.backing_ = &x;
  g.tags_.assign(static_cast<std::size_t>(g.nbn_) * g.nbt_ * g.d_, 0);

  for (std::uint32_t t = 0; t < x.time_points(); ++t) {
    const std::uint32_t bt = t / shape.bs_t;
    for (std::uint32_t n = 0; n < x.tokens(); ++n) {
      const std::uint32_t bn = n / shape.bs_n;
      const std::size_t base = g.tag_index(bn, bt, 0);
      for (std::uint32_t d = 0; d < x.features(); ++d) {
        if (x.get(t, n, d)) ++g.tags_[base + d];
      }
    }
  }
  return g;
}

std::uint16_t TTBGrid::tag(std::uint32_t bn, std::uint32_t bt, std::uint32_t d) const {
  if (bn >= nbn_ || bt >= nbt_ || d >= d_) {
    throw std::out_of_range("TTBGrid: tag index out of range");
  }
  return tags_[tag_index(bn, bt, d)];
}

std::uint64_t TTBGrid::tag_total() const {
  std::uint64_t sum = 0;
  for (std::uint16_t z : tags_) sum += z;
  return sum;
}

std::uint64_t TTBGrid::active_bundles() const {
  std::uint64_t count = 0;
  for (std::uint16_t z : tags_) count += (z > 0);
  return count;
}

std::uint32_t TTBGrid::feature_active_bundles(std::uint32_t d) const {
  if (d >= d_) throw std::out_of_range("TTBGrid: feature index out of range");
  std::uint32_t count = 0;
  for (std::uint32_t r = 0; r < row_count(); ++r) {
    count += (tags_[static_cast<std::size_t>(r) * d_ + d] > 0);
  }
  return count;
}

SpikeTensor unpack(const TTBGrid& grid) {
  const SpikeTensor& src = grid.backing();
  SpikeTensor out(src.time_points(), src.tokens(), src.features());
  const BundleShape shape = grid.shape();
  for (std::uint32_t bn = 0; bn < grid.bundles_n(); ++bn) {
    for (std::uint32_t bt = 0; bt < grid.bundles_t(); ++bt) {
      const std::uint32_t t1 = std::min(src.time_points(), (bt + 1) * shape.bs_t);
      const std::uint32_t n1 = std::min(src.tokens(), (bn + 1) * shape.bs_n);
      for (std::uint32_t t = bt * shape.bs_t; t < t1; ++t) {
        for (std::uint32_t n = bn * shape.bs_n; n < n1; ++n) {
          for (std::uint32_t d = 0; d < src.features(); ++d) {
            if (src.get(t, n, d)) out.set(t, n, d, true);
          }
        }
      }
    }
  }
  return out;
}

SparsityMetrics sparsity_metrics(std::span<const TTBGrid* const> grids, double lambda) {
  SparsityMetrics m;
  m.lambda = lambda;
  std::uint64_t total_bundles = 0;
  std::uint64_t active = 0;
  std::uint64_t total_features = 0;
  std::uint64_t dead_features = 0;
  for (const TTBGrid* g : grids) {
    m.l_bsp += g->tag_total();
    total_bundles += g->bundle_count();
    active += g->active_bundles();
    total_features += g->features();
    for (std::uint32_t d = 0; d < g->features(); ++d) {
      if (g->feature_active_bundles(d) == 0) ++dead_features;
    }
  }
  m.active_fraction = total_bundles ? static_cast<double>(active) / total_bundles : 0.0;
  m.dead_feature_fraction =
      total_features ? static_cast<double>(dead_features) / total_features : 0.0;
  return m;
}

}  // namespace ttbsim
