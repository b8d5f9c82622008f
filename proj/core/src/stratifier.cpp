#include "ttbsim/stratifier.hpp"

#include <algorithm>

namespace ttbsim {

Stratification stratify(const TTBGrid& grid, const IntMatrix& w, std::uint32_t theta_s) {
  if (w.rows != grid.features()) {
    throw ShapeError("stratify: weight rows do not match grid features");
  }
  Stratification s;
  s.theta_s = theta_s;
  s.active_counts.resize(grid.features());
  for (std::uint32_t d = 0; d < grid.features(); ++d) {
    s.active_counts[d] = grid.feature_active_bundles(d);
    if (s.active_counts[d] > theta_s) {
      s.dense_features.push_back(d);
    } else {
      s.sparse_features.push_back(d);
    }
  }

  const SpikeTensor& x = grid.backing();
  if (!s.dense_features.empty()) {
    s.x_dense = x.select_features(s.dense_features);
    s.w_dense = IntMatrix(static_cast<std::uint32_t>(s.dense_features.size()), w.cols);
    for (std::uint32_t r = 0; r < s.w_dense.rows; ++r) {
      for (std::uint32_t c = 0; c < w.cols; ++c) {
        s.w_dense.at(r, c) = w.at(s.dense_features[r], c);
      }
    }
  }
  if (!s.sparse_features.empty()) {
    s.x_sparse = x.select_features(s.sparse_features);
    s.w_sparse = IntMatrix(static_cast<std::uint32_t>(s.sparse_features.size()), w.cols);
    for (std::uint32_t r = 0; r < s.w_sparse.rows; ++r) {
      for (std::uint32_t c = 0; c < w.cols; ++c) {
        s.w_sparse.at(r, c) = w.at(s.sparse_features[r], c);
      }
    }
  }
  return s;
}

SpikeTensor merge_and_fire(const IntTensor& psum_dense, const IntTensor& psum_sparse,
                           const LifParams& p, LifState* final_state) {
  if (!psum_dense.same_shape(psum_sparse)) {
    throw ShapeError("merge_and_fire: partial-sum shapes differ");
  }
  return lif_layer(add(psum_dense, psum_sparse), p, final_state);
}

std::uint32_t choose_theta_s(const TTBGrid& grid, const ThetaPolicy& policy,
                             const DenseWorkEstimator& dense_work,
                             const SparseWorkEstimator& sparse_work) {
  if (policy.kind == ThetaPolicyKind::fixed) return policy.fixed_value;

  const std::uint32_t d = grid.features();
  std::vector<std::uint32_t> counts(d);
  std::vector<std::uint64_t> spikes(d, 0);
  for (std::uint32_t i = 0; i < d; ++i) {
    counts[i] = grid.feature_active_bundles(i);
    for (std::uint32_t r = 0; r < grid.row_count(); ++r) {
      spikes[i] += grid.tag(r / grid.bundles_t(), r % grid.bundles_t(), i);
    }
  }
  const std::uint32_t max_count = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  if (max_count == 0) return 0;  // every threshold yields an empty dense set

  // Candidate thresholds: the distinct split boundaries. Feature i is dense
  // iff counts[i] > theta, so only values in {0} and the observed counts
  // produce distinct partitions.
  std::vector<std::uint32_t> candidates = counts;
  candidates.push_back(0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::uint32_t best_theta = 0;
  std::uint64_t best_diff = ~std::uint64_t{0};
  for (std::uint32_t theta : candidates) {
    std::uint32_t n_dense = 0;
    std::uint64_t items = 0;
    std::uint64_t z_total = 0;
    for (std::uint32_t i = 0; i < d; ++i) {
      if (counts[i] > theta) {
        ++n_dense;
      } else {
        items += counts[i];
        z_total += spikes[i];
      }
    }
    const std::uint64_t wd = dense_work(n_dense);
    const std::uint64_t ws = sparse_work(items, z_total);
    const std::uint64_t diff = wd > ws ? wd - ws : ws - wd;
    // '<=' so that ties resolve to the larger theta, i.e. the smaller dense set.
    if (diff <= best_diff) {
      best_diff = diff;
      best_theta = theta;
    }
  }
  return best_theta;
}

}  // namespace ttbsim
