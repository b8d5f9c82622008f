#include "ttbsim/ecp.hpp"

#include <algorithm>

namespace ttbsim {

std::uint32_t PruneMask::kept_q_rows() const {
  return static_cast<std::uint32_t>(std::count(keep_q.begin(), keep_q.end(), std::uint8_t{1}));
}

std::uint32_t PruneMask::kept_k_rows() const {
  return static_cast<std::uint32_t>(std::count(keep_k.begin(), keep_k.end(), std::uint8_t{1}));
}

PruneMask PruneMask::keep_all(BundleShape shape, std::uint32_t nbn, std::uint32_t nbt) {
  PruneMask m;
  m.shape = shape;
  m.nbn = nbn;
  m.nbt = nbt;
  m.n_ab_q.assign(static_cast<std::size_t>(nbn) * nbt, 0);
  m.n_ab_k = m.n_ab_q;
  m.keep_q.assign(static_cast<std::size_t>(nbn) * nbt, 1);
  m.keep_k = m.keep_q;
  return m;
}

std::vector<std::uint32_t> row_active_counts(const TTBGrid& grid) {
  std::vector<std::uint32_t> counts(grid.row_count(), 0);
  for (std::uint32_t bn = 0; bn < grid.bundles_n(); ++bn) {
    for (std::uint32_t bt = 0; bt < grid.bundles_t(); ++bt) {
      std::uint32_t active = 0;
      for (std::uint32_t d = 0; d < grid.features(); ++d) {
        active += (grid.tag(bn, bt, d) > 0);
      }
      counts[grid.row_index(bn, bt)] = active;
    }
  }
  return counts;
}

PruneMask ecp_prune(const TTBGrid& q_grid, const TTBGrid& k_grid, const EcpConfig& cfg) {
  if (!(q_grid.shape() == k_grid.shape()) || q_grid.bundles_t() != k_grid.bundles_t() ||
      q_grid.bundles_n() != k_grid.bundles_n() || q_grid.features() != k_grid.features()) {
    throw ShapeError("ecp_prune: Q and K grids must share bundle layout");
  }
  PruneMask m;
  m.shape = q_grid.shape();
  m.nbt = q_grid.bundles_t();
  m.nbn = q_grid.bundles_n();
  m.theta_q = cfg.theta_q;
  m.theta_k = cfg.theta_k;
  m.n_ab_q = row_active_counts(q_grid);
  m.n_ab_k = row_active_counts(k_grid);
  m.keep_q.resize(m.n_ab_q.size());
  m.keep_k.resize(m.n_ab_k.size());
  // Strict '<' prunes, so a row exactly at threshold is kept.
  for (std::size_t r = 0; r < m.n_ab_q.size(); ++r) {
    m.keep_q[r] = (m.n_ab_q[r] >= cfg.theta_q) ? 1 : 0;
  }
  for (std::size_t r = 0; r < m.n_ab_k.size(); ++r) {
    m.keep_k[r] = (m.n_ab_k[r] >= cfg.theta_k) ? 1 : 0;
  }
  return m;
}

PrunedAttention pruned_attention(const SpikeTensor& q, const SpikeTensor& k,
                                 const SpikeTensor& v, const PruneMask& mask,
                                 std::uint32_t s_shift) {
  const std::uint32_t T = q.time_points();
  const std::uint32_t N = q.tokens();
  const std::uint32_t dh = q.features();
  if (k.time_points() != T || k.tokens() != N || k.features() != dh ||
      v.time_points() != T || v.tokens() != N || v.features() != dh) {
    throw ShapeError("pruned_attention: Q/K/V shapes differ");
  }
  if (mask.nbn != (N + mask.shape.bs_n - 1) / mask.shape.bs_n ||
      mask.nbt != (T + mask.shape.bs_t - 1) / mask.shape.bs_t) {
    throw ShapeError("pruned_attention: mask layout does not match tensors");
  }

  PrunedAttention out;
  out.s = IntTensor(T, N, N);
  out.y = IntTensor(T, N, dh);
  auto& c = out.counts;
  c.s_macs_baseline = static_cast<std::uint64_t>(T) * N * N * dh;
  c.v_reads_baseline = static_cast<std::uint64_t>(T) * N * N * dh;
  c.y_writebacks_baseline = static_cast<std::uint64_t>(T) * N * dh;

  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t n = 0; n < N; ++n) {
      if (!mask.token_kept_q(t, n)) continue;
      c.y_writebacks += dh;
      for (std::uint32_t m = 0; m < N; ++m) {
        if (!mask.token_kept_k(t, m)) continue;
        std::int32_t acc = 0;
        for (std::uint32_t j = 0; j < dh; ++j) {
          acc += (q.get(t, n, j) && k.get(t, m, j)) ? 1 : 0;
        }
        out.s.at(t, n, m) = acc;
        c.s_macs += dh;
        const std::int32_t sv = shift_scale(acc, s_shift);
        c.v_reads += dh;
        if (sv == 0) continue;
        for (std::uint32_t j = 0; j < dh; ++j) {
          if (v.get(t, m, j)) out.y.at(t, n, j) += sv;
        }
      }
    }
  }
  return out;
}

ErrorBoundReport error_bound_check(const IntTensor& full_s, const PruneMask& mask,
                                   const EcpConfig& cfg) {
  ErrorBoundReport r;
  for (std::uint32_t t = 0; t < full_s.t; ++t) {
    for (std::uint32_t n = 0; n < full_s.n; ++n) {
      const bool q_pruned = !mask.token_kept_q(t, n);
      for (std::uint32_t m = 0; m < full_s.d; ++m) {
        const bool k_pruned = !mask.token_kept_k(t, m);
        if (!q_pruned && !k_pruned) continue;
        const std::int32_t s = full_s.at(t, n, m);
        if (q_pruned) r.max_pruned_q = std::max(r.max_pruned_q, s);
        if (k_pruned) r.max_pruned_k = std::max(r.max_pruned_k, s);
      }
    }
  }
  const bool q_ok = mask.kept_q_rows() == mask.row_count() ||
                    r.max_pruned_q < static_cast<std::int32_t>(cfg.theta_q);
  const bool k_ok = mask.kept_k_rows() == mask.row_count() ||
                    r.max_pruned_k < static_cast<std::int32_t>(cfg.theta_k);
  r.ok = q_ok && k_ok;
  return r;
}

}  // namespace ttbsim
