#include "ttbsim/sparse_core.hpp"

#include <algorithm>
#include <queue>
#include <vector>

namespace ttbsim {

void SparseCoreConfig::validate() const {
  if (units == 0) throw ConfigError("SparseCoreConfig: units must be >= 1");
  if (out_par == 0) throw ConfigError("SparseCoreConfig: out_par must be >= 1");
  if (e_op < 0) throw ConfigError("SparseCoreConfig: e_op must be >= 0");
}

std::uint64_t SparseCoreConfig::work_estimate(std::uint64_t active_items,
                                              std::uint64_t total_spikes,
                                              std::uint32_t d_out) const {
  if (active_items == 0) return 0;
  const std::uint64_t passes = (d_out + out_par - 1) / out_par;
  const std::uint64_t total = total_spikes * passes + active_items * dispatch_overhead;
  return (total + units - 1) / units;
}

SparseSimResult simulate_sparse(const SpikeTensor* x, BundleShape shape, const IntMatrix& w,
                                std::uint32_t t, std::uint32_t n, std::uint32_t d_out,
                                std::uint32_t weight_bits, const SparseCoreConfig& cfg,
                                const MemConfig& mem_cfg, MemEventLog* mem) {
  cfg.validate();
  shape.validate();

  SparseSimResult res;
  res.psum = IntTensor(t, n, d_out);
  if (x == nullptr || x->features() == 0) {
    return res;  // empty sparse partition
  }
  if (x->time_points() != t || x->tokens() != n) {
    throw ShapeError("simulate_sparse: activation shape does not match layer shape");
  }
  if (w.rows != x->features() || w.cols != d_out) {
    throw ShapeError("simulate_sparse: weight shape does not match partition");
  }

  const TTBGrid grid = pack_ttb(*x, shape);
  const std::uint64_t passes = (d_out + cfg.out_par - 1) / cfg.out_par;

  struct Item {
    std::uint32_t row;      // bundle row, bn * nbt + bt
    std::uint32_t feature;
    std::uint32_t z;
    std::uint64_t cost;
  };
  std::vector<Item> items;
  for (std::uint32_t bn = 0; bn < grid.bundles_n(); ++bn) {
    for (std::uint32_t bt = 0; bt < grid.bundles_t(); ++bt) {
      for (std::uint32_t f = 0; f < grid.features(); ++f) {
        const std::uint32_t z = grid.tag(bn, bt, f);
        if (z == 0) continue;
        items.push_back({grid.row_index(bn, bt), f, z,
                         static_cast<std::uint64_t>(z) * passes + cfg.dispatch_overhead});
      }
    }
  }

  CoreStats& st = res.stats;
  if (!items.empty()) {
    // LPT order, deterministic tie-break by (row, feature).
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.cost != b.cost) return a.cost > b.cost;
      if (a.row != b.row) return a.row < b.row;
      return a.feature < b.feature;
    });
    using Load = std::pair<std::uint64_t, std::uint32_t>;  // (load, unit id)
    std::priority_queue<Load, std::vector<Load>, std::greater<Load>> units;
    for (std::uint32_t u = 0; u < cfg.units; ++u) units.push({0, u});
    std::uint64_t makespan = 0;
    for (const Item& it : items) {
      auto [load, uid] = units.top();
      units.pop();
      load += it.cost;
      makespan = std::max(makespan, load);
      units.push({load, uid});
    }
    st.cycles = makespan;
  }

  const std::uint32_t weight_bytes = (weight_bits + 7) / 8;
  const std::uint64_t port_bytes = mem_cfg.weight_port_bits / 8;
  // Word cost of the out_par-wide row slices fetched per item, one per pass.
  std::uint64_t weight_words_per_item = 0;
  for (std::uint64_t p = 0; p < passes; ++p) {
    const std::uint64_t slice =
        std::min<std::uint64_t>(cfg.out_par, d_out - p * cfg.out_par) * weight_bytes;
    weight_words_per_item += (slice + port_bytes - 1) / port_bytes;
  }
  const std::uint32_t vol = shape.volume();
  for (const Item& it : items) {
    st.mac_equivalents += static_cast<std::uint64_t>(it.z) * d_out;
    st.weight_glb_reads += d_out;
    st.activation_reads += it.z;
    st.psum_writebacks += d_out;
    if (mem) {
      mem->record_event(MemEvent::weight_glb_read_word, weight_words_per_item);
      mem->record_event(MemEvent::ttb_glb_read_word,
                        (vol + mem_cfg.ttb_word_bits - 1) / mem_cfg.ttb_word_bits);
      mem->record_event(MemEvent::psum_buf_write, d_out);
    }
  }
  st.compute_energy_pj = cfg.e_op * static_cast<double>(st.mac_equivalents);

  // Functional contract: exact X_S * W_S.
  for (std::uint32_t ti = 0; ti < t; ++ti) {
    for (std::uint32_t ni = 0; ni < n; ++ni) {
      std::int32_t* out_row = &res.psum.at(ti, ni, 0);
      for (std::uint32_t f = 0; f < x->features(); ++f) {
        if (!x->get(ti, ni, f)) continue;
        const std::int32_t* wrow = &w.v[static_cast<std::size_t>(f) * w.cols];
        for (std::uint32_t c = 0; c < d_out; ++c) out_row[c] += wrow[c];
      }
    }
  }
  return res;
}

}  // namespace ttbsim
