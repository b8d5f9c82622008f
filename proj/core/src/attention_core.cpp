#include "ttbsim/attention_core.hpp"

#include <algorithm>
#include <vector>

namespace ttbsim {

void AttnCoreConfig::validate(std::uint32_t head_dim) const {
  if (rows == 0 || cols == 0) throw ConfigError("AttnCoreConfig: rows and cols must be >= 1");
  if (s_bits < 6 || s_bits > 10) throw ConfigError("AttnCoreConfig: s_bits must be in [6, 10]");
  if (head_dim > (1u << s_bits) - 1) {
    throw ConfigError("AttnCoreConfig: head dim exceeds the S register range; S would saturate");
  }
  if (e_and < 0 || e_sac < 0) throw ConfigError("AttnCoreConfig: energies must be >= 0");
}

namespace {

// Kept bundle rows per time block, as bn indices.
std::vector<std::vector<std::uint32_t>> kept_rows_by_bt(const PruneMask& mask,
                                                        const std::vector<std::uint8_t>& keep) {
  std::vector<std::vector<std::uint32_t>> rows(mask.nbt);
  for (std::uint32_t bt = 0; bt < mask.nbt; ++bt) {
    for (std::uint32_t bn = 0; bn < mask.nbn; ++bn) {
      if (keep[static_cast<std::size_t>(bn) * mask.nbt + bt]) rows[bt].push_back(bn);
    }
  }
  return rows;
}

struct TileWalk {
  std::uint64_t cycles = 0;
  std::uint64_t k_set_reads = 0;  // column-side sets (K in mode 1, V in mode 2)
  std::uint64_t q_set_reads = 0;  // row-side sets (mode 1 only)
};

// Walk the per-time-block tile grid shared by both modes.
TileWalk walk_tiles(const PruneMask& mask, const std::vector<std::vector<std::uint32_t>>& qrows,
                    const std::vector<std::vector<std::uint32_t>>& krows, std::uint32_t dh,
                    const AttnCoreConfig& cfg, std::uint32_t extra_per_tile) {
  const std::uint32_t g = cfg.groups == 0 ? mask.shape.bs_t : cfg.groups;
  const std::uint64_t time_passes = (mask.shape.bs_t + g - 1) / g;
  TileWalk w;
  for (std::uint32_t bt = 0; bt < mask.nbt; ++bt) {
    const std::uint64_t kq = qrows[bt].size();
    const std::uint64_t kk = krows[bt].size();
    if (kq == 0 || kk == 0) continue;
    for (std::uint64_t r0 = 0; r0 < kq; r0 += cfg.rows) {
      const std::uint64_t r_t = std::min<std::uint64_t>(cfg.rows, kq - r0);
      for (std::uint64_t c0 = 0; c0 < kk; c0 += cfg.cols) {
        const std::uint64_t c_t = std::min<std::uint64_t>(cfg.cols, kk - c0);
        w.cycles += (r_t - 1) + (c_t - 1) + static_cast<std::uint64_t>(dh) * time_passes +
                    extra_per_tile;
        w.k_set_reads += c_t * dh;
        w.q_set_reads += r_t * dh;
      }
    }
  }
  return w;
}

}  // namespace

AttnSimResult simulate_mode1(const SpikeTensor& q, const SpikeTensor& k, const PruneMask& mask,
                             const AttnCoreConfig& cfg, const MemConfig& mem_cfg,
                             MemEventLog* mem) {
  const std::uint32_t T = q.time_points();
  const std::uint32_t N = q.tokens();
  const std::uint32_t dh = q.features();
  cfg.validate(dh);
  if (k.time_points() != T || k.tokens() != N || k.features() != dh) {
    throw ShapeError("simulate_mode1: Q and K shapes differ");
  }
  if (mask.nbt != (T + mask.shape.bs_t - 1) / mask.shape.bs_t ||
      mask.nbn != (N + mask.shape.bs_n - 1) / mask.shape.bs_n) {
    throw ShapeError("simulate_mode1: mask layout does not match tensors");
  }

  AttnSimResult res;
  res.out = IntTensor(T, N, N);
  CoreStats& st = res.stats;

  const auto qrows = kept_rows_by_bt(mask, mask.keep_q);
  const auto krows = kept_rows_by_bt(mask, mask.keep_k);
  const TileWalk w = walk_tiles(mask, qrows, krows, dh, cfg, 0);
  st.cycles = w.cycles;
  const std::uint32_t vol = mask.shape.volume();
  st.activation_reads = (w.k_set_reads + w.q_set_reads) * vol;
  if (mem) {
    const std::uint64_t bits = st.activation_reads;
    mem->record_event(MemEvent::ttb_glb_read_word,
                      (bits + mem_cfg.ttb_word_bits - 1) / mem_cfg.ttb_word_bits);
  }

  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t n = 0; n < N; ++n) {
      if (!mask.token_kept_q(t, n)) continue;
      for (std::uint32_t m = 0; m < N; ++m) {
        if (!mask.token_kept_k(t, m)) continue;
        std::int32_t acc = 0;
        for (std::uint32_t j = 0; j < dh; ++j) {
          acc += (q.get(t, n, j) && k.get(t, m, j)) ? 1 : 0;
        }
        res.out.at(t, n, m) = acc;
        st.mac_equivalents += dh;
        st.psum_writebacks += 1;  // one resident S register written per entry
      }
    }
  }
  st.compute_energy_pj = cfg.e_and * static_cast<double>(st.mac_equivalents);
  return res;
}

AttnSimResult simulate_mode2(const IntTensor& s, const SpikeTensor& v, const PruneMask& mask,
                             std::uint32_t s_shift, const AttnCoreConfig& cfg,
                             const MemConfig& mem_cfg, MemEventLog* mem) {
  const std::uint32_t T = s.t;
  const std::uint32_t N = s.n;
  const std::uint32_t dh = v.features();
  cfg.validate(dh);
  if (s.d != N || v.time_points() != T || v.tokens() != N) {
    throw ShapeError("simulate_mode2: S and V shapes are inconsistent");
  }
  if (mask.nbt != (T + mask.shape.bs_t - 1) / mask.shape.bs_t ||
      mask.nbn != (N + mask.shape.bs_n - 1) / mask.shape.bs_n) {
    throw ShapeError("simulate_mode2: mask layout does not match tensors");
  }

  AttnSimResult res;
  res.out = IntTensor(T, N, dh);
  CoreStats& st = res.stats;

  const auto qrows = kept_rows_by_bt(mask, mask.keep_q);
  const auto krows = kept_rows_by_bt(mask, mask.keep_k);
  const TileWalk w = walk_tiles(mask, qrows, krows, dh, cfg, cfg.mode_switch_cycles);
  st.cycles = w.cycles;
  const std::uint32_t vol = mask.shape.volume();
  st.activation_reads = w.k_set_reads * vol;  // V sets stream down the columns
  if (mem) {
    mem->record_event(MemEvent::ttb_glb_read_word,
                      (st.activation_reads + mem_cfg.ttb_word_bits - 1) / mem_cfg.ttb_word_bits);
  }

  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t n = 0; n < N; ++n) {
      if (!mask.token_kept_q(t, n)) continue;
      for (std::uint32_t m = 0; m < N; ++m) {
        if (!mask.token_kept_k(t, m)) continue;
        // The shifter sits at the S register readout, before accumulation,
        // matching the reference scaling order.
        const std::int32_t sv = shift_scale(s.at(t, n, m), s_shift);
        st.mac_equivalents += dh;
        if (sv == 0) continue;
        for (std::uint32_t j = 0; j < dh; ++j) {
          if (v.get(t, m, j)) res.out.at(t, n, j) += sv;
        }
      }
      st.psum_writebacks += dh;  // Y values for this kept row
      if (mem) mem->record_event(MemEvent::psum_buf_write, dh);
    }
  }
  st.compute_energy_pj = cfg.e_sac * static_cast<double>(st.mac_equivalents);
  return res;
}

}  // namespace ttbsim
