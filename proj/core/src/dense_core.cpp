#include "ttbsim/dense_core.hpp"

#include <algorithm>

namespace ttbsim {

void DenseCoreConfig::validate() const {
  if (rows == 0 || cols == 0) throw ConfigError("DenseCoreConfig: rows and cols must be >= 1");
  if (lanes == 0) throw ConfigError("DenseCoreConfig: lanes must be >= 1");
  if (e_pe < 0) throw ConfigError("DenseCoreConfig: e_pe must be >= 0");
}

std::uint64_t DenseCoreConfig::work_estimate(std::uint64_t bundles, std::uint32_t volume,
                                             std::uint32_t d_in, std::uint32_t d_out) const {
  if (bundles == 0 || d_in == 0 || d_out == 0) return 0;
  const std::uint64_t acc = static_cast<std::uint64_t>(d_in) * ((volume + lanes - 1) / lanes);
  std::uint64_t cycles = 0;
  for (std::uint64_t b = 0; b < bundles; b += rows) {
    const std::uint64_t r_t = std::min<std::uint64_t>(rows, bundles - b);
    for (std::uint32_t f = 0; f < d_out; f += cols) {
      const std::uint64_t c_t = std::min<std::uint64_t>(cols, d_out - f);
      cycles += (r_t - 1) + (c_t - 1) + acc + r_t;
    }
  }
  return cycles;
}

DenseSimResult simulate_dense(const SpikeTensor* x, BundleShape shape, const IntMatrix& w,
                              std::uint32_t t, std::uint32_t n, std::uint32_t d_out,
                              std::uint32_t weight_bits, const DenseCoreConfig& cfg,
                              const MemConfig& mem_cfg, MemEventLog* mem) {
  cfg.validate();
  shape.validate();

  DenseSimResult res;
  res.psum = IntTensor(t, n, d_out);
  if (x == nullptr || x->features() == 0) {
    return res;  // empty dense partition
  }
  if (x->time_points() != t || x->tokens() != n) {
    throw ShapeError("simulate_dense: activation shape does not match layer shape");
  }
  if (w.rows != x->features() || w.cols != d_out) {
    throw ShapeError("simulate_dense: weight shape does not match partition");
  }

  const std::uint32_t d_in = x->features();
  const std::uint32_t nbt = (t + shape.bs_t - 1) / shape.bs_t;
  const std::uint32_t nbn = (n + shape.bs_n - 1) / shape.bs_n;
  const std::uint64_t bundles = static_cast<std::uint64_t>(nbt) * nbn;
  const std::uint32_t vol = shape.volume();
  const std::uint64_t acc = static_cast<std::uint64_t>(d_in) * ((vol + cfg.lanes - 1) / cfg.lanes);
  const std::uint32_t weight_bytes = (weight_bits + 7) / 8;
  const std::uint64_t port_bytes = mem_cfg.weight_port_bits / 8;
  const std::uint64_t ttb_word_bits = mem_cfg.ttb_word_bits;

  CoreStats& st = res.stats;
  for (std::uint64_t b0 = 0; b0 < bundles; b0 += cfg.rows) {
    const std::uint64_t r_t = std::min<std::uint64_t>(cfg.rows, bundles - b0);
    for (std::uint32_t f0 = 0; f0 < d_out; f0 += cfg.cols) {
      const std::uint64_t c_t = std::min<std::uint64_t>(cfg.cols, d_out - f0);
      const std::uint64_t tile_cycles = (r_t - 1) + (c_t - 1) + acc + r_t;
      st.cycles += tile_cycles;
      st.mac_equivalents += r_t * c_t * d_in * vol;
      st.weight_glb_reads += static_cast<std::uint64_t>(d_in) * c_t;
      st.activation_reads += r_t * d_in * vol;
      st.psum_writebacks += r_t * c_t * vol;
      st.compute_energy_pj += cfg.e_pe * static_cast<double>(r_t * c_t) *
                              static_cast<double>(tile_cycles);
      if (mem) {
        const std::uint64_t weight_tile_bytes = static_cast<std::uint64_t>(d_in) * c_t * weight_bytes;
        mem->record_event(MemEvent::weight_glb_read_word,
                          (weight_tile_bytes + port_bytes - 1) / port_bytes);
        const std::uint64_t act_bits = r_t * d_in * vol;
        mem->record_event(MemEvent::ttb_glb_read_word,
                          (act_bits + ttb_word_bits - 1) / ttb_word_bits);
        mem->record_event(MemEvent::psum_buf_write, r_t * c_t * vol);
      }
    }
  }

  // Functional contract: exact X_D * W_D, accumulated bundle by bundle in the
  // dataflow order.
  for (std::uint32_t bn = 0; bn < nbn; ++bn) {
    for (std::uint32_t bt = 0; bt < nbt; ++bt) {
      const std::uint32_t t1 = std::min(t, (bt + 1) * shape.bs_t);
      const std::uint32_t n1 = std::min(n, (bn + 1) * shape.bs_n);
      for (std::uint32_t ti = bt * shape.bs_t; ti < t1; ++ti) {
        for (std::uint32_t ni = bn * shape.bs_n; ni < n1; ++ni) {
          std::int32_t* out_row = &res.psum.at(ti, ni, 0);
          for (std::uint32_t di = 0; di < d_in; ++di) {
            if (!x->get(ti, ni, di)) continue;
            const std::int32_t* wrow = &w.v[static_cast<std::size_t>(di) * w.cols];
            for (std::uint32_t c = 0; c < d_out; ++c) out_row[c] += wrow[c];
          }
        }
      }
    }
  }
  return res;
}

}  // namespace ttbsim
