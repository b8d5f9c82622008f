#include "ttbsim/reference_model.hpp"

#include <string>

namespace ttbsim {

void LifBank::validate() const {
  q.validate();
  k.validate();
  v.validate();
  otemp.validate();
  attn_out.validate();
  mlp_hidden.validate();
  mlp_out.validate();
}

void ModelConfig::validate() const {
  if (t == 0 || n == 0 || d == 0) throw ConfigError("ModelConfig: T, N, D must be >= 1");
  if (blocks == 0) throw ConfigError("ModelConfig: blocks must be >= 1");
  if (heads == 0 || d % heads != 0) throw ConfigError("ModelConfig: D must divide by heads");
  if (mlp_ratio == 0) throw ConfigError("ModelConfig: mlp_ratio must be >= 1");
  if (weight_bits < 4 || weight_bits > 16) {
    throw ConfigError("ModelConfig: weight_bits must be in [4, 16]");
  }
  lif.validate();
}

namespace {
void check_matrix(const IntMatrix& m, std::uint32_t rows, std::uint32_t cols,
                  std::uint32_t bits, const char* name) {
  if (m.rows != rows || m.cols != cols) {
    throw ShapeError(std::string("BlockWeights: bad shape for ") + name);
  }
  for (std::int32_t v : m.v) {
    if (!fits_signed(v, bits)) {
      throw ConfigError(std::string("BlockWeights: value exceeds weight_bits in ") + name);
    }
  }
}
}  // namespace

void BlockWeights::validate(const ModelConfig& cfg) const {
  check_matrix(w_q, cfg.d, cfg.d, cfg.weight_bits, "w_q");
  check_matrix(w_k, cfg.d, cfg.d, cfg.weight_bits, "w_k");
  check_matrix(w_v, cfg.d, cfg.d, cfg.weight_bits, "w_v");
  check_matrix(w_o, cfg.d, cfg.d, cfg.weight_bits, "w_o");
  check_matrix(w_mlp1, cfg.d, cfg.mlp_ratio * cfg.d, cfg.weight_bits, "w_mlp1");
  check_matrix(w_mlp2, cfg.mlp_ratio * cfg.d, cfg.d, cfg.weight_bits, "w_mlp2");
}

IntTensor linear_project(const SpikeTensor& x, const IntMatrix& w) {
  if (x.features() != w.rows) {
    throw ShapeError("linear_project: feature dim does not match weight rows");
  }
  IntTensor out(x.time_points(), x.tokens(), w.cols);
  for (std::uint32_t t = 0; t < x.time_points(); ++t) {
    for (std::uint32_t n = 0; n < x.tokens(); ++n) {
      std::int32_t* row = &out.at(t, n, 0);
      for (std::uint32_t d = 0; d < x.features(); ++d) {
        if (!x.get(t, n, d)) continue;
        const std::int32_t* wrow = &w.v[static_cast<std::size_t>(d) * w.cols];
        for (std::uint32_t c = 0; c < w.cols; ++c) row[c] += wrow[c];
      }
    }
  }
  return out;
}

SsaTrace ssa_forward(const SpikeTensor& x, const BlockWeights& w, const ModelConfig& cfg) {
  cfg.validate();
  if (x.time_points() != cfg.t || x.tokens() != cfg.n || x.features() != cfg.d) {
    throw ShapeError("ssa_forward: input shape does not match config");
  }
  const std::uint32_t dh = cfg.head_dim();

  SsaTrace tr;
  tr.cur_q = linear_project(x, w.w_q);
  tr.cur_k = linear_project(x, w.w_k);
  tr.cur_v = linear_project(x, w.w_v);
  tr.q = lif_layer(tr.cur_q, cfg.lif.q, &tr.q_state);
  tr.k = lif_layer(tr.cur_k, cfg.lif.k, &tr.k_state);
  tr.v = lif_layer(tr.cur_v, cfg.lif.v, &tr.v_state);

  tr.y_all = IntTensor(cfg.t, cfg.n, cfg.d);
  tr.s_per_head.reserve(cfg.heads);
  tr.y_per_head.reserve(cfg.heads);
  for (std::uint32_t h = 0; h < cfg.heads; ++h) {
    const std::uint32_t base = h * dh;
    IntTensor s(cfg.t, cfg.n, cfg.n);
    for (std::uint32_t t = 0; t < cfg.t; ++t) {
      for (std::uint32_t n = 0; n < cfg.n; ++n) {
        for (std::uint32_t m = 0; m < cfg.n; ++m) {
          std::int32_t acc = 0;
          for (std::uint32_t j = 0; j < dh; ++j) {
            acc += (tr.q.get(t, n, base + j) && tr.k.get(t, m, base + j)) ? 1 : 0;
          }
          s.at(t, n, m) = acc;
        }
      }
    }
    // Scale is applied to S before the S*V product, as an arithmetic right
    // shift, so Y stays integer.
    IntTensor y(cfg.t, cfg.n, dh);
    for (std::uint32_t t = 0; t < cfg.t; ++t) {
      for (std::uint32_t n = 0; n < cfg.n; ++n) {
        for (std::uint32_t m = 0; m < cfg.n; ++m) {
          const std::int32_t sv = shift_scale(s.at(t, n, m), cfg.s_shift);
          if (sv == 0) continue;
          for (std::uint32_t j = 0; j < dh; ++j) {
            if (tr.v.get(t, m, base + j)) y.at(t, n, j) += sv;
          }
        }
        for (std::uint32_t j = 0; j < dh; ++j) {
          tr.y_all.at(t, n, base + j) = y.at(t, n, j);
        }
      }
    }
    tr.s_per_head.push_back(std::move(s));
    tr.y_per_head.push_back(std::move(y));
  }

  tr.o_temp = lif_layer(tr.y_all, cfg.lif.otemp, &tr.otemp_state);
  tr.o_attn = linear_project(tr.o_temp, w.w_o);
  return tr;
}

BlockTrace block_forward(const SpikeTensor& x, const BlockWeights& w, const ModelConfig& cfg) {
  BlockTrace tr;
  tr.ssa = ssa_forward(x, w, cfg);

  // Residual in the current domain, then the LIF that closes the SSA half.
  IntTensor x_as_current(cfg.t, cfg.n, cfg.d);
  for (std::uint32_t t = 0; t < cfg.t; ++t) {
    for (std::uint32_t n = 0; n < cfg.n; ++n) {
      for (std::uint32_t d = 0; d < cfg.d; ++d) {
        x_as_current.at(t, n, d) = x.get(t, n, d) ? 1 : 0;
      }
    }
  }
  tr.attn_out_current = add(tr.ssa.o_attn, x_as_current);
  tr.x_attn = lif_layer(tr.attn_out_current, cfg.lif.attn_out);

  tr.mlp1_current = linear_project(tr.x_attn, w.w_mlp1);
  tr.mlp_hidden = lif_layer(tr.mlp1_current, cfg.lif.mlp_hidden);

  IntTensor xa_as_current(cfg.t, cfg.n, cfg.d);
  for (std::uint32_t t = 0; t < cfg.t; ++t) {
    for (std::uint32_t n = 0; n < cfg.n; ++n) {
      for (std::uint32_t d = 0; d < cfg.d; ++d) {
        xa_as_current.at(t, n, d) = tr.x_attn.get(t, n, d) ? 1 : 0;
      }
    }
  }
  tr.mlp2_current = add(linear_project(tr.mlp_hidden, w.w_mlp2), xa_as_current);
  tr.x_out = lif_layer(tr.mlp2_current, cfg.lif.mlp_out);
  return tr;
}

FlopsBreakdown flops_breakdown(const ModelConfig& cfg) {
  FlopsBreakdown f;
  const std::uint64_t tn = static_cast<std::uint64_t>(cfg.t) * cfg.n;
  const std::uint64_t d = cfg.d;
  const std::uint64_t hidden = static_cast<std::uint64_t>(cfg.mlp_ratio) * cfg.d;
  const std::uint64_t per_block_proj = 4 * tn * d * d;  // Q, K, V, O
  const std::uint64_t per_block_mlp = tn * d * hidden + tn * hidden * d;
  // S = Q*K^T and Y = S*V over all heads: 2 * T * N^2 * (D/H) * H.
  const std::uint64_t per_block_attn =
      2 * tn * static_cast<std::uint64_t>(cfg.n) * (d / cfg.heads) * cfg.heads;
  // LIF layers per block: Q, K, V, o_temp, attn_out, mlp_out over D neurons,
  // plus the hidden MLP layer over mlp_ratio*D neurons.
  const std::uint64_t per_block_lif = 6 * tn * d + tn * hidden;

  f.projection_macs = cfg.blocks * per_block_proj;
  f.mlp_macs = cfg.blocks * per_block_mlp;
  f.attention_macs = cfg.blocks * per_block_attn;
  f.lif_updates = cfg.blocks * per_block_lif;
  return f;
}

double FlopsBreakdown::projection_fraction() const {
  return total() ? static_cast<double>(projection_macs) / static_cast<double>(total()) : 0.0;
}
double FlopsBreakdown::mlp_fraction() const {
  return total() ? static_cast<double>(mlp_macs) / static_cast<double>(total()) : 0.0;
}
double FlopsBreakdown::attention_fraction() const {
  return total() ? static_cast<double>(attention_macs) / static_cast<double>(total()) : 0.0;
}

}  // namespace ttbsim
