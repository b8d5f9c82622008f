#pragma once

#include <cstdint>
#include <vector>

#include "ttbsim/int_tensor.hpp"
#include "ttbsim/lif.hpp"
#include "ttbsim/spike_tensor.hpp"

namespace ttbsim {

// One LifParams per neuron-layer role; the roles may differ but default to
// the same parameters.
struct LifBank {
  LifParams q, k, v, otemp, attn_out, mlp_hidden, mlp_out;

  static LifBank uniform(LifParams p) { return LifBank{p, p, p, p, p, p, p}; }
  void validate() const;
};

struct ModelConfig {
  std::uint32_t blocks = 1;
  std::uint32_t t = 4;
  std::uint32_t n = 16;
  std::uint32_t d = 32;
  std::uint32_t heads = 1;
  std::uint32_t s_shift = 0;    // scale s = 2^-s_shift, applied as a right shift
  std::uint32_t mlp_ratio = 4;
  std::uint32_t weight_bits = 8;  // signed weight precision, 4..16
  LifBank lif;

  std::uint32_t head_dim() const { return d / heads; }
  void validate() const;
};

struct BlockWeights {
  IntMatrix w_q, w_k, w_v;      // D x D
  IntMatrix w_o;                // D x D
  IntMatrix w_mlp1;             // D x (mlp_ratio * D)
  IntMatrix w_mlp2;             // (mlp_ratio * D) x D

  void validate(const ModelConfig& cfg) const;
};

// Exact integer projection of binary activations: out[t][n][:] is the sum of
// the weight rows selected by the spikes of x[t][n][:].
IntTensor linear_project(const SpikeTensor& x, const IntMatrix& w);

// Every intermediate of one spiking self-attention block, retained for the
// simulator to check against.
struct SsaTrace {
  IntTensor cur_q, cur_k, cur_v;        // projection currents before LIF
  SpikeTensor q, k, v;                  // binary Q/K/V, all heads concatenated
  std::vector<IntTensor> s_per_head;    // scores, (t, n, m); entries in [0, D/H]
  std::vector<IntTensor> y_per_head;    // post-scale outputs, (t, n, D/H)
  IntTensor y_all;                      // heads concatenated
  SpikeTensor o_temp;                   // LIF over y_all
  IntTensor o_attn;                     // o_temp * W_O
  LifState q_state, k_state, v_state, otemp_state;  // final membrane states
};

SsaTrace ssa_forward(const SpikeTensor& x, const BlockWeights& w, const ModelConfig& cfg);

// One encoder block: SSA followed by the two-layer MLP. Residuals are added
// in the integer current domain immediately before the LIF layer that closes
// each half-block, keeping every activation tensor binary.
struct BlockTrace {
  SsaTrace ssa;
  IntTensor attn_out_current;   // o_attn + x
  SpikeTensor x_attn;           // LIF(attn_out_current)
  IntTensor mlp1_current;
  SpikeTensor mlp_hidden;
  IntTensor mlp2_current;       // includes the x_attn residual
  SpikeTensor x_out;
};

BlockTrace block_forward(const SpikeTensor& x, const BlockWeights& w, const ModelConfig& cfg);

// Exact per-component operation counts for the configured model.
struct FlopsBreakdown {
  std::uint64_t projection_macs = 0;   // Q/K/V/O linear layers
  std::uint64_t mlp_macs = 0;
  std::uint64_t attention_macs = 0;    // S and Y stages, 2*T*N^2*(D/H)*H per block
  std::uint64_t lif_updates = 0;
  std::uint64_t total() const { return projection_macs + mlp_macs + attention_macs; }
  double projection_fraction() const;
  double mlp_fraction() const;
  double attention_fraction() const;
};

FlopsBreakdown flops_breakdown(const ModelConfig& cfg);

}  // namespace ttbsim
