#include <doctest.h>

#include <cstdio>
#include <vector>

#include "ttbsim/reference_model.hpp"
#include "test_util.hpp"

using namespace ttbsim;

namespace {

// Independent evaluation of the attention equations, written directly from
// their definitions with its own LIF loop.
struct NaiveSsa {
  SpikeTensor q, k, v, o_temp;
  std::vector<IntTensor> s;  // per head
  IntTensor y_all, o_attn;
};

SpikeTensor naive_lif(const IntTensor& cur, const LifParams& p) {
  SpikeTensor out(cur.t, cur.n, cur.d);
  for (std::uint32_t n = 0; n < cur.n; ++n) {
    for (std::uint32_t d = 0; d < cur.d; ++d) {
      std::int64_t vm = p.v_init;
      for (std::uint32_t t = 0; t < cur.t; ++t) {
        vm = vm + cur.at(t, n, d) - p.v_leak;
        if (vm > p.v_th) {
          out.set(t, n, d, true);
          vm = 0;
        }
      }
    }
  }
  return out;
}

NaiveSsa naive_ssa(const SpikeTensor& x, const BlockWeights& w, const ModelConfig& cfg) {
  NaiveSsa r;
  r.q = naive_lif(test::naive_matmul(x, w.w_q), cfg.lif.q);
  r.k = naive_lif(test::naive_matmul(x, w.w_k), cfg.lif.k);
  r.v = naive_lif(test::naive_matmul(x, w.w_v), cfg.lif.v);
  const std::uint32_t dh = cfg.head_dim();
  r.y_all = IntTensor(cfg.t, cfg.n, cfg.d);
  for (std::uint32_t h = 0; h < cfg.heads; ++h) {
    IntTensor s(cfg.t, cfg.n, cfg.n);
    for (std::uint32_t t = 0; t < cfg.t; ++t) {
      for (std::uint32_t n = 0; n < cfg.n; ++n) {
        for (std::uint32_t m = 0; m < cfg.n; ++m) {
          std::int32_t acc = 0;
          for (std::uint32_t j = 0; j < dh; ++j) {
            acc += (r.q.get(t, n, h * dh + j) && r.k.get(t, m, h * dh + j)) ? 1 : 0;
          }
          s.at(t, n, m) = acc;
        }
        for (std::uint32_t j = 0; j < dh; ++j) {
          std::int64_t acc = 0;
          for (std::uint32_t m = 0; m < cfg.n; ++m) {
            acc += static_cast<std::int64_t>(s.at(t, n, m) >> cfg.s_shift) *
                   (r.v.get(t, m, h * dh + j) ? 1 : 0);
          }
          r.y_all.at(t, n, h * dh + j) = static_cast<std::int32_t>(acc);
        }
      }
    }
    r.s.push_back(std::move(s));
  }
  r.o_temp = naive_lif(r.y_all, cfg.lif.otemp);
  r.o_attn = test::naive_matmul(r.o_temp, w.w_o);
  return r;
}

BlockWeights random_weights(SplitMix64& rng, const ModelConfig& cfg) {
  BlockWeights w;
  w.w_q = test::random_matrix(rng, cfg.d, cfg.d, cfg.weight_bits);
  w.w_k = test::random_matrix(rng, cfg.d, cfg.d, cfg.weight_bits);
  w.w_v = test::random_matrix(rng, cfg.d, cfg.d, cfg.weight_bits);
  w.w_o = test::random_matrix(rng, cfg.d, cfg.d, cfg.weight_bits);
  w.w_mlp1 = test::random_matrix(rng, cfg.d, cfg.mlp_ratio * cfg.d, cfg.weight_bits);
  w.w_mlp2 = test::random_matrix(rng, cfg.mlp_ratio * cfg.d, cfg.d, cfg.weight_bits);
  return w;
}

}  // namespace

TEST_CASE("lif_step follows the integrate-fire-reset dynamics") {
  LifParams p{10, 0, 0};  // thresholds in the integer current scale

  LifState s;
  s.v = {6};
  auto spikes = lif_step(s, p, std::vector<std::int32_t>{5});
  CHECK(spikes[0] == 1);   // 6 + 5 = 11 > 10: fire
  CHECK(s.v[0] == 0);      // reset to zero

  LifParams leaky{10, 1, 0};
  s.v = {2};
  spikes = lif_step(s, leaky, std::vector<std::int32_t>{3});
  CHECK(spikes[0] == 0);
  CHECK(s.v[0] == 4);      // 2 + 3 - 1, persists

  // Exactly at threshold: strict comparison, no spike.
  s.v = {0};
  spikes = lif_step(s, p, std::vector<std::int32_t>{10});
  CHECK(spikes[0] == 0);
  CHECK(s.v[0] == 10);

  CHECK_THROWS_AS(lif_step(s, p, std::vector<std::int32_t>{1, 2}), ShapeError);
  const LifParams no_threshold{0, 0, 0};
  const LifParams negative_leak{1, -1, 0};
  CHECK_THROWS_AS(no_threshold.validate(), ConfigError);
  CHECK_THROWS_AS(negative_leak.validate(), ConfigError);
}

TEST_CASE("non-spiking membrane accumulates inputs minus leak with no hidden state") {
  LifParams p{1000, 3, 7};
  IntTensor cur(6, 1, 1);
  std::int64_t total = 0;
  SplitMix64 rng(5);
  for (std::uint32_t t = 0; t < 6; ++t) {
    cur.at(t, 0, 0) = static_cast<std::int32_t>(rng.next_below(50));
    total += cur.at(t, 0, 0);
  }
  LifState final_state;
  SpikeTensor out = lif_layer(cur, p, &final_state);
  CHECK(out.popcount() == 0);
  CHECK(final_state.v[0] == 7 + total - 6 * 3);
}

TEST_CASE("linear_project selects weight rows") {
  IntMatrix w(4, 5);
  SplitMix64 rng(31);
  w = test::random_matrix(rng, 4, 5);

  SpikeTensor one_hot(1, 1, 4);
  one_hot.set(0, 0, 2, true);
  IntTensor out = linear_project(one_hot, w);
  for (std::uint32_t c = 0; c < 5; ++c) CHECK(out.at(0, 0, c) == w.at(2, c));

  SpikeTensor zero(2, 3, 4);
  IntTensor z = linear_project(zero, w);
  for (std::int32_t v : z.v) CHECK(v == 0);

  SpikeTensor x = test::random_spikes(rng, 2, 3, 4, 0.5);
  CHECK(linear_project(x, w) == test::naive_matmul(x, w));

  SpikeTensor bad(1, 1, 3);
  CHECK_THROWS_AS(linear_project(bad, w), ShapeError);
}

TEST_CASE("identity attention returns V on the diagonal scores") {
  ModelConfig cfg;
  cfg.blocks = 1;
  cfg.t = 1;
  cfg.n = 2;
  cfg.d = 2;
  cfg.heads = 1;
  cfg.s_shift = 0;
  cfg.lif = LifBank::uniform(LifParams{50, 0, 0});

  BlockWeights w;
  auto diag = [](std::uint32_t d, std::int32_t v) {
    IntMatrix m(d, d);
    for (std::uint32_t i = 0; i < d; ++i) m.at(i, i) = v;
    return m;
  };
  w.w_q = diag(2, 100);
  w.w_k = diag(2, 100);
  w.w_v = diag(2, 100);
  w.w_o = diag(2, 100);
  w.w_mlp1 = IntMatrix(2, 8);
  w.w_mlp2 = IntMatrix(8, 2);

  SpikeTensor x(1, 2, 2);
  x.set(0, 0, 0, true);
  x.set(0, 1, 1, true);

  SsaTrace tr = ssa_forward(x, w, cfg);
  CHECK(tr.q == x);
  CHECK(tr.k == x);
  CHECK(tr.v == x);
  // S is the identity over tokens, so Y equals V.
  for (std::uint32_t n = 0; n < 2; ++n) {
    for (std::uint32_t m = 0; m < 2; ++m) {
      CHECK(tr.s_per_head[0].at(0, n, m) == (n == m ? 1 : 0));
    }
    for (std::uint32_t j = 0; j < 2; ++j) {
      CHECK(tr.y_all.at(0, n, j) == (tr.v.get(0, n, j) ? 1 : 0));
    }
  }
}

TEST_CASE("zero queries give zero scores and outputs") {
  ModelConfig cfg;
  cfg.t = 2;
  cfg.n = 3;
  cfg.d = 4;
  cfg.heads = 1;
  cfg.lif = LifBank::uniform(LifParams{10, 0, 0});
  SplitMix64 rng(37);
  BlockWeights w = random_weights(rng, cfg);
  // Forcing W_Q to zero silences Q entirely.
  w.w_q = IntMatrix(4, 4);
  SpikeTensor x = test::random_spikes(rng, 2, 3, 4, 0.6);
  SsaTrace tr = ssa_forward(x, w, cfg);
  CHECK(tr.q.popcount() == 0);
  for (const IntTensor& s : tr.s_per_head) {
    for (std::int32_t vv : s.v) CHECK(vv == 0);
  }
  for (std::int32_t vv : tr.y_all.v) CHECK(vv == 0);
}

TEST_CASE("ssa_forward matches the naive per-equation oracle") {
  SplitMix64 rng(41);
  for (int it = 0; it < 12; ++it) {
    ModelConfig cfg;
    cfg.t = 1 + static_cast<std::uint32_t>(rng.next_below(4));
    cfg.n = 1 + static_cast<std::uint32_t>(rng.next_below(8));
    cfg.heads = (it % 3 == 0) ? 2 : 1;
    cfg.d = cfg.heads * (2 + static_cast<std::uint32_t>(rng.next_below(6)));
    cfg.s_shift = static_cast<std::uint32_t>(rng.next_below(3));
    cfg.lif = LifBank::uniform(LifParams{8, (it % 2), 0});
    BlockWeights w = random_weights(rng, cfg);
    SpikeTensor x = test::random_spikes(rng, cfg.t, cfg.n, cfg.d, 0.4);

    SsaTrace tr = ssa_forward(x, w, cfg);
    NaiveSsa nv = naive_ssa(x, w, cfg);
    CHECK(tr.q == nv.q);
    CHECK(tr.k == nv.k);
    CHECK(tr.v == nv.v);
    for (std::uint32_t h = 0; h < cfg.heads; ++h) CHECK(tr.s_per_head[h] == nv.s[h]);
    CHECK(tr.y_all == nv.y_all);
    CHECK(tr.o_temp == nv.o_temp);
    CHECK(tr.o_attn == nv.o_attn);
  }
}

TEST_CASE("scores stay within [0, D/H]") {
  SplitMix64 rng(43);
  ModelConfig cfg;
  cfg.t = 2;
  cfg.n = 6;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.lif = LifBank::uniform(LifParams{4, 0, 0});
  BlockWeights w = random_weights(rng, cfg);
  SpikeTensor x = test::random_spikes(rng, 2, 6, 8, 0.7);
  SsaTrace tr = ssa_forward(x, w, cfg);
  for (const IntTensor& s : tr.s_per_head) {
    for (std::int32_t v : s.v) {
      CHECK(v >= 0);
      CHECK(v <= static_cast<std::int32_t>(cfg.head_dim()));
    }
  }
}

TEST_CASE("shift_scale floors toward negative infinity") {
  CHECK(shift_scale(17, 3) == 2);
  CHECK(shift_scale(-17, 3) == -3);  // floor(-17/8) = -3
  CHECK(shift_scale(7, 0) == 7);
  SplitMix64 rng(47);
  for (int i = 0; i < 200; ++i) {
    const std::int32_t v = rng.next_signed(16);
    const std::uint32_t k = static_cast<std::uint32_t>(rng.next_below(6));
    const std::int64_t denom = std::int64_t{1} << k;
    std::int64_t q = v / denom;
    if (v % denom != 0 && v < 0) --q;  // floor division
    CHECK(shift_scale(v, k) == q);
  }
}

TEST_CASE("block_forward propagates zeros and composes ssa + mlp") {
  ModelConfig cfg;
  cfg.t = 2;
  cfg.n = 3;
  cfg.d = 4;
  cfg.heads = 1;
  cfg.mlp_ratio = 2;
  cfg.lif = LifBank::uniform(LifParams{6, 0, 0});
  SplitMix64 rng(53);
  BlockWeights w = random_weights(rng, cfg);

  SpikeTensor zero(2, 3, 4);
  BlockTrace zt = block_forward(zero, w, cfg);
  CHECK(zt.x_out.popcount() == 0);

  SpikeTensor x = test::random_spikes(rng, 2, 3, 4, 0.5);
  BlockTrace tr = block_forward(x, w, cfg);

  // Manual composition from the ssa trace.
  SsaTrace ssa = ssa_forward(x, w, cfg);
  IntTensor xc(cfg.t, cfg.n, cfg.d);
  for (std::uint32_t t = 0; t < cfg.t; ++t) {
    for (std::uint32_t n = 0; n < cfg.n; ++n) {
      for (std::uint32_t d = 0; d < cfg.d; ++d) xc.at(t, n, d) = x.get(t, n, d);
    }
  }
  SpikeTensor x_attn = lif_layer(add(ssa.o_attn, xc), cfg.lif.attn_out);
  CHECK(tr.x_attn == x_attn);
  SpikeTensor hidden = lif_layer(linear_project(x_attn, w.w_mlp1), cfg.lif.mlp_hidden);
  CHECK(tr.mlp_hidden == hidden);
  IntTensor xac(cfg.t, cfg.n, cfg.d);
  for (std::uint32_t t = 0; t < cfg.t; ++t) {
    for (std::uint32_t n = 0; n < cfg.n; ++n) {
      for (std::uint32_t d = 0; d < cfg.d; ++d) xac.at(t, n, d) = x_attn.get(t, n, d);
    }
  }
  CHECK(tr.x_out == lif_layer(add(linear_project(hidden, w.w_mlp2), xac), cfg.lif.mlp_out));

  // Chaining: the second block consumes the first block's output.
  BlockTrace tr2 = block_forward(tr.x_out, w, cfg);
  SsaTrace ssa2 = ssa_forward(tr.x_out, w, cfg);
  CHECK(tr2.ssa.o_attn == ssa2.o_attn);

  // Determinism.
  BlockTrace tr_again = block_forward(x, w, cfg);
  CHECK(tr_again.x_out == tr.x_out);
}

TEST_CASE("flops breakdown matches the complexity regimes") {
  ModelConfig big_n;
  big_n.t = 4;
  big_n.n = 196;
  big_n.d = 128;
  big_n.heads = 4;
  big_n.blocks = 8;
  FlopsBreakdown fn = flops_breakdown(big_n);
  // N >> D: attention dominates a single projection layer.
  CHECK(fn.attention_macs > fn.projection_macs / 4);

  ModelConfig big_d;
  big_d.t = 4;
  big_d.n = 64;
  big_d.d = 384;
  big_d.heads = 8;
  big_d.blocks = 4;
  FlopsBreakdown fd = flops_breakdown(big_d);
  CHECK(fd.projection_macs + fd.mlp_macs > fd.attention_macs);

  ModelConfig unit;
  unit.t = 1;
  unit.n = 1;
  unit.d = 16;
  unit.heads = 2;
  unit.blocks = 1;
  FlopsBreakdown fu = flops_breakdown(unit);
  CHECK(fu.attention_macs == 2 * unit.d);
  CHECK(fu.projection_macs == 4ull * unit.d * unit.d);  // Q, K, V, O each D^2
}

TEST_CASE("ttbw weight file round trip and validation") {
  SplitMix64 rng(59);
  IntMatrix m = test::random_matrix(rng, 6, 9, 8);
  const std::string path = "test_weights.ttbw";
  save_ttbw(m, 8, path);
  std::uint32_t bits = 0;
  IntMatrix back = load_ttbw(path, &bits);
  CHECK(bits == 8);
  CHECK(back == m);

  // 12-bit values span two bytes.
  IntMatrix wide(2, 2);
  wide.at(0, 0) = -2048;
  wide.at(1, 1) = 2047;
  save_ttbw(wide, 12, path);
  CHECK(load_ttbw(path) == wide);

  IntMatrix bad(1, 1);
  bad.at(0, 0) = 300;
  CHECK_THROWS_AS(save_ttbw(bad, 8, path), ConfigError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_ttbw("missing.ttbw"), IoError);
}

TEST_CASE("model config validation") {
  ModelConfig cfg;
  cfg.d = 10;
  cfg.heads = 4;  // does not divide
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ModelConfig{};
  cfg.weight_bits = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
