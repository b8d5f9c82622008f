#include <doctest.h>

#include <algorithm>
#include <vector>

#include "ttbsim/attention_core.hpp"
#include "ttbsim/dense_core.hpp"
#include "ttbsim/ecp.hpp"
#include "ttbsim/sparse_core.hpp"
#include "test_util.hpp"

using namespace ttbsim;

namespace {

// Event-driven oracle for the dense core's tile schedule: PE (r, c) starts
// accumulating at skew r + c, runs for the accumulation span, and the drain
// walks the rows one cycle each after the last PE finishes.
std::uint64_t dense_tile_trace(std::uint64_t r_t, std::uint64_t c_t, std::uint64_t acc) {
  std::uint64_t last_end = 0;
  for (std::uint64_t r = 0; r < r_t; ++r) {
    for (std::uint64_t c = 0; c < c_t; ++c) {
      last_end = std::max(last_end, r + c + acc);
    }
  }
  return last_end + r_t;
}

std::uint64_t dense_trace_total(std::uint64_t bundles, std::uint32_t d_in, std::uint32_t vol,
                                const DenseCoreConfig& cfg, std::uint32_t d_out) {
  const std::uint64_t acc = static_cast<std::uint64_t>(d_in) * ((vol + cfg.lanes - 1) / cfg.lanes);
  std::uint64_t total = 0;
  for (std::uint64_t b = 0; b < bundles; b += cfg.rows) {
    const std::uint64_t r_t = std::min<std::uint64_t>(cfg.rows, bundles - b);
    for (std::uint32_t f = 0; f < d_out; f += cfg.cols) {
      const std::uint64_t c_t = std::min<std::uint64_t>(cfg.cols, d_out - f);
      total += dense_tile_trace(r_t, c_t, acc);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("dense core: one exact tile costs 94 cycles") {
  // 16 bundles of volume 10: T=8, N=20 with (2, 5) bundles.
  const BundleShape shape{2, 5};
  SplitMix64 rng(131);
  SpikeTensor x = test::random_spikes(rng, 8, 20, 32, 0.4);
  IntMatrix w = test::random_matrix(rng, 32, 32);
  DenseCoreConfig cfg;  // 16 x 32, 10 lanes
  MemConfig mem;
  auto res = simulate_dense(&x, shape, w, 8, 20, 32, 8, cfg, mem, nullptr);
  CHECK(res.stats.cycles == 94);  // 15 + 31 + 32*1 + 16
  CHECK(res.stats.cycles == dense_trace_total(16, 32, 10, cfg, 32));
  CHECK(res.psum == test::naive_matmul(x, w));
}

TEST_CASE("dense core: doubling bundle volume doubles only the accumulation term") {
  SplitMix64 rng(137);
  IntMatrix w = test::random_matrix(rng, 32, 32);
  DenseCoreConfig cfg;
  MemConfig mem;
  SpikeTensor x10 = test::random_spikes(rng, 8, 20, 32, 0.4);
  SpikeTensor x20 = test::random_spikes(rng, 8, 40, 32, 0.4);
  auto r10 = simulate_dense(&x10, {2, 5}, w, 8, 20, 32, 8, cfg, mem, nullptr);
  auto r20 = simulate_dense(&x20, {2, 10}, w, 8, 40, 32, 8, cfg, mem, nullptr);
  // Same 16 bundles; the accumulation term goes from 32*1 to 32*2.
  CHECK(r20.stats.cycles - r10.stats.cycles == 32);
}

TEST_CASE("dense core: weight reads are per (bundle-tile, feature-tile)") {
  SplitMix64 rng(139);
  // 32 bundles -> 2 bundle tiles, one feature tile of width 32.
  SpikeTensor x = test::random_spikes(rng, 8, 40, 16, 0.3);
  IntMatrix w = test::random_matrix(rng, 16, 32);
  DenseCoreConfig cfg;
  MemConfig mem;
  auto res = simulate_dense(&x, {2, 5}, w, 8, 40, 32, 8, cfg, mem, nullptr);
  CHECK(res.stats.weight_glb_reads == 2ull * 16 * 32);

  // Reuse bound: never worse than refetching per bundle.
  CHECK(res.stats.weight_glb_reads <= 32ull * 16 * 32);
}

TEST_CASE("dense core: empty partition is free") {
  IntMatrix w;
  DenseCoreConfig cfg;
  MemConfig mem;
  auto res = simulate_dense(nullptr, {2, 2}, w, 4, 8, 16, 8, cfg, mem, nullptr);
  CHECK(res.stats.cycles == 0);
  CHECK(res.stats.compute_energy_pj == 0.0);
  for (std::int32_t v : res.psum.v) CHECK(v == 0);
}

TEST_CASE("dense core: cycles are monotone in bundles and output features") {
  SplitMix64 rng(149);
  IntMatrix w16 = test::random_matrix(rng, 8, 16);
  IntMatrix w48 = test::random_matrix(rng, 8, 48);
  DenseCoreConfig cfg;
  MemConfig mem;
  SpikeTensor small = test::random_spikes(rng, 4, 8, 8, 0.3);
  SpikeTensor more_bundles = test::random_spikes(rng, 4, 24, 8, 0.3);
  auto a = simulate_dense(&small, {2, 2}, w16, 4, 8, 16, 8, cfg, mem, nullptr);
  auto b = simulate_dense(&more_bundles, {2, 2}, w16, 4, 24, 16, 8, cfg, mem, nullptr);
  auto c = simulate_dense(&small, {2, 2}, w48, 4, 8, 48, 8, cfg, mem, nullptr);
  CHECK(b.stats.cycles >= a.stats.cycles);
  CHECK(c.stats.cycles >= a.stats.cycles);
}

TEST_CASE("dense core matches the event-driven trace on random shapes") {
  SplitMix64 rng(151);
  MemConfig mem;
  for (int it = 0; it < 10; ++it) {
    DenseCoreConfig cfg;
    cfg.rows = 2 + static_cast<std::uint32_t>(rng.next_below(15));
    cfg.cols = 2 + static_cast<std::uint32_t>(rng.next_below(31));
    cfg.lanes = 1 + static_cast<std::uint32_t>(rng.next_below(10));
    const std::uint32_t t = 1 + static_cast<std::uint32_t>(rng.next_below(6));
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.next_below(30));
    const std::uint32_t d_in = 1 + static_cast<std::uint32_t>(rng.next_below(20));
    const std::uint32_t d_out = 1 + static_cast<std::uint32_t>(rng.next_below(40));
    const BundleShape shape{1 + static_cast<std::uint32_t>(rng.next_below(3)),
                            1 + static_cast<std::uint32_t>(rng.next_below(4))};
    SpikeTensor x = test::random_spikes(rng, t, n, d_in, 0.3);
    IntMatrix w = test::random_matrix(rng, d_in, d_out);
    auto res = simulate_dense(&x, shape, w, t, n, d_out, 8, cfg, mem, nullptr);
    const std::uint64_t bundles =
        static_cast<std::uint64_t>((t + shape.bs_t - 1) / shape.bs_t) *
        ((n + shape.bs_n - 1) / shape.bs_n);
    CHECK(res.stats.cycles == dense_trace_total(bundles, d_in, shape.volume(), cfg, d_out));
    CHECK(res.psum == test::naive_matmul(x, w));
    CHECK(res.stats.cycles == cfg.work_estimate(bundles, shape.volume(), d_in, d_out));
  }
}

TEST_CASE("sparse core: single item cost and empty workload") {
  // One bundle, one feature, 4 spikes.
  SpikeTensor x(2, 2, 1);
  for (std::uint32_t t = 0; t < 2; ++t) {
    for (std::uint32_t n = 0; n < 2; ++n) x.set(t, n, 0, true);
  }
  IntMatrix w(1, 32);
  for (std::uint32_t c = 0; c < 32; ++c) w.at(0, c) = static_cast<std::int32_t>(c) - 16;
  SparseCoreConfig cfg;  // out_par 32, overhead 1
  MemConfig mem;
  auto res = simulate_sparse(&x, {2, 2}, w, 2, 2, 32, 8, cfg, mem, nullptr);
  CHECK(res.stats.cycles == 5);  // 4 * ceil(32/32) + 1
  CHECK(res.psum == test::naive_matmul(x, w));

  auto empty = simulate_sparse(nullptr, {2, 2}, w, 2, 2, 32, 8, cfg, mem, nullptr);
  CHECK(empty.stats.cycles == 0);
  CHECK(empty.stats.compute_energy_pj == 0.0);
}

TEST_CASE("sparse core: 256 identical items on 128 units take two waves") {
  SpikeTensor x(1, 256, 1);
  for (std::uint32_t n = 0; n < 256; ++n) x.set(0, n, 0, true);
  IntMatrix w(1, 8);
  w.at(0, 3) = 5;
  SparseCoreConfig cfg;
  MemConfig mem;
  auto res = simulate_sparse(&x, {1, 1}, w, 1, 256, 8, 8, cfg, mem, nullptr);
  const std::uint64_t item_cost = 1 + cfg.dispatch_overhead;  // z=1, one pass
  CHECK(res.stats.cycles == 2 * item_cost);
}

TEST_CASE("sparse core: energy is proportional to active spike work only") {
  SplitMix64 rng(157);
  SpikeTensor x = test::random_spikes(rng, 4, 10, 6, 0.15);
  IntMatrix w = test::random_matrix(rng, 6, 24);
  SparseCoreConfig cfg;
  MemConfig mem;
  auto res = simulate_sparse(&x, {2, 2}, w, 4, 10, 24, 8, cfg, mem, nullptr);
  const TTBGrid g = pack_ttb(x, {2, 2});
  CHECK(res.stats.mac_equivalents == g.tag_total() * 24);
  CHECK(res.stats.compute_energy_pj ==
        doctest::Approx(cfg.e_op * static_cast<double>(g.tag_total() * 24)));
}

TEST_CASE("sparse core: makespan within list-scheduling bounds") {
  SplitMix64 rng(163);
  for (int it = 0; it < 10; ++it) {
    SparseCoreConfig cfg;
    cfg.units = 1 + static_cast<std::uint32_t>(rng.next_below(16));
    cfg.out_par = 4;
    const std::uint32_t d_out = 8;
    SpikeTensor x = test::random_spikes(rng, 4, 12, 8, 0.3);
    IntMatrix w = test::random_matrix(rng, 8, d_out);
    MemConfig mem;
    auto res = simulate_sparse(&x, {2, 3}, w, 4, 12, d_out, 8, cfg, mem, nullptr);
    const TTBGrid g = pack_ttb(x, {2, 3});
    std::uint64_t total = 0, max_item = 0;
    const std::uint64_t passes = (d_out + cfg.out_par - 1) / cfg.out_par;
    for (std::uint32_t bn = 0; bn < g.bundles_n(); ++bn) {
      for (std::uint32_t bt = 0; bt < g.bundles_t(); ++bt) {
        for (std::uint32_t f = 0; f < 8; ++f) {
          const std::uint32_t z = g.tag(bn, bt, f);
          if (z == 0) continue;
          const std::uint64_t cost = z * passes + cfg.dispatch_overhead;
          total += cost;
          max_item = std::max(max_item, cost);
        }
      }
    }
    if (total == 0) continue;
    CHECK(res.stats.cycles >= (total + cfg.units - 1) / cfg.units);
    CHECK(res.stats.cycles <= total / cfg.units + max_item);
    CHECK(res.psum == test::naive_matmul(x, w));
  }
}

TEST_CASE("attention core mode 1: one full tile costs 110 cycles") {
  // 32 token rows at (1,1); keep 16 Q rows and all 32 K rows.
  SplitMix64 rng(167);
  const std::uint32_t dh = 64;
  SpikeTensor q = test::random_spikes(rng, 1, 32, dh, 0.3);
  SpikeTensor k = test::random_spikes(rng, 1, 32, dh, 0.3);
  PruneMask mask = PruneMask::keep_all({1, 1}, 32, 1);
  for (std::uint32_t r = 16; r < 32; ++r) mask.keep_q[r] = 0;

  AttnCoreConfig cfg;
  MemConfig mem;
  auto res = simulate_mode1(q, k, mask, cfg, mem, nullptr);
  CHECK(res.stats.cycles == 110);  // 15 + 31 + 64
  // S-stationarity: one register write per computed entry.
  CHECK(res.stats.psum_writebacks == 16ull * 32);
  // K sets are read once per column and feature, independent of kept Q rows.
  CHECK(res.stats.activation_reads == (32ull + 16ull) * dh * 1);
}

TEST_CASE("attention core: compounding keeps 2% of AAC work") {
  SplitMix64 rng(173);
  const std::uint32_t dh = 8;
  SpikeTensor q = test::random_spikes(rng, 1, 10, dh, 0.5);
  SpikeTensor k = test::random_spikes(rng, 1, 10, dh, 0.5);
  PruneMask all = PruneMask::keep_all({1, 1}, 10, 1);
  auto baseline = simulate_mode1(q, k, all, AttnCoreConfig{}, MemConfig{}, nullptr);

  PruneMask pruned = all;
  for (std::uint32_t r = 0; r < 10; ++r) {
    pruned.keep_q[r] = (r < 2) ? 1 : 0;  // 20%
    pruned.keep_k[r] = (r < 1) ? 1 : 0;  // 10%
  }
  auto res = simulate_mode1(q, k, pruned, AttnCoreConfig{}, MemConfig{}, nullptr);
  CHECK(res.stats.mac_equivalents * 50 == baseline.stats.mac_equivalents);

  PruneMask none = all;
  std::fill(none.keep_q.begin(), none.keep_q.end(), 0);
  auto zero = simulate_mode1(q, k, none, AttnCoreConfig{}, MemConfig{}, nullptr);
  CHECK(zero.stats.mac_equivalents == 0);
  CHECK(zero.stats.cycles == 0);
}

TEST_CASE("attention core mode 2: identity scores return V on kept rows") {
  const std::uint32_t N = 6, dh = 4;
  SplitMix64 rng(179);
  SpikeTensor v = test::random_spikes(rng, 1, N, dh, 0.5);
  IntTensor s(1, N, N);
  for (std::uint32_t n = 0; n < N; ++n) s.at(0, n, n) = 1;
  PruneMask mask = PruneMask::keep_all({1, 1}, N, 1);
  mask.keep_q[4] = 0;

  auto res = simulate_mode2(s, v, mask, 0, AttnCoreConfig{}, MemConfig{}, nullptr);
  for (std::uint32_t n = 0; n < N; ++n) {
    for (std::uint32_t j = 0; j < dh; ++j) {
      const std::int32_t expect = (n != 4 && v.get(0, n, j)) ? 1 : 0;
      CHECK(res.out.at(0, n, j) == expect);
    }
  }
}

TEST_CASE("attention core mode 2: the shifter floors each S value at readout") {
  const std::uint32_t N = 4, dh = 2;
  IntTensor s(1, N, N);
  SplitMix64 rng(181);
  for (auto& v : s.v) v = static_cast<std::int32_t>(rng.next_below(40));
  SpikeTensor v(1, N, dh);
  for (std::uint32_t m = 0; m < N; ++m) {
    for (std::uint32_t j = 0; j < dh; ++j) {
      if (rng.next_unit() < 0.6) v.set(0, m, j, true);
    }
  }
  PruneMask mask = PruneMask::keep_all({1, 1}, N, 1);
  auto res = simulate_mode2(s, v, mask, 3, AttnCoreConfig{}, MemConfig{}, nullptr);
  for (std::uint32_t n = 0; n < N; ++n) {
    for (std::uint32_t j = 0; j < dh; ++j) {
      std::int32_t acc = 0;
      for (std::uint32_t m = 0; m < N; ++m) {
        acc += (s.at(0, n, m) / 8) * (v.get(0, m, j) ? 1 : 0);
      }
      CHECK(res.out.at(0, n, j) == acc);
    }
  }
}

TEST_CASE("attention core agrees with pruned_attention end to end") {
  SplitMix64 rng(191);
  for (int it = 0; it < 10; ++it) {
    const std::uint32_t T = 1 + static_cast<std::uint32_t>(rng.next_below(4));
    const std::uint32_t N = 2 + static_cast<std::uint32_t>(rng.next_below(10));
    const std::uint32_t dh = 2 + static_cast<std::uint32_t>(rng.next_below(12));
    const BundleShape shape{1 + static_cast<std::uint32_t>(rng.next_below(3)),
                            1 + static_cast<std::uint32_t>(rng.next_below(3))};
    const std::uint32_t s_shift = static_cast<std::uint32_t>(rng.next_below(3));
    SpikeTensor q = test::random_spikes(rng, T, N, dh, 0.3);
    SpikeTensor k = test::random_spikes(rng, T, N, dh, 0.3);
    SpikeTensor v = test::random_spikes(rng, T, N, dh, 0.4);
    PruneMask mask = ecp_prune(pack_ttb(q, shape), pack_ttb(k, shape),
                               {1 + static_cast<std::uint32_t>(rng.next_below(3)),
                                1 + static_cast<std::uint32_t>(rng.next_below(3))});
    PrunedAttention gold = pruned_attention(q, k, v, mask, s_shift);
    AttnCoreConfig cfg;
    MemConfig mem;
    auto m1 = simulate_mode1(q, k, mask, cfg, mem, nullptr);
    CHECK(m1.out == gold.s);
    auto m2 = simulate_mode2(m1.out, v, mask, s_shift, cfg, mem, nullptr);
    CHECK(m2.out == gold.y);
  }
}

TEST_CASE("attention core config validation") {
  AttnCoreConfig cfg;
  cfg.s_bits = 5;
  CHECK_THROWS_AS(cfg.validate(64), ConfigError);
  cfg.s_bits = 8;
  CHECK_THROWS_AS(cfg.validate(256), ConfigError);  // head dim would saturate S
  CHECK_NOTHROW(cfg.validate(255));
}
