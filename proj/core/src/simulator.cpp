#include "ttbsim/simulator.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "ttbsim/attention_core.hpp"
#include "ttbsim/dense_core.hpp"
#include "ttbsim/ecp.hpp"
#include "ttbsim/lif.hpp"
#include "ttbsim/reference_model.hpp"
#include "ttbsim/sparse_core.hpp"
#include "ttbsim/synth.hpp"

namespace ttbsim {

namespace {

using nlohmann::json;

BlockWeights synth_block_weights(const ModelConfig& m, std::uint64_t seed, std::uint32_t block) {
  auto fill = [&](IntMatrix& w, std::uint32_t rows, std::uint32_t cols, const char* role) {
    w = IntMatrix(rows, cols);
    SplitMix64 rng(seed ^ fnv1a64(role) ^ (0x9e3779b97f4a7c15ull * (block + 1)));
    for (auto& v : w.v) v = rng.next_signed(m.weight_bits);
  };
  BlockWeights w;
  fill(w.w_q, m.d, m.d, "w_q");
  fill(w.w_k, m.d, m.d, "w_k");
  fill(w.w_v, m.d, m.d, "w_v");
  fill(w.w_o, m.d, m.d, "w_o");
  fill(w.w_mlp1, m.d, m.mlp_ratio * m.d, "w_mlp1");
  fill(w.w_mlp2, m.mlp_ratio * m.d, m.d, "w_mlp2");
  return w;
}

void check_equal(const IntTensor& got, const IntTensor& want, const std::string& what) {
  if (!got.same_shape(want)) {
    throw OracleMismatch(what + ": shape mismatch");
  }
  for (std::uint32_t t = 0; t < got.t; ++t) {
    for (std::uint32_t n = 0; n < got.n; ++n) {
      for (std::uint32_t d = 0; d < got.d; ++d) {
        if (got.at(t, n, d) != want.at(t, n, d)) {
          std::ostringstream os;
          os << what << ": first mismatch at (" << t << ", " << n << ", " << d << "): got "
             << got.at(t, n, d) << ", reference " << want.at(t, n, d);
          throw OracleMismatch(os.str());
        }
      }
    }
  }
}

void check_equal(const SpikeTensor& got, const SpikeTensor& want, const std::string& what) {
  if (got.time_points() != want.time_points() || got.tokens() != want.tokens() ||
      got.features() != want.features()) {
    throw OracleMismatch(what + ": shape mismatch");
  }
  for (std::uint32_t t = 0; t < got.time_points(); ++t) {
    for (std::uint32_t n = 0; n < got.tokens(); ++n) {
      for (std::uint32_t d = 0; d < got.features(); ++d) {
        if (got.get(t, n, d) != want.get(t, n, d)) {
          std::ostringstream os;
          os << what << ": first mismatch at (" << t << ", " << n << ", " << d << "): got "
             << int(got.get(t, n, d)) << ", reference " << int(want.get(t, n, d));
          throw OracleMismatch(os.str());
        }
      }
    }
  }
}

IntTensor spikes_as_current(const SpikeTensor& x) {
  IntTensor out(x.time_points(), x.tokens(), x.features());
  for (std::uint32_t t = 0; t < x.time_points(); ++t) {
    for (std::uint32_t n = 0; n < x.tokens(); ++n) {
      for (std::uint32_t d = 0; d < x.features(); ++d) {
        out.at(t, n, d) = x.get(t, n, d) ? 1 : 0;
      }
    }
  }
  return out;
}

// Direct Q.K^T, independent of both the attention core and pruned_attention.
IntTensor naive_full_scores(const SpikeTensor& q, const SpikeTensor& k) {
  const std::uint32_t T = q.time_points(), N = q.tokens(), dh = q.features();
  IntTensor s(T, N, N);
  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t n = 0; n < N; ++n) {
      for (std::uint32_t m = 0; m < N; ++m) {
        std::int32_t acc = 0;
        for (std::uint32_t j = 0; j < dh; ++j) {
          acc += (q.get(t, n, j) && k.get(t, m, j)) ? 1 : 0;
        }
        s.at(t, n, m) = acc;
      }
    }
  }
  return s;
}

struct BspAccum {
  std::uint64_t l_bsp = 0;
  std::uint64_t bundles = 0;
  std::uint64_t active = 0;
  std::uint64_t features = 0;
  std::uint64_t dead = 0;

  void add(const TTBGrid& g) {
    l_bsp += g.tag_total();
    bundles += g.bundle_count();
    active += g.active_bundles();
    features += g.features();
    for (std::uint32_t d = 0; d < g.features(); ++d) {
      if (g.feature_active_bundles(d) == 0) ++dead;
    }
  }
};

// Spike bits of the active bundles only; inactive bundles are skipped by the
// tag-directed transfers.
std::uint64_t active_bundle_bits(const TTBGrid& g) {
  return g.active_bundles() * g.shape().volume();
}

std::uint64_t bits_to_bytes(std::uint64_t bits) { return (bits + 7) / 8; }

struct CorePipe {
  std::uint64_t latency = 0;
  std::uint64_t read_bytes = 0;
  std::uint64_t act_read_bytes = 0;
};

// Weights stay resident per weight tile; activations are re-streamed for each
// weight tile when they do not fit their partition in one piece.
CorePipe core_layer_pipeline(std::uint64_t core_cycles, std::uint64_t weight_bytes,
                             std::uint64_t weight_tiles, std::uint64_t act_bytes,
                             std::uint64_t act_tiles, const MemConfig& mem) {
  CorePipe out;
  if (core_cycles == 0 && weight_bytes == 0 && act_bytes == 0) return out;
  weight_tiles = std::max<std::uint64_t>(1, weight_tiles);
  act_tiles = std::max<std::uint64_t>(1, act_tiles);
  const std::uint64_t n_macro = weight_tiles * act_tiles;
  std::vector<std::uint64_t> computes(n_macro, core_cycles / n_macro);
  for (std::uint64_t i = 0; i < core_cycles % n_macro; ++i) ++computes[i];
  std::vector<std::uint64_t> transfers(n_macro, 0);
  auto share = [](std::uint64_t total, std::uint64_t parts, std::uint64_t idx) {
    return total / parts + (idx < total % parts ? 1 : 0);
  };
  std::uint64_t m = 0;
  for (std::uint64_t iw = 0; iw < weight_tiles; ++iw) {
    for (std::uint64_t ia = 0; ia < act_tiles; ++ia, ++m) {
      std::uint64_t bytes = (ia == 0) ? share(weight_bytes, weight_tiles, iw) : 0;
      if (act_tiles > 1 || iw == 0) {
        const std::uint64_t act = share(act_bytes, act_tiles, ia);
        bytes += act;
        out.act_read_bytes += act;
      }
      transfers[m] = mem.dram_cycles(bytes);
      out.read_bytes += bytes;
    }
  }
  out.latency = pipeline_latency(computes, transfers);
  return out;
}

struct RunCtx {
  const RunConfig& cfg;
  MemEventLog& mem;
  SimReport& rep;
  BspAccum bsp;
  EcpSummary ecp;
  double compute_energy_pj = 0.0;
};

struct ProjResult {
  SpikeTensor spikes;
};

// One projection-style layer (Q/K/V/O projections and both MLP layers):
// stratify, run both cores, check the partial sums and the fired spikes
// against the golden path, and account latency, traffic and energy.
ProjResult simulate_projection_layer(RunCtx& ctx, const std::string& name, std::uint32_t block,
                                     const SpikeTensor& input, const IntMatrix& w,
                                     const LifParams& lifp, const IntTensor* residual,
                                     bool count_bsp) {
  const RunConfig& cfg = ctx.cfg;
  const std::uint32_t T = input.time_points();
  const std::uint32_t N = input.tokens();
  const std::uint32_t d_in = input.features();
  const std::uint32_t d_out = w.cols;
  const std::uint32_t vol = cfg.bundle.volume();
  const bool dense_only = cfg.mode == SimMode::dense_only;
  const std::uint32_t weight_bytes_per = (cfg.model.weight_bits + 7) / 8;

  const TTBGrid grid = pack_ttb(input, cfg.bundle);
  if (count_bsp) ctx.bsp.add(grid);
  const std::uint64_t bundle_rows = grid.row_count();

  LayerReport layer;
  layer.name = name;
  layer.block = block;
  const double mem_pj_before = ctx.mem.total_energy_pj();

  // The stratifier unit scans every tag in both modes; in dense_only mode its
  // outcome is forced to the dense side.
  Stratification strat;
  if (dense_only) {
    strat.theta_s = 0;
    strat.dense_features.resize(d_in);
    std::iota(strat.dense_features.begin(), strat.dense_features.end(), 0u);
    strat.x_dense = input;
    strat.w_dense = w;
  } else {
    const DenseWorkEstimator dense_est = [&](std::uint32_t n_dense) {
      return cfg.dense.work_estimate(bundle_rows, vol, n_dense, d_out);
    };
    const SparseWorkEstimator sparse_est = [&](std::uint64_t items, std::uint64_t spikes) {
      return cfg.sparse.work_estimate(items, spikes, d_out);
    };
    const std::uint32_t theta = choose_theta_s(grid, cfg.strat, dense_est, sparse_est);
    strat = stratify(grid, w, theta);
  }
  layer.stratifier_cycles =
      (grid.bundle_count() + cfg.stratifier_unit.comparators - 1) / cfg.stratifier_unit.comparators;
  ctx.mem.record_event(MemEvent::reg_access, grid.bundle_count());
  layer.theta_s = strat.theta_s;
  layer.n_dense_features = static_cast<std::uint32_t>(strat.dense_features.size());
  layer.n_sparse_features = static_cast<std::uint32_t>(strat.sparse_features.size());

  auto dres = simulate_dense(strat.has_dense() ? &strat.x_dense : nullptr, cfg.bundle,
                             strat.w_dense, T, N, d_out, cfg.model.weight_bits, cfg.dense,
                             cfg.mem, &ctx.mem);
  auto sres = simulate_sparse(strat.has_sparse() ? &strat.x_sparse : nullptr, cfg.bundle,
                              strat.w_sparse, T, N, d_out, cfg.model.weight_bits, cfg.sparse,
                              cfg.mem, &ctx.mem);
  layer.dense = dres.stats;
  layer.sparse = sres.stats;

  // Functional gate: the two partitions' psums plus the residual must equal
  // the golden projection exactly, and the fired spikes must match.
  IntTensor golden = linear_project(input, w);
  if (residual) golden = add(golden, *residual);
  const IntTensor dense_side = residual ? add(dres.psum, *residual) : std::move(dres.psum);
  check_equal(add(dense_side, sres.psum), golden, name + " partial sums");
  SpikeTensor spikes = merge_and_fire(dense_side, sres.psum, lifp);
  check_equal(spikes, lif_layer(golden, lifp), name + " spike output");

  // Spike generator cost and events.
  const std::uint64_t neurons = static_cast<std::uint64_t>(N) * d_out;
  layer.spikegen_cycles =
      static_cast<std::uint64_t>(T) * ((neurons + cfg.spikegen.parallelism - 1) / cfg.spikegen.parallelism);
  const std::uint64_t lif_updates = static_cast<std::uint64_t>(T) * neurons;
  const std::uint32_t psum_sources =
      (strat.has_dense() ? 1 : 0) + (strat.has_sparse() ? 1 : 0);
  ctx.mem.record_event(MemEvent::psum_buf_read,
                       std::max<std::uint32_t>(1, psum_sources) * lif_updates);
  const double spikegen_pj = cfg.spikegen.e_lif * static_cast<double>(lif_updates);

  // DRAM pipelines per core. Dense features stream whole bundles; the sparse
  // partition moves only active bundles. GLB partitions split equally among
  // the data types actually resident.
  const bool both_partitions = strat.has_dense() && strat.has_sparse();
  const std::uint64_t weight_share =
      both_partitions ? cfg.mem.weight_partition_bytes() / 2 : cfg.mem.weight_partition_bytes();
  const std::uint64_t act_share = cfg.mem.ttb_partition_bytes(both_partitions ? 2 : 1);

  CorePipe dense_pipe, sparse_pipe;
  if (strat.has_dense()) {
    const std::uint32_t nd = static_cast<std::uint32_t>(strat.dense_features.size());
    const TensorFootprint feet[] = {
        {name + ".dense_weights", static_cast<std::uint64_t>(nd) * weight_bytes_per, d_out,
         weight_share},
        {name + ".dense_acts", bits_to_bytes(static_cast<std::uint64_t>(vol) * nd), bundle_rows,
         act_share}};
    const TilePlan plan = plan_tiles(feet);
    dense_pipe = core_layer_pipeline(dres.stats.cycles, plan.entries[0].total_bytes,
                                     plan.entries[0].tiles, plan.entries[1].total_bytes,
                                     plan.entries[1].tiles, cfg.mem);
  }
  if (strat.has_sparse()) {
    const std::uint32_t ns = static_cast<std::uint32_t>(strat.sparse_features.size());
    const TensorFootprint feet[] = {
        {name + ".sparse_weights", static_cast<std::uint64_t>(d_out) * weight_bytes_per, ns,
         weight_share},
        {name + ".sparse_acts", bits_to_bytes(static_cast<std::uint64_t>(vol) * ns), bundle_rows,
         act_share}};
    const TilePlan plan = plan_tiles(feet);
    const TTBGrid sparse_grid = pack_ttb(strat.x_sparse, cfg.bundle);
    const std::uint64_t sparse_act_bytes = bits_to_bytes(active_bundle_bits(sparse_grid));
    sparse_pipe = core_layer_pipeline(sres.stats.cycles, plan.entries[0].total_bytes,
                                      plan.entries[0].tiles, sparse_act_bytes,
                                      plan.entries[1].tiles, cfg.mem);
  }
  ctx.mem.record_event(MemEvent::dram_read_byte, dense_pipe.read_bytes + sparse_pipe.read_bytes);
  const std::uint64_t weight_fill_bytes = (dense_pipe.read_bytes - dense_pipe.act_read_bytes) +
                                          (sparse_pipe.read_bytes - sparse_pipe.act_read_bytes);
  ctx.mem.record_event(MemEvent::weight_glb_write_word,
                       (weight_fill_bytes * 8 + cfg.mem.weight_port_bits - 1) / cfg.mem.weight_port_bits);
  const std::uint64_t act_fill_bytes = dense_pipe.act_read_bytes + sparse_pipe.act_read_bytes;
  ctx.mem.record_event(MemEvent::ttb_glb_write_word,
                       (act_fill_bytes * 8 + cfg.mem.ttb_word_bits - 1) / cfg.mem.ttb_word_bits);

  // Output spikes leave through the TTB GLB at bundle granularity.
  const TTBGrid out_grid = pack_ttb(spikes, cfg.bundle);
  const std::uint64_t out_bytes = bits_to_bytes(active_bundle_bits(out_grid));
  ctx.mem.record_event(MemEvent::ttb_glb_write_word,
                       (active_bundle_bits(out_grid) + cfg.mem.ttb_word_bits - 1) / cfg.mem.ttb_word_bits);
  ctx.mem.record_event(MemEvent::dram_write_byte, out_bytes);

  layer.dram_read_bytes = dense_pipe.read_bytes + sparse_pipe.read_bytes;
  layer.dram_write_bytes = out_bytes;
  layer.activation_dram_bytes = dense_pipe.act_read_bytes + sparse_pipe.act_read_bytes + out_bytes;
  layer.latency_cycles = layer.stratifier_cycles +
                         std::max(dense_pipe.latency, sparse_pipe.latency) +
                         layer.spikegen_cycles;

  const double layer_compute = dres.stats.compute_energy_pj + sres.stats.compute_energy_pj +
                               spikegen_pj;
  ctx.compute_energy_pj += layer_compute;
  layer.energy_pj = layer_compute + (ctx.mem.total_energy_pj() - mem_pj_before);
  ctx.rep.layers.push_back(layer);
  return ProjResult{std::move(spikes)};
}

struct AttnResult {
  SpikeTensor o_temp;
  IntTensor y_all;
};

// The spiking self-attention layer of one block: per head, ECP pruning, the
// two attention-core modes, and the spike generator producing o_temp.
AttnResult simulate_attention_layer(RunCtx& ctx, const std::string& name, std::uint32_t block,
                                    const SpikeTensor& q, const SpikeTensor& k,
                                    const SpikeTensor& v) {
  const RunConfig& cfg = ctx.cfg;
  const std::uint32_t T = q.time_points();
  const std::uint32_t N = q.tokens();
  const std::uint32_t dh = cfg.model.head_dim();
  const std::uint32_t vol = cfg.bundle.volume();

  LayerReport layer;
  layer.name = name;
  layer.block = block;
  const double mem_pj_before = ctx.mem.total_energy_pj();

  IntTensor y_all(T, N, cfg.model.d);
  std::vector<std::uint64_t> head_computes;
  std::vector<std::uint64_t> head_transfers;
  std::uint64_t attn_read_bytes = 0;
  std::uint64_t kept_q = 0, kept_k = 0, rows_total = 0;

  std::vector<std::uint32_t> head_cols(dh);
  for (std::uint32_t h = 0; h < cfg.model.heads; ++h) {
    for (std::uint32_t j = 0; j < dh; ++j) head_cols[j] = h * dh + j;
    const SpikeTensor q_h = q.select_features(head_cols);
    const SpikeTensor k_h = k.select_features(head_cols);
    const SpikeTensor v_h = v.select_features(head_cols);
    const TTBGrid qg = pack_ttb(q_h, cfg.bundle);
    const TTBGrid kg = pack_ttb(k_h, cfg.bundle);
    const TTBGrid vg = pack_ttb(v_h, cfg.bundle);
    ctx.bsp.add(qg);
    ctx.bsp.add(kg);
    if (cfg.bsp_includes_v) ctx.bsp.add(vg);

    const PruneMask mask = ecp_prune(qg, kg, cfg.ecp);
    kept_q += mask.kept_q_rows();
    kept_k += mask.kept_k_rows();
    rows_total += mask.row_count();

    // Soundness gate on the full scores; a bound violation is a hard failure.
    const IntTensor full_s = naive_full_scores(q_h, k_h);
    const ErrorBoundReport bound = error_bound_check(full_s, mask, cfg.ecp);
    if (!bound.ok) {
      std::ostringstream os;
      os << name << " head " << h << ": pruning error bound violated (max pruned Q score "
         << bound.max_pruned_q << " vs theta_q " << cfg.ecp.theta_q << ", max pruned K score "
         << bound.max_pruned_k << " vs theta_k " << cfg.ecp.theta_k << ")";
      throw OracleMismatch(os.str());
    }

    const PrunedAttention gold = pruned_attention(q_h, k_h, v_h, mask, cfg.model.s_shift);
    auto m1 = simulate_mode1(q_h, k_h, mask, cfg.attn, cfg.mem, &ctx.mem);
    check_equal(m1.out, gold.s, name + " scores");
    auto m2 = simulate_mode2(m1.out, v_h, mask, cfg.model.s_shift, cfg.attn, cfg.mem, &ctx.mem);
    check_equal(m2.out, gold.y, name + " outputs");
    layer.mode1.merge(m1.stats);
    layer.mode2.merge(m2.stats);

    for (std::uint32_t t = 0; t < T; ++t) {
      for (std::uint32_t n = 0; n < N; ++n) {
        for (std::uint32_t j = 0; j < dh; ++j) {
          y_all.at(t, n, h * dh + j) = m2.out.at(t, n, j);
        }
      }
    }

    // Kept rows fit the Q/K/V/Y quarters of the TTB GLB; one bundle row of a
    // head is the indivisible unit.
    const std::uint64_t row_bytes = bits_to_bytes(static_cast<std::uint64_t>(vol) * dh);
    const std::uint64_t quarter = cfg.mem.ttb_partition_bytes(4);
    const TensorFootprint feet[] = {
        {name + ".q_rows", row_bytes, std::max<std::uint64_t>(1, mask.kept_q_rows()), quarter},
        {name + ".k_rows", row_bytes, std::max<std::uint64_t>(1, mask.kept_k_rows()), quarter},
        {name + ".v_rows", row_bytes, std::max<std::uint64_t>(1, mask.kept_k_rows()), quarter}};
    (void)plan_tiles(feet);  // capacity validation

    // Tag-directed transfers: active bundles inside kept rows only.
    auto kept_active_bits = [&](const TTBGrid& g, const std::vector<std::uint8_t>& keep) {
      std::uint64_t bits = 0;
      for (std::uint32_t bn = 0; bn < g.bundles_n(); ++bn) {
        for (std::uint32_t bt = 0; bt < g.bundles_t(); ++bt) {
          if (!keep[static_cast<std::size_t>(bn) * g.bundles_t() + bt]) continue;
          for (std::uint32_t f = 0; f < g.features(); ++f) {
            if (g.tag(bn, bt, f) > 0) bits += vol;
          }
        }
      }
      return bits;
    };
    const std::uint64_t head_bytes =
        bits_to_bytes(kept_active_bits(qg, mask.keep_q) + kept_active_bits(kg, mask.keep_k) +
                      kept_active_bits(vg, mask.keep_k));
    attn_read_bytes += head_bytes;
    head_computes.push_back(m1.stats.cycles + m2.stats.cycles);
    head_transfers.push_back(cfg.mem.dram_cycles(head_bytes));
  }

  ctx.mem.record_event(MemEvent::dram_read_byte, attn_read_bytes);
  ctx.mem.record_event(MemEvent::ttb_glb_write_word,
                       (attn_read_bytes * 8 + cfg.mem.ttb_word_bits - 1) / cfg.mem.ttb_word_bits);

  layer.kept_q_fraction = rows_total ? static_cast<double>(kept_q) / rows_total : 1.0;
  layer.kept_k_fraction = rows_total ? static_cast<double>(kept_k) / rows_total : 1.0;
  ctx.ecp.total_q_rows += rows_total;
  ctx.ecp.kept_q_rows += kept_q;
  ctx.ecp.total_k_rows += rows_total;
  ctx.ecp.kept_k_rows += kept_k;

  // Spike generation over the concatenated heads (Eq.-form: one LIF layer
  // before the output projection).
  const IntTensor no_sparse(T, N, cfg.model.d);
  SpikeTensor o_temp = merge_and_fire(y_all, no_sparse, cfg.model.lif.otemp);
  check_equal(o_temp, lif_layer(y_all, cfg.model.lif.otemp), name + " o_temp");
  const std::uint64_t neurons = static_cast<std::uint64_t>(N) * cfg.model.d;
  layer.spikegen_cycles =
      static_cast<std::uint64_t>(T) * ((neurons + cfg.spikegen.parallelism - 1) / cfg.spikegen.parallelism);
  const std::uint64_t lif_updates = static_cast<std::uint64_t>(T) * neurons;
  ctx.mem.record_event(MemEvent::psum_buf_read, lif_updates);
  const double spikegen_pj = cfg.spikegen.e_lif * static_cast<double>(lif_updates);

  const TTBGrid out_grid = pack_ttb(o_temp, cfg.bundle);
  const std::uint64_t out_bytes = bits_to_bytes(active_bundle_bits(out_grid));
  ctx.mem.record_event(MemEvent::ttb_glb_write_word,
                       (active_bundle_bits(out_grid) + cfg.mem.ttb_word_bits - 1) / cfg.mem.ttb_word_bits);
  ctx.mem.record_event(MemEvent::dram_write_byte, out_bytes);

  layer.dram_read_bytes = attn_read_bytes;
  layer.dram_write_bytes = out_bytes;
  layer.activation_dram_bytes = attn_read_bytes + out_bytes;
  layer.latency_cycles = pipeline_latency(head_computes, head_transfers) + layer.spikegen_cycles;

  const double layer_compute =
      layer.mode1.compute_energy_pj + layer.mode2.compute_energy_pj + spikegen_pj;
  ctx.compute_energy_pj += layer_compute;
  layer.energy_pj = layer_compute + (ctx.mem.total_energy_pj() - mem_pj_before);
  ctx.rep.layers.push_back(layer);
  return AttnResult{std::move(o_temp), std::move(y_all)};
}

json core_stats_json(const CoreStats& s) {
  return json{{"cycles", s.cycles},
              {"mac_equivalents", s.mac_equivalents},
              {"weight_glb_reads", s.weight_glb_reads},
              {"activation_reads", s.activation_reads},
              {"psum_writebacks", s.psum_writebacks},
              {"compute_energy_pj", s.compute_energy_pj}};
}

CoreStats core_stats_from_json(const json& j) {
  CoreStats s;
  j.at("cycles").get_to(s.cycles);
  j.at("mac_equivalents").get_to(s.mac_equivalents);
  j.at("weight_glb_reads").get_to(s.weight_glb_reads);
  j.at("activation_reads").get_to(s.activation_reads);
  j.at("psum_writebacks").get_to(s.psum_writebacks);
  j.at("compute_energy_pj").get_to(s.compute_energy_pj);
  return s;
}

}  // namespace

SimReport run(const RunConfig& cfg, const SpikeTensor* input) {
  cfg.validate();

  SpikeTensor synthesized;
  if (input == nullptr) {
    synthesized = synth_workload(cfg.model.t, cfg.model.n, cfg.model.d, cfg.synth.rate,
                                 cfg.synth.cluster, cfg.bundle, cfg.seed);
    input = &synthesized;
  } else if (input->time_points() != cfg.model.t || input->tokens() != cfg.model.n ||
             input->features() != cfg.model.d) {
    throw ConfigError("run: input tensor shape does not match model config");
  }

  MemEventLog mem(cfg.mem.energy);
  SimReport rep;
  rep.config = cfg.to_json();
  rep.config_hash = cfg.hash();
  rep.mode = cfg.mode == SimMode::heterogeneous ? "heterogeneous" : "dense_only";
  const FlopsBreakdown fb = flops_breakdown(cfg.model);
  rep.flops = json{{"projection_macs", fb.projection_macs},
                   {"mlp_macs", fb.mlp_macs},
                   {"attention_macs", fb.attention_macs},
                   {"lif_updates", fb.lif_updates},
                   {"projection_fraction", fb.projection_fraction()},
                   {"mlp_fraction", fb.mlp_fraction()},
                   {"attention_fraction", fb.attention_fraction()}};

  RunCtx ctx{cfg, mem, rep};

  const bool unpruned = cfg.ecp.theta_q == 0 && cfg.ecp.theta_k == 0;
  SpikeTensor x = *input;
  for (std::uint32_t b = 0; b < cfg.model.blocks; ++b) {
    const BlockWeights w = synth_block_weights(cfg.model, cfg.seed, b);
    const std::string prefix = "b" + std::to_string(b) + ".";

    auto qp = simulate_projection_layer(ctx, prefix + "proj_q", b, x, w.w_q, cfg.model.lif.q,
                                        nullptr, /*count_bsp=*/true);
    auto kp = simulate_projection_layer(ctx, prefix + "proj_k", b, x, w.w_k, cfg.model.lif.k,
                                        nullptr, /*count_bsp=*/false);
    auto vp = simulate_projection_layer(ctx, prefix + "proj_v", b, x, w.w_v, cfg.model.lif.v,
                                        nullptr, /*count_bsp=*/false);

    auto attn = simulate_attention_layer(ctx, prefix + "attn", b, qp.spikes, kp.spikes, vp.spikes);

    const IntTensor x_current = spikes_as_current(x);
    auto op = simulate_projection_layer(ctx, prefix + "proj_o", b, attn.o_temp, w.w_o,
                                        cfg.model.lif.attn_out, &x_current, /*count_bsp=*/true);
    const SpikeTensor& x_attn = op.spikes;

    auto m1 = simulate_projection_layer(ctx, prefix + "mlp1", b, x_attn, w.w_mlp1,
                                        cfg.model.lif.mlp_hidden, nullptr, /*count_bsp=*/true);
    const IntTensor x_attn_current = spikes_as_current(x_attn);
    auto m2 = simulate_projection_layer(ctx, prefix + "mlp2", b, m1.spikes, w.w_mlp2,
                                        cfg.model.lif.mlp_out, &x_attn_current,
                                        /*count_bsp=*/true);

    if (unpruned) {
      // With pruning disabled the composed pipeline must reproduce the
      // one-shot reference block bit-exactly.
      const BlockTrace ref = block_forward(x, w, cfg.model);
      check_equal(attn.o_temp, ref.ssa.o_temp, prefix + "o_temp vs reference block");
      check_equal(x_attn, ref.x_attn, prefix + "x_attn vs reference block");
      check_equal(m2.spikes, ref.x_out, prefix + "x_out vs reference block");
    }
    x = m2.spikes;
  }

  // Aggregate totals.
  SimTotals& tot = rep.totals;
  for (const LayerReport& l : rep.layers) {
    tot.cycles += l.latency_cycles;
    tot.dram_read_bytes += l.dram_read_bytes;
    tot.dram_write_bytes += l.dram_write_bytes;
    tot.activation_dram_bytes += l.activation_dram_bytes;
    tot.weight_glb_reads += l.dense.weight_glb_reads + l.sparse.weight_glb_reads;
  }
  tot.compute_energy_pj = ctx.compute_energy_pj;
  tot.mem_event_energy_pj = mem.total_energy_pj();
  tot.dram_static_energy_pj = cfg.mem.dram_static_pj_per_cycle() * static_cast<double>(tot.cycles);
  tot.energy_pj = tot.compute_energy_pj + tot.mem_event_energy_pj + tot.dram_static_energy_pj;
  tot.edp_pj_cycles = tot.energy_pj * static_cast<double>(tot.cycles);
  tot.latency_s = static_cast<double>(tot.cycles) / (cfg.mem.clock_ghz * 1e9);
  tot.energy_j = tot.energy_pj * 1e-12;
  tot.edp_js = tot.energy_j * tot.latency_s;

  for (std::size_t i = 0; i < kMemEventCount; ++i) {
    const auto kind = static_cast<MemEvent>(i);
    rep.mem_events.push_back(
        {std::string(mem_event_name(kind)), mem.count(kind), mem.energy_pj(kind)});
  }
  rep.ecp = ctx.ecp;
  rep.bsp.l_bsp = ctx.bsp.l_bsp;
  rep.bsp.lambda = cfg.lambda;
  rep.bsp.active_fraction =
      ctx.bsp.bundles ? static_cast<double>(ctx.bsp.active) / ctx.bsp.bundles : 0.0;
  rep.bsp.dead_feature_fraction =
      ctx.bsp.features ? static_cast<double>(ctx.bsp.dead) / ctx.bsp.features : 0.0;
  return rep;
}

json SimReport::to_json() const {
  json j;
  j["schema"] = schema;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["mode"] = mode;
  j["flops"] = flops;
  json jl = json::array();
  for (const LayerReport& l : layers) {
    jl.push_back(json{{"name", l.name},
                      {"block", l.block},
                      {"dense", core_stats_json(l.dense)},
                      {"sparse", core_stats_json(l.sparse)},
                      {"mode1", core_stats_json(l.mode1)},
                      {"mode2", core_stats_json(l.mode2)},
                      {"stratifier_cycles", l.stratifier_cycles},
                      {"spikegen_cycles", l.spikegen_cycles},
                      {"latency_cycles", l.latency_cycles},
                      {"dram_read_bytes", l.dram_read_bytes},
                      {"dram_write_bytes", l.dram_write_bytes},
                      {"activation_dram_bytes", l.activation_dram_bytes},
                      {"theta_s", l.theta_s},
                      {"n_dense_features", l.n_dense_features},
                      {"n_sparse_features", l.n_sparse_features},
                      {"kept_q_fraction", l.kept_q_fraction},
                      {"kept_k_fraction", l.kept_k_fraction},
                      {"energy_pj", l.energy_pj}});
  }
  j["layers"] = jl;
  json jm = json::array();
  for (const MemEventReport& e : mem_events) {
    jm.push_back(json{{"kind", e.kind}, {"count", e.count}, {"energy_pj", e.energy_pj}});
  }
  j["mem_events"] = jm;
  j["ecp_summary"] = json{{"total_q_rows", ecp.total_q_rows},
                          {"kept_q_rows", ecp.kept_q_rows},
                          {"total_k_rows", ecp.total_k_rows},
                          {"kept_k_rows", ecp.kept_k_rows},
                          {"kept_q_fraction", ecp.kept_q_fraction()},
                          {"kept_k_fraction", ecp.kept_k_fraction()}};
  j["bsp"] = json{{"l_bsp", bsp.l_bsp},
                  {"lambda", bsp.lambda},
                  {"active_fraction", bsp.active_fraction},
                  {"dead_feature_fraction", bsp.dead_feature_fraction}};
  j["totals"] = json{{"cycles", totals.cycles},
                     {"compute_energy_pj", totals.compute_energy_pj},
                     {"mem_event_energy_pj", totals.mem_event_energy_pj},
                     {"dram_static_energy_pj", totals.dram_static_energy_pj},
                     {"energy_pj", totals.energy_pj},
                     {"edp_pj_cycles", totals.edp_pj_cycles},
                     {"latency_s", totals.latency_s},
                     {"energy_j", totals.energy_j},
                     {"edp_js", totals.edp_js},
                     {"dram_read_bytes", totals.dram_read_bytes},
                     {"dram_write_bytes", totals.dram_write_bytes},
                     {"activation_dram_bytes", totals.activation_dram_bytes},
                     {"weight_glb_reads", totals.weight_glb_reads}};
  return j;
}

SimReport SimReport::from_json(const json& j) {
  SimReport r;
  j.at("schema").get_to(r.schema);
  j.at("config_hash").get_to(r.config_hash);
  r.config = j.at("config");
  j.at("mode").get_to(r.mode);
  r.flops = j.at("flops");
  for (const json& l : j.at("layers")) {
    LayerReport lr;
    l.at("name").get_to(lr.name);
    l.at("block").get_to(lr.block);
    lr.dense = core_stats_from_json(l.at("dense"));
    lr.sparse = core_stats_from_json(l.at("sparse"));
    lr.mode1 = core_stats_from_json(l.at("mode1"));
    lr.mode2 = core_stats_from_json(l.at("mode2"));
    l.at("stratifier_cycles").get_to(lr.stratifier_cycles);
    l.at("spikegen_cycles").get_to(lr.spikegen_cycles);
    l.at("latency_cycles").get_to(lr.latency_cycles);
    l.at("dram_read_bytes").get_to(lr.dram_read_bytes);
    l.at("dram_write_bytes").get_to(lr.dram_write_bytes);
    l.at("activation_dram_bytes").get_to(lr.activation_dram_bytes);
    l.at("theta_s").get_to(lr.theta_s);
    l.at("n_dense_features").get_to(lr.n_dense_features);
    l.at("n_sparse_features").get_to(lr.n_sparse_features);
    l.at("kept_q_fraction").get_to(lr.kept_q_fraction);
    l.at("kept_k_fraction").get_to(lr.kept_k_fraction);
    l.at("energy_pj").get_to(lr.energy_pj);
    r.layers.push_back(std::move(lr));
  }
  for (const json& e : j.at("mem_events")) {
    MemEventReport me;
    e.at("kind").get_to(me.kind);
    e.at("count").get_to(me.count);
    e.at("energy_pj").get_to(me.energy_pj);
    r.mem_events.push_back(std::move(me));
  }
  {
    const json& e = j.at("ecp_summary");
    e.at("total_q_rows").get_to(r.ecp.total_q_rows);
    e.at("kept_q_rows").get_to(r.ecp.kept_q_rows);
    e.at("total_k_rows").get_to(r.ecp.total_k_rows);
    e.at("kept_k_rows").get_to(r.ecp.kept_k_rows);
  }
  {
    const json& b = j.at("bsp");
    b.at("l_bsp").get_to(r.bsp.l_bsp);
    b.at("lambda").get_to(r.bsp.lambda);
    b.at("active_fraction").get_to(r.bsp.active_fraction);
    b.at("dead_feature_fraction").get_to(r.bsp.dead_feature_fraction);
  }
  {
    const json& t = j.at("totals");
    t.at("cycles").get_to(r.totals.cycles);
    t.at("compute_energy_pj").get_to(r.totals.compute_energy_pj);
    t.at("mem_event_energy_pj").get_to(r.totals.mem_event_energy_pj);
    t.at("dram_static_energy_pj").get_to(r.totals.dram_static_energy_pj);
    t.at("energy_pj").get_to(r.totals.energy_pj);
    t.at("edp_pj_cycles").get_to(r.totals.edp_pj_cycles);
    t.at("latency_s").get_to(r.totals.latency_s);
    t.at("energy_j").get_to(r.totals.energy_j);
    t.at("edp_js").get_to(r.totals.edp_js);
    t.at("dram_read_bytes").get_to(r.totals.dram_read_bytes);
    t.at("dram_write_bytes").get_to(r.totals.dram_write_bytes);
    t.at("activation_dram_bytes").get_to(r.totals.activation_dram_bytes);
    t.at("weight_glb_reads").get_to(r.totals.weight_glb_reads);
  }
  return r;
}

std::string SimReport::to_string() const { return to_json().dump(2); }

SweepParam sweep_param_from_name(const std::string& name) {
  if (name == "theta_s") return SweepParam::theta_s;
  if (name == "bundle_volume") return SweepParam::bundle_volume;
  if (name == "theta_p") return SweepParam::theta_p;
  throw ConfigError("sweep: unknown parameter '" + name +
                    "' (expected theta_s, bundle_volume or theta_p)");
}

std::vector<SweepPoint> sweep(const RunConfig& base, SweepParam param,
                              std::span<const double> values, const SpikeTensor* input) {
  if (values.empty()) throw ConfigError("sweep: values must be non-empty");
  SpikeTensor synthesized;
  if (input == nullptr) {
    synthesized = synth_workload(base.model.t, base.model.n, base.model.d, base.synth.rate,
                                 base.synth.cluster, base.bundle, base.seed);
    input = &synthesized;
  }
  std::vector<SweepPoint> points;
  points.reserve(values.size());
  for (double v : values) {
    SweepPoint pt;
    pt.value = v;
    RunConfig c = base;
    switch (param) {
      case SweepParam::theta_s:
        c.strat = ThetaPolicy::fixed(static_cast<std::uint32_t>(v));
        break;
      case SweepParam::bundle_volume:
        c.bundle = bundle_shape_for_volume(static_cast<std::uint32_t>(v), c.model.t);
        break;
      case SweepParam::theta_p:
        c.ecp.theta_q = static_cast<std::uint32_t>(v);
        c.ecp.theta_k = static_cast<std::uint32_t>(v);
        break;
    }
    try {
      pt.report = run(c, input);
      pt.ok = true;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    points.push_back(std::move(pt));
  }
  return points;
}

json sweep_table_json(SweepParam param, const std::vector<SweepPoint>& points) {
  const char* pname = param == SweepParam::theta_s       ? "theta_s"
                      : param == SweepParam::bundle_volume ? "bundle_volume"
                                                           : "theta_p";
  json rows = json::array();
  for (const SweepPoint& p : points) {
    json row{{"value", p.value}, {"ok", p.ok}};
    if (p.ok) {
      row["latency_cycles"] = p.report->totals.cycles;
      row["energy_pj"] = p.report->totals.energy_pj;
      row["edp_pj_cycles"] = p.report->totals.edp_pj_cycles;
      row["kept_q_fraction"] = p.report->ecp.kept_q_fraction();
      row["kept_k_fraction"] = p.report->ecp.kept_k_fraction();
      row["weight_glb_reads"] = p.report->totals.weight_glb_reads;
      row["activation_dram_bytes"] = p.report->totals.activation_dram_bytes;
    } else {
      row["error"] = p.error;
    }
    rows.push_back(std::move(row));
  }
  return json{{"parameter", pname}, {"points", rows}};
}

}  // namespace ttbsim
