#include <doctest.h>

#include <algorithm>
#include <vector>

#include "ttbsim/simulator.hpp"
#include "ttbsim/synth.hpp"
#include "test_util.hpp"

using namespace ttbsim;

namespace {

// A small model whose run finishes in milliseconds.
RunConfig tiny_config() {
  RunConfig cfg;
  cfg.model.blocks = 1;
  cfg.model.t = 3;
  cfg.model.n = 8;
  cfg.model.d = 8;
  cfg.model.heads = 2;
  cfg.model.s_shift = 1;
  cfg.model.mlp_ratio = 2;
  cfg.model.lif = LifBank::uniform(LifParams{12, 0, 0});
  cfg.bundle = {2, 2};
  cfg.strat = ThetaPolicy::fixed(1);
  cfg.synth.rate = 0.3;
  cfg.synth.cluster = 0.4;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("synth_workload honors rate extremes and determinism") {
  const BundleShape shape{2, 4};
  SpikeTensor zero = synth_workload(4, 8, 6, 0.0, 0.7, shape, 1);
  CHECK(zero.popcount() == 0);

  SpikeTensor ones0 = synth_workload(4, 8, 6, 1.0, 0.0, shape, 1);
  SpikeTensor ones1 = synth_workload(4, 8, 6, 1.0, 1.0, shape, 1);
  CHECK(ones0.popcount() == 4 * 8 * 6);
  CHECK(ones1.popcount() == 4 * 8 * 6);

  SpikeTensor a = synth_workload(5, 9, 7, 0.3, 0.5, shape, 99);
  SpikeTensor b = synth_workload(5, 9, 7, 0.3, 0.5, shape, 99);
  CHECK(a == b);
  SpikeTensor c = synth_workload(5, 9, 7, 0.3, 0.5, shape, 100);
  CHECK(!(a == c));
}

TEST_CASE("synth_workload density tracks the requested rate") {
  const BundleShape shape{2, 4};
  for (double cluster : {0.0, 0.5, 1.0}) {
    SpikeTensor x = synth_workload(8, 32, 32, 0.2, cluster, shape, 7);
    const double density = static_cast<double>(x.popcount()) / x.bit_count();
    CHECK(density == doctest::Approx(0.2).epsilon(0.15));
  }
}

TEST_CASE("clustering strictly lowers the active-bundle fraction") {
  const BundleShape shape{2, 4};  // volume 8
  std::uint64_t active_indep = 0, active_clustered = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SpikeTensor xi = synth_workload(8, 32, 16, 0.1, 0.0, shape, seed);
    SpikeTensor xc = synth_workload(8, 32, 16, 0.1, 1.0, shape, seed);
    active_indep += pack_ttb(xi, shape).active_bundles();
    active_clustered += pack_ttb(xc, shape).active_bundles();
  }
  CHECK(active_clustered < active_indep);
}

TEST_CASE("config json round trip and rejection of unknown keys") {
  RunConfig cfg = tiny_config();
  const nlohmann::json j = cfg.to_json();
  RunConfig back = RunConfig::from_json(j);
  CHECK(back.to_json().dump() == j.dump());
  CHECK(back.hash() == cfg.hash());

  nlohmann::json bad = j;
  bad["mystery"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigError);

  nlohmann::json bad_energy = j;
  bad_energy["mem"]["energy_table"]["made_up_kind"] = 1.0;
  CHECK_THROWS_AS(RunConfig::from_json(bad_energy), ConfigError);
}

TEST_CASE("bundle_shape_for_volume canonical map") {
  CHECK(bundle_shape_for_volume(2, 4) == BundleShape{1, 2});
  CHECK(bundle_shape_for_volume(4, 4) == BundleShape{2, 2});
  CHECK(bundle_shape_for_volume(8, 4) == BundleShape{2, 4});
  CHECK(bundle_shape_for_volume(14, 4) == BundleShape{2, 7});
  CHECK(bundle_shape_for_volume(20, 4) == BundleShape{2, 10});
  CHECK(bundle_shape_for_volume(8, 1) == BundleShape{1, 8});  // single time point
}

TEST_CASE("run completes with the oracle gate green and a coherent report") {
  RunConfig cfg = tiny_config();
  SimReport rep = run(cfg);
  CHECK(rep.layers.size() == 7);  // q, k, v projections, attention, o projection, two MLP layers
  CHECK(rep.totals.cycles > 0);
  CHECK(rep.totals.energy_pj > 0);
  CHECK(rep.totals.edp_pj_cycles ==
        doctest::Approx(rep.totals.energy_pj * static_cast<double>(rep.totals.cycles)));

  // End-to-end latency is the sum of the per-layer latencies.
  std::uint64_t sum = 0;
  for (const LayerReport& l : rep.layers) sum += l.latency_cycles;
  CHECK(rep.totals.cycles == sum);
}

TEST_CASE("report serialization round-trips losslessly") {
  RunConfig cfg = tiny_config();
  SimReport rep = run(cfg);
  const std::string dumped = rep.to_string();
  SimReport back = SimReport::from_json(nlohmann::json::parse(dumped));
  CHECK(back.to_string() == dumped);
}

TEST_CASE("identical config and seed give byte-identical reports") {
  RunConfig cfg = tiny_config();
  SimReport a = run(cfg);
  SimReport b = run(cfg);
  CHECK(a.to_string() == b.to_string());
}

TEST_CASE("dense_only mode leaves the sparse core silent") {
  RunConfig cfg = tiny_config();
  cfg.mode = SimMode::dense_only;
  SimReport rep = run(cfg);
  for (const LayerReport& l : rep.layers) {
    CHECK(l.sparse.cycles == 0);
    CHECK(l.sparse.mac_equivalents == 0);
    CHECK(l.n_sparse_features == 0);
  }
}

TEST_CASE("theta_s forcing an empty sparse set reproduces the dense_only report") {
  RunConfig cfg = tiny_config();
  // The high initial potential fires every neuron at t=0, so every feature
  // has an active bundle and theta_s = 0 sends everything dense.
  cfg.model.lif = LifBank::uniform(LifParams{1, 0, 10000});
  cfg.synth.rate = 0.9;
  cfg.strat = ThetaPolicy::fixed(0);
  cfg.ecp = {0, 0};
  SimReport het = run(cfg);
  for (const LayerReport& l : het.layers) {
    if (l.name.find("attn") == std::string::npos) {
      REQUIRE(l.n_sparse_features == 0);  // premise of the equivalence
    }
  }

  RunConfig dcfg = cfg;
  dcfg.mode = SimMode::dense_only;
  SimReport dense = run(dcfg);

  // Configs differ (the mode), so compare the physics: layers and totals.
  nlohmann::json ha = het.to_json();
  nlohmann::json hb = dense.to_json();
  CHECK(ha["layers"].dump() == hb["layers"].dump());
  CHECK(ha["totals"].dump() == hb["totals"].dump());
}

TEST_CASE("run accepts a pre-synthesized input and rejects shape mismatches") {
  RunConfig cfg = tiny_config();
  SpikeTensor x =
      synth_workload(cfg.model.t, cfg.model.n, cfg.model.d, 0.25, 0.5, cfg.bundle, 5);
  SimReport a = run(cfg, &x);
  SimReport b = run(cfg, &x);
  CHECK(a.to_string() == b.to_string());

  SpikeTensor wrong(1, 2, 3);
  CHECK_THROWS_AS(run(cfg, &wrong), ConfigError);
}

TEST_CASE("ecp pruning in the full pipeline keeps the oracle gate green") {
  RunConfig cfg = tiny_config();
  cfg.synth.rate = 0.15;
  cfg.synth.cluster = 0.8;
  cfg.ecp = {2, 2};
  SimReport rep = run(cfg);
  CHECK(rep.ecp.kept_q_fraction() <= 1.0);
  CHECK(rep.totals.cycles > 0);
}

TEST_CASE("sweep: per-point errors are recorded without stopping the sweep") {
  RunConfig cfg = tiny_config();
  // Volume 70000 overflows the 16-bit tag range and must fail cleanly.
  const double values[] = {4, 140000, 8};
  auto points = sweep(cfg, SweepParam::bundle_volume, values);
  REQUIRE(points.size() == 3);
  CHECK(points[0].ok);
  CHECK(!points[1].ok);
  CHECK(points[1].error.find("volume") != std::string::npos);
  CHECK(points[2].ok);

  CHECK_THROWS_AS(sweep(cfg, SweepParam::theta_s, {}), ConfigError);
}

TEST_CASE("theta_p sweep: kept fractions are non-increasing") {
  RunConfig cfg = tiny_config();
  cfg.synth.rate = 0.2;
  cfg.synth.cluster = 0.7;
  const double values[] = {0, 2, 4};
  auto points = sweep(cfg, SweepParam::theta_p, values);
  double prev_q = 1.1, prev_k = 1.1;
  for (const auto& p : points) {
    REQUIRE(p.ok);
    CHECK(p.report->ecp.kept_q_fraction() <= prev_q);
    CHECK(p.report->ecp.kept_k_fraction() <= prev_k);
    prev_q = p.report->ecp.kept_q_fraction();
    prev_k = p.report->ecp.kept_k_fraction();
  }
}

TEST_CASE("sweep results are invariant to execution order") {
  RunConfig cfg = tiny_config();
  const double forward[] = {0, 1, 3};
  const double backward[] = {3, 1, 0};
  auto a = sweep(cfg, SweepParam::theta_s, forward);
  auto b = sweep(cfg, SweepParam::theta_s, backward);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(a[i].ok);
    REQUIRE(b[2 - i].ok);
    CHECK(a[i].report->to_string() == b[2 - i].report->to_string());
  }
}

TEST_CASE("sweep_param_from_name maps the CLI names") {
  CHECK(sweep_param_from_name("theta_s") == SweepParam::theta_s);
  CHECK(sweep_param_from_name("bundle_volume") == SweepParam::bundle_volume);
  CHECK(sweep_param_from_name("theta_p") == SweepParam::theta_p);
  CHECK_THROWS_AS(sweep_param_from_name("nope"), ConfigError);
}
