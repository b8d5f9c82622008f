#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttbsim/config.hpp"
#include "ttbsim/core_stats.hpp"
#include "ttbsim/spike_tensor.hpp"

namespace ttbsim {

// Per-layer slice of the run report.
struct LayerReport {
  std::string name;
  std::uint32_t block = 0;
  CoreStats dense, sparse;      // projection/MLP layers
  CoreStats mode1, mode2;       // attention layers
  std::uint64_t stratifier_cycles = 0;
  std::uint64_t spikegen_cycles = 0;
  std::uint64_t latency_cycles = 0;
  std::uint64_t dram_read_bytes = 0;
  std::uint64_t dram_write_bytes = 0;
  std::uint64_t activation_dram_bytes = 0;  // spike-tensor bytes moved, both directions
  std::uint32_t theta_s = 0;
  std::uint32_t n_dense_features = 0;
  std::uint32_t n_sparse_features = 0;
  double kept_q_fraction = 1.0;
  double kept_k_fraction = 1.0;
  double energy_pj = 0.0;  // compute + spikegen + memory events attributed here
};

struct MemEventReport {
  std::string kind;
  std::uint64_t count = 0;
  double energy_pj = 0.0;
};

struct SimTotals {
  std::uint64_t cycles = 0;
  double compute_energy_pj = 0.0;
  double mem_event_energy_pj = 0.0;
  double dram_static_energy_pj = 0.0;
  double energy_pj = 0.0;
  double edp_pj_cycles = 0.0;
  double latency_s = 0.0;
  double energy_j = 0.0;
  double edp_js = 0.0;
  std::uint64_t dram_read_bytes = 0;
  std::uint64_t dram_write_bytes = 0;
  std::uint64_t activation_dram_bytes = 0;
  std::uint64_t weight_glb_reads = 0;  // weight elements across cores
};

struct EcpSummary {
  std::uint64_t total_q_rows = 0, kept_q_rows = 0;
  std::uint64_t total_k_rows = 0, kept_k_rows = 0;
  double kept_q_fraction() const {
    return total_q_rows ? static_cast<double>(kept_q_rows) / total_q_rows : 1.0;
  }
  double kept_k_fraction() const {
    return total_k_rows ? static_cast<double>(kept_k_rows) / total_k_rows : 1.0;
  }
};

struct BspSummary {
  std::uint64_t l_bsp = 0;
  double lambda = 0.0;
  double active_fraction = 0.0;
  double dead_feature_fraction = 0.0;
};

struct SimReport {
  std::string schema = "ttbsim-report-v1";
  std::uint64_t config_hash = 0;
  nlohmann::json config;  // echo of the run configuration
  std::string mode;
  nlohmann::json flops;
  std::vector<LayerReport> layers;
  std::vector<MemEventReport> mem_events;
  EcpSummary ecp;
  BspSummary bsp;
  SimTotals totals;

  nlohmann::json to_json() const;
  static SimReport from_json(const nlohmann::json& j);
  std::string to_string() const;  // canonical dump, byte-stable per config+seed
};

// Execute one run: reference trace, packing, stratification, core simulation,
// ECP-pruned attention, and spike generation, with every simulated functional
// output checked bit-exactly against the golden path. Throws OracleMismatch
// on the first divergence.
SimReport run(const RunConfig& cfg, const SpikeTensor* input = nullptr);

enum class SweepParam { theta_s, bundle_volume, theta_p };

SweepParam sweep_param_from_name(const std::string& name);

struct SweepPoint {
  double value = 0;
  bool ok = false;
  std::string error;
  std::optional<SimReport> report;
};

// One run per value over an identical workload; failures are recorded and the
// remaining points still execute.
std::vector<SweepPoint> sweep(const RunConfig& base, SweepParam param,
                              std::span<const double> values,
                              const SpikeTensor* input = nullptr);

nlohmann::json sweep_table_json(SweepParam param, const std::vector<SweepPoint>& points);

}  // namespace ttbsim
