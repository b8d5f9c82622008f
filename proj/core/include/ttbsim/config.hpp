#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "ttbsim/attention_core.hpp"
#include "ttbsim/dense_core.hpp"
#include "ttbsim/ecp.hpp"
#include "ttbsim/memsys.hpp"
#include "ttbsim/reference_model.hpp"
#include "ttbsim/sparse_core.hpp"
#include "ttbsim/stratifier.hpp"

namespace ttbsim {

enum class SimMode { heterogeneous, dense_only };

struct SpikeGenConfig {
  std::uint32_t parallelism = 512;  // neurons processed per cycle
  double e_lif = 0.6;               // pJ per neuron update
};

struct StratUnitConfig {
  std::uint32_t comparators = 32;  // bundle tags compared per cycle
};

struct SynthConfig {
  double rate = 0.1;
  double cluster = 0.5;
};

// Full configuration of one simulated run. JSON keys follow the same
// namespaces as the struct fields; unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  BundleShape bundle{2, 4};
  ThetaPolicy strat = ThetaPolicy::fixed(0);
  EcpConfig ecp;
  DenseCoreConfig dense;
  SparseCoreConfig sparse;
  AttnCoreConfig attn;
  MemConfig mem;
  SpikeGenConfig spikegen;
  StratUnitConfig stratifier_unit;
  SynthConfig synth;
  bool bsp_includes_v = false;
  double lambda = 1.0;
  std::uint64_t seed = 1;
  SimMode mode = SimMode::heterogeneous;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load_file(const std::string& path);

  // FNV-1a over the canonical serialized form; stable provenance tag for
  // reports.
  std::uint64_t hash() const;
};

std::uint64_t fnv1a64(std::string_view s);

// Canonical bundle shape for a requested volume, as used by volume sweeps:
// even volumes >= 4 split as (2, v/2) when the model has at least two time
// points, everything else packs tokens only.
BundleShape bundle_shape_for_volume(std::uint32_t volume, std::uint32_t t);

}  // namespace ttbsim
