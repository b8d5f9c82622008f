#include "ttbsim/config.hpp"

#include <fstream>
#include <set>

namespace ttbsim {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

json lif_to_json(const LifParams& p) {
  return json{{"v_th", p.v_th}, {"v_leak", p.v_leak}, {"v_init", p.v_init}};
}

LifParams lif_from_json(const json& j, LifParams base, const std::string& where) {
  check_keys(j, {"v_th", "v_leak", "v_init"}, where);
  get_to(j, "v_th", base.v_th);
  get_to(j, "v_leak", base.v_leak);
  get_to(j, "v_init", base.v_init);
  return base;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

BundleShape bundle_shape_for_volume(std::uint32_t volume, std::uint32_t t) {
  if (volume == 0) throw ConfigError("bundle volume must be >= 1");
  if (volume >= 4 && volume % 2 == 0 && t >= 2) {
    return BundleShape{2, volume / 2};
  }
  return BundleShape{1, volume};
}

void RunConfig::validate() const {
  model.validate();
  bundle.validate();
  if (bundle.volume() > 65535) throw ConfigError("config: bundle volume exceeds tag range");
  dense.validate();
  sparse.validate();
  attn.validate(model.head_dim());
  mem.validate();
  if (spikegen.parallelism == 0) throw ConfigError("config: spikegen.parallelism must be >= 1");
  if (stratifier_unit.comparators == 0) {
    throw ConfigError("config: stratifier_unit.comparators must be >= 1");
  }
  if (synth.rate < 0 || synth.rate > 1 || synth.cluster < 0 || synth.cluster > 1) {
    throw ConfigError("config: synth.rate and synth.cluster must be in [0, 1]");
  }
}

nlohmann::json RunConfig::to_json() const {
  json j;
  j["model"] = {{"blocks", model.blocks}, {"t", model.t},
                {"n", model.n},           {"d", model.d},
                {"heads", model.heads},   {"s_shift", model.s_shift},
                {"mlp_ratio", model.mlp_ratio}, {"weight_bits", model.weight_bits}};
  j["model"]["lif"] = {
      {"q", lif_to_json(model.lif.q)},           {"k", lif_to_json(model.lif.k)},
      {"v", lif_to_json(model.lif.v)},           {"otemp", lif_to_json(model.lif.otemp)},
      {"attn_out", lif_to_json(model.lif.attn_out)},
      {"mlp_hidden", lif_to_json(model.lif.mlp_hidden)},
      {"mlp_out", lif_to_json(model.lif.mlp_out)}};
  j["bundle"] = {{"bs_t", bundle.bs_t}, {"bs_n", bundle.bs_n}};
  j["strat"] = {{"policy", strat.kind == ThetaPolicyKind::fixed ? "fixed" : "balance"},
                {"theta_s", strat.fixed_value}};
  j["ecp"] = {{"theta_q", ecp.theta_q}, {"theta_k", ecp.theta_k}};
  j["dense"] = {{"rows", dense.rows}, {"cols", dense.cols}, {"lanes", dense.lanes},
                {"e_pe", dense.e_pe}};
  j["sparse"] = {{"units", sparse.units},
                 {"out_par", sparse.out_par},
                 {"dispatch_overhead", sparse.dispatch_overhead},
                 {"e_op", sparse.e_op}};
  j["attn"] = {{"rows", attn.rows},     {"cols", attn.cols},
               {"s_bits", attn.s_bits}, {"mode_switch_cycles", attn.mode_switch_cycles},
               {"groups", attn.groups}, {"e_and", attn.e_and},
               {"e_sac", attn.e_sac}};
  json energy;
  for (std::size_t i = 0; i < kMemEventCount; ++i) {
    energy[std::string(mem_event_name(static_cast<MemEvent>(i)))] = mem.energy.pj[i];
  }
  j["mem"] = {{"dram_bytes_per_cycle", mem.dram_bytes_per_cycle},
              {"dram_power_mw", mem.dram_power_mw},
              {"clock_ghz", mem.clock_ghz},
              {"weight_glb_kib", mem.weight_glb_kib},
              {"weight_port_bits", mem.weight_port_bits},
              {"ttb_glb_bank_kib", mem.ttb_glb_bank_kib},
              {"ttb_word_bits", mem.ttb_word_bits},
              {"energy_table", energy}};
  j["spikegen"] = {{"parallelism", spikegen.parallelism}, {"e_lif", spikegen.e_lif}};
  j["stratifier_unit"] = {{"comparators", stratifier_unit.comparators}};
  j["synth"] = {{"rate", synth.rate}, {"cluster", synth.cluster}};
  j["bsp"] = {{"includes_v", bsp_includes_v}, {"lambda", lambda}};
  j["seed"] = seed;
  j["mode"] = mode == SimMode::heterogeneous ? "heterogeneous" : "dense_only";
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  check_keys(j, {"model", "bundle", "strat", "ecp", "dense", "sparse", "attn", "mem",
                 "spikegen", "stratifier_unit", "synth", "bsp", "seed", "mode"},
             "config root");
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"blocks", "t", "n", "d", "heads", "s_shift", "mlp_ratio", "weight_bits", "lif"},
               "model");
    get_to(m, "blocks", c.model.blocks);
    get_to(m, "t", c.model.t);
    get_to(m, "n", c.model.n);
    get_to(m, "d", c.model.d);
    get_to(m, "heads", c.model.heads);
    get_to(m, "s_shift", c.model.s_shift);
    get_to(m, "mlp_ratio", c.model.mlp_ratio);
    get_to(m, "weight_bits", c.model.weight_bits);
    if (m.contains("lif")) {
      const json& l = m.at("lif");
      check_keys(l, {"v_th", "v_leak", "v_init", "q", "k", "v", "otemp", "attn_out",
                     "mlp_hidden", "mlp_out"},
                 "model.lif");
      // Shared values first, then per-role overrides.
      LifParams base;
      get_to(l, "v_th", base.v_th);
      get_to(l, "v_leak", base.v_leak);
      get_to(l, "v_init", base.v_init);
      c.model.lif = LifBank::uniform(base);
      auto role = [&](const char* key, LifParams& p) {
        if (l.contains(key)) p = lif_from_json(l.at(key), base, std::string("model.lif.") + key);
      };
      role("q", c.model.lif.q);
      role("k", c.model.lif.k);
      role("v", c.model.lif.v);
      role("otemp", c.model.lif.otemp);
      role("attn_out", c.model.lif.attn_out);
      role("mlp_hidden", c.model.lif.mlp_hidden);
      role("mlp_out", c.model.lif.mlp_out);
    }
  }
  if (j.contains("bundle")) {
    const json& b = j.at("bundle");
    check_keys(b, {"bs_t", "bs_n"}, "bundle");
    get_to(b, "bs_t", c.bundle.bs_t);
    get_to(b, "bs_n", c.bundle.bs_n);
  }
  if (j.contains("strat")) {
    const json& s = j.at("strat");
    check_keys(s, {"policy", "theta_s"}, "strat");
    std::string policy = "fixed";
    get_to(s, "policy", policy);
    if (policy == "fixed") {
      c.strat.kind = ThetaPolicyKind::fixed;
    } else if (policy == "balance") {
      c.strat.kind = ThetaPolicyKind::balance;
    } else {
      throw ConfigError("config: strat.policy must be 'fixed' or 'balance'");
    }
    get_to(s, "theta_s", c.strat.fixed_value);
  }
  if (j.contains("ecp")) {
    const json& e = j.at("ecp");
    check_keys(e, {"theta_q", "theta_k"}, "ecp");
    get_to(e, "theta_q", c.ecp.theta_q);
    get_to(e, "theta_k", c.ecp.theta_k);
  }
  if (j.contains("dense")) {
    const json& d = j.at("dense");
    check_keys(d, {"rows", "cols", "lanes", "e_pe"}, "dense");
    get_to(d, "rows", c.dense.rows);
    get_to(d, "cols", c.dense.cols);
    get_to(d, "lanes", c.dense.lanes);
    get_to(d, "e_pe", c.dense.e_pe);
  }
  if (j.contains("sparse")) {
    const json& s = j.at("sparse");
    check_keys(s, {"units", "out_par", "dispatch_overhead", "e_op"}, "sparse");
    get_to(s, "units", c.sparse.units);
    get_to(s, "out_par", c.sparse.out_par);
    get_to(s, "dispatch_overhead", c.sparse.dispatch_overhead);
    get_to(s, "e_op", c.sparse.e_op);
  }
  if (j.contains("attn")) {
    const json& a = j.at("attn");
    check_keys(a, {"rows", "cols", "s_bits", "mode_switch_cycles", "groups", "e_and", "e_sac"},
               "attn");
    get_to(a, "rows", c.attn.rows);
    get_to(a, "cols", c.attn.cols);
    get_to(a, "s_bits", c.attn.s_bits);
    get_to(a, "mode_switch_cycles", c.attn.mode_switch_cycles);
    get_to(a, "groups", c.attn.groups);
    get_to(a, "e_and", c.attn.e_and);
    get_to(a, "e_sac", c.attn.e_sac);
  }
  if (j.contains("mem")) {
    const json& m = j.at("mem");
    check_keys(m, {"dram_bytes_per_cycle", "dram_power_mw", "clock_ghz", "weight_glb_kib",
                   "weight_port_bits", "ttb_glb_bank_kib", "ttb_word_bits", "energy_table",
                   "energy_table_file"},
               "mem");
    get_to(m, "dram_bytes_per_cycle", c.mem.dram_bytes_per_cycle);
    get_to(m, "dram_power_mw", c.mem.dram_power_mw);
    get_to(m, "clock_ghz", c.mem.clock_ghz);
    get_to(m, "weight_glb_kib", c.mem.weight_glb_kib);
    get_to(m, "weight_port_bits", c.mem.weight_port_bits);
    get_to(m, "ttb_glb_bank_kib", c.mem.ttb_glb_bank_kib);
    get_to(m, "ttb_word_bits", c.mem.ttb_word_bits);
    json energy;
    if (m.contains("energy_table_file")) {
      std::ifstream in(m.at("energy_table_file").get<std::string>());
      if (!in) throw IoError("config: cannot open energy table file");
      in >> energy;
    }
    if (m.contains("energy_table")) {
      energy = m.at("energy_table");
    }
    if (!energy.is_null()) {
      for (auto it = energy.begin(); it != energy.end(); ++it) {
        std::size_t slot = kMemEventCount;
        for (std::size_t i = 0; i < kMemEventCount; ++i) {
          if (mem_event_name(static_cast<MemEvent>(i)) == it.key()) {
            slot = i;
            break;
          }
        }
        if (slot == kMemEventCount) {
          throw ConfigError("config: unknown energy table key '" + it.key() + "'");
        }
        c.mem.energy.pj[slot] = it.value().get<double>();
      }
    }
  }
  if (j.contains("spikegen")) {
    const json& s = j.at("spikegen");
    check_keys(s, {"parallelism", "e_lif"}, "spikegen");
    get_to(s, "parallelism", c.spikegen.parallelism);
    get_to(s, "e_lif", c.spikegen.e_lif);
  }
  if (j.contains("stratifier_unit")) {
    const json& s = j.at("stratifier_unit");
    check_keys(s, {"comparators"}, "stratifier_unit");
    get_to(s, "comparators", c.stratifier_unit.comparators);
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    check_keys(s, {"rate", "cluster"}, "synth");
    get_to(s, "rate", c.synth.rate);
    get_to(s, "cluster", c.synth.cluster);
  }
  if (j.contains("bsp")) {
    const json& b = j.at("bsp");
    check_keys(b, {"includes_v", "lambda"}, "bsp");
    get_to(b, "includes_v", c.bsp_includes_v);
    get_to(b, "lambda", c.lambda);
  }
  get_to(j, "seed", c.seed);
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "heterogeneous") {
      c.mode = SimMode::heterogeneous;
    } else if (mode == "dense_only") {
      c.mode = SimMode::dense_only;
    } else {
      throw ConfigError("config: mode must be 'heterogeneous' or 'dense_only'");
    }
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json().dump()); }

}  // namespace ttbsim
