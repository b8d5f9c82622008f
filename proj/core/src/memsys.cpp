#include "ttbsim/memsys.hpp"

#include <algorithm>
#include <cmath>

namespace ttbsim {

namespace {
constexpr std::array<std::string_view, kMemEventCount> kEventNames = {
    "dram_read_byte",    "dram_write_byte",    "weight_glb_read_word",
    "weight_glb_write_word", "ttb_glb_read_word", "ttb_glb_write_word",
    "psum_buf_read",     "psum_buf_write",     "reg_access",
};
}  // namespace

std::string_view mem_event_name(MemEvent kind) {
  return kEventNames[static_cast<std::size_t>(kind)];
}

EnergyTable EnergyTable::defaults() {
  EnergyTable t;
  t[MemEvent::dram_read_byte] = 60.0;
  t[MemEvent::dram_write_byte] = 60.0;
  t[MemEvent::weight_glb_read_word] = 35.0;   // one 512-bit word of the 144 KiB SRAM
  t[MemEvent::weight_glb_write_word] = 40.0;
  t[MemEvent::ttb_glb_read_word] = 1.6;       // one 64-bit word of a 12 KiB bank
  t[MemEvent::ttb_glb_write_word] = 2.0;
  t[MemEvent::psum_buf_read] = 0.6;
  t[MemEvent::psum_buf_write] = 0.8;
  t[MemEvent::reg_access] = 0.05;
  return t;
}

void MemConfig::validate() const {
  if (dram_bytes_per_cycle <= 0) throw ConfigError("MemConfig: dram_bytes_per_cycle must be > 0");
  if (clock_ghz <= 0) throw ConfigError("MemConfig: clock_ghz must be > 0");
  if (weight_glb_kib == 0 || ttb_glb_bank_kib == 0) {
    throw ConfigError("MemConfig: GLB capacities must be > 0");
  }
  if (weight_port_bits == 0 || weight_port_bits % 8 != 0) {
    throw ConfigError("MemConfig: weight_port_bits must be a positive multiple of 8");
  }
  if (ttb_word_bits == 0 || ttb_word_bits % 8 != 0) {
    throw ConfigError("MemConfig: ttb_word_bits must be a positive multiple of 8");
  }
  for (double e : energy.pj) {
    if (e < 0) throw ConfigError("MemConfig: energy table entries must be >= 0");
  }
}

std::uint64_t MemConfig::ttb_partition_bytes(std::uint32_t resident_types) const {
  if (resident_types == 0) throw ConfigError("MemConfig: resident_types must be >= 1");
  return static_cast<std::uint64_t>(ttb_glb_bank_kib) * 1024 / resident_types;
}

std::uint64_t MemConfig::dram_cycles(std::uint64_t bytes) const {
  if (bytes == 0) return 0;
  return static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(bytes) / dram_bytes_per_cycle));
}

void MemEventLog::record_event(MemEvent kind, std::uint64_t quantity) {
  counts_[static_cast<std::size_t>(kind)] += quantity;
}

void MemEventLog::record_event(std::string_view kind, std::uint64_t quantity) {
  for (std::size_t i = 0; i < kMemEventCount; ++i) {
    if (kEventNames[i] == kind) {
      counts_[i] += quantity;
      return;
    }
  }
  throw ConfigError("record_event: unknown event kind '" + std::string(kind) + "'");
}

double MemEventLog::energy_pj(MemEvent kind) const {
  return static_cast<double>(count(kind)) * table_[kind];
}

double MemEventLog::total_energy_pj() const {
  double total = 0;
  for (std::size_t i = 0; i < kMemEventCount; ++i) {
    total += static_cast<double>(counts_[i]) * table_.pj[i];
  }
  return total;
}

void MemEventLog::merge(const MemEventLog& o) {
  for (std::size_t i = 0; i < kMemEventCount; ++i) counts_[i] += o.counts_[i];
}

std::uint64_t overlap(std::uint64_t compute_cycles, std::uint64_t transfer_cycles) {
  return std::max(compute_cycles, transfer_cycles);
}

std::uint64_t pipeline_latency(std::span<const std::uint64_t> compute,
                               std::span<const std::uint64_t> transfers) {
  if (compute.size() != transfers.size()) {
    throw ShapeError("pipeline_latency: compute and transfer lists differ in length");
  }
  if (compute.empty()) return 0;
  std::uint64_t total = transfers[0];  // initial fill, cannot be hidden
  for (std::size_t i = 0; i < compute.size(); ++i) {
    const std::uint64_t next_fill = (i + 1 < transfers.size()) ? transfers[i + 1] : 0;
    total += overlap(compute[i], next_fill);
  }
  return total;
}

const TilePlanEntry& TilePlan::entry(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw ConfigError("TilePlan: no entry named '" + std::string(name) + "'");
}

std::uint64_t TilePlan::max_tiles() const {
  std::uint64_t m = 1;
  for (const auto& e : entries) m = std::max(m, e.tiles);
  return m;
}

TilePlan plan_tiles(std::span<const TensorFootprint> footprints) {
  TilePlan plan;
  for (const auto& f : footprints) {
    TilePlanEntry e;
    e.name = f.name;
    if (f.units == 0 || f.unit_bytes == 0) {
      e.units_per_tile = f.units;
      e.tiles = f.units ? 1 : 0;
      plan.entries.push_back(std::move(e));
      continue;
    }
    if (f.unit_bytes > f.partition_bytes) {
      throw CapacityError("plan_tiles: one unit of '" + f.name +
                          "' exceeds its GLB partition (" + std::to_string(f.unit_bytes) +
                          " > " + std::to_string(f.partition_bytes) + " bytes)");
    }
    e.units_per_tile = std::min<std::uint64_t>(f.units, f.partition_bytes / f.unit_bytes);
    e.tiles = (f.units + e.units_per_tile - 1) / e.units_per_tile;
    e.bytes_per_tile = e.units_per_tile * f.unit_bytes;
    const std::uint64_t last_units = f.units - (e.tiles - 1) * e.units_per_tile;
    e.last_tile_bytes = last_units * f.unit_bytes;
    e.total_bytes = f.units * f.unit_bytes;
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

}  // namespace ttbsim
