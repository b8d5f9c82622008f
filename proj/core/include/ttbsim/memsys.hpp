#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttbsim/errors.hpp"

namespace ttbsim {

// Memory event kinds with a per-unit energy table entry. DRAM events are per
// byte, GLB events per port-width word, buffer/register events per access.
enum class MemEvent : std::size_t {
  dram_read_byte = 0,
  dram_write_byte,
  weight_glb_read_word,
  weight_glb_write_word,
  ttb_glb_read_word,
  ttb_glb_write_word,
  psum_buf_read,
  psum_buf_write,
  reg_access,
  kCount
};

constexpr std::size_t kMemEventCount = static_cast<std::size_t>(MemEvent::kCount);

std::string_view mem_event_name(MemEvent kind);

// Picojoules per event unit. Values ship in the default calibration table and
// may be overridden from a JSON file; unknown keys are rejected.
struct EnergyTable {
  std::array<double, kMemEventCount> pj{};

  static EnergyTable defaults();
  double& operator[](MemEvent k) { return pj[static_cast<std::size_t>(k)]; }
  double operator[](MemEvent k) const { return pj[static_cast<std::size_t>(k)]; }
};

struct MemConfig {
  double dram_bytes_per_cycle = 153.6;  // 76.8 GB/s at 500 MHz
  double dram_power_mw = 323.9;
  double clock_ghz = 0.5;
  std::uint32_t weight_glb_kib = 144;
  std::uint32_t weight_port_bits = 512;
  std::uint32_t ttb_glb_bank_kib = 12;  // two banks, ping-pong
  std::uint32_t ttb_word_bits = 64;
  EnergyTable energy = EnergyTable::defaults();

  void validate() const;
  std::uint64_t weight_partition_bytes() const {  // half of the GLB (ping-pong)
    return static_cast<std::uint64_t>(weight_glb_kib) * 1024 / 2;
  }
  // One bank's bytes divided equally among the resident data types; the
  // integer remainder is left to the weight side of the hierarchy.
  std::uint64_t ttb_partition_bytes(std::uint32_t resident_types) const;
  std::uint64_t dram_cycles(std::uint64_t bytes) const;
  double dram_static_pj_per_cycle() const { return dram_power_mw / clock_ghz; }
};

// Event counters and accrued energy for one simulated run.
class MemEventLog {
 public:
  explicit MemEventLog(const EnergyTable& table) : table_(table) {}

  void record_event(MemEvent kind, std::uint64_t quantity);
  // Name-based entry point; unknown kinds are a configuration error.
  void record_event(std::string_view kind, std::uint64_t quantity);

  std::uint64_t count(MemEvent kind) const { return counts_[static_cast<std::size_t>(kind)]; }
  double energy_pj(MemEvent kind) const;
  double total_energy_pj() const;

  void merge(const MemEventLog& o);

 private:
  EnergyTable table_;
  std::array<std::uint64_t, kMemEventCount> counts_{};
};

// Double buffering hides a tile's transfer behind compute: the effective cost
// of one tile is the larger of the two.
std::uint64_t overlap(std::uint64_t compute_cycles, std::uint64_t transfer_cycles);

// Full layer timeline: transfers[i] fills tile i while tile i-1 computes, so
// latency = transfers[0] + sum over i of max(compute[i], transfers[i+1]) with
// the last tile overlapping nothing. Never worse than full serialization.
std::uint64_t pipeline_latency(std::span<const std::uint64_t> compute,
                               std::span<const std::uint64_t> transfers);

// Tile planning: split each tensor into equal unit runs that fit its GLB
// partition. A single unit larger than the partition is a capacity error.
struct TensorFootprint {
  std::string name;
  std::uint64_t unit_bytes = 0;   // bytes of one indivisible unit (row/column/bundle)
  std::uint64_t units = 0;
  std::uint64_t partition_bytes = 0;
};

struct TilePlanEntry {
  std::string name;
  std::uint64_t units_per_tile = 0;
  std::uint64_t tiles = 0;
  std::uint64_t bytes_per_tile = 0;       // full tiles
  std::uint64_t last_tile_bytes = 0;
  std::uint64_t total_bytes = 0;          // footprint transferred once
};

struct TilePlan {
  std::vector<TilePlanEntry> entries;

  const TilePlanEntry& entry(std::string_view name) const;
  std::uint64_t max_tiles() const;
};

TilePlan plan_tiles(std::span<const TensorFootprint> footprints);

}  // namespace ttbsim
