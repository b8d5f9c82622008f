#pragma once

#include <cstdint>

#include "ttbsim/spike_tensor.hpp"
#include "ttbsim/ttb_grid.hpp"

namespace ttbsim {

// Small stable generator so synthesized workloads are bit-reproducible
// across platforms and standard libraries.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, bound), bias-free via rejection.
  std::uint64_t next_below(std::uint64_t bound);
  double next_unit();  // [0, 1)
  std::int32_t next_signed(std::uint32_t bits);  // uniform signed of given width
};

// Synthesize a spike tensor with expected density `rate` and controllable
// bundle-level clustering. cluster = 0 samples every bit independently;
// cluster = 1 concentrates each feature's spikes into the fewest bundles that
// hold them; intermediate values spread the spikes over proportionally more
// bundles. Deterministic per seed.
SpikeTensor synth_workload(std::uint32_t t, std::uint32_t n, std::uint32_t d, double rate,
                           double cluster, BundleShape shape, std::uint64_t seed);

}  // namespace ttbsim
