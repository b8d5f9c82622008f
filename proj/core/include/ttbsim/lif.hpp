#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ttbsim/errors.hpp"
#include "ttbsim/int_tensor.hpp"
#include "ttbsim/spike_tensor.hpp"

namespace ttbsim {

// Leaky integrate-and-fire parameters in the shared integer current scale.
// Integer membrane arithmetic keeps the reference model bit-reproducible.
struct LifParams {
  std::int32_t v_th = 64;   // firing threshold, must be > 0
  std::int32_t v_leak = 0;  // per-step leak, must be >= 0
  std::int32_t v_init = 0;  // initial membrane potential

  void validate() const {
    if (v_th <= 0) throw ConfigError("LifParams: v_th must be > 0");
    if (v_leak < 0) throw ConfigError("LifParams: v_leak must be >= 0");
  }
};

// Membrane potential per neuron. After a spike the stored potential is 0.
struct LifState {
  std::vector<std::int32_t> v;

  static LifState zeros(std::size_t n, std::int32_t v_init = 0) {
    LifState s;
    s.v.assign(n, v_init);
    return s;
  }
};

// One time step: V' = V + I - v_leak; spike and reset to 0 iff V' > v_th
// (strict), otherwise V' persists. Returns one bit per neuron.
std::vector<std::uint8_t> lif_step(LifState& state, const LifParams& p,
                                   std::span<const std::int32_t> input_current);

// Run a full T x N x D current tensor through per-neuron LIF dynamics,
// stepping time in order. Optionally returns the final membrane state.
SpikeTensor lif_layer(const IntTensor& current, const LifParams& p,
                      LifState* final_state = nullptr);

}  // namespace ttbsim
