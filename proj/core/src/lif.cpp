#include "ttbsim/lif.hpp"

namespace ttbsim {

std::vector<std::uint8_t> lif_step(LifState& state, const LifParams& p,
                                   std::span<const std::int32_t> input_current) {
  p.validate();
  if (state.v.size() != input_current.size()) {
    throw ShapeError("lif_step: state and input lengths differ");
  }
  std::vector<std::uint8_t> spikes(state.v.size(), 0);
  for (std::size_t i = 0; i < state.v.size(); ++i) {
    const std::int32_t v_next = state.v[i] + input_current[i] - p.v_leak;
    if (v_next > p.v_th) {
      spikes[i] = 1;
      state.v[i] = 0;
    } else {
      state.v[i] = v_next;
    }
  }
  return spikes;
}

SpikeTensor lif_layer(const IntTensor& current, const LifParams& p, LifState* final_state) {
  p.validate();
  const std::size_t neurons = static_cast<std::size_t>(current.n) * current.d;
  LifState state = LifState::zeros(neurons, p.v_init);
  SpikeTensor out(current.t, current.n, current.d);
  std::vector<std::int32_t> step_current(neurons);
  for (std::uint32_t t = 0; t < current.t; ++t) {
    for (std::uint32_t n = 0; n < current.n; ++n) {
      for (std::uint32_t d = 0; d < current.d; ++d) {
        step_current[static_cast<std::size_t>(n) * current.d + d] = current.at(t, n, d);
      }
    }
    const auto spikes = lif_step(state, p, step_current);
    for (std::uint32_t n = 0; n < current.n; ++n) {
      for (std::uint32_t d = 0; d < current.d; ++d) {
        if (spikes[static_cast<std::size_t>(n) * current.d + d]) out.set(t, n, d, true);
      }
    }
  }
  if (final_state) *final_state = std::move(state);
  return out;
}

}  // namespace ttbsim
