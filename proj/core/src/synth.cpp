#include "ttbsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ttbsim {

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("SplitMix64: bound must be > 0");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % bound;
}

double SplitMix64::next_unit() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::int32_t SplitMix64::next_signed(std::uint32_t bits) {
  const std::uint64_t span = std::uint64_t{1} << bits;
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  return static_cast<std::int32_t>(lo + static_cast<std::int64_t>(next_below(span)));
}

namespace {

struct BundleRegion {
  std::uint32_t t0, t1, n0, n1;
  std::uint32_t capacity() const { return (t1 - t0) * (n1 - n0); }
};

}  // namespace

SpikeTensor synth_workload(std::uint32_t t, std::uint32_t n, std::uint32_t d, double rate,
                           double cluster, BundleShape shape, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ConfigError("synth_workload: rate must be in [0, 1]");
  if (cluster < 0.0 || cluster > 1.0) {
    throw ConfigError("synth_workload: cluster must be in [0, 1]");
  }
  shape.validate();
  SpikeTensor out(t, n, d);
  if (rate == 0.0) return out;

  SplitMix64 rng(seed);
  const std::uint64_t cells = static_cast<std::uint64_t>(t) * n;

  if (cluster == 0.0) {
    for (std::uint32_t ti = 0; ti < t; ++ti) {
      for (std::uint32_t ni = 0; ni < n; ++ni) {
        for (std::uint32_t di = 0; di < d; ++di) {
          if (rng.next_unit() < rate) out.set(ti, ni, di, true);
        }
      }
    }
    return out;
  }

  const std::uint32_t nbt = (t + shape.bs_t - 1) / shape.bs_t;
  const std::uint32_t nbn = (n + shape.bs_n - 1) / shape.bs_n;
  const std::uint32_t n_bundles = nbt * nbn;
  std::vector<BundleRegion> regions(n_bundles);
  for (std::uint32_t bn = 0; bn < nbn; ++bn) {
    for (std::uint32_t bt = 0; bt < nbt; ++bt) {
      regions[bn * nbt + bt] = {bt * shape.bs_t, std::min(t, (bt + 1) * shape.bs_t),
                                bn * shape.bs_n, std::min(n, (bn + 1) * shape.bs_n)};
    }
  }
  const double independent_active =
      static_cast<double>(n_bundles) * (1.0 - std::pow(1.0 - rate, shape.volume()));

  std::vector<std::uint32_t> order(n_bundles);
  std::vector<std::uint32_t> fill;
  for (std::uint32_t di = 0; di < d; ++di) {
    // Spike budget for this feature: Binomial(T*N, rate), so the expected
    // overall density stays `rate` regardless of placement.
    std::uint64_t spikes = 0;
    for (std::uint64_t c = 0; c < cells; ++c) {
      if (rng.next_unit() < rate) ++spikes;
    }
    if (spikes == 0) continue;

    // Interpolate the number of active bundles between the independent-case
    // expectation and the minimum that can hold the spikes.
    std::uint64_t min_bundles = 0;
    {
      std::uint64_t remaining = spikes;
      // Under padding, trailing bundles hold fewer cells; the true minimum
      // fills largest capacities first. Capacities take only a few distinct
      // values, so a sort is cheap.
      std::vector<std::uint32_t> caps(n_bundles);
      for (std::uint32_t b = 0; b < n_bundles; ++b) caps[b] = regions[b].capacity();
      std::sort(caps.begin(), caps.end(), std::greater<>());
      for (std::uint32_t c : caps) {
        if (remaining == 0) break;
        remaining -= std::min<std::uint64_t>(remaining, c);
        ++min_bundles;
      }
    }
    const double blend = cluster * static_cast<double>(min_bundles) +
                         (1.0 - cluster) * independent_active;
    std::uint64_t target = static_cast<std::uint64_t>(std::llround(blend));
    target = std::clamp<std::uint64_t>(target, min_bundles,
                                       std::min<std::uint64_t>(n_bundles, spikes));

    // Pick the active bundles, largest-capacity-first among a random
    // permutation so padded edge bundles do not starve the budget.
    for (std::uint32_t b = 0; b < n_bundles; ++b) order[b] = b;
    for (std::uint32_t b = 0; b < n_bundles; ++b) {
      const std::uint32_t j = b + static_cast<std::uint32_t>(rng.next_below(n_bundles - b));
      std::swap(order[b], order[j]);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return regions[a].capacity() > regions[b].capacity();
    });

    fill.clear();
    std::uint64_t capacity = 0;
    for (std::uint32_t idx = 0; idx < n_bundles && (fill.size() < target || capacity < spikes);
         ++idx) {
      fill.push_back(order[idx]);
      capacity += regions[order[idx]].capacity();
    }

    // One spike per active bundle, then distribute the rest respecting
    // capacity; finally scatter within each bundle.
    std::vector<std::uint32_t> per_bundle(fill.size(), 1);
    std::uint64_t remaining = spikes - fill.size();
    std::vector<std::uint32_t> open;
    for (std::uint32_t i = 0; i < fill.size(); ++i) {
      if (regions[fill[i]].capacity() > 1) open.push_back(i);
    }
    while (remaining > 0) {
      const std::uint32_t pick = open[static_cast<std::uint32_t>(rng.next_below(open.size()))];
      ++per_bundle[pick];
      --remaining;
      if (per_bundle[pick] == regions[fill[pick]].capacity()) {
        open.erase(std::find(open.begin(), open.end(), pick));
      }
    }
    for (std::uint32_t i = 0; i < fill.size(); ++i) {
      const BundleRegion& r = regions[fill[i]];
      const std::uint32_t cap = r.capacity();
      const std::uint32_t count = per_bundle[i];
      // Partial Fisher-Yates over the bundle's cells.
      std::vector<std::uint32_t> cells_in(cap);
      for (std::uint32_t c = 0; c < cap; ++c) cells_in[c] = c;
      for (std::uint32_t c = 0; c < count; ++c) {
        const std::uint32_t j = c + static_cast<std::uint32_t>(rng.next_below(cap - c));
        std::swap(cells_in[c], cells_in[j]);
        const std::uint32_t w = r.n1 - r.n0;
        out.set(r.t0 + cells_in[c] / w, r.n0 + cells_in[c] % w, di, true);
      }
    }
  }
  return out;
}

}  // namespace ttbsim
