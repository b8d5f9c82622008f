#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttbsim/errors.hpp"

namespace ttbsim {

// Binary activation tensor over (time T, tokens N, features D), bit-packed
// into 64-bit words. Bit order is t-major, then token, then feature, so the D
// bits of one (t, n) row are contiguous. Immutable use after construction is
// safe across threads.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::uint32_t t, std::uint32_t n, std::uint32_t d);

  std::uint32_t time_points() const { return t_; }
  std::uint32_t tokens() const { return n_; }
  std::uint32_t features() const { return d_; }
  std::uint64_t bit_count() const { return static_cast<std::uint64_t>(t_) * n_ * d_; }

  bool get(std::uint32_t t, std::uint32_t n, std::uint32_t d) const;
  void set(std::uint32_t t, std::uint32_t n, std::uint32_t d, bool value);

  // Population count of the whole tensor (word-level popcounts).
  std::uint64_t popcount() const;

  // Population count over the half-open box [t0,t1) x [n0,n1) x [d0,d1).
  // Bounds must be in range.
  std::uint64_t popcount_range(std::uint32_t t0, std::uint32_t t1, std::uint32_t n0,
                               std::uint32_t n1, std::uint32_t d0, std::uint32_t d1) const;

  // New tensor holding the given feature columns, in the given order.
  SpikeTensor select_features(std::span<const std::uint32_t> features) const;

  friend bool operator==(const SpikeTensor& a, const SpikeTensor& b) {
    return a.t_ == b.t_ && a.n_ == b.n_ && a.d_ == b.d_ && a.words_ == b.words_;
  }

  // File format: magic "TTBS", little-endian u32 T, N, D, then
  // ceil(T*N*D/8) bytes, LSB-first within each byte, zero-padded at the end.
  void save_ttbs(const std::string& path) const;
  static SpikeTensor load_ttbs(const std::string& path);

 private:
  std::uint64_t bit_index(std::uint32_t t, std::uint32_t n, std::uint32_t d) const {
    return (static_cast<std::uint64_t>(t) * n_ + n) * d_ + d;
  }
  void check_index(std::uint32_t t, std::uint32_t n, std::uint32_t d) const;

  std::uint32_t t_ = 0;
  std::uint32_t n_ = 0;
  std::uint32_t d_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace ttbsim
