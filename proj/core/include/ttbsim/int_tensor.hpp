#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttbsim/errors.hpp"

namespace ttbsim {

// Dense signed-integer tensor over (time, token, feature). Synaptic currents,
// attention scores (feature axis reused for the key-token axis) and partial
// sums all use this with 32-bit accumulation.
struct IntTensor {
  std::uint32_t t = 0;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::vector<std::int32_t> v;

  IntTensor() = default;
  IntTensor(std::uint32_t t_, std::uint32_t n_, std::uint32_t d_)
      : t(t_), n(n_), d(d_), v(static_cast<std::size_t>(t_) * n_ * d_, 0) {}

  std::size_t index(std::uint32_t ti, std::uint32_t ni, std::uint32_t di) const {
    return (static_cast<std::size_t>(ti) * n + ni) * d + di;
  }
  std::int32_t at(std::uint32_t ti, std::uint32_t ni, std::uint32_t di) const {
    return v[index(ti, ni, di)];
  }
  std::int32_t& at(std::uint32_t ti, std::uint32_t ni, std::uint32_t di) {
    return v[index(ti, ni, di)];
  }

  bool same_shape(const IntTensor& o) const { return t == o.t && n == o.n && d == o.d; }

  friend bool operator==(const IntTensor& a, const IntTensor& b) {
    return a.t == b.t && a.n == b.n && a.d == b.d && a.v == b.v;
  }
};

// Element-wise sum; shapes must match.
IntTensor add(const IntTensor& a, const IntTensor& b);

// Row-major integer matrix (weights).
struct IntMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::int32_t> v;

  IntMatrix() = default;
  IntMatrix(std::uint32_t r, std::uint32_t c)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0) {}

  std::int32_t at(std::uint32_t r, std::uint32_t c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  std::int32_t& at(std::uint32_t r, std::uint32_t c) {
    return v[static_cast<std::size_t>(r) * cols + c];
  }

  friend bool operator==(const IntMatrix& a, const IntMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
  }
};

// Arithmetic right shift with floor semantics for any sign.
inline std::int32_t shift_scale(std::int32_t x, std::uint32_t shift) {
  return shift == 0 ? x : static_cast<std::int32_t>(x >> shift);
}

// Weight file I/O: magic "TTBW", little-endian u32 rows, cols, bitwidth, then
// row-major little-endian signed values, each ceil(bitwidth/8) bytes wide.
void save_ttbw(const IntMatrix& m, std::uint32_t bitwidth, const std::string& path);
IntMatrix load_ttbw(const std::string& path, std::uint32_t* bitwidth_out = nullptr);

// Range check helper for a signed value of `bits` width.
bool fits_signed(std::int32_t value, std::uint32_t bits);

}  // namespace ttbsim
