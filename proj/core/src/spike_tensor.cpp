#include "ttbsim/spike_tensor.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace ttbsim {

SpikeTensor::SpikeTensor(std::uint32_t t, std::uint32_t n, std::uint32_t d)
    : t_(t), n_(n), d_(d) {
  if (t == 0 || n == 0 || d == 0) {
    throw ShapeError("SpikeTensor: all dimensions must be >= 1");
  }
  words_.assign((bit_count() + 63) / 64, 0);
}

void SpikeTensor::check_index(std::uint32_t t, std::uint32_t n, std::uint32_t d) const {
  if (t >= t_ || n >= n_ || d >= d_) {
    throw std::out_of_range("SpikeTensor: index out of range");
  }
}

bool SpikeTensor::get(std::uint32_t t, std::uint32_t n, std::uint32_t d) const {
  check_index(t, n, d);
  const std::uint64_t i = bit_index(t, n, d);
  return (words_[i >> 6] >> (i & 63)) & 1u;
}

void SpikeTensor::set(std::uint32_t t, std::uint32_t n, std::uint32_t d, bool value) {
  check_index(t, n, d);
  const std::uint64_t i = bit_index(t, n, d);
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= mask;
  } else {
    words_[i >> 6] &= ~mask;
  }
}

std::uint64_t SpikeTensor::popcount() const {
  std::uint64_t total = 0;
  for (std::uint64_t w : words_) total += static_cast<std::uint64_t>(std::popcount(w));
  return total;
}

std::uint64_t SpikeTensor::popcount_range(std::uint32_t t0, std::uint32_t t1, std::uint32_t n0,
                                          std::uint32_t n1, std::uint32_t d0,
                                          std::uint32_t d1) const {
  if (t1 > t_ || n1 > n_ || d1 > d_ || t0 > t1 || n0 > n1 || d0 > d1) {
    throw std::out_of_range("SpikeTensor: popcount_range bounds out of range");
  }
  std::uint64_t total = 0;
  for (std::uint32_t t = t0; t < t1; ++t) {
    for (std::uint32_t n = n0; n < n1; ++n) {
      // The feature run [d0, d1) of one (t, n) row is contiguous in the bit
      // stream; count it with masked word popcounts.
      std::uint64_t lo = bit_index(t, n, d0);
      const std::uint64_t hi = bit_index(t, n, d1 - 1) + 1;
      while (lo < hi) {
        const std::uint64_t word = lo >> 6;
        const std::uint32_t off = static_cast<std::uint32_t>(lo & 63);
        const std::uint64_t span = std::min<std::uint64_t>(hi - lo, 64 - off);
        std::uint64_t mask = ~std::uint64_t{0};
        if (span < 64) mask = ((std::uint64_t{1} << span) - 1) << off;
        total += static_cast<std::uint64_t>(std::popcount(words_[word] & mask));
        lo += span;
      }
    }
  }
  return total;
}

SpikeTensor SpikeTensor::select_features(std::span<const std::uint32_t> features) const {
  if (features.empty()) {
    throw ShapeError("select_features: empty feature list");
  }
  SpikeTensor out(t_, n_, static_cast<std::uint32_t>(features.size()));
  for (std::uint32_t t = 0; t < t_; ++t) {
    for (std::uint32_t n = 0; n < n_; ++n) {
      for (std::uint32_t j = 0; j < features.size(); ++j) {
        const std::uint32_t src = features[j];
        if (src >= d_) throw std::out_of_range("select_features: feature index out of range");
        if (get(t, n, src)) out.set(t, n, j, true);
      }
    }
  }
  return out;
}

namespace {
constexpr char kSpikeMagic[4] = {'T', 'T', 'B', 'S'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("ttbs: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void SpikeTensor::save_ttbs(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("ttbs: cannot open for writing: " + path);
  os.write(kSpikeMagic, 4);
  write_u32(os, t_);
  write_u32(os, n_);
  write_u32(os, d_);
  const std::uint64_t nbytes = (bit_count() + 7) / 8;
  for (std::uint64_t i = 0; i < nbytes; ++i) {
    const std::uint64_t word = words_[(i * 8) >> 6];
    const unsigned char byte = static_cast<unsigned char>(word >> ((i * 8) & 63));
    os.write(reinterpret_cast<const char*>(&byte), 1);
  }
  if (!os) throw IoError("ttbs: write failed: " + path);
}

SpikeTensor SpikeTensor::load_ttbs(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("ttbs: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != std::string_view(kSpikeMagic, 4)) {
    throw IoError("ttbs: bad magic");
  }
  const std::uint32_t t = read_u32(is);
  const std::uint32_t n = read_u32(is);
  const std::uint32_t d = read_u32(is);
  if (t == 0 || n == 0 || d == 0) throw IoError("ttbs: zero dimension");
  SpikeTensor out(t, n, d);
  const std::uint64_t nbytes = (out.bit_count() + 7) / 8;
  for (std::uint64_t i = 0; i < nbytes; ++i) {
    unsigned char byte;
    is.read(reinterpret_cast<char*>(&byte), 1);
    if (!is) throw IoError("ttbs: truncated payload");
    out.words_[(i * 8) >> 6] |= static_cast<std::uint64_t>(byte) << ((i * 8) & 63);
  }
  // Padding bits past T*N*D must be zero.
  const std::uint64_t bits = out.bit_count();
  if (bits & 63) {
    const std::uint64_t tail = out.words_.back() >> (bits & 63);
    if (tail != 0) throw IoError("ttbs: nonzero padding bits");
  }
  return out;
}

}  // namespace ttbsim
