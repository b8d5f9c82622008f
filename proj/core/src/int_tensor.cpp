#include "ttbsim/int_tensor.hpp"

#include <cstdio>
#include <fstream>

namespace ttbsim {

IntTensor add(const IntTensor& a, const IntTensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: tensor shapes differ");
  }
  IntTensor out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    out.v[i] += b.v[i];
  }
  return out;
}

bool fits_signed(std::int32_t value, std::uint32_t bits) {
  if (bits == 0 || bits > 32) return false;
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  return value >= lo && value <= hi;
}

namespace {

constexpr char kWeightMagic[4] = {'T', 'T', 'B', 'W'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("ttbw: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_ttbw(const IntMatrix& m, std::uint32_t bitwidth, const std::string& path) {
  if (bitwidth < 2 || bitwidth > 32) {
    throw ConfigError("ttbw: bitwidth must be in [2, 32]");
  }
  const std::uint32_t bytes = (bitwidth + 7) / 8;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("ttbw: cannot open for writing: " + path);
  os.write(kWeightMagic, 4);
  write_u32(os, m.rows);
  write_u32(os, m.cols);
  write_u32(os, bitwidth);
  for (std::int32_t value : m.v) {
    if (!fits_signed(value, bitwidth)) {
      throw ConfigError("ttbw: value out of range for bitwidth");
    }
    const auto u = static_cast<std::uint32_t>(value);
    for (std::uint32_t i = 0; i < bytes; ++i) {
      const unsigned char byte = static_cast<unsigned char>(u >> (8 * i));
      os.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (!os) throw IoError("ttbw: write failed: " + path);
}

IntMatrix load_ttbw(const std::string& path, std::uint32_t* bitwidth_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("ttbw: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != std::string_view(kWeightMagic, 4)) {
    throw IoError("ttbw: bad magic");
  }
  const std::uint32_t rows = read_u32(is);
  const std::uint32_t cols = read_u32(is);
  const std::uint32_t bitwidth = read_u32(is);
  if (bitwidth < 2 || bitwidth > 32) throw IoError("ttbw: bad bitwidth");
  const std::uint32_t bytes = (bitwidth + 7) / 8;

  IntMatrix m(rows, cols);
  for (auto& value : m.v) {
    std::uint32_t u = 0;
    for (std::uint32_t i = 0; i < bytes; ++i) {
      unsigned char byte;
      is.read(reinterpret_cast<char*>(&byte), 1);
      if (!is) throw IoError("ttbw: truncated payload");
      u |= static_cast<std::uint32_t>(byte) << (8 * i);
    }
    // Sign-extend from the stored byte width.
    const std::uint32_t stored_bits = bytes * 8;
    if (stored_bits < 32 && (u & (1u << (stored_bits - 1)))) {
      u |= ~((1u << stored_bits) - 1);
    }
    value = static_cast<std::int32_t>(u);
    if (!fits_signed(value, bitwidth)) throw IoError("ttbw: value exceeds bitwidth");
  }
  if (bitwidth_out) *bitwidth_out = bitwidth;
  return m;
}

}  // namespace ttbsim
