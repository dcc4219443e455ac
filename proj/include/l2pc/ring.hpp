#pragma once

// Centered modular arithmetic over Z_q = Z ∩ [-q/2, q/2) for power-of-two
// moduli q = 2^bits, bits <= 127, and dense row-major matrices over it.
// All protocol algebra (shares, ciphertexts, commitments) runs on ZqMatrix.

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace l2pc {

using int128 = __int128;
using uint128 = unsigned __int128;

namespace detail {

inline std::string to_string(int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  uint128 u = neg ? uint128(0) - uint128(v) : uint128(v);
  std::string s;
  while (u != 0) {
    s.insert(s.begin(), char('0' + int(u % 10)));
    u /= 10;
  }
  return neg ? "-" + s : s;
}

}  // namespace detail

// Centered reduction for an arbitrary modulus q >= 2:
//   x mod q := x - floor((x + q/2) / q) * q, result in [-q/2, q/2).
// Used by oracle tests and the generic code paths; the power-of-two hot
// path lives in Modulus.
inline int128 reduce_mod(int128 x, int128 q) {
  if (q < 2) throw std::invalid_argument("reduce_mod: q must be >= 2");
  int128 m = x % q;
  if (m < 0) m += q;
  // m in [0, q); centered representative keeps m < ceil(q/2).
  return m < (q + 1) / 2 ? m : m - q;
}

// q = 2^bits with 2 <= bits <= 127. Reduction is mask-and-center: only the
// low `bits` bits of any wrapping (mod 2^128) computation matter, so matrix
// kernels may accumulate in native unsigned 128-bit arithmetic.
class Modulus {
 public:
  explicit Modulus(unsigned bits) : bits_(bits) {
    if (bits < 2 || bits > 127)
      throw std::invalid_argument("Modulus: bits must be in [2, 127]");
  }

  unsigned bits() const { return bits_; }
  uint128 q() const { return uint128(1) << bits_; }
  uint128 mask() const { return q() - 1; }
  // q/2 = 2^(bits-1), the magnitude bound of centered representatives.
  uint128 half() const { return uint128(1) << (bits_ - 1); }

  // Centers the low `bits` bits of a wrapped value (sign-extends bit bits-1).
  int128 center(uint128 raw) const {
    uint128 m = raw & mask();
    if (m & half()) m |= ~mask();
    return static_cast<int128>(m);
  }

  int128 reduce(int128 x) const { return center(static_cast<uint128>(x)); }

  bool operator==(const Modulus& o) const { return bits_ == o.bits_; }
  bool operator!=(const Modulus& o) const { return !(*this == o); }

 private:
  unsigned bits_;
};

// Dense row-major matrix of centered residues. Entries always satisfy
// -q/2 <= e < q/2; every mutating path re-reduces.
class ZqMatrix {
 public:
  ZqMatrix(uint32_t rows, uint32_t cols, Modulus m)
      : rows_(rows), cols_(cols), mod_(m), a_(size_t(rows) * cols, 0) {}

  static ZqMatrix zero(uint32_t rows, uint32_t cols, Modulus m) {
    return ZqMatrix(rows, cols, m);
  }

  static ZqMatrix identity(uint32_t n, Modulus m) {
    ZqMatrix r(n, n, m);
    for (uint32_t i = 0; i < n; ++i) r(i, i) = 1;
    return r;
  }

  uint32_t rows() const { return rows_; }
  uint32_t cols() const { return cols_; }
  const Modulus& modulus() const { return mod_; }

  int128& operator()(uint32_t i, uint32_t j) { return a_[size_t(i) * cols_ + j]; }
  const int128& operator()(uint32_t i, uint32_t j) const {
    return a_[size_t(i) * cols_ + j];
  }

  int128* data() { return a_.data(); }
  const int128* data() const { return a_.data(); }
  size_t size() const { return a_.size(); }

  void set_reduced(uint32_t i, uint32_t j, int128 v) {
    (*this)(i, j) = mod_.reduce(v);
  }

  bool same_shape(const ZqMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && mod_ == o.mod_;
  }

  bool operator==(const ZqMatrix& o) const {
    return same_shape(o) && a_ == o.a_;
  }
  bool operator!=(const ZqMatrix& o) const { return !(*this == o); }

 private:
  uint32_t rows_, cols_;
  Modulus mod_;
  std::vector<int128> a_;
};

namespace detail {

inline void require_same_shape(const ZqMatrix& x, const ZqMatrix& y,
                               const char* op) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
  if (x.modulus() != y.modulus())
    throw std::invalid_argument(std::string(op) + ": modulus mismatch");
}

}  // namespace detail

inline ZqMatrix mat_add(const ZqMatrix& x, const ZqMatrix& y) {
  detail::require_same_shape(x, y, "mat_add");
  ZqMatrix r(x.rows(), x.cols(), x.modulus());
  const Modulus& m = x.modulus();
  for (size_t i = 0; i < r.size(); ++i)
    r.data()[i] = m.center(uint128(x.data()[i]) + uint128(y.data()[i]));
  return r;
}

inline ZqMatrix mat_sub(const ZqMatrix& x, const ZqMatrix& y) {
  detail::require_same_shape(x, y, "mat_sub");
  ZqMatrix r(x.rows(), x.cols(), x.modulus());
  const Modulus& m = x.modulus();
  for (size_t i = 0; i < r.size(); ++i)
    r.data()[i] = m.center(uint128(x.data()[i]) - uint128(y.data()[i]));
  return r;
}

inline ZqMatrix mat_neg(const ZqMatrix& x) {
  ZqMatrix r(x.rows(), x.cols(), x.modulus());
  const Modulus& m = x.modulus();
  for (size_t i = 0; i < r.size(); ++i)
    r.data()[i] = m.center(uint128(0) - uint128(x.data()[i]));
  return r;
}

// Standard product with every output entry reduced to the centered interval.
// Accumulation wraps mod 2^128; since q divides 2^128 the low bits are exact,
// so the result is identical to big-integer accumulation followed by one
// reduction. Deterministic regardless of loop partitioning.
inline ZqMatrix mat_mul(const ZqMatrix& x, const ZqMatrix& y) {
  if (x.cols() != y.rows())
    throw std::invalid_argument("mat_mul: dimension mismatch");
  if (x.modulus() != y.modulus())
    throw std::invalid_argument("mat_mul: modulus mismatch");
  const Modulus& m = x.modulus();
  ZqMatrix r(x.rows(), y.cols(), m);
  const uint32_t n = x.cols(), cols = y.cols();
  for (uint32_t i = 0; i < x.rows(); ++i) {
    uint128* acc = reinterpret_cast<uint128*>(r.data() + size_t(i) * cols);
    for (uint32_t k = 0; k < n; ++k) {
      const uint128 xv = uint128(x(i, k));
      if (xv == 0) continue;
      const int128* yrow = y.data() + size_t(k) * cols;
      for (uint32_t j = 0; j < cols; ++j) acc[j] += xv * uint128(yrow[j]);
    }
    for (uint32_t j = 0; j < cols; ++j)
      r(i, j) = m.center(acc[j]);
  }
  return r;
}

inline ZqMatrix mat_transpose(const ZqMatrix& x) {
  ZqMatrix r(x.cols(), x.rows(), x.modulus());
  for (uint32_t i = 0; i < x.rows(); ++i)
    for (uint32_t j = 0; j < x.cols(); ++j) r(j, i) = x(i, j);
  return r;
}

// Maximum absolute entry value.
inline uint128 mat_max_norm(const ZqMatrix& x) {
  uint128 best = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    int128 v = x.data()[i];
    uint128 a = v < 0 ? uint128(0) - uint128(v) : uint128(v);
    if (a > best) best = a;
  }
  return best;
}

// --- Wire serialization --------------------------------------------------
//
// Matrix wire format (shared with the transport layer):
//   header: rows u32 LE | cols u32 LE | q_bits u16 LE
//   body:   rows*cols entries, each a 16-byte little-endian signed
//           two's-complement centered representative.

constexpr size_t kMatrixHeaderBytes = 10;
constexpr size_t kEntryBytes = 16;

inline size_t serialized_size(const ZqMatrix& m) {
  return kMatrixHeaderBytes + m.size() * kEntryBytes;
}

inline void serialize_matrix(const ZqMatrix& m, std::vector<uint8_t>& out) {
  size_t base = out.size();
  out.resize(base + serialized_size(m));
  uint8_t* p = out.data() + base;
  auto put32 = [&p](uint32_t v) {
    for (int i = 0; i < 4; ++i) *p++ = uint8_t(v >> (8 * i));
  };
  put32(m.rows());
  put32(m.cols());
  *p++ = uint8_t(m.modulus().bits());
  *p++ = uint8_t(m.modulus().bits() >> 8);
  for (size_t i = 0; i < m.size(); ++i) {
    uint128 u = uint128(m.data()[i]);
    for (int b = 0; b < 16; ++b) *p++ = uint8_t(u >> (8 * b));
  }
}

inline std::vector<uint8_t> serialize_matrix(const ZqMatrix& m) {
  std::vector<uint8_t> out;
  serialize_matrix(m, out);
  return out;
}

// Parses one matrix starting at `off`, advancing `off` past it. Rejects
// malformed headers and out-of-range entries.
inline ZqMatrix deserialize_matrix(std::span<const uint8_t> buf, size_t& off) {
  if (buf.size() - off < kMatrixHeaderBytes)
    throw std::runtime_error("deserialize_matrix: truncated header");
  const uint8_t* p = buf.data() + off;
  auto get32 = [&p]() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(*p++) << (8 * i);
    return v;
  };
  uint32_t rows = get32();
  uint32_t cols = get32();
  uint16_t bits = uint16_t(p[0]) | uint16_t(p[1]) << 8;
  p += 2;
  if (bits < 2 || bits > 127)
    throw std::runtime_error("deserialize_matrix: bad q_bits");
  size_t need = size_t(rows) * cols * kEntryBytes;
  if (buf.size() - off - kMatrixHeaderBytes < need)
    throw std::runtime_error("deserialize_matrix: truncated body");
  Modulus m(bits);
  ZqMatrix r(rows, cols, m);
  for (size_t i = 0; i < r.size(); ++i) {
    uint128 u = 0;
    for (int b = 0; b < 16; ++b) u |= uint128(*p++) << (8 * b);
    int128 v = static_cast<int128>(u);
    int128 hi = static_cast<int128>(m.half());
    if (v < -hi || v >= hi)
      throw std::runtime_error("deserialize_matrix: entry out of range");
    r.data()[i] = v;
  }
  off += kMatrixHeaderBytes + need;
  return r;
}

inline ZqMatrix deserialize_matrix(std::span<const uint8_t> buf) {
  size_t off = 0;
  ZqMatrix r = deserialize_matrix(buf, off);
  if (off != buf.size())
    throw std::runtime_error("deserialize_matrix: trailing bytes");
  return r;
}

}  // namespace l2pc
