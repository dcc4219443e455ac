#pragma once

// Fixed-point representation Q_{k,l}: k-bit numbers with an l-bit fractional
// part, mantissas in {-2^(k-1), ..., 2^(k-1)-1}, value = mantissa * 2^-l.
// Reals enter through a mid-tread quantizer (step 2^-l, saturation at
// 2^(k-1), round half away from zero) and are embedded into Z_q by the
// 2^l / 2^(2l) scale maps.

#include <cmath>
#include <cstdint>
#include <vector>

#include "l2pc/ring.hpp"

namespace l2pc {

// Dense row-major double matrix for the real-valued boundary (plant, control
// laws, CLI files). Not part of the protocol algebra.
class RealMatrix {
 public:
  RealMatrix(uint32_t rows, uint32_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(size_t(rows) * cols, fill) {}

  static RealMatrix from_rows(std::vector<std::vector<double>> rows) {
    uint32_t r = uint32_t(rows.size());
    uint32_t c = r ? uint32_t(rows[0].size()) : 0;
    RealMatrix m(r, c);
    for (uint32_t i = 0; i < r; ++i) {
      if (rows[i].size() != c)
        throw std::invalid_argument("RealMatrix: ragged rows");
      for (uint32_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  uint32_t rows() const { return rows_; }
  uint32_t cols() const { return cols_; }
  double& operator()(uint32_t i, uint32_t j) { return a_[size_t(i) * cols_ + j]; }
  double operator()(uint32_t i, uint32_t j) const { return a_[size_t(i) * cols_ + j]; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }
  size_t size() const { return a_.size(); }

 private:
  uint32_t rows_, cols_;
  std::vector<double> a_;
};

inline double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: dimension mismatch");
  double best = 0;
  for (size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::fabs(a.data()[i] - b.data()[i]));
  return best;
}

struct FixedPointSpec {
  unsigned k;  // total bit length
  unsigned l;  // fractional bit length

  FixedPointSpec(unsigned k_, unsigned l_) : k(k_), l(l_) {
    if (k < 6) throw std::invalid_argument("FixedPointSpec: k must be >= 6");
    if (l >= k) throw std::invalid_argument("FixedPointSpec: l must be < k");
    if (k > 63) throw std::invalid_argument("FixedPointSpec: k must be <= 63");
  }

  int64_t mantissa_min() const { return -(int64_t(1) << (k - 1)); }
  int64_t mantissa_max() const { return (int64_t(1) << (k - 1)) - 1; }
  bool operator==(const FixedPointSpec& o) const { return k == o.k && l == o.l; }
};

class FixedPointMatrix {
 public:
  FixedPointMatrix(uint32_t rows, uint32_t cols, FixedPointSpec spec)
      : rows_(rows), cols_(cols), spec_(spec), m_(size_t(rows) * cols, 0) {}

  uint32_t rows() const { return rows_; }
  uint32_t cols() const { return cols_; }
  const FixedPointSpec& spec() const { return spec_; }

  int64_t& mantissa(uint32_t i, uint32_t j) { return m_[size_t(i) * cols_ + j]; }
  int64_t mantissa(uint32_t i, uint32_t j) const { return m_[size_t(i) * cols_ + j]; }
  int64_t* data() { return m_.data(); }
  const int64_t* data() const { return m_.data(); }
  size_t size() const { return m_.size(); }

  double value(uint32_t i, uint32_t j) const {
    return std::ldexp(double(mantissa(i, j)), -int(spec_.l));
  }

  RealMatrix values() const {
    RealMatrix r(rows_, cols_);
    for (uint32_t i = 0; i < rows_; ++i)
      for (uint32_t j = 0; j < cols_; ++j) r(i, j) = value(i, j);
    return r;
  }

 private:
  uint32_t rows_, cols_;
  FixedPointSpec spec_;
  std::vector<int64_t> m_;
};

struct QuantizeResult {
  FixedPointMatrix m;
  uint64_t saturated;  // entries clamped at the k-bit range edge
};

// Mid-tread quantizer: mantissa = clamp(round(x * 2^l)), round half away
// from zero. |value - x| <= 2^-(l+1) whenever no clamping occurs.
inline QuantizeResult quantize(const RealMatrix& x, FixedPointSpec spec) {
  FixedPointMatrix out(x.rows(), x.cols(), spec);
  uint64_t sat = 0;
  const long double lo = (long double)spec.mantissa_min();
  const long double hi = (long double)spec.mantissa_max();
  for (uint32_t i = 0; i < x.rows(); ++i) {
    for (uint32_t j = 0; j < x.cols(); ++j) {
      long double scaled = roundl(ldexpl((long double)x(i, j), int(spec.l)));
      if (scaled < lo) { scaled = lo; ++sat; }
      else if (scaled > hi) { scaled = hi; ++sat; }
      out.mantissa(i, j) = (int64_t)scaled;
    }
  }
  return QuantizeResult{std::move(out), sat};
}

// X_bar = 2^l * X: the mantissas embedded into Z_q as centered residues.
inline ZqMatrix encode_l(const FixedPointMatrix& m, Modulus mod) {
  if (uint128(1) << (m.spec().k - 1) > mod.half())
    throw std::invalid_argument("encode_l: k-bit mantissas overflow Z_q");
  ZqMatrix r(m.rows(), m.cols(), mod);
  for (uint32_t i = 0; i < m.rows(); ++i)
    for (uint32_t j = 0; j < m.cols(); ++j) r(i, j) = int128(m.mantissa(i, j));
  return r;
}

// v_bar = 2^(2l) * v: mantissas shifted left by a further l bits.
inline ZqMatrix encode_2l(const FixedPointMatrix& m, Modulus mod) {
  const unsigned k = m.spec().k, l = m.spec().l;
  if (k - 1 + l >= mod.bits())
    throw std::invalid_argument("encode_2l: 2^(2l) scale overflows Z_q");
  ZqMatrix r(m.rows(), m.cols(), mod);
  for (uint32_t i = 0; i < m.rows(); ++i)
    for (uint32_t j = 0; j < m.cols(); ++j)
      r(i, j) = int128(m.mantissa(i, j)) << l;
  return r;
}

inline FixedPointMatrix decode_l(const ZqMatrix& z, FixedPointSpec spec) {
  FixedPointMatrix m(z.rows(), z.cols(), spec);
  for (uint32_t i = 0; i < z.rows(); ++i)
    for (uint32_t j = 0; j < z.cols(); ++j) {
      int128 v = z(i, j);
      if (v < spec.mantissa_min() || v > spec.mantissa_max())
        throw std::invalid_argument("decode_l: entry outside k-bit range");
      m.mantissa(i, j) = int64_t(v);
    }
  return m;
}

// Exact decode path: centered residues interpreted as numerators over
// 2^(2l). Z_bar entries are below q < 2^127, so the int128 numerators are
// exact; acceptance tests compare these instead of doubles.
struct ExactScaled {
  uint32_t rows, cols;
  unsigned log2_den;  // denominator is 2^log2_den
  std::vector<int128> num;

  int128 at(uint32_t i, uint32_t j) const { return num[size_t(i) * cols + j]; }
};

inline ExactScaled decode_2l_exact(const ZqMatrix& z, FixedPointSpec spec) {
  ExactScaled e{z.rows(), z.cols(), 2 * spec.l, {}};
  e.num.assign(z.data(), z.data() + z.size());
  return e;
}

// Z = 2^(-2l) * centered(Z_bar) in floating point. The long double mantissa
// holds protocol-scale numerators exactly; callers needing exactness use
// decode_2l_exact.
inline RealMatrix decode_2l(const ZqMatrix& z, FixedPointSpec spec) {
  RealMatrix r(z.rows(), z.cols());
  for (uint32_t i = 0; i < z.rows(); ++i)
    for (uint32_t j = 0; j < z.cols(); ++j)
      r(i, j) = double(ldexpl((long double)z(i, j), -2 * int(spec.l)));
  return r;
}

}  // namespace l2pc
