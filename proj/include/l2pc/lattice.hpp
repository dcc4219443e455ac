#pragma once

// LWE matrix encryption and SIS matrix commitment, the two linear
// primitives the protocol combines:
//   lwe_encrypt: C = A^T S + M + E mod q
//   sis_commit:  H = A M + B R mod q
// Noise and commitment randomness are explicit parameters so tests can
// replay exact values; callers sample them fresh in production paths.
// No decryption is exposed: the protocol reconstructs shares instead.

#include "l2pc/ring.hpp"

namespace l2pc {

struct LweParams {
  uint32_t n;
  Modulus modulus;
  double sigma;

  LweParams(uint32_t n_, Modulus m, double sigma_)
      : n(n_), modulus(m), sigma(sigma_) {
    if (n < 1) throw std::invalid_argument("LweParams: n must be >= 1");
    if (!(sigma > 0)) throw std::invalid_argument("LweParams: sigma must be > 0");
  }
};

struct SisParams {
  uint32_t t;

  explicit SisParams(uint32_t t_) : t(t_) {
    if (t < 1) throw std::invalid_argument("SisParams: t must be >= 1");
  }
};

// A: n x m, S: n x c, M: m x c, E: m x c -> m x c ciphertext.
inline ZqMatrix lwe_encrypt(const ZqMatrix& a, const ZqMatrix& s,
                            const ZqMatrix& m, const ZqMatrix& e) {
  if (a.rows() != s.rows())
    throw std::invalid_argument("lwe_encrypt: A/S dimension mismatch");
  ZqMatrix c = mat_mul(mat_transpose(a), s);
  detail::require_same_shape(c, m, "lwe_encrypt");
  return mat_add(mat_add(c, m), e);
}

// A: n x m, B: n x t, M: m x c, R: t x c -> n x c commitment. R is short
// (entries in {-2,...,2} under the distributed-share construction).
inline ZqMatrix sis_commit(const ZqMatrix& a, const ZqMatrix& b,
                           const ZqMatrix& m, const ZqMatrix& r) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("sis_commit: A/B dimension mismatch");
  return mat_add(mat_mul(a, m), mat_mul(b, r));
}

}  // namespace l2pc
