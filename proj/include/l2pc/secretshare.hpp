#pragma once

// Two-party additive secret sharing over Z_q with local homomorphic share
// algebra: Share(X) = (R, X - R mod q), Reconst adds the parts back.
// SharePair bundles both parts for tests and the client/dealer; protocol
// roles only ever hold a single part.

#include "l2pc/ring.hpp"
#include "l2pc/sampling.hpp"

namespace l2pc {

struct SharePair {
  ZqMatrix part0;
  ZqMatrix part1;

  const ZqMatrix& part(int i) const { return i == 0 ? part0 : part1; }
};

// Test hook: sharing with caller-supplied randomness R.
inline SharePair share_with_randomness(const ZqMatrix& x, const ZqMatrix& r) {
  detail::require_same_shape(x, r, "share");
  return SharePair{r, mat_sub(x, r)};
}

inline SharePair share(const ZqMatrix& x, RngStream& rng) {
  ZqMatrix r = sample_uniform_zq(rng, x.rows(), x.cols(), x.modulus());
  return share_with_randomness(x, r);
}

inline ZqMatrix reconst(const ZqMatrix& part0, const ZqMatrix& part1) {
  return mat_add(part0, part1);
}

inline ZqMatrix reconst(const SharePair& s) { return reconst(s.part0, s.part1); }

// [X] + [Y] = [X + Y mod q]; each party touches only its own part.
inline SharePair share_add(const SharePair& a, const SharePair& b) {
  return SharePair{mat_add(a.part0, b.part0), mat_add(a.part1, b.part1)};
}

inline SharePair share_sub(const SharePair& a, const SharePair& b) {
  return SharePair{mat_sub(a.part0, b.part0), mat_sub(a.part1, b.part1)};
}

// X [Y] = [X Y mod q] for a public matrix X.
inline SharePair share_mul_left(const ZqMatrix& x, const SharePair& s) {
  return SharePair{mat_mul(x, s.part0), mat_mul(x, s.part1)};
}

// [X] Y = [X Y mod q] for a public matrix Y.
inline SharePair share_mul_right(const SharePair& s, const ZqMatrix& y) {
  return SharePair{mat_mul(s.part0, y), mat_mul(s.part1, y)};
}

// [X]^T = ([X]_0^T, [X]_1^T).
inline SharePair share_transpose(const SharePair& s) {
  return SharePair{mat_transpose(s.part0), mat_transpose(s.part1)};
}

// Distributed-share constructor for the online randomness R: each party
// samples its own part locally, so R = Reconst([R]) has entries in
// {-2,...,2} and is never materialized by any single honest party. Both
// parts live here only in tests and the in-process harness.
inline SharePair sample_z3_share_pair(RngStream& rng0, RngStream& rng1,
                                      uint32_t rows, uint32_t cols, Modulus m) {
  return SharePair{sample_z3(rng0, rows, cols, m),
                   sample_z3(rng1, rows, cols, m)};
}

}  // namespace l2pc
