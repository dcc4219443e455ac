#include "l2pc/ring.hpp"

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

namespace {

using namespace l2pc;
using bigint = boost::multiprecision::cpp_int;

bigint to_big(int128 v) {
  bool neg = v < 0;
  uint128 u = neg ? uint128(0) - uint128(v) : uint128(v);
  bigint b = bigint(uint64_t(u >> 64));
  b <<= 64;
  b += uint64_t(u);
  return neg ? -b : b;
}

// Independent oracle: centered reduction by the definition formula, in
// arbitrary precision.
bigint reduce_big(const bigint& x, const bigint& q) {
  bigint m = x % q;
  if (m < 0) m += q;
  return m < (q + 1) / 2 ? m : m - q;
}

ZqMatrix random_matrix(std::mt19937_64& gen, uint32_t rows, uint32_t cols,
                       Modulus m) {
  ZqMatrix r(rows, cols, m);
  for (size_t i = 0; i < r.size(); ++i) {
    uint128 u = uint128(gen()) << 64 | gen();
    r.data()[i] = m.center(u);
  }
  return r;
}

TEST(Reduce, DefinitionExamples) {
  EXPECT_EQ(reduce_mod(7, 5), 2);
  EXPECT_EQ(reduce_mod(-3, 5), 2);
  // Boundary of the centered interval: q/2 wraps to -q/2.
  for (unsigned bits : {2u, 8u, 16u}) {
    int128 q = int128(1) << bits;
    EXPECT_EQ(reduce_mod(q / 2, q), -q / 2);
  }
  EXPECT_THROW(reduce_mod(3, 1), std::invalid_argument);
}

TEST(Reduce, RangeAndCongruence) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 2000; ++trial) {
    int128 q = int128(2) + int128(gen() % 1000003);
    int128 x = int128(gen()) - int128(gen());
    int128 r = reduce_mod(x, q);
    EXPECT_LE(-q, 2 * r);       // r >= -q/2 without integer-division slop
    EXPECT_LT(2 * r, q);        // r < q/2
    EXPECT_EQ((to_big(x) - to_big(r)) % to_big(q), 0);
  }
}

TEST(Reduce, MaskPathMatchesDefinition) {
  std::mt19937_64 gen(2);
  for (unsigned bits : {2u, 3u, 8u, 40u, 64u, 126u}) {
    Modulus m(bits);
    for (int trial = 0; trial < 500; ++trial) {
      int128 x = int128(uint128(gen()) << 64 | gen()) >> (gen() % 120);
      EXPECT_EQ(m.reduce(x), reduce_mod(x, int128(1) << bits));
    }
  }
}

TEST(Modulus, Bounds) {
  EXPECT_THROW(Modulus(1), std::invalid_argument);
  EXPECT_THROW(Modulus(128), std::invalid_argument);
  Modulus m(127);
  EXPECT_EQ(m.center(m.half() - 1), int128(m.half() - 1));
  EXPECT_EQ(m.center(m.half()), -int128(m.half()));
}

TEST(MatAdd, Examples) {
  Modulus q8(3);  // q = 8
  ZqMatrix a(1, 1, q8), b(1, 1, q8);
  a(0, 0) = 1;
  b(0, 0) = -1;
  EXPECT_EQ(mat_add(a, b)(0, 0), 0);
  a(0, 0) = 3;
  b(0, 0) = 3;
  EXPECT_EQ(mat_add(a, b)(0, 0), -2);  // 6 = -2 centered mod 8

  std::mt19937_64 gen(3);
  ZqMatrix x = random_matrix(gen, 4, 5, Modulus(40));
  ZqMatrix zero = mat_add(x, mat_neg(x));
  for (size_t i = 0; i < zero.size(); ++i) EXPECT_EQ(zero.data()[i], 0);

  EXPECT_THROW(mat_add(x, random_matrix(gen, 5, 4, Modulus(40))),
               std::invalid_argument);
  EXPECT_THROW(mat_add(x, random_matrix(gen, 4, 5, Modulus(41))),
               std::invalid_argument);
}

TEST(MatMul, IdentityAndSmallExample) {
  std::mt19937_64 gen(4);
  Modulus m(40);
  ZqMatrix x = random_matrix(gen, 6, 3, m);
  EXPECT_EQ(mat_mul(ZqMatrix::identity(6, m), x), x);

  // [2, 3] . [1, 1]^T = 5 = 1 mod 4; inputs stored centered (2 = -2, 3 = -1).
  Modulus q4(2);
  ZqMatrix a(1, 2, q4), b(2, 1, q4);
  a(0, 0) = q4.reduce(2);
  a(0, 1) = q4.reduce(3);
  b(0, 0) = 1;
  b(1, 0) = 1;
  EXPECT_EQ(mat_mul(a, b)(0, 0), 1);
}

TEST(MatMul, BigIntSchoolbookOracle) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    unsigned bits = 2 + unsigned(gen() % 126);
    Modulus m(bits);
    uint32_t r = 1 + uint32_t(gen() % 6), k = 1 + uint32_t(gen() % 6),
             c = 1 + uint32_t(gen() % 6);
    ZqMatrix x = random_matrix(gen, r, k, m);
    ZqMatrix y = random_matrix(gen, k, c, m);
    ZqMatrix z = mat_mul(x, y);
    bigint q = bigint(1) << bits;
    for (uint32_t i = 0; i < r; ++i)
      for (uint32_t j = 0; j < c; ++j) {
        bigint acc = 0;
        for (uint32_t kk = 0; kk < k; ++kk)
          acc += to_big(x(i, kk)) * to_big(y(kk, j));
        EXPECT_EQ(to_big(z(i, j)), reduce_big(acc, q));
      }
  }
}

TEST(MatMul, DistributesOverAddition) {
  std::mt19937_64 gen(6);
  Modulus m(61);
  for (int trial = 0; trial < 50; ++trial) {
    ZqMatrix a = random_matrix(gen, 3, 4, m);
    ZqMatrix b = random_matrix(gen, 4, 2, m);
    ZqMatrix c = random_matrix(gen, 4, 2, m);
    EXPECT_EQ(mat_mul(a, mat_add(b, c)), mat_add(mat_mul(a, b), mat_mul(a, c)));
  }
  EXPECT_THROW(mat_mul(random_matrix(gen, 2, 3, m), random_matrix(gen, 2, 3, m)),
               std::invalid_argument);
}

TEST(Transpose, Examples) {
  std::mt19937_64 gen(7);
  ZqMatrix x = random_matrix(gen, 5, 3, Modulus(32));
  EXPECT_EQ(mat_transpose(mat_transpose(x)), x);

  ZqMatrix one = random_matrix(gen, 1, 1, Modulus(8));
  EXPECT_EQ(mat_transpose(one), one);

  Modulus m(8);
  ZqMatrix a(2, 2, m);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  ZqMatrix t = mat_transpose(a);
  EXPECT_EQ(t(0, 0), 1);
  EXPECT_EQ(t(0, 1), 3);
  EXPECT_EQ(t(1, 0), 2);
  EXPECT_EQ(t(1, 1), 4);
}

TEST(Serialization, RoundTripAndValidation) {
  std::mt19937_64 gen(8);
  for (unsigned bits : {2u, 17u, 64u, 108u, 127u}) {
    Modulus m(bits);
    ZqMatrix x = random_matrix(gen, 3, 7, m);
    auto bytes = serialize_matrix(x);
    EXPECT_EQ(bytes.size(), kMatrixHeaderBytes + 21 * kEntryBytes);
    EXPECT_EQ(deserialize_matrix(bytes), x);
  }

  ZqMatrix x = random_matrix(gen, 2, 2, Modulus(16));
  auto bytes = serialize_matrix(x);

  auto bad_bits = bytes;
  bad_bits[8] = 0;  // q_bits = 0
  bad_bits[9] = 0;
  EXPECT_THROW(deserialize_matrix(bad_bits), std::runtime_error);

  auto out_of_range = bytes;
  // Force an entry to +q/2 (= 32768), one past the centered max.
  for (int i = 0; i < 16; ++i) out_of_range[kMatrixHeaderBytes + i] = 0;
  out_of_range[kMatrixHeaderBytes + 1] = 0x80;
  EXPECT_THROW(deserialize_matrix(out_of_range), std::runtime_error);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize_matrix(trailing), std::runtime_error);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(deserialize_matrix(truncated), std::runtime_error);
}

TEST(MaxNorm, Basics) {
  Modulus m(16);
  ZqMatrix x(2, 2, m);
  x(0, 0) = -5;
  x(1, 1) = 3;
  EXPECT_EQ(mat_max_norm(x), uint128(5));
}

}  // namespace
