#include "l2pc/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>

namespace {

using namespace l2pc;

Seed test_seed(uint8_t fill) {
  Seed s{};
  s.fill(fill);
  return s;
}

Seed counting_seed() {
  Seed s{};
  for (int i = 0; i < 32; ++i) s[i] = uint8_t(i);
  return s;
}

std::string hex(std::span<const uint8_t> b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (uint8_t v : b) {
    s.push_back(d[v >> 4]);
    s.push_back(d[v & 15]);
  }
  return s;
}

// Chi-square critical value via the Wilson-Hilferty approximation.
double chi2_critical(double df, double z) {
  double c = 2.0 / (9.0 * df);
  double t = 1.0 - c + z * std::sqrt(c);
  return df * t * t * t;
}

TEST(ChaCha, KnownAnswer) {
  // Vectors cross-checked against the pyca/cryptography ChaCha20
  // implementation with nonce = counter64 || stream_id64 (original djb
  // layout), and against the classic all-zero test vector.
  RngStream rng(counting_seed(), 0x0123456789abcdefULL);
  uint8_t out[128];
  rng.fill_bytes(out);
  EXPECT_EQ(hex({out, 64}),
            "2ef441c1f0220993293056c89fc59053bc3b2743e435c49ce1ef9ecd8170a350"
            "44d6664395d5a01f84b82f1f0c87701186efd87cfe32136698e81567b54a6e85");
  EXPECT_EQ(hex({out + 64, 64}),
            "6aa16307e91e61961f4d4662f553f7a4376dcdf86a34c02f9b50d9f3f5de2b61"
            "42f165d9a3ef4cea500c5ce97d7e7c4ae4a961159ac8193cb3adb65c8fa20bc5");

  RngStream zero(test_seed(0), 0);
  uint8_t z[32];
  zero.fill_bytes(z);
  EXPECT_EQ(hex({z, 32}),
            "76b8e0ada0f13d90405d6ae55386bd28bdd219b8a08ded1aa836efcc8b770dc7");
}

TEST(SeedParsing, HexRoundTrip) {
  std::string hexstr =
      "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";
  EXPECT_EQ(parse_seed_hex(hexstr), counting_seed());
  EXPECT_THROW(parse_seed_hex("abc"), std::invalid_argument);
  std::string bad = hexstr;
  bad[3] = 'g';
  EXPECT_THROW(parse_seed_hex(bad), std::invalid_argument);
}

TEST(UniformZq, RangeAndDeterminism) {
  for (unsigned bits : {2u, 8u, 40u, 108u, 127u}) {
    Modulus m(bits);
    RngStream rng(test_seed(1), stream_id(Role::setup, Phase::setup, StreamTag::crs_a));
    ZqMatrix x = sample_uniform_zq(rng, 16, 16, m);
    int128 hi = int128(m.half());
    for (size_t i = 0; i < x.size(); ++i) {
      EXPECT_GE(x.data()[i], -hi);
      EXPECT_LT(x.data()[i], hi);
    }
    RngStream rng2(test_seed(1), stream_id(Role::setup, Phase::setup, StreamTag::crs_a));
    EXPECT_EQ(sample_uniform_zq(rng2, 16, 16, m), x);
  }
}

TEST(UniformZq, DistinctStreamsDiffer) {
  Modulus m(64);
  RngStream a(test_seed(2), 1), b(test_seed(2), 2);
  ZqMatrix xa = sample_uniform_zq(a, 32, 32, m);
  ZqMatrix xb = sample_uniform_zq(b, 32, 32, m);
  size_t same = 0;
  for (size_t i = 0; i < xa.size(); ++i) same += xa.data()[i] == xb.data()[i];
  EXPECT_LT(same, 3u);  // collisions of 64-bit values are negligible

  // Correlation smoke across streams: map draws to [0,1) and correlate.
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const int n = 10000;
  RngStream s1(test_seed(3), 101), s2(test_seed(3), 102);
  for (int i = 0; i < n; ++i) {
    double u = double(s1.next_u64()) / double(UINT64_MAX);
    double v = double(s2.next_u64()) / double(UINT64_MAX);
    sx += u; sy += v; sxx += u * u; syy += v * v; sxy += u * v;
  }
  double cov = sxy / n - (sx / n) * (sy / n);
  double vx = sxx / n - (sx / n) * (sx / n);
  double vy = syy / n - (sy / n) * (sy / n);
  EXPECT_LT(std::fabs(cov / std::sqrt(vx * vy)), 0.05);
}

TEST(UniformZq, ChiSquareUniformity) {
  // 10^6 samples at q = 2^8 over 256 bins; statistic below the 0.999
  // quantile (p-value > 0.001).
  Modulus m(8);
  RngStream rng(test_seed(4), 42);
  const int n = 1'000'000;
  std::vector<uint32_t> bins(256, 0);
  ZqMatrix x = sample_uniform_zq(rng, 1000, 1000, m);
  for (size_t i = 0; i < x.size(); ++i) ++bins[size_t(x.data()[i] + 128)];
  double expect = double(n) / 256.0;
  double stat = 0;
  for (uint32_t b : bins) {
    double d = double(b) - expect;
    stat += d * d / expect;
  }
  EXPECT_LT(stat, chi2_critical(255.0, 3.090232));
}

TEST(Gaussian, SpecAndSupport) {
  GaussianSpec spec = GaussianSpec::from_sigma(3.2);
  EXPECT_EQ(spec.bound, 32);
  EXPECT_THROW(GaussianSpec::from_sigma(0.0), std::invalid_argument);

  Modulus m(40);
  RngStream rng(test_seed(5), 7);
  ZqMatrix x = sample_gaussian(rng, 1000, 100, spec, m);
  for (size_t i = 0; i < x.size(); ++i) {
    EXPECT_LE(x.data()[i], 32);
    EXPECT_GE(x.data()[i], -32);
  }
}

TEST(Gaussian, MomentsMatchExactTruncatedDistribution) {
  GaussianSampler g(GaussianSpec::from_sigma(3.2));

  // Exact mean/variance by direct summation of rho_sigma over [-32, 32].
  auto pmf = g.exact_pmf();
  long double mean = 0, var = 0;
  for (int x = -32; x <= 32; ++x) mean += x * pmf[x + 32];
  for (int x = -32; x <= 32; ++x)
    var += (x - mean) * (x - mean) * pmf[x + 32];
  double exact_std = double(sqrtl(var));

  RngStream rng(test_seed(6), 8);
  const int n = 1'000'000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    int s = g.sample(rng);
    sum += s;
    sumsq += double(s) * s;
  }
  double emp_mean = sum / n;
  double emp_std = std::sqrt(sumsq / n - emp_mean * emp_mean);
  EXPECT_NEAR(emp_mean, 0.0, 0.02);
  EXPECT_NEAR(emp_std, exact_std, 0.02 * exact_std);
}

TEST(Gaussian, PmfTotalVariationSmoke) {
  // Smaller-N companion of the acceptance criterion (10^7 there).
  GaussianSampler g(GaussianSpec::from_sigma(3.2));
  auto pmf = g.exact_pmf();
  RngStream rng(test_seed(7), 9);
  const int n = 1'000'000;
  std::vector<uint64_t> counts(65, 0);
  for (int i = 0; i < n; ++i) ++counts[size_t(g.sample(rng) + 32)];
  long double tv = 0;
  for (int i = 0; i < 65; ++i)
    tv += fabsl((long double)counts[i] / n - pmf[i]);
  EXPECT_LT(double(tv / 2), 3e-3);
}

TEST(Z3, SupportFrequenciesDeterminism) {
  Modulus m(16);
  RngStream rng(test_seed(8), 10);
  const uint32_t rows = 1000, cols = 100;  // 10^5 draws
  ZqMatrix x = sample_z3(rng, rows, cols, m);
  uint64_t counts[3] = {0, 0, 0};
  for (size_t i = 0; i < x.size(); ++i) {
    int128 v = x.data()[i];
    ASSERT_TRUE(v == -1 || v == 0 || v == 1);
    ++counts[size_t(v + 1)];
  }
  double n = double(x.size());
  double sigma3 = 3.0 * std::sqrt((1.0 / 3) * (2.0 / 3) / n);
  for (auto c : counts) EXPECT_NEAR(double(c) / n, 1.0 / 3, sigma3);

  RngStream rng2(test_seed(8), 10);
  EXPECT_EQ(sample_z3(rng2, rows, cols, m), x);
}

}  // namespace
