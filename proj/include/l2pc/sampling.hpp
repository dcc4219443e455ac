#pragma once

// Deterministic, seedable randomness. Every "x <-$ X" step in the protocol
// draws from an RngStream: a ChaCha20 keystream (djb variant, 20 rounds)
// keyed by a 32-byte seed with the 64-bit stream id in the nonce words and
// a 64-bit block counter. Identical (seed, stream_id) produce bit-identical
// output on every platform; distinct stream ids give independent streams.
//
// Stream id layout (documented so test vectors are reproducible):
//   bits 56..63  role   (party0=0, party1=1, client=2, operator=3, setup=4)
//   bits 48..55  phase  (setup=0, offline=1, online=2, aux=3)
//   bits 32..47  tag    (object being sampled, see StreamTag)
//   bits  0..31  index  (column index, time step tau, ...)

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2pc/ring.hpp"

namespace l2pc {

using Seed = std::array<uint8_t, 32>;

// Parses a 64-hex-char seed string (the CLI/config surface).
inline Seed parse_seed_hex(const std::string& hex) {
  if (hex.size() != 64)
    throw std::invalid_argument("seed must be 64 hex characters");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("seed: invalid hex character");
  };
  Seed s{};
  for (size_t i = 0; i < 32; ++i)
    s[i] = uint8_t(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  return s;
}

enum class Role : uint8_t { party0 = 0, party1 = 1, client = 2, operator_ = 3, setup = 4 };
enum class Phase : uint8_t { setup = 0, offline = 1, online = 2, aux = 3 };
enum class StreamTag : uint16_t {
  crs_a = 0,
  crs_b_col = 1,   // index = column of B
  secret_s = 2,
  noise_e = 3,
  noise_e_prime = 4,
  share_s = 5,
  share_y = 6,     // index = step tau
  share_v = 7,     // index = step tau
  rand_r = 8,      // index = step tau
  input = 9,
  aux = 15,
};

constexpr uint64_t stream_id(Role role, Phase phase, StreamTag tag, uint32_t index = 0) {
  return uint64_t(role) << 56 | uint64_t(phase) << 48 | uint64_t(tag) << 32 |
         uint64_t(index);
}

namespace detail {

inline uint32_t rotl32(uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

// One ChaCha20 block: 64 bytes of keystream for (key, counter, nonce).
inline void chacha20_block(const uint32_t key[8], uint64_t counter,
                           uint64_t nonce, uint8_t out[64]) {
  uint32_t s[16] = {0x61707865u, 0x3320646eu, 0x79622d32u, 0x6b206574u,
                    key[0],      key[1],      key[2],      key[3],
                    key[4],      key[5],      key[6],      key[7],
                    uint32_t(counter), uint32_t(counter >> 32),
                    uint32_t(nonce),   uint32_t(nonce >> 32)};
  uint32_t w[16];
  std::memcpy(w, s, sizeof(w));
  auto qr = [&](int a, int b, int c, int d) {
    w[a] += w[b]; w[d] ^= w[a]; w[d] = rotl32(w[d], 16);
    w[c] += w[d]; w[b] ^= w[c]; w[b] = rotl32(w[b], 12);
    w[a] += w[b]; w[d] ^= w[a]; w[d] = rotl32(w[d], 8);
    w[c] += w[d]; w[b] ^= w[c]; w[b] = rotl32(w[b], 7);
  };
  for (int i = 0; i < 10; ++i) {
    qr(0, 4, 8, 12); qr(1, 5, 9, 13); qr(2, 6, 10, 14); qr(3, 7, 11, 15);
    qr(0, 5, 10, 15); qr(1, 6, 11, 12); qr(2, 7, 8, 13); qr(3, 4, 9, 14);
  }
  for (int i = 0; i < 16; ++i) {
    uint32_t v = w[i] + s[i];
    out[4 * i + 0] = uint8_t(v);
    out[4 * i + 1] = uint8_t(v >> 8);
    out[4 * i + 2] = uint8_t(v >> 16);
    out[4 * i + 3] = uint8_t(v >> 24);
  }
}

// Eight consecutive blocks at once, laid out lane-wise so the quarter-round
// loops auto-vectorize. Keystream bytes are identical to eight
// chacha20_block calls with counters counter..counter+7.
inline void chacha20_blocks8(const uint32_t key[8], uint64_t counter,
                             uint64_t nonce, uint8_t out[512]) {
  constexpr int L = 8;
  uint32_t w[16][L];
  const uint32_t init[12] = {0x61707865u, 0x3320646eu, 0x79622d32u, 0x6b206574u,
                             key[0], key[1], key[2], key[3],
                             key[4], key[5], key[6], key[7]};
  for (int i = 0; i < 12; ++i)
    for (int l = 0; l < L; ++l) w[i][l] = init[i];
  for (int l = 0; l < L; ++l) {
    uint64_t c = counter + uint64_t(l);
    w[12][l] = uint32_t(c);
    w[13][l] = uint32_t(c >> 32);
    w[14][l] = uint32_t(nonce);
    w[15][l] = uint32_t(nonce >> 32);
  }

  auto qr = [&](int a, int b, int c, int d) {
    for (int l = 0; l < L; ++l) w[a][l] += w[b][l];
    for (int l = 0; l < L; ++l) w[d][l] = rotl32(w[d][l] ^ w[a][l], 16);
    for (int l = 0; l < L; ++l) w[c][l] += w[d][l];
    for (int l = 0; l < L; ++l) w[b][l] = rotl32(w[b][l] ^ w[c][l], 12);
    for (int l = 0; l < L; ++l) w[a][l] += w[b][l];
    for (int l = 0; l < L; ++l) w[d][l] = rotl32(w[d][l] ^ w[a][l], 8);
    for (int l = 0; l < L; ++l) w[c][l] += w[d][l];
    for (int l = 0; l < L; ++l) w[b][l] = rotl32(w[b][l] ^ w[c][l], 7);
  };
  for (int i = 0; i < 10; ++i) {
    qr(0, 4, 8, 12); qr(1, 5, 9, 13); qr(2, 6, 10, 14); qr(3, 7, 11, 15);
    qr(0, 5, 10, 15); qr(1, 6, 11, 12); qr(2, 7, 8, 13); qr(3, 4, 9, 14);
  }

  for (int l = 0; l < L; ++l) {
    uint8_t* o = out + 64 * l;
    for (int i = 0; i < 16; ++i) {
      uint32_t v = w[i][l];
      if (i < 12) v += init[i];
      else if (i == 12) v += uint32_t(counter + uint64_t(l));
      else if (i == 13) v += uint32_t((counter + uint64_t(l)) >> 32);
      else if (i == 14) v += uint32_t(nonce);
      else v += uint32_t(nonce >> 32);
      o[4 * i + 0] = uint8_t(v);
      o[4 * i + 1] = uint8_t(v >> 8);
      o[4 * i + 2] = uint8_t(v >> 16);
      o[4 * i + 3] = uint8_t(v >> 24);
    }
  }
}

}  // namespace detail

// Single-owner sequential keystream reader. Parallel sampling uses disjoint
// stream ids, never a shared RngStream.
class RngStream {
 public:
  RngStream(const Seed& seed, uint64_t stream_id) : stream_id_(stream_id) {
    for (int i = 0; i < 8; ++i) {
      key_[i] = uint32_t(seed[4 * i]) | uint32_t(seed[4 * i + 1]) << 8 |
                uint32_t(seed[4 * i + 2]) << 16 | uint32_t(seed[4 * i + 3]) << 24;
    }
  }

  uint64_t id() const { return stream_id_; }

  void fill_bytes(std::span<uint8_t> out) {
    size_t off = 0;
    // Drain any buffered remainder first so large and small reads interleave
    // into one contiguous keystream.
    while (off < out.size() && pos_ < 64) {
      out[off++] = buf_[pos_++];
    }
    while (out.size() - off >= 512) {
      detail::chacha20_blocks8(key_, counter_, stream_id_, out.data() + off);
      counter_ += 8;
      off += 512;
    }
    while (out.size() - off >= 64) {
      detail::chacha20_block(key_, counter_++, stream_id_, out.data() + off);
      off += 64;
    }
    while (off < out.size()) {
      if (pos_ == 64) refill();
      size_t n = std::min(out.size() - off, size_t(64 - pos_));
      std::memcpy(out.data() + off, buf_ + pos_, n);
      pos_ += n;
      off += n;
    }
  }

  uint64_t next_u64() {
    uint8_t b[8];
    fill_bytes(b);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
  }

  uint128 next_u128() {
    uint8_t b[16];
    fill_bytes(b);
    uint128 v = 0;
    for (int i = 0; i < 16; ++i) v |= uint128(b[i]) << (8 * i);
    return v;
  }

  uint8_t next_u8() {
    uint8_t b;
    fill_bytes({&b, 1});
    return b;
  }

 private:
  void refill() {
    detail::chacha20_block(key_, counter_++, stream_id_, buf_);
    pos_ = 0;
  }

  uint32_t key_[8];
  uint64_t stream_id_;
  uint64_t counter_ = 0;
  uint8_t buf_[64];
  uint8_t pos_ = 64;
};

// Uniform over the centered interval [-q/2, q/2). Consumes exactly 16 bytes
// per entry (mask the low q_bits of a 128-bit draw, then center), so column
// layouts are position-deterministic.
inline ZqMatrix sample_uniform_zq(RngStream& rng, uint32_t rows, uint32_t cols,
                                  Modulus m) {
  ZqMatrix r(rows, cols, m);
  for (size_t i = 0; i < r.size(); ++i) r.data()[i] = m.center(rng.next_u128());
  return r;
}

// Bounded discrete Gaussian per rho_sigma(x) = exp(-pi x^2 / sigma^2),
// truncated and renormalized on [-B, B]. The support bound is structural:
// no sample can ever leave [-B, B].
struct GaussianSpec {
  double sigma;
  int bound;

  static GaussianSpec from_sigma(double sigma) {
    if (!(sigma > 0)) throw std::invalid_argument("GaussianSpec: sigma <= 0");
    return GaussianSpec{sigma, int(std::ceil(10.0 * sigma))};
  }
};

// Inverse-CDF sampler over a precomputed 64-bit fixed-point cumulative table
// on [-B, B] (2B+1 entries). One u64 draw per sample.
class GaussianSampler {
 public:
  static constexpr long double kPi = 3.14159265358979323846264338327950288L;

  explicit GaussianSampler(GaussianSpec spec) : spec_(spec) {
    if (!(spec.sigma > 0) || spec.bound < 0)
      throw std::invalid_argument("GaussianSampler: bad spec");
    const int B = spec.bound;
    std::vector<long double> w(2 * B + 1);
    long double total = 0;
    for (int x = -B; x <= B; ++x) {
      long double v = expl(-kPi * (long double)(x) * x /
                           ((long double)spec.sigma * spec.sigma));
      w[x + B] = v;
      total += v;
    }
    cum_.resize(2 * B + 1);
    long double run = 0;
    const long double scale = powl(2.0L, 64);
    for (int i = 0; i <= 2 * B; ++i) {
      run += w[i];
      long double c = (run / total) * scale;
      cum_[i] = c >= scale ? UINT64_MAX : uint64_t(c);
    }
    cum_.back() = UINT64_MAX;
  }

  const GaussianSpec& spec() const { return spec_; }

  int sample(RngStream& rng) const {
    uint64_t u = rng.next_u64();
    // First index with u < cum_[i]; the final UINT64_MAX entry catches all.
    size_t lo = 0, hi = cum_.size() - 1;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (u < cum_[mid]) hi = mid; else lo = mid + 1;
    }
    return int(lo) - spec_.bound;
  }

  // Exact truncated PMF, for conformance oracles.
  std::vector<long double> exact_pmf() const {
    const int B = spec_.bound;
    std::vector<long double> p(2 * B + 1);
    long double total = 0;
    for (int x = -B; x <= B; ++x) {
      p[x + B] = expl(-kPi * (long double)(x) * x /
                      ((long double)spec_.sigma * spec_.sigma));
      total += p[x + B];
    }
    for (auto& v : p) v /= total;
    return p;
  }

 private:
  GaussianSpec spec_;
  std::vector<uint64_t> cum_;
};

inline ZqMatrix sample_gaussian(RngStream& rng, uint32_t rows, uint32_t cols,
                                const GaussianSampler& g, Modulus m) {
  ZqMatrix r(rows, cols, m);
  for (size_t i = 0; i < r.size(); ++i) r.data()[i] = g.sample(rng);
  return r;
}

inline ZqMatrix sample_gaussian(RngStream& rng, uint32_t rows, uint32_t cols,
                                GaussianSpec spec, Modulus m) {
  GaussianSampler g(spec);
  return sample_gaussian(rng, rows, cols, g, m);
}

// Uniform over Z_3 = {-1, 0, 1}, stored as residues mod q. Rejection on a
// byte keeps the three values exactly equiprobable.
inline ZqMatrix sample_z3(RngStream& rng, uint32_t rows, uint32_t cols,
                          Modulus m) {
  ZqMatrix r(rows, cols, m);
  for (size_t i = 0; i < r.size(); ++i) {
    uint8_t b;
    do {
      b = rng.next_u8();
    } while (b >= 252);
    r.data()[i] = int128(b % 3) - 1;
  }
  return r;
}

}  // namespace l2pc
