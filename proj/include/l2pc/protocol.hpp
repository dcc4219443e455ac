#pragma once

// The Mult protocol as explicit role state machines: Setup produces a seed-
// expandable CRS (A, B); Offline encrypts the time-invariant input X into
// (C, C') and shares the LWE secret; Online evaluates one product per step
// with a single H-share exchange between the parties.
//
// B (n x t) is never materialized at paper scale (~49 GB): every kernel
// streams it column-by-column from the CRS expander, so memory stays
// O(n * chunk). Column c of B is its own keystream, making expansion
// seekable and parallelizable.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "l2pc/fixedpoint.hpp"
#include "l2pc/lattice.hpp"
#include "l2pc/params.hpp"
#include "l2pc/ring.hpp"
#include "l2pc/sampling.hpp"
#include "l2pc/secretshare.hpp"
#include "l2pc/transport.hpp"

namespace l2pc {

namespace detail {

inline unsigned thread_count() {
  if (const char* e = std::getenv("L2PC_THREADS")) {
    int v = std::atoi(e);
    if (v > 0) return unsigned(v);
  }
  unsigned h = std::thread::hardware_concurrency();
  return h ? h : 1;
}

// Splits [0, n) into per-worker ranges; fn(worker, begin, end). Workers must
// not throw.
template <class F>
void parallel_chunks(uint64_t n, F&& fn) {
  uint64_t workers = std::min<uint64_t>(thread_count(), n ? n : 1);
  if (workers <= 1) {
    fn(0, 0, n);
    return;
  }
  uint64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> ts;
  for (uint64_t w = 0; w < workers; ++w) {
    uint64_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    ts.emplace_back([&fn, w, b, e] { fn(unsigned(w), b, e); });
  }
  for (auto& t : ts) t.join();
}

}  // namespace detail

// --- Common reference string -------------------------------------------------

struct Crs {
  Seed seed;  // setup seed; A and every column of B re-derive from it
  uint32_t n, d2, t;
  Modulus mod;
  ZqMatrix a;  // n x d2, materialized (small)
};

inline Crs make_crs(const ProtocolParams& p, const Seed& setup_seed) {
  RngStream rng(setup_seed, stream_id(Role::setup, Phase::setup, StreamTag::crs_a));
  ZqMatrix a = sample_uniform_zq(rng, p.lwe.n, p.dims.d2, p.lwe.modulus);
  return Crs{setup_seed, p.lwe.n, p.dims.d2, uint32_t(p.sis.t), p.lwe.modulus,
             std::move(a)};
}

// Expands column `col` of B (n centered entries) into `out`.
inline void expand_b_column(const Crs& crs, uint32_t col, int128* out) {
  RngStream rng(crs.seed,
                stream_id(Role::setup, Phase::setup, StreamTag::crs_b_col, col));
  for (uint32_t i = 0; i < crs.n; ++i) out[i] = crs.mod.center(rng.next_u128());
}

// Full B as a matrix; small t only (tests and oracles).
inline ZqMatrix materialize_b(const Crs& crs) {
  ZqMatrix b(crs.n, crs.t, crs.mod);
  std::vector<int128> col(crs.n);
  for (uint32_t c = 0; c < crs.t; ++c) {
    expand_b_column(crs, c, col.data());
    for (uint32_t i = 0; i < crs.n; ++i) b(i, c) = col[i];
  }
  return b;
}

// B * R for R (t x d3) without materializing B: sum of columns of B scaled
// by rows of R, accumulated mod 2^128 (bit-identical for any worker count or
// summation order). Columns whose R row is all zero are skipped entirely.
inline ZqMatrix mul_b_streamed(const Crs& crs, const ZqMatrix& r) {
  if (r.rows() != crs.t || r.modulus() != crs.mod)
    throw std::invalid_argument("mul_b_streamed: R shape/modulus mismatch");
  const uint32_t n = crs.n, d3 = r.cols();
  const size_t cells = size_t(n) * d3;

  unsigned workers = unsigned(std::min<uint64_t>(detail::thread_count(), crs.t ? crs.t : 1));
  std::vector<std::vector<uint128>> partial(workers,
                                            std::vector<uint128>(cells, 0));
  detail::parallel_chunks(crs.t, [&](unsigned w, uint64_t b, uint64_t e) {
    std::vector<int128> col(n);
    uint128* acc = partial[w].data();
    for (uint64_t c = b; c < e; ++c) {
      const int128* rrow = r.data() + c * d3;
      bool live = false;
      for (uint32_t j = 0; j < d3; ++j) live |= rrow[j] != 0;
      if (!live) continue;
      expand_b_column(crs, uint32_t(c), col.data());
      for (uint32_t j = 0; j < d3; ++j) {
        const uint128 rv = uint128(rrow[j]);
        if (rv == 0) continue;
        uint128* accj = acc + j;
        for (uint32_t i = 0; i < n; ++i) accj[size_t(i) * d3] += uint128(col[i]) * rv;
      }
    }
  });

  ZqMatrix out(n, d3, crs.mod);
  for (size_t i = 0; i < cells; ++i) {
    uint128 s = 0;
    for (unsigned w = 0; w < workers; ++w) s += partial[w][i];
    out.data()[i] = crs.mod.center(s);
  }
  return out;
}

// B^T * S for S (n x d1) without materializing B; row c of the result is
// column c of B dotted with each column of S. Disjoint output rows per
// column, so workers write without merging.
inline ZqMatrix mul_bt_streamed(const Crs& crs, const ZqMatrix& s) {
  if (s.rows() != crs.n || s.modulus() != crs.mod)
    throw std::invalid_argument("mul_bt_streamed: S shape/modulus mismatch");
  const uint32_t n = crs.n, d1 = s.cols();
  ZqMatrix out(crs.t, d1, crs.mod);

  detail::parallel_chunks(crs.t, [&](unsigned, uint64_t b, uint64_t e) {
    std::vector<int128> col(n);
    std::vector<uint128> acc(d1);
    for (uint64_t c = b; c < e; ++c) {
      expand_b_column(crs, uint32_t(c), col.data());
      std::fill(acc.begin(), acc.end(), uint128(0));
      for (uint32_t i = 0; i < n; ++i) {
        const uint128 bv = uint128(col[i]);
        if (bv == 0) continue;
        const int128* srow = s.data() + size_t(i) * d1;
        for (uint32_t j = 0; j < d1; ++j) acc[j] += bv * uint128(srow[j]);
      }
      for (uint32_t j = 0; j < d1; ++j) out(uint32_t(c), j) = crs.mod.center(acc[j]);
    }
  });
  return out;
}

// --- Offline phase -----------------------------------------------------------

struct OfflineMaterial {
  ZqMatrix c;        // d2 x d1
  ZqMatrix c_prime;  // t x d1
  ZqMatrix s_share;  // one part of [S], n x d1
};

struct OfflineBundle {
  OfflineMaterial p0, p1;
};

// Test-mode hooks, off by default: `overrides` forces S/E/E' (e.g. to zero),
// `exposure` captures the sampled values for oracle checks.
struct OfflineOverrides {
  const ZqMatrix* s = nullptr;
  const ZqMatrix* e = nullptr;
  const ZqMatrix* e_prime = nullptr;
};

struct OfflineExposure {
  std::optional<ZqMatrix> s, e, e_prime;
};

inline OfflineBundle offline(const Crs& crs, const ProtocolParams& p,
                             const FixedPointMatrix& x, const Seed& client_seed,
                             const OfflineOverrides* ov = nullptr,
                             OfflineExposure* exposure = nullptr) {
  if (x.rows() != p.dims.d1 || x.cols() != p.dims.d2)
    throw std::invalid_argument("offline: X must be d1 x d2");
  if (!(x.spec() == p.fp))
    throw std::invalid_argument("offline: X fixed-point spec mismatch");
  const Modulus mod = p.lwe.modulus;
  GaussianSampler gauss(GaussianSpec::from_sigma(p.lwe.sigma));

  auto draw = [&](StreamTag tag, uint32_t rows, uint32_t cols,
                  const ZqMatrix* forced) {
    if (forced) {
      if (forced->rows() != rows || forced->cols() != cols)
        throw std::invalid_argument("offline: override shape mismatch");
      return *forced;
    }
    RngStream rng(client_seed, stream_id(Role::client, Phase::offline, tag));
    return sample_gaussian(rng, rows, cols, gauss, mod);
  };

  ZqMatrix s = draw(StreamTag::secret_s, crs.n, p.dims.d1, ov ? ov->s : nullptr);
  ZqMatrix e = draw(StreamTag::noise_e, p.dims.d2, p.dims.d1, ov ? ov->e : nullptr);
  ZqMatrix e_prime =
      draw(StreamTag::noise_e_prime, crs.t, p.dims.d1, ov ? ov->e_prime : nullptr);

  ZqMatrix x_bar_t = mat_transpose(encode_l(x, mod));        // d2 x d1
  ZqMatrix c = lwe_encrypt(crs.a, s, x_bar_t, e);            // A^T S + X^T + E
  ZqMatrix c_prime = mat_add(mul_bt_streamed(crs, s), e_prime);  // B^T S + E'

  RngStream share_rng(client_seed,
                      stream_id(Role::client, Phase::offline, StreamTag::share_s));
  SharePair s_shares = share(s, share_rng);

  if (exposure) {
    exposure->s = s;
    exposure->e = e;
    exposure->e_prime = e_prime;
  }
  return OfflineBundle{OfflineMaterial{c, c_prime, s_shares.part0},
                       OfflineMaterial{c, c_prime, s_shares.part1}};
}

// --- Client / operator online helpers ----------------------------------------

inline SharePair client_make_y_shares(const FixedPointMatrix& y, Modulus mod,
                                      const Seed& client_seed, uint64_t tau) {
  ZqMatrix y_bar = encode_l(y, mod);
  RngStream rng(client_seed, stream_id(Role::client, Phase::online,
                                       StreamTag::share_y, uint32_t(tau)));
  return share(y_bar, rng);
}

inline SharePair operator_make_v_shares(const FixedPointMatrix& v, Modulus mod,
                                        const Seed& operator_seed, uint64_t tau) {
  ZqMatrix v_bar = encode_2l(v, mod);
  RngStream rng(operator_seed, stream_id(Role::operator_, Phase::online,
                                         StreamTag::share_v, uint32_t(tau)));
  return share(v_bar, rng);
}

// Z = 2^(-2l) Reconst([Z]).
inline RealMatrix client_online_finish(const ZqMatrix& z0, const ZqMatrix& z1,
                                       FixedPointSpec spec) {
  return decode_2l(reconst(z0, z1), spec);
}

// --- Party state machine ------------------------------------------------------

// One computing party. Holds exactly one part of every shared value; steps
// must arrive with strictly increasing tau (replays rejected) and phase2
// requires the peer H share of the step begun by phase1.
class Party {
 public:
  struct Options {
    bool capture_r = false;    // test hook: record own R shares per step
    bool force_zero_r = false; // test hook: degenerate-noise runs
  };

  Party(int idx, const ProtocolParams& p, Crs crs, OfflineMaterial mat,
        const Seed& seed, bool expect_v, Options opt = {})
      : idx_(idx),
        p_(p),
        crs_(std::move(crs)),
        c_t_(mat_transpose(mat.c)),
        c_prime_t_(mat_transpose(mat.c_prime)),
        s_share_t_(mat_transpose(mat.s_share)),
        seed_(seed),
        expect_v_(expect_v),
        opt_(opt) {
    if (idx_ != 0 && idx_ != 1)
      throw std::invalid_argument("Party: role index must be 0 or 1");
    if (c_t_.rows() != p.dims.d1 || c_t_.cols() != p.dims.d2 ||
        c_prime_t_.rows() != p.dims.d1 || c_prime_t_.cols() != crs_.t ||
        s_share_t_.rows() != p.dims.d1 || s_share_t_.cols() != crs_.n)
      throw std::invalid_argument("Party: offline material dimension mismatch");
  }

  int index() const { return idx_; }
  Role role() const { return idx_ == 0 ? Role::party0 : Role::party1; }

  // Consumes the client's Y share (and the operator's v share when present),
  // samples the own R share, and returns the own H share for the peer.
  ZqMatrix phase1(uint64_t session, uint64_t tau, const ZqMatrix& y_share,
                  const ZqMatrix* v_share) {
    if (phase1_done_)
      throw std::logic_error("Party: phase1 called twice without phase2");
    if (session_set_ && session != session_)
      throw std::invalid_argument("Party: session mismatch");
    if (last_tau_ && tau <= *last_tau_)
      throw std::invalid_argument("Party: duplicate or replayed step");
    if (y_share.rows() != p_.dims.d2 || y_share.cols() != p_.dims.d3)
      throw std::invalid_argument("Party: Y share must be d2 x d3");
    if (expect_v_) {
      if (!v_share) throw std::invalid_argument("Party: missing v share");
      if (v_share->rows() != p_.dims.d1 || v_share->cols() != p_.dims.d3)
        throw std::invalid_argument("Party: v share must be d1 x d3");
    }

    session_ = session;
    session_set_ = true;
    cur_tau_ = tau;
    y_share_ = y_share;
    v_share_ = expect_v_ && v_share ? std::optional<ZqMatrix>(*v_share)
                                    : std::nullopt;

    if (opt_.force_zero_r) {
      r_share_ = ZqMatrix::zero(crs_.t, p_.dims.d3, crs_.mod);
    } else {
      RngStream rng(seed_, stream_id(role(), Phase::online, StreamTag::rand_r,
                                     uint32_t(tau)));
      r_share_ = sample_z3(rng, crs_.t, p_.dims.d3, crs_.mod);
    }
    if (opt_.capture_r) captured_r_.push_back(*r_share_);

    // [H]_i = A [Y]_i + B [R]_i, B applied from the streamed expander.
    h_own_ = mat_add(mat_mul(crs_.a, y_share), mul_b_streamed(crs_, *r_share_));
    phase1_done_ = true;
    return *h_own_;
  }

  // Reconstructs H from the peer share and emits the own Z share:
  // [Z]_i = C^T [Y]_i + (C')^T [R]_i - [S]_i^T H (+ [v]_i).
  ZqMatrix phase2(const ZqMatrix& peer_h) {
    if (!phase1_done_) throw std::logic_error("Party: phase2 before phase1");
    ZqMatrix h = reconst(*h_own_, peer_h);
    ZqMatrix z = mat_sub(
        mat_add(mat_mul(c_t_, y_share_.value()), mat_mul(c_prime_t_, *r_share_)),
        mat_mul(s_share_t_, h));
    if (v_share_) z = mat_add(z, *v_share_);

    last_tau_ = cur_tau_;
    phase1_done_ = false;
    y_share_.reset();
    v_share_.reset();
    r_share_.reset();
    h_own_.reset();
    return z;
  }

  const std::vector<ZqMatrix>& captured_r() const {
    if (!opt_.capture_r)
      throw std::logic_error("Party: R capture not enabled");
    return captured_r_;
  }

 private:
  int idx_;
  ProtocolParams p_;
  Crs crs_;
  ZqMatrix c_t_, c_prime_t_, s_share_t_;  // C^T, (C')^T, [S]_i^T
  Seed seed_;
  bool expect_v_;
  Options opt_;

  bool phase1_done_ = false;
  bool session_set_ = false;
  uint64_t session_ = 0;
  std::optional<uint64_t> last_tau_;
  uint64_t cur_tau_ = 0;
  std::optional<ZqMatrix> y_share_, v_share_, r_share_, h_own_;
};

// --- Wire payloads ------------------------------------------------------------

inline Frame matrix_frame(MsgType type, uint64_t session, uint64_t step,
                          const ZqMatrix& m) {
  return Frame{type, session, step, serialize_matrix(m)};
}

inline ZqMatrix matrix_from_frame(const Frame& f, MsgType expect,
                                  uint64_t session) {
  if (f.type != expect) throw TransportError("unexpected message type");
  if (f.session != session) throw TransportError("session mismatch");
  return deserialize_matrix(f.payload);
}

// crs frame payload: protocol parameters + setup seed + operator flag. The
// parties re-derive A and the B columns locally from the seed.
inline std::vector<uint8_t> encode_session_config(const ProtocolParams& p,
                                                  const Seed& setup_seed,
                                                  bool has_operator) {
  std::vector<uint8_t> out;
  auto put = [&out](uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(uint8_t(v >> (8 * i)));
  };
  auto put_f64 = [&](double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put(bits, 8);
  };
  put(p.lwe.n, 4);
  put(p.lwe.modulus.bits(), 2);
  put_f64(p.lwe.sigma);
  put(p.sis.t, 8);
  put(p.dims.d1, 4);
  put(p.dims.d2, 4);
  put(p.dims.d3, 4);
  put(p.fp.k, 2);
  put(p.fp.l, 2);
  put_f64(p.epsilon);
  out.insert(out.end(), setup_seed.begin(), setup_seed.end());
  out.push_back(has_operator ? 1 : 0);
  return out;
}

struct SessionConfig {
  ProtocolParams params;
  Seed setup_seed;
  bool has_operator;
};

inline SessionConfig decode_session_config(std::span<const uint8_t> buf) {
  constexpr size_t kLen = 4 + 2 + 8 + 8 + 4 + 4 + 4 + 2 + 2 + 8 + 32 + 1;
  if (buf.size() != kLen) throw TransportError("bad session config payload");
  size_t off = 0;
  auto get = [&](int bytes) {
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= uint64_t(buf[off + i]) << (8 * i);
    off += size_t(bytes);
    return v;
  };
  auto get_f64 = [&]() {
    uint64_t bits = get(8);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  };
  uint32_t n = uint32_t(get(4));
  Modulus mod(unsigned(get(2)));
  double sigma = get_f64();
  uint64_t t = get(8);
  Dims dims{uint32_t(get(4)), uint32_t(get(4)), uint32_t(get(4))};
  unsigned k = unsigned(get(2)), l = unsigned(get(2));
  double eps = get_f64();
  Seed seed{};
  std::copy(buf.begin() + off, buf.begin() + off + 32, seed.begin());
  off += 32;
  bool has_op = buf[off] != 0;
  return SessionConfig{
      ProtocolParams{LweParams(n, mod, sigma), SisParams(uint32_t(t)), dims,
                     FixedPointSpec(k, l), eps},
      seed, has_op};
}

// --- Session drivers ----------------------------------------------------------

struct SeedSet {
  Seed setup, client, operator_, party0, party1;

  static SeedSet from_global(const Seed& s) { return SeedSet{s, s, s, s, s}; }
  const Seed& party(int idx) const { return idx == 0 ? party0 : party1; }
};

// Serves one computing party over its links: receives crs and offline
// material from the client, then answers online steps until bye.
struct PartySessionResult {
  uint64_t steps = 0;
};

inline PartySessionResult run_party_session(int idx, const Seed& party_seed,
                                            Conn& client, Conn* operator_conn,
                                            Conn& peer,
                                            Party::Options opt = {}) {
  Frame fc = client.recv();
  if (fc.type != MsgType::crs) throw TransportError("party: expected crs frame");
  SessionConfig cfg = decode_session_config(fc.payload);
  const uint64_t session = fc.session;
  Crs crs = make_crs(cfg.params, cfg.setup_seed);

  Frame fo = client.recv();
  if (fo.type != MsgType::offline || fo.session != session)
    throw TransportError("party: expected offline frame");
  size_t off = 0;
  ZqMatrix c = deserialize_matrix(fo.payload, off);
  ZqMatrix c_prime = deserialize_matrix(fo.payload, off);
  ZqMatrix s_share = deserialize_matrix(fo.payload, off);
  if (off != fo.payload.size())
    throw TransportError("party: trailing bytes in offline frame");

  Party party(idx, cfg.params, std::move(crs),
              OfflineMaterial{std::move(c), std::move(c_prime), std::move(s_share)},
              party_seed, cfg.has_operator, opt);

  PartySessionResult res;
  for (;;) {
    Frame fy = client.recv();
    if (fy.type == MsgType::bye) break;
    uint64_t tau = fy.step;
    ZqMatrix y = matrix_from_frame(fy, MsgType::y_share, session);
    std::optional<ZqMatrix> v;
    if (cfg.has_operator) {
      Frame fv = operator_conn->recv();
      if (fv.step != tau) throw TransportError("party: v share step mismatch");
      v = matrix_from_frame(fv, MsgType::v_share, session);
    }
    ZqMatrix h = party.phase1(session, tau, y, v ? &*v : nullptr);
    peer.send(matrix_frame(MsgType::h_share, session, tau, h));
    Frame fh = peer.recv();
    if (fh.step != tau) throw TransportError("party: h share step mismatch");
    ZqMatrix peer_h = matrix_from_frame(fh, MsgType::h_share, session);
    ZqMatrix z = party.phase2(peer_h);
    client.send(matrix_frame(MsgType::z_share, session, tau, z));
    ++res.steps;
  }
  return res;
}

// Client-side controller: runs Setup + Offline, distributes material, then
// evaluates online steps.
class ClientSession {
 public:
  ClientSession(const ProtocolParams& p, const SeedSet& seeds, uint64_t session,
                Conn& p0, Conn& p1, bool has_operator)
      : p_(p), seeds_(seeds), session_(session), p0_(p0), p1_(p1),
        has_operator_(has_operator) {
    auto viol = validate(p_);
    if (!viol.empty())
      throw std::invalid_argument("invalid protocol parameters: " + viol.front());
    crs_ = make_crs(p_, seeds_.setup);
  }

  const Crs& crs() const { return *crs_; }

  void distribute(const FixedPointMatrix& x, const OfflineOverrides* ov = nullptr,
                  OfflineExposure* exposure = nullptr) {
    OfflineBundle bundle = offline(*crs_, p_, x, seeds_.client, ov, exposure);
    Frame cfg{MsgType::crs, session_, 0,
              encode_session_config(p_, seeds_.setup, has_operator_)};
    p0_.send(cfg);
    p1_.send(cfg);
    p0_.send(offline_frame(bundle.p0));
    p1_.send(offline_frame(bundle.p1));
  }

  // Saturation-counting convenience over the raw fixed-point path.
  uint64_t distribute_real(const RealMatrix& x) {
    QuantizeResult q = quantize(x, p_.fp);
    distribute(q.m);
    return q.saturated;
  }

  struct EvalResult {
    RealMatrix z;      // 2^(-2l) Reconst([Z])
    ZqMatrix z_bar;    // Reconst([Z]) for exact-arithmetic checks
    uint64_t saturated = 0;
  };

  EvalResult eval(const FixedPointMatrix& y, uint64_t tau) {
    if (y.rows() != p_.dims.d2 || y.cols() != p_.dims.d3)
      throw std::invalid_argument("eval: Y must be d2 x d3");
    SharePair ys = client_make_y_shares(y, p_.lwe.modulus, seeds_.client, tau);
    p0_.send(matrix_frame(MsgType::y_share, session_, tau, ys.part0));
    p1_.send(matrix_frame(MsgType::y_share, session_, tau, ys.part1));

    Frame f0 = p0_.recv();
    Frame f1 = p1_.recv();
    if (f0.step != tau || f1.step != tau)
      throw TransportError("client: z share step mismatch");
    ZqMatrix z0 = matrix_from_frame(f0, MsgType::z_share, session_);
    ZqMatrix z1 = matrix_from_frame(f1, MsgType::z_share, session_);
    ZqMatrix z_bar = reconst(z0, z1);
    return EvalResult{decode_2l(z_bar, p_.fp), z_bar, 0};
  }

  EvalResult eval_real(const RealMatrix& y, uint64_t tau) {
    QuantizeResult q = quantize(y, p_.fp);
    EvalResult r = eval(q.m, tau);
    r.saturated = q.saturated;
    return r;
  }

  void finish() {
    Frame bye{MsgType::bye, session_, 0, {}};
    p0_.send(bye);
    p1_.send(bye);
  }

 private:
  Frame offline_frame(const OfflineMaterial& m) const {
    std::vector<uint8_t> payload;
    serialize_matrix(m.c, payload);
    serialize_matrix(m.c_prime, payload);
    serialize_matrix(m.s_share, payload);
    return Frame{MsgType::offline, session_, 0, std::move(payload)};
  }

  ProtocolParams p_;
  SeedSet seeds_;
  uint64_t session_;
  Conn &p0_, &p1_;
  bool has_operator_;
  std::optional<Crs> crs_;
};

// Reference-input share producer (control application). Sends only.
class OperatorSession {
 public:
  OperatorSession(const ProtocolParams& p, const Seed& operator_seed,
                  uint64_t session, Conn& p0, Conn& p1)
      : p_(p), seed_(operator_seed), session_(session), p0_(p0), p1_(p1) {}

  uint64_t step(const RealMatrix& v, uint64_t tau) {
    QuantizeResult q = quantize(v, p_.fp);
    SharePair vs = operator_make_v_shares(q.m, p_.lwe.modulus, seed_, tau);
    p0_.send(matrix_frame(MsgType::v_share, session_, tau, vs.part0));
    p1_.send(matrix_frame(MsgType::v_share, session_, tau, vs.part1));
    return q.saturated;
  }

 private:
  ProtocolParams p_;
  Seed seed_;
  uint64_t session_;
  Conn &p0_, &p1_;
};

// --- One-shot orchestration ----------------------------------------------------

struct MultResult {
  RealMatrix z;
  ZqMatrix z_bar;
  uint64_t saturated_x = 0, saturated_y = 0;
};

// Runs the whole Mult once over the given transport: spawns the two party
// drivers, plays the client, returns Z with the transcript left in the
// transport.
inline MultResult run_mult(const ProtocolParams& p, const RealMatrix& x,
                           const RealMatrix& y, SessionTransport& tr,
                           const SeedSet& seeds, uint64_t session = 1) {
  std::exception_ptr party_err[2] = {nullptr, nullptr};
  std::thread parties[2];
  for (int i = 0; i < 2; ++i) {
    parties[i] = std::thread([&, i] {
      try {
        Role self = i == 0 ? Role::party0 : Role::party1;
        Role other = i == 0 ? Role::party1 : Role::party0;
        run_party_session(i, seeds.party(i), tr.link(self, Role::client),
                          nullptr, tr.link(self, other));
      } catch (...) {
        party_err[i] = std::current_exception();
      }
    });
  }

  MultResult out{RealMatrix(0, 0), ZqMatrix(0, 0, p.lwe.modulus)};
  std::exception_ptr client_err = nullptr;
  try {
    ClientSession client(p, seeds, session, tr.link(Role::client, Role::party0),
                         tr.link(Role::client, Role::party1), false);
    QuantizeResult qx = quantize(x, p.fp);
    client.distribute(qx.m);
    auto r = client.eval_real(y, 0);
    client.finish();
    out = MultResult{std::move(r.z), std::move(r.z_bar), qx.saturated,
                     r.saturated};
  } catch (...) {
    client_err = std::current_exception();
  }
  for (auto& t : parties) t.join();
  if (client_err) std::rethrow_exception(client_err);
  for (auto& e : party_err)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace l2pc
