#pragma once

// Message transport between roles: a framed wire format, an in-process bus
// for tests/threaded runs, and TCP for multi-process deployment. Delivery is
// reliable and ordered per directed pair; a recv timeout aborts the step.
//
// Frame layout (little-endian, bit-exact for interop):
//   magic "L2PC" | version u8 | msg_type u8 | session u64 | step u64 |
//   payload_len u64 | payload bytes

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "l2pc/ring.hpp"
#include "l2pc/sampling.hpp"  // Role

namespace l2pc {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MsgType : uint8_t {
  hello = 1,    // connection handshake (transport-level, not transcripted)
  crs = 2,      // params + setup seed
  offline = 3,  // (C, C', [S]_i)
  y_share = 4,
  v_share = 5,
  h_share = 6,
  z_share = 7,
  bye = 8,
};

inline bool is_online_msg(MsgType t) {
  return t == MsgType::y_share || t == MsgType::v_share ||
         t == MsgType::h_share || t == MsgType::z_share;
}

constexpr uint8_t kFrameVersion = 1;
constexpr char kFrameMagic[4] = {'L', '2', 'P', 'C'};
constexpr size_t kFrameHeaderBytes = 4 + 1 + 1 + 8 + 8 + 8;

struct Frame {
  MsgType type;
  uint64_t session = 0;
  uint64_t step = 0;
  std::vector<uint8_t> payload;

  size_t wire_size() const { return kFrameHeaderBytes + payload.size(); }
};

inline void encode_frame_header(const Frame& f, uint8_t out[kFrameHeaderBytes]) {
  std::memcpy(out, kFrameMagic, 4);
  out[4] = kFrameVersion;
  out[5] = uint8_t(f.type);
  auto put64 = [](uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = uint8_t(v >> (8 * i));
  };
  put64(out + 6, f.session);
  put64(out + 14, f.step);
  put64(out + 22, f.payload.size());
}

inline std::vector<uint8_t> encode_frame(const Frame& f) {
  std::vector<uint8_t> out(f.wire_size());
  encode_frame_header(f, out.data());
  std::memcpy(out.data() + kFrameHeaderBytes, f.payload.data(), f.payload.size());
  return out;
}

// Parses a header, returning the payload length still to be read.
inline uint64_t decode_frame_header(const uint8_t in[kFrameHeaderBytes], Frame& f) {
  if (std::memcmp(in, kFrameMagic, 4) != 0)
    throw TransportError("frame: bad magic");
  if (in[4] != kFrameVersion) throw TransportError("frame: bad version");
  uint8_t t = in[5];
  if (t < uint8_t(MsgType::hello) || t > uint8_t(MsgType::bye))
    throw TransportError("frame: unknown msg_type");
  f.type = MsgType(t);
  auto get64 = [](const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
  };
  f.session = get64(in + 6);
  f.step = get64(in + 14);
  return get64(in + 22);
}

inline Frame decode_frame(std::span<const uint8_t> buf) {
  if (buf.size() < kFrameHeaderBytes) throw TransportError("frame: truncated");
  Frame f;
  uint64_t len = decode_frame_header(buf.data(), f);
  if (buf.size() != kFrameHeaderBytes + len)
    throw TransportError("frame: length mismatch");
  f.payload.assign(buf.begin() + kFrameHeaderBytes, buf.end());
  return f;
}

// --- Transcript ------------------------------------------------------------

struct TranscriptEntry {
  double time;  // seconds since transcript creation; excluded from equality
  Role from, to;
  MsgType type;
  uint64_t step;
  size_t bytes;  // framed size

  bool same_message(const TranscriptEntry& o) const {
    return from == o.from && to == o.to && type == o.type && step == o.step &&
           bytes == o.bytes;
  }
};

// Append-only message log shared by all conns of a session.
class Transcript {
 public:
  Transcript() : start_(std::chrono::steady_clock::now()) {}

  void record(Role from, Role to, MsgType type, uint64_t step, size_t bytes) {
    std::lock_guard<std::mutex> g(m_);
    double t = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start_).count();
    entries_.push_back({t, from, to, type, step, bytes});
  }

  std::vector<TranscriptEntry> entries() const {
    std::lock_guard<std::mutex> g(m_);
    return entries_;
  }

  // Canonical order for cross-transport comparison (concurrent sends land in
  // nondeterministic append order).
  std::vector<TranscriptEntry> sorted_entries() const {
    auto v = entries();
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      auto ka = std::tuple(a.step, uint8_t(a.type), uint8_t(a.from), uint8_t(a.to), a.bytes);
      auto kb = std::tuple(b.step, uint8_t(b.type), uint8_t(b.from), uint8_t(b.to), b.bytes);
      return ka < kb;
    });
    return v;
  }

  // Alternating directed-message rounds between the computing parties within
  // one online step. The parties send their H shares simultaneously, so a
  // concurrent exchange counts as a single round: rounds = max(#P0->P1,
  // #P1->P0) over online-phase messages at the given step. Offline
  // distribution (crs/offline frames) never enters the count.
  int round_count_online(uint64_t step) const {
    int p01 = 0, p10 = 0;
    for (const auto& e : entries()) {
      if (e.step != step || !is_online_msg(e.type)) continue;
      if (e.from == Role::party0 && e.to == Role::party1) ++p01;
      if (e.from == Role::party1 && e.to == Role::party0) ++p10;
    }
    return std::max(p01, p10);
  }

  size_t total_bytes() const {
    size_t n = 0;
    for (const auto& e : entries()) n += e.bytes;
    return n;
  }

 private:
  mutable std::mutex m_;
  std::chrono::steady_clock::time_point start_;
  std::vector<TranscriptEntry> entries_;
};

// --- Connections -----------------------------------------------------------

constexpr int kDefaultRecvTimeoutMs = 60'000;

// Bidirectional link between two roles, as seen from `self`. Sends are
// recorded into the session transcript when one is attached.
class Conn {
 public:
  Conn(Role self, Role peer, Transcript* tr) : self_(self), peer_(peer), tr_(tr) {}
  virtual ~Conn() = default;

  Role self() const { return self_; }
  Role peer() const { return peer_; }

  void set_timeout_ms(int ms) { timeout_ms_ = ms; }
  int timeout_ms() const { return timeout_ms_; }

  void send(const Frame& f) {
    do_send(f);
    if (tr_ && f.type != MsgType::hello)
      tr_->record(self_, peer_, f.type, f.step, f.wire_size());
  }

  Frame recv() { return do_recv(timeout_ms_); }
  Frame recv(int timeout_ms) { return do_recv(timeout_ms); }

 protected:
  virtual void do_send(const Frame&) = 0;
  virtual Frame do_recv(int timeout_ms) = 0;

 private:
  Role self_, peer_;
  Transcript* tr_;
  int timeout_ms_ = kDefaultRecvTimeoutMs;
};

// In-process bus: one FIFO per directed role pair, condition-variable waits.
class InprocBus {
 public:
  explicit InprocBus(Transcript* tr = nullptr) : tr_(tr) {}

  std::unique_ptr<Conn> endpoint(Role self, Role peer) {
    return std::make_unique<BusConn>(*this, self, peer, tr_);
  }

 private:
  struct Queue {
    std::mutex m;
    std::condition_variable cv;
    std::deque<Frame> q;
  };

  Queue& queue(Role from, Role to) { return q_[int(from)][int(to)]; }

  void push(Role from, Role to, Frame f) {
    Queue& qu = queue(from, to);
    {
      std::lock_guard<std::mutex> g(qu.m);
      qu.q.push_back(std::move(f));
    }
    qu.cv.notify_one();
  }

  Frame pop(Role from, Role to, int timeout_ms) {
    Queue& qu = queue(from, to);
    std::unique_lock<std::mutex> g(qu.m);
    if (!qu.cv.wait_for(g, std::chrono::milliseconds(timeout_ms),
                        [&] { return !qu.q.empty(); }))
      throw TransportError("recv timeout (inproc)");
    Frame f = std::move(qu.q.front());
    qu.q.pop_front();
    return f;
  }

  class BusConn : public Conn {
   public:
    BusConn(InprocBus& bus, Role self, Role peer, Transcript* tr)
        : Conn(self, peer, tr), bus_(bus) {}

   protected:
    void do_send(const Frame& f) override { bus_.push(self(), peer(), f); }
    Frame do_recv(int timeout_ms) override {
      return bus_.pop(peer(), self(), timeout_ms);
    }

   private:
    InprocBus& bus_;
  };

  Queue q_[5][5];
  Transcript* tr_;
};

// --- TCP -------------------------------------------------------------------

namespace detail {

inline void write_all(int fd, const uint8_t* p, size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w <= 0) throw TransportError("tcp send failed: connection lost");
    p += w;
    n -= size_t(w);
  }
}

inline void read_all(int fd, uint8_t* p, size_t n, int timeout_ms) {
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(timeout_ms);
  while (n > 0) {
    int remain = int(std::chrono::duration_cast<std::chrono::milliseconds>(
                         deadline - std::chrono::steady_clock::now()).count());
    if (remain <= 0) throw TransportError("recv timeout (tcp)");
    pollfd pfd{fd, POLLIN, 0};
    int pr = ::poll(&pfd, 1, remain);
    if (pr < 0) throw TransportError("tcp poll failed");
    if (pr == 0) throw TransportError("recv timeout (tcp)");
    ssize_t r = ::recv(fd, p, n, 0);
    if (r <= 0) throw TransportError("tcp recv failed: connection closed");
    p += r;
    n -= size_t(r);
  }
}

}  // namespace detail

// Owns a connected socket between two roles.
class TcpConn : public Conn {
 public:
  TcpConn(int fd, Role self, Role peer, Transcript* tr)
      : Conn(self, peer, tr), fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  ~TcpConn() override {
    if (fd_ >= 0) ::close(fd_);
  }

  TcpConn(const TcpConn&) = delete;
  TcpConn& operator=(const TcpConn&) = delete;

 protected:
  void do_send(const Frame& f) override {
    std::lock_guard<std::mutex> g(send_mu_);
    uint8_t hdr[kFrameHeaderBytes];
    encode_frame_header(f, hdr);
    detail::write_all(fd_, hdr, sizeof(hdr));
    if (!f.payload.empty())
      detail::write_all(fd_, f.payload.data(), f.payload.size());
  }

  Frame do_recv(int timeout_ms) override {
    std::lock_guard<std::mutex> g(recv_mu_);
    uint8_t hdr[kFrameHeaderBytes];
    detail::read_all(fd_, hdr, sizeof(hdr), timeout_ms);
    Frame f;
    uint64_t len = decode_frame_header(hdr, f);
    f.payload.resize(len);
    if (len > 0) detail::read_all(fd_, f.payload.data(), len, timeout_ms);
    return f;
  }

 private:
  int fd_;
  std::mutex send_mu_, recv_mu_;
};

// Listening socket. Port 0 binds an ephemeral port (tests).
class TcpListener {
 public:
  explicit TcpListener(uint16_t port, const std::string& host = "0.0.0.0") {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("tcp: socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
      throw TransportError("tcp: bad listen address " + host);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      throw TransportError("tcp: bind failed on " + host);
    if (::listen(fd_, 8) != 0) throw TransportError("tcp: listen failed");
  }

  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  int accept_fd(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr <= 0) throw TransportError("tcp: accept timeout");
    int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw TransportError("tcp: accept failed");
    return cfd;
  }

 private:
  int fd_ = -1;
};

inline int tcp_connect(const std::string& host, uint16_t port, int timeout_ms) {
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(timeout_ms);
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("tcp: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd);
      throw TransportError("tcp: bad address " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0)
      return fd;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw TransportError("tcp: connect to " + host + " timed out");
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

// Handshake: the dialing side announces (session, role) with a hello frame.
inline void send_hello(int fd, uint64_t session, Role self) {
  Frame f{MsgType::hello, session, uint64_t(self), {}};
  uint8_t hdr[kFrameHeaderBytes];
  encode_frame_header(f, hdr);
  detail::write_all(fd, hdr, sizeof(hdr));
}

struct HelloInfo {
  uint64_t session;
  Role role;
};

inline HelloInfo recv_hello(int fd, int timeout_ms) {
  uint8_t hdr[kFrameHeaderBytes];
  detail::read_all(fd, hdr, sizeof(hdr), timeout_ms);
  Frame f;
  uint64_t len = decode_frame_header(hdr, f);
  if (f.type != MsgType::hello || len != 0)
    throw TransportError("tcp: expected hello frame");
  if (f.step > 4) throw TransportError("tcp: hello with unknown role");
  return HelloInfo{f.session, Role(uint8_t(f.step))};
}

// --- Session transports ------------------------------------------------------
//
// Bundles the directed links of one protocol session plus its transcript.
// In-process and loopback-TCP variants are interchangeable; the CLI builds
// the multi-process variant from real sockets.

class SessionTransport {
 public:
  virtual ~SessionTransport() = default;
  virtual Conn& link(Role self, Role peer) = 0;
  Transcript& transcript() { return transcript_; }

 protected:
  Transcript transcript_;
};

class InprocTransport : public SessionTransport {
 public:
  InprocTransport() : bus_(&transcript_) {
    static constexpr std::pair<Role, Role> pairs[] = {
        {Role::client, Role::party0},    {Role::client, Role::party1},
        {Role::operator_, Role::party0}, {Role::operator_, Role::party1},
        {Role::party0, Role::party1},
    };
    for (auto [a, b] : pairs) {
      conns_[int(a)][int(b)] = bus_.endpoint(a, b);
      conns_[int(b)][int(a)] = bus_.endpoint(b, a);
    }
  }

  Conn& link(Role self, Role peer) override {
    auto& c = conns_[int(self)][int(peer)];
    if (!c) throw TransportError("no link between roles");
    return *c;
  }

 private:
  InprocBus bus_;
  std::unique_ptr<Conn> conns_[5][5];
};

// Real TCP sockets over 127.0.0.1, all roles in-process. Exercises the full
// wire path with the same interface as InprocTransport.
class TcpLoopbackTransport : public SessionTransport {
 public:
  explicit TcpLoopbackTransport(uint64_t session) {
    TcpListener l0(0, "127.0.0.1");
    TcpListener l1(0, "127.0.0.1");

    struct Dial {
      Role from, to;
    };
    static constexpr Dial dials[] = {
        {Role::client, Role::party0},    {Role::client, Role::party1},
        {Role::operator_, Role::party0}, {Role::operator_, Role::party1},
        {Role::party1, Role::party0},
    };
    for (auto d : dials) {
      TcpListener& l = d.to == Role::party0 ? l0 : l1;
      int cfd = tcp_connect("127.0.0.1", l.port(), 5000);
      send_hello(cfd, session, d.from);
      int sfd = l.accept_fd(5000);
      HelloInfo hi = recv_hello(sfd, 5000);
      if (hi.session != session || hi.role != d.from)
        throw TransportError("loopback handshake mismatch");
      conns_[int(d.from)][int(d.to)] =
          std::make_unique<TcpConn>(cfd, d.from, d.to, &transcript_);
      conns_[int(d.to)][int(d.from)] =
          std::make_unique<TcpConn>(sfd, d.to, d.from, &transcript_);
    }
  }

  Conn& link(Role self, Role peer) override {
    auto& c = conns_[int(self)][int(peer)];
    if (!c) throw TransportError("no link between roles");
    return *c;
  }

 private:
  std::unique_ptr<Conn> conns_[5][5];
};

}  // namespace l2pc
