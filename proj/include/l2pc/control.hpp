#pragma once

// Encrypted linear-control application: a discrete LTI plant driven by the
// protocol's approximate control input u_hat(tau), with the exact law
// u(tau) = K x(tau) + v(tau) and its quantized counterpart evaluated on the
// same trajectory for the error traces. The quantized law is computed in
// exact integer arithmetic (mantissas at scale 2^(2l)) and is the plaintext
// oracle for the encrypted loop.

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "l2pc/protocol.hpp"

namespace l2pc {

inline RealMatrix real_mul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("real_mul: dimension mismatch");
  RealMatrix r(a.rows(), b.cols());
  for (uint32_t i = 0; i < a.rows(); ++i)
    for (uint32_t k = 0; k < a.cols(); ++k) {
      double av = a(i, k);
      for (uint32_t j = 0; j < b.cols(); ++j) r(i, j) += av * b(k, j);
    }
  return r;
}

inline RealMatrix real_add(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("real_add: dimension mismatch");
  RealMatrix r(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) r.data()[i] = a.data()[i] + b.data()[i];
  return r;
}

struct PlantModel {
  RealMatrix a;   // n_x x n_x
  RealMatrix b;   // n_x x n_u
  RealMatrix x0;  // n_x x 1

  PlantModel(RealMatrix a_, RealMatrix b_, RealMatrix x0_)
      : a(std::move(a_)), b(std::move(b_)), x0(std::move(x0_)) {
    if (a.rows() != a.cols() || a.rows() != b.rows() || x0.rows() != a.rows() ||
        x0.cols() != 1)
      throw std::invalid_argument("PlantModel: inconsistent dimensions");
  }
};

// x(tau+1) = A x(tau) + B u(tau), double precision.
inline RealMatrix plant_step(const PlantModel& m, const RealMatrix& x,
                             const RealMatrix& u) {
  return real_add(real_mul(m.a, x), real_mul(m.b, u));
}

struct ControllerSpec {
  RealMatrix k;  // n_u x n_x
  std::function<RealMatrix(uint64_t)> reference;  // tau -> n_u x 1
};

// u(tau) = K x(tau) + v(tau), the exact double-precision law.
inline RealMatrix true_control(const ControllerSpec& c, const RealMatrix& x,
                               uint64_t tau) {
  return real_add(real_mul(c.k, x), c.reference(tau));
}

// Quantized law u~(tau) = K~ x~(tau) + v~(tau) evaluated exactly: the result
// is an integer vector of mantissas at scale 2^(-2l).
struct QuantizedControl {
  std::vector<int128> mantissa_2l;  // n_u entries, value = m * 2^(-2l)
  RealMatrix value;                 // floating render
  uint64_t saturated;

  double value_at(uint32_t i) const { return value(i, 0); }
};

inline QuantizedControl quantized_control(const ControllerSpec& c,
                                          const RealMatrix& x, uint64_t tau,
                                          FixedPointSpec spec) {
  QuantizeResult qk = quantize(c.k, spec);
  QuantizeResult qx = quantize(x, spec);
  QuantizeResult qv = quantize(c.reference(tau), spec);
  const uint32_t nu = c.k.rows(), nx = c.k.cols();
  QuantizedControl out{std::vector<int128>(nu, 0), RealMatrix(nu, 1),
                       qk.saturated + qx.saturated + qv.saturated};
  for (uint32_t i = 0; i < nu; ++i) {
    int128 acc = 0;
    for (uint32_t j = 0; j < nx; ++j)
      acc += int128(qk.m.mantissa(i, j)) * int128(qx.m.mantissa(j, 0));
    acc += int128(qv.m.mantissa(i, 0)) << spec.l;
    out.mantissa_2l[i] = acc;
    out.value(i, 0) = double(ldexpl((long double)acc, -2 * int(spec.l)));
  }
  return out;
}

// v(tau) = 10 sin(0.2 pi tau), the reference input of the demo.
inline RealMatrix reference_signal(uint64_t tau) {
  RealMatrix v(1, 1);
  v(0, 0) = 10.0 * std::sin(0.2 * M_PI * double(tau));
  return v;
}

inline RealMatrix zero_reference(uint64_t) { return RealMatrix(1, 1); }

// The demo system: x(tau+1) = [1.1 -0.5; 0 0.1] x + [0; 0.5] u, x(0) = [1; -1],
// gain K = [3.84 -2.4].
inline PlantModel demo_plant() {
  return PlantModel(RealMatrix::from_rows({{1.1, -0.5}, {0.0, 0.1}}),
                    RealMatrix::from_rows({{0.0}, {0.5}}),
                    RealMatrix::from_rows({{1.0}, {-1.0}}));
}

inline RealMatrix demo_gain() { return RealMatrix::from_rows({{3.84, -2.4}}); }

struct LoopRecord {
  uint64_t tau;
  std::vector<double> x;       // state at tau
  std::vector<double> v;       // reference at tau
  std::vector<double> u_true;  // exact law
  std::vector<double> u_quant; // quantized law (float render of exact value)
  std::vector<double> u_enc;   // protocol output u_hat
  double err_quant;            // ||u~ - u_hat||_max, exact integer arithmetic
  double err_true;             // ||u - u_hat||_max
};

struct LoopTrace {
  std::vector<LoopRecord> records;

  double max_err_quant() const {
    double m = 0;
    for (const auto& r : records) m = std::max(m, r.err_quant);
    return m;
  }
  double max_err_true() const {
    double m = 0;
    for (const auto& r : records) m = std::max(m, r.err_true);
    return m;
  }

  // One row per tau; floats with 17 significant digits; the err columns are
  // computed exactly before rendering.
  void write_csv(std::ostream& os) const {
    if (records.empty()) return;
    size_t nx = records[0].x.size(), nu = records[0].u_true.size();
    os << "tau";
    for (size_t i = 1; i <= nx; ++i) os << ",x" << i;
    auto col = [&](const std::string& base) {
      if (nu == 1) os << "," << base;
      else
        for (size_t i = 1; i <= nu; ++i) os << "," << base << i;
    };
    col("v");
    col("u_true");
    col("u_quant");
    col("u_enc");
    os << ",err_quant,err_true\n";
    char buf[64];
    auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      os << buf;
    };
    for (const auto& r : records) {
      os << r.tau;
      for (double v : r.x) put(v);
      for (double v : r.v) put(v);
      for (double v : r.u_true) put(v);
      for (double v : r.u_quant) put(v);
      for (double v : r.u_enc) put(v);
      put(r.err_quant);
      put(r.err_true);
      os << "\n";
    }
  }
};

// Runs the encrypted control loop for `steps` steps over the given transport:
// offline-encrypts K once, then per tau the client shares x_bar(tau), the
// operator shares v_bar(tau), the parties run the modified online subroutine,
// and the plant advances with the recovered u_hat(tau).
inline LoopTrace run_encrypted_loop(const ProtocolParams& p,
                                    const PlantModel& plant,
                                    const ControllerSpec& ctrl, uint64_t steps,
                                    SessionTransport& tr, const SeedSet& seeds,
                                    uint64_t session = 1) {
  const uint32_t nx = plant.a.rows(), nu = ctrl.k.rows();
  if (p.dims.d1 != nu || p.dims.d2 != nx || p.dims.d3 != 1)
    throw std::invalid_argument(
        "run_encrypted_loop: dims must be (n_u, n_x, 1)");

  std::exception_ptr errs[3] = {nullptr, nullptr, nullptr};
  std::thread workers[3];
  for (int i = 0; i < 2; ++i) {
    workers[i] = std::thread([&, i] {
      try {
        Role self = i == 0 ? Role::party0 : Role::party1;
        Role other = i == 0 ? Role::party1 : Role::party0;
        run_party_session(i, seeds.party(i), tr.link(self, Role::client),
                          &tr.link(self, Role::operator_), tr.link(self, other));
      } catch (...) {
        errs[i] = std::current_exception();
      }
    });
  }
  workers[2] = std::thread([&] {
    try {
      OperatorSession op(p, seeds.operator_, session,
                         tr.link(Role::operator_, Role::party0),
                         tr.link(Role::operator_, Role::party1));
      for (uint64_t tau = 0; tau < steps; ++tau) op.step(ctrl.reference(tau), tau);
    } catch (...) {
      errs[2] = std::current_exception();
    }
  });

  LoopTrace trace;
  std::exception_ptr client_err = nullptr;
  try {
    ClientSession client(p, seeds, session, tr.link(Role::client, Role::party0),
                         tr.link(Role::client, Role::party1), true);
    client.distribute(quantize(ctrl.k, p.fp).m);

    RealMatrix x = plant.x0;
    const long double scale = ldexpl(1.0L, -2 * int(p.fp.l));
    for (uint64_t tau = 0; tau < steps; ++tau) {
      RealMatrix v = ctrl.reference(tau);
      RealMatrix u_true = true_control(ctrl, x, tau);
      QuantizedControl u_quant = quantized_control(ctrl, x, tau, p.fp);

      QuantizeResult qx = quantize(x, p.fp);
      auto ev = client.eval(qx.m, tau);

      // ||u~ - u_hat||_max on the 2^(2l)-scaled integers, exact.
      uint128 worst = 0;
      for (uint32_t i = 0; i < nu; ++i) {
        int128 d = u_quant.mantissa_2l[i] - ev.z_bar(i, 0);
        uint128 a = d < 0 ? uint128(0) - uint128(d) : uint128(d);
        worst = std::max(worst, a);
      }
      double err_quant = double((long double)worst * scale);

      double err_true = 0;
      for (uint32_t i = 0; i < nu; ++i) {
        long double u_hat = (long double)ev.z_bar(i, 0) * scale;
        err_true = std::max(err_true,
                            double(fabsl((long double)u_true(i, 0) - u_hat)));
      }

      LoopRecord rec;
      rec.tau = tau;
      rec.x.assign(x.data(), x.data() + x.size());
      rec.v.assign(v.data(), v.data() + v.size());
      rec.u_true.assign(u_true.data(), u_true.data() + u_true.size());
      rec.u_quant.assign(u_quant.value.data(),
                         u_quant.value.data() + u_quant.value.size());
      rec.u_enc.assign(ev.z.data(), ev.z.data() + ev.z.size());
      rec.err_quant = err_quant;
      rec.err_true = err_true;
      trace.records.push_back(std::move(rec));

      x = plant_step(plant, x, ev.z);
    }
    client.finish();
  } catch (...) {
    client_err = std::current_exception();
  }

  for (auto& w : workers) w.join();
  if (client_err) std::rethrow_exception(client_err);
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return trace;
}

}  // namespace l2pc
