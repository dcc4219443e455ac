#pragma once

// Parameter validation and the feasible (k, l) window:
//   overflow bound   6 <= k < (1/2) log2((q - 128 t) / d2)
//   precision bound  l > (1/2) [k + 4 + log2((d2 + t) / eps)]
//   l < k
// Feasibility decisions are exact: both inequalities are rearranged into
// big-integer comparisons, so float rounding can never misclassify a window
// edge. The real-valued bound reports use long double and are display-only.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "l2pc/fixedpoint.hpp"
#include "l2pc/lattice.hpp"

namespace l2pc {

using bigint = boost::multiprecision::cpp_int;

struct Dims {
  uint32_t d1, d2, d3;
};

struct ProtocolParams {
  LweParams lwe;
  SisParams sis;
  Dims dims;
  FixedPointSpec fp;
  double epsilon;
};

namespace detail {

inline bigint modulus_q(Modulus m) { return bigint(1) << m.bits(); }

// Writes eps = mant * 2^exp with mant a positive integer (exact for any
// positive finite double).
inline void decompose_pow2(double eps, bigint& mant, int& exp) {
  int e;
  double m = std::frexp(eps, &e);  // eps = m * 2^e, m in [0.5, 1)
  mant = bigint(std::ldexp(m, 53));
  exp = e - 53;
}

// M * 2^s > N, exactly.
inline bool scaled_greater(const bigint& m, int s, const bigint& n) {
  if (s >= 0) return m << s > n;
  return m > n << (-s);
}

}  // namespace detail

// Exact form of the overflow bound: 6 <= k and 2^(2k) d2 + 128 t < q.
inline bool k_bound_holds(unsigned k, Modulus m, uint64_t t, uint64_t d2) {
  if (k < 6) return false;
  bigint lhs = (bigint(1) << (2 * k)) * d2 + bigint(128) * t;
  return lhs < detail::modulus_q(m);
}

// Exact form of the precision bound: eps * 2^(2l) > 2^(k+4) (d2 + t).
inline bool l_bound_holds(unsigned l, unsigned k, uint64_t d2, uint64_t t,
                          double eps) {
  if (!(eps > 0)) throw std::invalid_argument("l_bound_holds: eps must be > 0");
  bigint mant;
  int exp;
  detail::decompose_pow2(eps, mant, exp);
  // mant * 2^(2l + exp) > (d2 + t) * 2^(k + 4)
  return detail::scaled_greater(mant, int(2 * l) + exp - int(k) - 4,
                                bigint(d2) + t);
}

// (1/2) log2((q - 128 t) / d2); empty when q <= 128 t (infeasible).
inline std::optional<double> k_upper_bound(Modulus m, uint64_t t, uint64_t d2) {
  if (d2 == 0) throw std::invalid_argument("k_upper_bound: d2 must be >= 1");
  uint128 q = m.q();
  uint128 st = uint128(128) * t;
  if (st >= q) return std::nullopt;
  long double num = (long double)(q - st);
  return double(0.5L * (log2l(num) - log2l((long double)d2)));
}

// (1/2) [k + 4 + log2((d2 + t) / eps)].
inline double l_lower_bound(double k, uint64_t d2, uint64_t t, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("l_lower_bound: eps must be > 0");
  return double(0.5L *
                ((long double)k + 4.0L + log2l((long double)(d2 + t)) -
                 log2l((long double)eps)));
}

// Standard SIS width t = 2 n log2 q (q a power of two, so log2 q = q_bits).
inline uint64_t standard_t(uint32_t n, Modulus m) {
  return 2 * uint64_t(n) * m.bits();
}

struct FeasibleWindow {
  bool ok = false;
  std::optional<double> k_max;            // real upper edge, empty if q <= 128t
  std::optional<std::pair<unsigned, unsigned>> choice;  // suggested (k, l)
  uint64_t d2 = 0, t = 0;
  double eps = 0;

  double l_min(double k) const { return l_lower_bound(k, d2, t, eps); }
};

// ok iff integers (k, l) exist with 6 <= k, l < k, both bounds holding.
// Suggests the widest k and the smallest admissible l for it.
inline FeasibleWindow feasible_window(const LweParams& lwe, uint64_t t,
                                      Dims dims, double eps) {
  FeasibleWindow w;
  w.d2 = dims.d2;
  w.t = t;
  w.eps = eps;
  w.k_max = k_upper_bound(lwe.modulus, t, dims.d2);
  if (!w.k_max) return w;

  std::optional<unsigned> best_k;
  for (unsigned k = 6; k <= 127; ++k) {
    if (!k_bound_holds(k, lwe.modulus, t, dims.d2)) {
      if (k > 6) break;  // bound is monotone in k
      continue;
    }
    if (k >= 1 && l_bound_holds(k - 1, k, dims.d2, t, eps)) best_k = k;
  }
  if (!best_k) return w;

  unsigned l = *best_k - 1;
  while (l > 0 && l_bound_holds(l - 1, *best_k, dims.d2, t, eps)) --l;
  w.ok = true;
  w.choice = {*best_k, l};
  return w;
}

inline std::vector<std::string> validate(const ProtocolParams& p) {
  std::vector<std::string> v;
  if (p.lwe.n < 1) v.push_back("n must be >= 1");
  if (!(p.lwe.sigma > 0)) v.push_back("sigma must be > 0");
  if (p.sis.t < 1) v.push_back("t must be >= 1");
  if (p.dims.d1 < 1 || p.dims.d2 < 1 || p.dims.d3 < 1)
    v.push_back("dimensions must be >= 1");
  if (!(p.epsilon > 0)) v.push_back("epsilon must be > 0");
  if (p.fp.k < 6) v.push_back("k below 6");
  if (p.fp.l >= p.fp.k) v.push_back("l must be < k");
  uint128 st = uint128(128) * p.sis.t;
  if (st >= p.lwe.modulus.q()) {
    v.push_back("q <= 128 t: overflow bound infeasible");
    return v;
  }
  if (p.fp.k >= 6 && !k_bound_holds(p.fp.k, p.lwe.modulus, p.sis.t, p.dims.d2))
    v.push_back("k violates 2^(2k) d2 + 128 t < q");
  if (p.epsilon > 0 &&
      !l_bound_holds(p.fp.l, p.fp.k, p.dims.d2, p.sis.t, p.epsilon))
    v.push_back("l violates 2 l > k + 4 + log2((d2 + t) / eps)");
  return v;
}

// --- Paper-style window display -------------------------------------------
//
// Bounds print to one decimal in the conservative direction (lower bounds
// round up, upper bounds round down), so the printed window is still a
// sufficient condition. A 1e-9 slack absorbs sub-representable residue in
// the upper edge (e.g. 53.5 - 2^-81 must print as 53.5, not 53.4).

inline double display_lower_1dp(double v) { return std::ceil(v * 10.0 - 1e-9) / 10.0; }
inline double display_upper_1dp(double v) { return std::floor(v * 10.0 + 1e-9) / 10.0; }

struct WindowDisplay {
  double l_min_1dp;
  double k_max_1dp;
  std::string text;  // "43.7 < l < k < 53.5"
};

inline WindowDisplay window_display(const FeasibleWindow& w) {
  if (!w.k_max) throw std::invalid_argument("window_display: no k_max");
  WindowDisplay d{};
  d.k_max_1dp = display_upper_1dp(*w.k_max);
  d.l_min_1dp = display_lower_1dp(w.l_min(*w.k_max));
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << d.l_min_1dp << " < l < k < " << d.k_max_1dp;
  d.text = os.str();
  return d;
}

}  // namespace l2pc
