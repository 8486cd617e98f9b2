#pragma once

// Normally ordered moments of the internal state S_a U_S1 |alpha>|0> and the
// homodyne statistics of the output port built from them.
//
//   Q(x1,y1,x2,y2) = < a^dag^x1 a^y1 b^dag^x2 b^y2 >
//                  = d^{x1+y1+x2+y2} / dl1^x1 dl2^y1 dl3^x2 dl4^y2  exp(w4) |_{l=0}
//
// w4 = w1 + w2 conj(alpha) + w3 alpha is a quadratic-plus-linear form in the
// formal variables l1..l4 whose coefficients depend on g, r, alpha only.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <string>

#include "su11/errors.hpp"
#include "su11/jet_series.hpp"
#include "su11/params.hpp"

namespace su11 {

using Series4 = TruncatedSeries<4>;
using Index4 = MultiIndex<4>;

inline constexpr unsigned kDefaultDegreeCap = 4;

// Quadratic-plus-linear exponent w4.
//
// quadratic(i,j) == quadratic(j,i) holds the coefficient of the monomial
// l_i l_j for i != j and of l_i^2 on the diagonal, so
//   w4 = sum_{i<=j} quadratic(i,j) l_i l_j + sum_i linear(i) l_i.
struct WForm {
  std::array<std::array<cd, 4>, 4> quadratic{};
  std::array<cd, 4> linear{};

  cd coefficient(std::size_t i, std::size_t j) const { return quadratic.at(i).at(j); }

  Series4 to_series(unsigned degree_cap = kDefaultDegreeCap) const {
    Series4 s(degree_cap);
    for (std::size_t i = 0; i < 4; ++i) {
      s.add_term(Index4::unit(i), linear[i]);
      for (std::size_t j = i; j < 4; ++j) s.add_term(Index4::unit(i) + Index4::unit(j), quadratic[i][j]);
    }
    return s;
  }

  friend bool operator==(const WForm&, const WForm&) = default;
};

namespace detail {

struct WParts {
  Series4 w1, w2, w3;
};

// w1, w2, w3 transcribed term by term from their factored form.
inline WParts w_parts(double g, double r) {
  constexpr unsigned cap = 2;
  const double chr = std::cosh(r), shr = std::sinh(r);
  const double chg = std::cosh(g), shg = std::sinh(g);
  auto l = [](std::size_t i, double c = 1.0) { return Series4::variable(cap, i, cd(c)); };
  const Series4 l1 = l(0), l2 = l(1), l3 = l(2), l4 = l(3);

  Series4 w1 = cd(0.5 * chr * shr) * (l1 * l1 + l2 * l2) + cd(shr * shr) * (l1 * l2);
  w1 -= (l(0, chr * shg) + l(1, shr * shg)) * (l(2, chg) - l(1, chr * shg) - l(0, shr * shg));
  w1 -= cd(shg) * l4 * (l(1, chr * chg) + l(0, shr * chg) - l(2, shg));

  Series4 w2 = l(0, chr * chg) + l(1, shr * chg) - l(3, shg);
  Series4 w3 = l(1, chr * chg) + l(0, shr * chg) - l(2, shg);
  return {std::move(w1), std::move(w2), std::move(w3)};
}

}  // namespace detail

inline WForm build_w_form(const InterferometerParams& params) {
  auto [w1, w2, w3] = detail::w_parts(params.g, params.r);
  const Series4 w4 = w1 + w2 * std::conj(params.alpha) + w3 * params.alpha;
  WForm w;
  for (std::size_t i = 0; i < 4; ++i) {
    w.linear[i] = w4.coeff(Index4::unit(i));
    for (std::size_t j = i; j < 4; ++j) {
      const cd c = w4.coeff(Index4::unit(i) + Index4::unit(j));
      w.quadratic[i][j] = c;
      w.quadratic[j][i] = c;
    }
  }
  return w;
}

struct MomentKey {
  unsigned x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  constexpr unsigned order() const { return x1 + y1 + x2 + y2; }
  constexpr Index4 index() const { return Index4{{x1, y1, x2, y2}}; }
  constexpr MomentKey adjoint() const { return {y1, x1, y2, x2}; }

  friend constexpr auto operator<=>(const MomentKey&, const MomentKey&) = default;
};

// All moments of the internal state up to the degree cap, computed once from
// a single expansion of exp(w4) and immutable afterwards.
class MomentTable {
 public:
  explicit MomentTable(const InterferometerParams& params, unsigned degree_cap = kDefaultDegreeCap)
      : params_(params), cap_(degree_cap), w_(build_w_form(params)) {
    params.validate();
    const Series4 e = series_exp(w_.to_series(degree_cap));
    for (unsigned x1 = 0; x1 <= cap_; ++x1)
      for (unsigned y1 = 0; x1 + y1 <= cap_; ++y1)
        for (unsigned x2 = 0; x1 + y1 + x2 <= cap_; ++x2)
          for (unsigned y2 = 0; x1 + y1 + x2 + y2 <= cap_; ++y2) {
            const MomentKey k{x1, y1, x2, y2};
            entries_.emplace(k, extract_derivative(e, k.index()));
          }
  }

  const InterferometerParams& params() const { return params_; }
  unsigned degree_cap() const { return cap_; }
  const WForm& w_form() const { return w_; }
  const std::map<MomentKey, cd>& entries() const { return entries_; }

  cd at(const MomentKey& k) const {
    if (k.order() > cap_)
      throw OrderExceedsCap("moment order " + std::to_string(k.order()) + " exceeds degree cap " +
                            std::to_string(cap_));
    return entries_.at(k);
  }
  cd operator()(unsigned x1, unsigned y1, unsigned x2, unsigned y2) const {
    return at({x1, y1, x2, y2});
  }

 private:
  InterferometerParams params_;
  unsigned cap_;
  WForm w_;
  std::map<MomentKey, cd> entries_;
};

inline cd q_moment(const InterferometerParams& params, const MomentKey& key) {
  const unsigned cap = key.order() > kDefaultDegreeCap ? key.order() : kDefaultDegreeCap;
  return MomentTable(params, cap).at(key);
}

struct QuadratureStats {
  double mean = 0.0;           // <a^dag + a>
  double second_moment = 0.0;  // <(a^dag + a)^2>
  double variance = 0.0;
  double dmean_dphi = 0.0;
};

namespace detail {

// Imaginary residue allowed on a Hermitian expectation, relative to its size.
inline constexpr double kRealityTolerance = 1e-9;

inline double require_real(cd v, const char* what) {
  const double scale = std::max(1.0, std::abs(v.real()));
  if (std::abs(v.imag()) > kRealityTolerance * scale)
    throw ConsistencyError(std::string(what) + " has imaginary part " + std::to_string(v.imag()));
  return v.real();
}

inline void require_matching(const MomentTable& q, const InterferometerParams& p) {
  if (!q.params().same_source(p))
    throw InvalidParameter("moment table was built for different g, alpha or r");
}

}  // namespace detail

// <a_out^dag + a_out>; readout parameters (t1, t2, phi) taken from `p`.
inline cd quadrature_mean_complex(const MomentTable& q, const InterferometerParams& p) {
  detail::require_matching(q, p);
  const cd e = std::polar(1.0, p.phi);
  return std::sqrt(p.t1 * p.t2) * (e * q(1, 0, 0, 0) + std::conj(e) * q(0, 1, 0, 0)) * std::cosh(p.g) +
         std::sqrt(p.t2) * (q(0, 0, 0, 1) + q(0, 0, 1, 0)) * std::sinh(p.g);
}

// <(a_out^dag + a_out)^2>, vacuum terms included.
inline cd quadrature_second_moment_complex(const MomentTable& q, const InterferometerParams& p) {
  detail::require_matching(q, p);
  const cd e = std::polar(1.0, p.phi);
  const cd e2 = e * e;
  const double ch = std::cosh(p.g), sh = std::sinh(p.g);
  const double t1 = p.t1, t2 = p.t2;
  return t1 * t2 * (2.0 * q(1, 1, 0, 0) + e2 * q(2, 0, 0, 0) + std::conj(e2) * q(0, 2, 0, 0)) * ch * ch +
         t2 * (2.0 * q(0, 0, 1, 1) + 2.0 + q(0, 0, 2, 0) + q(0, 0, 0, 2)) * sh * sh +
         2.0 * t2 * std::sqrt(t1) * e * (q(1, 0, 0, 1) + q(1, 0, 1, 0)) * sh * ch +
         2.0 * t2 * std::sqrt(t1) * std::conj(e) * (q(0, 1, 1, 0) + q(0, 1, 0, 1)) * sh * ch + 1.0;
}

// d<a_out^dag + a_out>/dphi; only the e^{+-i phi} factors depend on phi.
inline double dmean_dphi(const MomentTable& q, const InterferometerParams& p) {
  detail::require_matching(q, p);
  const cd e = std::polar(1.0, p.phi);
  const cd i(0.0, 1.0);
  const cd d = std::sqrt(p.t1 * p.t2) * (i * e * q(1, 0, 0, 0) - i * std::conj(e) * q(0, 1, 0, 0)) *
               std::cosh(p.g);
  return detail::require_real(d, "dmean/dphi");
}

inline double quadrature_mean(const MomentTable& q, const InterferometerParams& p) {
  return detail::require_real(quadrature_mean_complex(q, p), "quadrature mean");
}

inline double quadrature_second_moment(const MomentTable& q, const InterferometerParams& p) {
  return detail::require_real(quadrature_second_moment_complex(q, p), "quadrature second moment");
}

inline QuadratureStats quadrature_stats(const MomentTable& q, const InterferometerParams& p) {
  QuadratureStats s;
  s.mean = quadrature_mean(q, p);
  s.second_moment = quadrature_second_moment(q, p);
  s.variance = s.second_moment - s.mean * s.mean;
  s.dmean_dphi = dmean_dphi(q, p);
  if (s.variance < -1e-9 * std::max(1.0, s.second_moment))
    throw ConsistencyError("negative quadrature variance " + std::to_string(s.variance));
  return s;
}

inline double quadrature_mean(const InterferometerParams& p) { return quadrature_mean(MomentTable(p), p); }
inline double quadrature_second_moment(const InterferometerParams& p) {
  return quadrature_second_moment(MomentTable(p), p);
}
inline double dmean_dphi(const InterferometerParams& p) { return dmean_dphi(MomentTable(p), p); }
inline QuadratureStats quadrature_stats(const InterferometerParams& p) {
  return quadrature_stats(MomentTable(p), p);
}

}  // namespace su11
