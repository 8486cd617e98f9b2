#pragma once

// Truncated multivariate power series with complex coefficients.
//
// A TruncatedSeries<N> is a polynomial in N commuting formal variables with
// every monomial of total degree above the cap discarded. It is the
// expansion substrate for exponential generating functions: build the
// exponent, take exp(), and read mixed partial derivatives at the origin
// straight off the coefficients.

#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>

#include "su11/errors.hpp"

namespace su11 {

// Largest supported degree cap; keeps k! exactly representable-ish and finite.
inline constexpr unsigned kMaxDegreeCap = 20;

namespace detail {

inline constexpr std::array<double, kMaxDegreeCap + 1> kFactorials = [] {
  std::array<double, kMaxDegreeCap + 1> f{};
  f[0] = 1.0;
  for (std::size_t k = 1; k < f.size(); ++k) f[k] = f[k - 1] * static_cast<double>(k);
  return f;
}();

}  // namespace detail

template <std::size_t N>
struct MultiIndex {
  std::array<unsigned, N> exponents{};

  constexpr unsigned degree() const {
    return std::accumulate(exponents.begin(), exponents.end(), 0u);
  }

  // prod_i exponent_i!
  constexpr double factorial_weight() const {
    double w = 1.0;
    for (unsigned e : exponents) w *= detail::kFactorials.at(e);
    return w;
  }

  constexpr MultiIndex operator+(const MultiIndex& o) const {
    MultiIndex s;
    for (std::size_t i = 0; i < N; ++i) s.exponents[i] = exponents[i] + o.exponents[i];
    return s;
  }

  static constexpr MultiIndex unit(std::size_t var) {
    MultiIndex m;
    m.exponents.at(var) = 1;
    return m;
  }

  friend constexpr auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

template <std::size_t N, typename Scalar = std::complex<double>>
class TruncatedSeries {
 public:
  using index_type = MultiIndex<N>;
  using scalar_type = Scalar;
  using map_type = std::map<index_type, Scalar>;

  explicit TruncatedSeries(unsigned degree_cap) : cap_(degree_cap) {
    if (degree_cap > kMaxDegreeCap)
      throw InvalidParameter("degree cap " + std::to_string(degree_cap) + " exceeds " +
                             std::to_string(kMaxDegreeCap));
  }

  static TruncatedSeries constant(unsigned degree_cap, Scalar value) {
    TruncatedSeries s(degree_cap);
    s.add_term(index_type{}, value);
    return s;
  }

  // coeff * lambda_var
  static TruncatedSeries variable(unsigned degree_cap, std::size_t var, Scalar coeff = Scalar(1)) {
    TruncatedSeries s(degree_cap);
    s.add_term(index_type::unit(var), coeff);
    return s;
  }

  unsigned degree_cap() const { return cap_; }
  const map_type& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Scalar coeff(const index_type& idx) const {
    auto it = terms_.find(idx);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  // Accumulates into a monomial; silently dropped above the cap, erased on
  // exact cancellation.
  void add_term(const index_type& idx, Scalar value) {
    if (idx.degree() > cap_ || value == Scalar(0)) return;
    auto [it, inserted] = terms_.try_emplace(idx, value);
    if (!inserted) {
      it->second += value;
      if (it->second == Scalar(0)) terms_.erase(it);
    }
  }

  TruncatedSeries& operator+=(const TruncatedSeries& o) {
    require_same_cap(o);
    for (const auto& [idx, c] : o.terms_) add_term(idx, c);
    return *this;
  }

  TruncatedSeries& operator-=(const TruncatedSeries& o) {
    require_same_cap(o);
    for (const auto& [idx, c] : o.terms_) add_term(idx, -c);
    return *this;
  }

  TruncatedSeries& operator*=(Scalar k) {
    if (k == Scalar(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [idx, c] : terms_) c *= k;
    return *this;
  }

  friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
  friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) { return a -= b; }
  friend TruncatedSeries operator-(TruncatedSeries a) { return a *= Scalar(-1); }
  friend TruncatedSeries operator*(TruncatedSeries a, Scalar k) { return a *= k; }
  friend TruncatedSeries operator*(Scalar k, TruncatedSeries a) { return a *= k; }

  // Cauchy product, terms above the cap dropped.
  friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
    a.require_same_cap(b);
    TruncatedSeries out(a.cap_);
    for (const auto& [ia, ca] : a.terms_) {
      const unsigned da = ia.degree();
      for (const auto& [ib, cb] : b.terms_) {
        if (da + ib.degree() > a.cap_) continue;
        out.add_term(ia + ib, ca * cb);
      }
    }
    return out;
  }

  TruncatedSeries& operator*=(const TruncatedSeries& o) { return *this = *this * o; }

  // Numeric evaluation at a point (used for finite-difference checks).
  Scalar evaluate(const std::array<Scalar, N>& point) const {
    Scalar sum(0);
    for (const auto& [idx, c] : terms_) {
      Scalar m = c;
      for (std::size_t i = 0; i < N; ++i)
        for (unsigned k = 0; k < idx.exponents[i]; ++k) m *= point[i];
      sum += m;
    }
    return sum;
  }

  friend bool operator==(const TruncatedSeries&, const TruncatedSeries&) = default;

 private:
  void require_same_cap(const TruncatedSeries& o) const {
    if (cap_ != o.cap_)
      throw DegreeCapMismatch("degree caps differ: " + std::to_string(cap_) + " vs " +
                              std::to_string(o.cap_));
  }

  unsigned cap_;
  map_type terms_;
};

// sum_{k=0..D} s^k / k!. Requires a vanishing constant term so the sum is
// exact at the cap (s^{D+1} has no surviving monomial).
template <std::size_t N, typename Scalar>
TruncatedSeries<N, Scalar> series_exp(const TruncatedSeries<N, Scalar>& s) {
  using Series = TruncatedSeries<N, Scalar>;
  if (s.coeff(MultiIndex<N>{}) != Scalar(0))
    throw std::domain_error("series exp requires a zero constant term");
  const unsigned cap = s.degree_cap();
  // Horner: 1 + s(1 + s/2(1 + s/3(...)))
  Series acc = Series::constant(cap, Scalar(1));
  for (unsigned k = cap; k >= 1; --k) {
    acc = Series::constant(cap, Scalar(1)) + (s * acc) * Scalar(1.0 / static_cast<double>(k));
  }
  return acc;
}

// Mixed partial derivative at the origin: coeff(idx) * prod(idx_i!).
template <std::size_t N, typename Scalar>
Scalar extract_derivative(const TruncatedSeries<N, Scalar>& s, const MultiIndex<N>& idx) {
  if (idx.degree() > s.degree_cap())
    throw OrderExceedsCap("derivative order " + std::to_string(idx.degree()) +
                          " exceeds degree cap " + std::to_string(s.degree_cap()));
  return s.coeff(idx) * idx.factorial_weight();
}

}  // namespace su11
