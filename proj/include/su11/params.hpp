#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "su11/errors.hpp"

namespace su11 {

using cd = std::complex<double>;

// Physical configuration of the interferometer.
//
// Both OPAs share gain g; the first has phase 0 and the second phase pi, so
// the second OPA undoes the first when nothing happens in between. The local
// squeezer S_a = exp[(r/2)(a^2 e^{-i pi} - a^dag^2 e^{i pi})] sits on arm a
// between the first OPA and the phase shifter. t1 is the transmittance of the
// internal loss (after the phase shift, before the second OPA), t2 of the
// external loss (before the homodyne detector). Both losses act on mode a.
struct InterferometerParams {
  double g = 0.0;
  cd alpha{0.0, 0.0};
  double r = 0.0;
  double t1 = 1.0;
  double t2 = 1.0;
  double phi = 0.0;

  void validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(g) || g < 0.0) throw InvalidParameter("gain g must be finite and >= 0");
    if (!finite(r) || r < 0.0) throw InvalidParameter("squeezing r must be finite and >= 0");
    if (!finite(alpha.real()) || !finite(alpha.imag()))
      throw InvalidParameter("coherent amplitude must be finite");
    if (!(t1 >= 0.0 && t1 <= 1.0)) throw InvalidParameter("t1 must lie in [0,1]");
    if (!(t2 >= 0.0 && t2 <= 1.0)) throw InvalidParameter("t2 must lie in [0,1]");
    if (!finite(phi)) throw InvalidParameter("phi must be finite");
  }

  // The parts of the state that exist before the phase shifter. Moments of
  // the internal state depend on nothing else.
  bool same_source(const InterferometerParams& o) const {
    return g == o.g && alpha == o.alpha && r == o.r;
  }

  friend bool operator==(const InterferometerParams&, const InterferometerParams&) = default;
};

inline std::string to_string(const InterferometerParams& p) {
  return "g=" + std::to_string(p.g) + " alpha=(" + std::to_string(p.alpha.real()) + "," +
         std::to_string(p.alpha.imag()) + ") r=" + std::to_string(p.r) +
         " t1=" + std::to_string(p.t1) + " t2=" + std::to_string(p.t2) +
         " phi=" + std::to_string(p.phi);
}

}  // namespace su11
