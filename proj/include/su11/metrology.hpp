#pragma once

// Phase sensitivity, photon-number benchmarks and quantum Fisher information
// on top of the moment engine.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "su11/errors.hpp"
#include "su11/moment_engine.hpp"
#include "su11/params.hpp"

namespace su11 {

// Below this slope the error-propagation estimate is meaningless at double precision.
inline constexpr double kDivergenceThreshold = 1e-12;

struct SensitivityReport {
  InterferometerParams params;
  double delta_phi = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double dmean_dphi = 0.0;
};

// Error propagation: sqrt(Var X) / |d<X>/dphi| with bare X = a^dag + a.
// The 1/sqrt(2) quadrature normalisation cancels between numerator and
// denominator.
inline SensitivityReport phase_sensitivity(const MomentTable& q, const InterferometerParams& p) {
  const QuadratureStats s = quadrature_stats(q, p);
  if (!(std::abs(s.dmean_dphi) >= kDivergenceThreshold))
    throw DivergentSensitivity("phase slope |d<X>/dphi| = " + std::to_string(std::abs(s.dmean_dphi)) +
                               " below threshold at " + to_string(p));
  SensitivityReport rep;
  rep.params = p;
  rep.mean = s.mean;
  rep.variance = s.variance;
  rep.dmean_dphi = s.dmean_dphi;
  rep.delta_phi = std::sqrt(std::max(s.variance, 0.0)) / std::abs(s.dmean_dphi);
  return rep;
}

inline SensitivityReport phase_sensitivity(const InterferometerParams& p) {
  return phase_sensitivity(MomentTable(p), p);
}

// N = <n_a + n_b> inside the interferometer before the second OPA, lossless.
inline double total_photon_number(const MomentTable& q) {
  const cd n = q(1, 1, 0, 0) + q(0, 0, 1, 1);
  if (std::abs(n.imag()) > 1e-10 * std::max(1.0, std::abs(n.real())))
    throw ConsistencyError("photon number has imaginary part " + std::to_string(n.imag()));
  return std::max(n.real(), 0.0);
}

inline double total_photon_number(const InterferometerParams& p) { return total_photon_number(MomentTable(p)); }

struct Benchmarks {
  double sql = 0.0;  // 1/sqrt(N)
  double hl = 0.0;   // 1/N
};

inline Benchmarks sql_hl(double n_total) {
  if (!(n_total > 0.0)) throw DegenerateConfiguration("SQL/HL undefined for N = 0");
  return {1.0 / std::sqrt(n_total), 1.0 / n_total};
}

inline Benchmarks sql_hl(const InterferometerParams& p) { return sql_hl(total_photon_number(p)); }

struct QfiReport {
  double n_total = 0.0;
  double sql = 0.0;
  double hl = 0.0;
  double fisher = 0.0;
  double qcrb = 0.0;  // single measurement
};

// Mean photon number in arm a of the internal state.
inline double arm_photon_number(const MomentTable& q) { return q(1, 1, 0, 0).real(); }

// F = 4 <Delta^2 n_a> = 4(Q2200 + Q1100) - 4 Q1100^2 for the pure internal state.
inline double fisher_ideal(const MomentTable& q) {
  const double n1 = q(1, 1, 0, 0).real();
  return 4.0 * (q(2, 2, 0, 0).real() + n1) - 4.0 * n1 * n1;
}

inline QfiReport qfi_ideal(const MomentTable& q) {
  QfiReport rep;
  rep.fisher = fisher_ideal(q);
  if (!(rep.fisher > 0.0)) throw DegenerateConfiguration("quantum Fisher information is not positive");
  rep.n_total = total_photon_number(q);
  const Benchmarks b = sql_hl(rep.n_total);
  rep.sql = b.sql;
  rep.hl = b.hl;
  rep.qcrb = 1.0 / std::sqrt(rep.fisher);
  return rep;
}

inline QfiReport qfi_ideal(const InterferometerParams& p) { return qfi_ideal(MomentTable(p)); }

struct LossyQfiReport {
  double eta = 1.0;
  double fisher_lossy = 0.0;
  double qcrb_lossy = 0.0;  // +inf when fisher_lossy == 0
  bool unbounded() const { return std::isinf(qcrb_lossy); }
};

// Upper bound on the QFI after loss eta on arm a:
//   F_L = 4 F eta <n_a> / ((1 - eta) F + 4 eta <n_a>).
// The endpoints are returned exactly.
inline LossyQfiReport qfi_lossy(const MomentTable& q, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0,1]");
  const double f = fisher_ideal(q);
  const double na = arm_photon_number(q);
  if (!(f > 0.0) && !(na > 0.0)) throw DegenerateConfiguration("lossy QFI undefined for vacuum input");
  LossyQfiReport rep;
  rep.eta = eta;
  if (eta == 1.0) {
    rep.fisher_lossy = f;
  } else if (eta == 0.0) {
    rep.fisher_lossy = 0.0;
  } else {
    rep.fisher_lossy = 4.0 * f * eta * na / ((1.0 - eta) * f + 4.0 * eta * na);
  }
  rep.qcrb_lossy = rep.fisher_lossy > 0.0 ? 1.0 / std::sqrt(rep.fisher_lossy)
                                          : std::numeric_limits<double>::infinity();
  return rep;
}

inline LossyQfiReport qfi_lossy(const InterferometerParams& p, double eta) {
  return qfi_lossy(MomentTable(p), eta);
}

struct PhaseSearch {
  double lo = 0.0;
  double hi = std::numbers::pi;
  int grid = 2001;
  double tolerance = 1e-10;
};

struct OptimalPhaseResult {
  double phi_opt = 0.0;
  double delta_phi_min = 0.0;
  std::pair<double, double> bracket{0.0, std::numbers::pi};
  int n_grid = 0;
};

namespace detail {

inline std::optional<double> try_delta_phi(const MomentTable& q, InterferometerParams p, double phi) {
  p.phi = phi;
  try {
    return phase_sensitivity(q, p).delta_phi;
  } catch (const DivergentSensitivity&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Minimise delta_phi over phi: scan `grid` interior points of (lo, hi),
// skipping divergent ones, then golden-section refine between the
// neighbours of the best grid point. Deterministic.
inline OptimalPhaseResult optimal_phase(const MomentTable& q, const InterferometerParams& base,
                                        const PhaseSearch& search = {}) {
  if (!(search.lo < search.hi)) throw InvalidParameter("phase bracket must satisfy lo < hi");
  if (search.grid < 3) throw InvalidParameter("phase grid needs at least 3 points");
  const int n = search.grid;
  const double step = (search.hi - search.lo) / (n + 1);
  auto node = [&](int i) { return search.lo + step * (i + 1); };

  int best = -1;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto v = detail::try_delta_phi(q, base, node(i));
    if (v && *v < best_val) {
      best_val = *v;
      best = i;
    }
  }
  if (best < 0) throw DivergentSensitivity("no informative phase in the search bracket at " + to_string(base));

  OptimalPhaseResult res;
  res.bracket = {search.lo, search.hi};
  res.n_grid = n;
  res.phi_opt = node(best);
  res.delta_phi_min = best_val;

  auto f = [&](double phi) {
    const auto v = detail::try_delta_phi(q, base, phi);
    return v ? *v : std::numeric_limits<double>::infinity();
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = best > 0 ? node(best - 1) : search.lo;
  double b = best < n - 1 ? node(best + 1) : search.hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200; ++it) {
    if (b - a < 1e-14 * std::max(1.0, std::abs(a))) break;
    if (std::abs(fc - fd) < search.tolerance && b - a < 1e-7) break;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double phi_ref = fc < fd ? c : d;
  const double val_ref = std::min(fc, fd);
  if (val_ref < res.delta_phi_min) {
    res.delta_phi_min = val_ref;
    res.phi_opt = phi_ref;
  }
  return res;
}

inline OptimalPhaseResult optimal_phase(const InterferometerParams& base, const PhaseSearch& search = {}) {
  return optimal_phase(MomentTable(base), base, search);
}

}  // namespace su11
