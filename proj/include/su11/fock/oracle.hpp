#pragma once

// Brute-force evaluation of the interferometer in a truncated Fock basis:
//
//   |alpha>_a|0>_b -> U_S1 -> S_a -> U_phi -> loss T1 on a -> U_S2 -> loss T2 on a -> homodyne X = a + a^dag
//
// with U_S2 the two-mode squeezer at theta = pi. Independent of the
// generating-function path: no Bogoliubov algebra, only truncated generators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "su11/errors.hpp"
#include "su11/fock/gates.hpp"
#include "su11/fock/loss.hpp"
#include "su11/fock/state.hpp"
#include "su11/metrology.hpp"
#include "su11/params.hpp"

namespace su11::fock {

struct CutoffPolicy {
  int initial = 20;
  int step = 10;
  int max = 60;
  double tolerance = 1e-10;  // on top-level occupation mass
  double growth = 1.0;       // next = max(d + step, ceil(d * growth))

  int next(int d) const {
    return std::max(d + step, static_cast<int>(std::ceil(d * growth)));
  }
  void validate() const {
    if (initial < 2 || step < 1 || max < initial || !(growth >= 1.0) || !(tolerance >= 0.0))
      throw InvalidParameter("invalid cutoff policy");
  }
};

struct OracleOptions {
  CutoffPolicy cutoff{};
  double fd_step = 1e-5;
  bool local_squeezer = true;       // false: the standard SU(1,1) circuit without S_a
  bool require_convergence = true;  // throw CutoffError if the policy is exhausted
};

struct CutoffDiagnostics {
  int cutoff = 0;
  double norm_deficit = 0.0;  // 1 - trace of the output
  double tail_mass = 0.0;     // worst top-level mass over the internal and output states
  bool converged = false;
  std::vector<int> tried;
};

struct OracleReport {
  InterferometerParams params;
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
  double dmean_dphi = 0.0;
  std::optional<double> delta_phi;  // empty when the slope is below the divergence threshold
  double n_total = 0.0;
  double fisher = 0.0;  // 4 Var(n_a) of the internal pure state
  CutoffDiagnostics diagnostics;
  bool divergent() const { return !delta_phi.has_value(); }
  bool converged() const { return diagnostics.converged; }
};

namespace detail {

inline ModeOperator quadrature_operator(int d) {
  std::vector<Eigen::Triplet<cd>> t;
  for (int n = 0; n + 1 < d; ++n) {
    const double s = std::sqrt(n + 1.0);
    t.emplace_back(n, n + 1, s);
    t.emplace_back(n + 1, n, s);
  }
  ModeOperator x(d, d);
  x.setFromTriplets(t.begin(), t.end());
  return x;
}

// (a + a^dag)^2 with untruncated matrix elements: <n|.|n> = 2n + 1.
inline ModeOperator quadrature_squared_operator(int d) {
  std::vector<Eigen::Triplet<cd>> t;
  for (int n = 0; n < d; ++n) {
    t.emplace_back(n, n, 2.0 * n + 1.0);
    if (n + 2 < d) {
      const double s = std::sqrt((n + 1.0) * (n + 2.0));
      t.emplace_back(n, n + 2, s);
      t.emplace_back(n + 2, n, s);
    }
  }
  ModeOperator x(d, d);
  x.setFromTriplets(t.begin(), t.end());
  return x;
}

inline double real_checked(cd v, const char* what) {
  if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real())))
    throw ConsistencyError(std::string("oracle ") + what + " has imaginary part " + std::to_string(v.imag()));
  return v.real();
}

// S_a U_S1 |alpha, 0>.
inline FockStateVector internal_state(const InterferometerParams& p, int d, bool local_squeezer, GateCache& cache) {
  FockStateVector s = build_input(p.alpha, d);
  if (p.g != 0.0) cache.two_mode(p.g, 0.0, d)->apply(s);
  if (local_squeezer && p.r != 0.0) cache.local(p.r, kLocalSqueezerTheta, d)->apply(s);
  return s;
}

struct Readout {
  std::vector<double> mean;           // one entry per external transmittance
  std::vector<double> second_moment;  // empty unless requested
  double trace = 0.0;
  double tail = 0.0;
};

// Internal state, internal loss and the second OPA at one cutoff, read out
// for one or more external transmittances.
class Pipeline {
 public:
  Pipeline(const InterferometerParams& p, std::span<const double> t2_values, int d, const OracleOptions& opts,
           GateCache& cache)
      : pre_(internal_state(p, d, opts.local_squeezer, cache)) {
    // Loss on a commutes with U_phi up to a phase per Kraus branch, so the
    // internal loss is applied once, before the phase.
    internal_ = apply_loss(pre_, KrausChannel{p.t1, Mode::a, -1});
    if (p.g != 0.0) s2_ = cache.two_mode(p.g, kLocalSqueezerTheta, d);
    const ModeOperator x = quadrature_operator(d);
    const ModeOperator x2 = quadrature_squared_operator(d);
    for (double t2 : t2_values) {
      const KrausChannel ext{t2, Mode::a, -1};
      ext.validate();
      x_.push_back(t2 == 1.0 ? x : ext.dual(x, d));
      x2_.push_back(t2 == 1.0 ? x2 : ext.dual(x2, d));
    }
  }

  const FockStateVector& internal_pure() const { return pre_; }

  Readout at(double phi, bool second_moment) const {
    std::vector<FockStateVector> branches;
    branches.reserve(internal_.branches().size());
    for (const auto& b : internal_.branches()) branches.push_back(apply_phase(b, phi));
    if (s2_) s2_->apply(branches);
    Readout r;
    for (std::size_t k = 0; k < x_.size(); ++k) {
      cd m = 0.0, m2 = 0.0;
      for (const auto& b : branches) {
        m += b.expectation_mode_a(x_[k]);
        if (second_moment) m2 += b.expectation_mode_a(x2_[k]);
      }
      r.mean.push_back(real_checked(m, "quadrature mean"));
      if (second_moment) r.second_moment.push_back(real_checked(m2, "quadrature second moment"));
    }
    for (const auto& b : branches) {
      r.trace += b.norm_squared();
      r.tail += b.top_level_mass();
    }
    return r;
  }

 private:
  FockStateVector pre_;
  FockDensityOperator internal_{2};
  std::shared_ptr<const TwoModeSqueezerGate> s2_;
  std::vector<ModeOperator> x_, x2_;
};

inline double number_variance(const FockStateVector& s) {
  const double n = s.mean_na();
  return s.mean_na_squared() - n * n;
}

// Reports for each external transmittance; all share one cutoff and tail mass.
struct ExternalSweep {
  std::vector<OracleReport> reports;
  CutoffDiagnostics diagnostics;
};

inline ExternalSweep evaluate_at_cutoff(const InterferometerParams& p, std::span<const double> t2_values, int d,
                                        const OracleOptions& opts, GateCache* cache) {
  GateCache own;
  const Pipeline pipe(p, t2_values, d, opts, cache ? *cache : own);
  const FockStateVector& pre = pipe.internal_pure();
  const double n_total = pre.mean_na() + pre.mean_nb();
  const double fisher = 4.0 * number_variance(pre);

  const Readout c = pipe.at(p.phi, true);
  const Readout hi = pipe.at(p.phi + opts.fd_step, false);
  const Readout lo = pipe.at(p.phi - opts.fd_step, false);

  ExternalSweep out;
  out.diagnostics.cutoff = d;
  out.diagnostics.norm_deficit = std::abs(1.0 - c.trace);
  out.diagnostics.tail_mass = std::max({pre.top_level_mass(), c.tail, hi.tail, lo.tail});
  for (std::size_t k = 0; k < t2_values.size(); ++k) {
    OracleReport rep;
    rep.params = p;
    rep.params.t2 = t2_values[k];
    rep.n_total = n_total;
    rep.fisher = fisher;
    rep.mean = c.mean[k];
    rep.second_moment = c.second_moment[k];
    rep.variance = rep.second_moment - rep.mean * rep.mean;
    rep.dmean_dphi = (hi.mean[k] - lo.mean[k]) / (2.0 * opts.fd_step);
    if (std::abs(rep.dmean_dphi) >= kDivergenceThreshold)
      rep.delta_phi = std::sqrt(std::max(rep.variance, 0.0)) / std::abs(rep.dmean_dphi);
    rep.diagnostics = out.diagnostics;
    out.reports.push_back(std::move(rep));
  }
  return out;
}

}  // namespace detail

// Runs `eval(d)` over the cutoff schedule until the reported tail mass is
// below tolerance. `eval` may throw CutoffError to request a larger cutoff.
template <typename Report, typename Eval>
Report escalate(const CutoffPolicy& policy, bool require_convergence, Eval eval) {
  policy.validate();
  std::vector<int> tried;
  std::optional<Report> last;
  std::string last_error;
  for (int d = policy.initial;; d = policy.next(d)) {
    d = std::min(d, policy.max);
    tried.push_back(d);
    try {
      Report r = eval(d);
      r.diagnostics.tried = tried;
      r.diagnostics.converged = r.diagnostics.tail_mass < policy.tolerance &&
                                r.diagnostics.norm_deficit < std::max(policy.tolerance, kCoherentTailTolerance);
      if (r.diagnostics.converged) return r;
      last = std::move(r);
    } catch (const CutoffError& e) {
      last_error = e.what();
    }
    if (d >= policy.max) break;
  }
  if (require_convergence || !last) {
    std::string msg = "oracle did not converge by cutoff " + std::to_string(policy.max);
    if (last) msg += " (tail mass " + su11::detail::sci(last->diagnostics.tail_mass) + ")";
    if (!last_error.empty()) msg += ": " + last_error;
    throw CutoffError(msg);
  }
  return *last;
}

// Oracle sensitivity at several external transmittances; p.t2 is ignored.
// One escalation serves all of them, so the reports share a cutoff.
inline std::vector<OracleReport> oracle_sensitivity(const InterferometerParams& p,
                                                    std::span<const double> t2_values,
                                                    const OracleOptions& opts = {}, GateCache* cache = nullptr) {
  for (double t2 : t2_values) {
    InterferometerParams q = p;
    q.t2 = t2;
    q.validate();
  }
  detail::ExternalSweep sweep = escalate<detail::ExternalSweep>(opts.cutoff, opts.require_convergence, [&](int d) {
    return detail::evaluate_at_cutoff(p, t2_values, d, opts, cache);
  });
  for (auto& r : sweep.reports) r.diagnostics = sweep.diagnostics;
  return std::move(sweep.reports);
}

inline OracleReport oracle_sensitivity(const InterferometerParams& p, const OracleOptions& opts = {},
                                       GateCache* cache = nullptr) {
  const double t2[] = {p.t2};
  return oracle_sensitivity(p, t2, opts, cache).front();
}

struct PureQfiReport {
  double fisher = 0.0;
  double mean_na = 0.0;
  double n_total = 0.0;
  CutoffDiagnostics diagnostics;
};

// F = 4 Var(n_a) of S_a U_S1 |alpha, 0>.
inline PureQfiReport oracle_qfi_pure(const InterferometerParams& p, const OracleOptions& opts = {},
                                     GateCache* cache = nullptr) {
  p.validate();
  GateCache own;
  GateCache& gates = cache ? *cache : own;
  return escalate<PureQfiReport>(opts.cutoff, opts.require_convergence, [&](int d) {
    const FockStateVector s = detail::internal_state(p, d, opts.local_squeezer, gates);
    PureQfiReport r;
    r.mean_na = s.mean_na();
    r.n_total = r.mean_na + s.mean_nb();
    r.fisher = 4.0 * detail::number_variance(s);
    r.diagnostics.cutoff = d;
    r.diagnostics.norm_deficit = std::abs(1.0 - s.norm_squared());
    r.diagnostics.tail_mass = s.top_level_mass();
    return r;
  });
}

inline constexpr double kSldEigenvalueFloor = 1e-12;

// Exact QFI for rho_phi = U_phi rho U_phi^dag with generator n_a:
//   F = 2 sum_{p_i + p_j > eps} (p_i - p_j)^2 |<i|n_a|j>|^2 / (p_i + p_j).
// rho = V V^dag is diagonalised through the Gram matrix V^dag V; pairs with
// one index in the kernel reduce to 4 sum_i p_i (<i|n_a^2|i> - sum_{j in supp} |<i|n_a|j>|^2).
inline double sld_qfi(const FockDensityOperator& rho, double floor = kSldEigenvalueFloor) {
  const int d = rho.cutoff();
  const Eigen::MatrixXcd v = rho.factor();
  if (v.cols() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(v.adjoint() * v);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()[k] > 0.5 * floor) keep.push_back(k);
  const auto r = static_cast<Eigen::Index>(keep.size());
  if (r == 0) return 0.0;
  Eigen::VectorXd p(r);
  Eigen::MatrixXcd u(v.rows(), r);
  for (Eigen::Index i = 0; i < r; ++i) {
    p[i] = es.eigenvalues()[keep[static_cast<std::size_t>(i)]];
    u.col(i) = v * es.eigenvectors().col(keep[static_cast<std::size_t>(i)]) / std::sqrt(p[i]);
  }
  // n_a acts diagonally in the flat basis index n_a * d + n_b.
  Eigen::VectorXd n(v.rows());
  for (Eigen::Index k = 0; k < v.rows(); ++k) n[k] = static_cast<double>(k / d);
  const Eigen::MatrixXcd nu = n.asDiagonal() * u;
  const Eigen::MatrixXcd nij = u.adjoint() * nu;
  double f = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    double in_support = 0.0;
    for (Eigen::Index j = 0; j < r; ++j) {
      const double s = p[i] + p[j];
      in_support += std::norm(nij(i, j));
      if (s > floor) f += 2.0 * (p[i] - p[j]) * (p[i] - p[j]) * std::norm(nij(i, j)) / s;
    }
    const double n2 = nu.col(i).squaredNorm();
    f += 4.0 * p[i] * std::max(n2 - in_support, 0.0);
  }
  return f;
}

// Same quantity from the dense d^2 x d^2 density matrix (small cutoffs only).
inline double sld_qfi_dense(const FockDensityOperator& rho, double floor = kSldEigenvalueFloor) {
  const int d = rho.cutoff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.to_dense());
  const Eigen::Index m = es.eigenvalues().size();
  Eigen::VectorXd n(m);
  for (Eigen::Index k = 0; k < m; ++k) n[k] = static_cast<double>(k / d);
  const Eigen::MatrixXcd nij = es.eigenvectors().adjoint() * n.asDiagonal() * es.eigenvectors();
  double f = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double pi = std::max(es.eigenvalues()[i], 0.0), pj = std::max(es.eigenvalues()[j], 0.0);
      if (pi + pj > floor) f += 2.0 * (pi - pj) * (pi - pj) * std::norm(nij(i, j)) / (pi + pj);
    }
  return f;
}

struct MixedQfiReport {
  double eta = 1.0;
  double fisher = 0.0;
  CutoffDiagnostics diagnostics;
};

// True QFI after loss eta on mode a of S_a U_S1 |alpha, 0>.
inline MixedQfiReport oracle_qfi_mixed(const InterferometerParams& p, double eta, const OracleOptions& opts = {},
                                       GateCache* cache = nullptr) {
  p.validate();
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0,1]");
  GateCache own;
  GateCache& gates = cache ? *cache : own;
  return escalate<MixedQfiReport>(opts.cutoff, opts.require_convergence, [&](int d) {
    const FockStateVector s = detail::internal_state(p, d, opts.local_squeezer, gates);
    const FockDensityOperator rho = apply_loss(s, KrausChannel{eta, Mode::a, -1});
    MixedQfiReport r;
    r.eta = eta;
    r.fisher = sld_qfi(rho);
    r.diagnostics.cutoff = d;
    r.diagnostics.norm_deficit = std::abs(1.0 - rho.trace());
    r.diagnostics.tail_mass = s.top_level_mass();
    return r;
  });
}

// Norm deficit and top-level mass of a state, without escalation.
inline CutoffDiagnostics cutoff_diagnostics(const FockDensityOperator& rho, double tolerance) {
  CutoffDiagnostics c;
  c.cutoff = rho.cutoff();
  c.norm_deficit = std::abs(1.0 - rho.trace());
  c.tail_mass = rho.top_level_mass();
  c.converged = c.tail_mass < tolerance && c.norm_deficit < std::max(tolerance, kCoherentTailTolerance);
  c.tried = {c.cutoff};
  return c;
}

inline CutoffDiagnostics cutoff_diagnostics(const FockStateVector& s, double tolerance) {
  return cutoff_diagnostics(FockDensityOperator(s), tolerance);
}

// Escalates the cutoff for the internal state S_a U_S1 |alpha, 0> until its
// top-level mass is below tolerance.
inline CutoffDiagnostics cutoff_check(const InterferometerParams& p, const CutoffPolicy& policy = {},
                                      bool local_squeezer = true) {
  struct R {
    CutoffDiagnostics diagnostics;
  };
  GateCache gates;
  const R r = escalate<R>(policy, false, [&](int d) {
    // An input that does not fit is reported as unconverged rather than thrown.
    if (const double tail = coherent_tail_mass(p.alpha, d); tail >= kCoherentTailTolerance) {
      CutoffDiagnostics c;
      c.cutoff = d;
      c.norm_deficit = tail;
      c.tail_mass = tail;
      return R{c};
    }
    return R{cutoff_diagnostics(detail::internal_state(p, d, local_squeezer, gates), policy.tolerance)};
  });
  return r.diagnostics;
}

}  // namespace su11::fock
