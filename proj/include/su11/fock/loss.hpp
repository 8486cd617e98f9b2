#pragma once

// Photon loss as a Kraus map on one mode:
//   Pi_l = sqrt((1-T)^l / l!) T^{n/2} a^l,   rho -> sum_l Pi_l rho Pi_l^dag.
// This is the reduced action of a beam splitter of transmittance T coupling
// the mode to a vacuum ancilla.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "su11/errors.hpp"
#include "su11/fock/state.hpp"

namespace su11::fock {

enum class Mode { a, b };

// Relative branch weight below which a Kraus branch is dropped.
inline constexpr double kBranchPruneThreshold = 1e-20;
inline constexpr double kTracePreservationTolerance = 1e-10;

struct KrausChannel {
  double transmittance = 1.0;
  Mode mode = Mode::a;
  int max_loss_order = -1;  // negative: cutoff - 1, which is complete on the truncated space

  void validate() const {
    if (!(transmittance >= 0.0 && transmittance <= 1.0))
      throw InvalidParameter("transmittance must lie in [0,1]");
  }

  int loss_orders(int cutoff) const { return max_loss_order < 0 ? cutoff - 1 : std::min(max_loss_order, cutoff - 1); }

  // <n - l| Pi_l |n> = sqrt(C(n,l) (1-T)^l T^{n-l})
  double element(int l, int n) const {
    if (l > n) return 0.0;
    const double t = transmittance;
    const double log_binom = std::lgamma(n + 1.0) - std::lgamma(l + 1.0) - std::lgamma(n - l + 1.0);
    const double loss = l == 0 ? 1.0 : std::pow(1.0 - t, l);
    const double keep = (n - l) == 0 ? 1.0 : std::pow(t, n - l);
    return std::sqrt(std::exp(log_binom) * loss * keep);
  }

  Eigen::SparseMatrix<double> kraus_operator(int l, int cutoff) const {
    Eigen::SparseMatrix<double> k(cutoff, cutoff);
    std::vector<Eigen::Triplet<double>> t;
    for (int n = l; n < cutoff; ++n) {
      const double e = element(l, n);
      if (e != 0.0) t.emplace_back(n - l, n, e);
    }
    k.setFromTriplets(t.begin(), t.end());
    return k;
  }

  // sum_l Pi_l^dag Pi_l over the retained orders.
  Eigen::MatrixXd completeness(int cutoff) const {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(cutoff, cutoff);
    for (int l = 0; l <= loss_orders(cutoff); ++l) {
      const Eigen::MatrixXd k = Eigen::MatrixXd(kraus_operator(l, cutoff));
      c += k.transpose() * k;
    }
    return c;
  }

  // Heisenberg-picture action sum_l Pi_l^dag O Pi_l on a mode operator.
  ModeOperator dual(const ModeOperator& op, int cutoff) const {
    ModeOperator out(cutoff, cutoff);
    for (int l = 0; l <= loss_orders(cutoff); ++l) {
      const ModeOperator k = kraus_operator(l, cutoff).cast<cd>();
      out += ModeOperator(k.adjoint() * op * k);
    }
    out.prune(cd(0.0));
    return out;
  }
};

namespace detail {

inline void lose_into(const FockStateVector& v, const KrausChannel& ch, double prune_below,
                      FockDensityOperator& out) {
  const int d = v.cutoff();
  const auto& amp = v.amplitudes();
  for (int l = 0; l <= ch.loss_orders(d); ++l) {
    FockStateVector w(d);
    auto& wa = w.amplitudes();
    for (int n = l; n < d; ++n) {
      const double e = ch.element(l, n);
      if (e == 0.0) continue;
      if (ch.mode == Mode::a)
        wa.row(n - l) = e * amp.row(n);
      else
        wa.col(n - l) = e * amp.col(n);
    }
    if (w.norm_squared() > prune_below) out.add_branch(std::move(w));
  }
}

}  // namespace detail

inline FockDensityOperator apply_loss(const FockDensityOperator& rho, const KrausChannel& ch) {
  ch.validate();
  const double before = rho.trace();
  FockDensityOperator out(rho.cutoff());
  if (ch.transmittance == 1.0) return rho;
  for (const auto& v : rho.branches()) detail::lose_into(v, ch, kBranchPruneThreshold * before, out);
  const double deficit = std::abs(out.trace() - before);
  if (deficit > kTracePreservationTolerance * std::max(1.0, before))
    throw CutoffError("loss channel lost trace " + su11::detail::sci(deficit) +
                      "; raise max_loss_order (populated levels exceed " +
                      std::to_string(ch.loss_orders(rho.cutoff())) + ")");
  return out;
}

inline FockDensityOperator apply_loss(const FockStateVector& psi, const KrausChannel& ch) {
  return apply_loss(FockDensityOperator(psi), ch);
}

}  // namespace su11::fock
