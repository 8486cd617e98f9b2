#pragma once

// Two-mode states in a truncated Fock basis |n_a, n_b>, 0 <= n < cutoff.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "su11/errors.hpp"

namespace su11::fock {

using cd = std::complex<double>;
// Row index n_a, column index n_b; row-major so the flat layout is n_a * d + n_b.
using AmplitudeMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-mode operator on the truncated space; the ones used here are banded.
using ModeOperator = Eigen::SparseMatrix<cd>;

class FockStateVector {
 public:
  explicit FockStateVector(int cutoff) : amps_(AmplitudeMatrix::Zero(check(cutoff), cutoff)) {}
  explicit FockStateVector(AmplitudeMatrix amps) : amps_(std::move(amps)) {
    if (amps_.rows() != amps_.cols()) throw CutoffError("amplitude matrix must be square");
    check(static_cast<int>(amps_.rows()));
  }

  int cutoff() const { return static_cast<int>(amps_.rows()); }
  AmplitudeMatrix& amplitudes() { return amps_; }
  const AmplitudeMatrix& amplitudes() const { return amps_; }
  cd operator()(int na, int nb) const { return amps_(na, nb); }
  cd& operator()(int na, int nb) { return amps_(na, nb); }
  std::span<const cd> data() const { return {amps_.data(), static_cast<std::size_t>(amps_.size())}; }

  double norm_squared() const { return amps_.squaredNorm(); }

  // Probability on the two highest retained levels of either mode. Two
  // levels, because parity-conserving gates leave every other level empty.
  double top_level_mass() const {
    const int d = cutoff();
    const int lo = std::max(1, d - 2);
    const int k = d - lo;
    return amps_.bottomRows(k).squaredNorm() + amps_.rightCols(k).squaredNorm() -
           amps_.bottomRightCorner(k, k).squaredNorm();
  }

  // <psi| O_a (x) 1 |psi>
  cd expectation_mode_a(const ModeOperator& op) const {
    const AmplitudeMatrix applied = op * amps_;
    return amps_.conjugate().cwiseProduct(applied).sum();
  }

  // <psi| O_a (x) O_b |psi>
  cd expectation(const ModeOperator& op_a, const ModeOperator& op_b) const {
    const AmplitudeMatrix left = op_a * amps_;
    const AmplitudeMatrix applied = (op_b * left.transpose()).transpose();
    return amps_.conjugate().cwiseProduct(applied).sum();
  }

  // Number operators are diagonal: cheaper than going through a ModeOperator.
  double mean_na() const { return weighted_na(1); }
  double mean_na_squared() const { return weighted_na(2); }
  double mean_nb() const {
    double s = 0.0;
    for (int nb = 0; nb < cutoff(); ++nb) s += nb * amps_.col(nb).squaredNorm();
    return s;
  }

 private:
  static int check(int cutoff) {
    if (cutoff < 2) throw CutoffError("cutoff must be >= 2, got " + std::to_string(cutoff));
    return cutoff;
  }

  double weighted_na(int power) const {
    double s = 0.0;
    for (int na = 0; na < cutoff(); ++na) s += std::pow(static_cast<double>(na), power) * amps_.row(na).squaredNorm();
    return s;
  }

  AmplitudeMatrix amps_;
};

// rho = sum_k |v_k><v_k| over unnormalised branch vectors.
//
// Loss channels multiply the branch count rather than densifying, so the
// representation stays at (rank x d^2) instead of d^4.
class FockDensityOperator {
 public:
  explicit FockDensityOperator(int cutoff) : cutoff_(cutoff) {}
  explicit FockDensityOperator(FockStateVector pure) : cutoff_(pure.cutoff()) {
    branches_.push_back(std::move(pure));
  }

  int cutoff() const { return cutoff_; }
  const std::vector<FockStateVector>& branches() const { return branches_; }
  std::vector<FockStateVector>& branches() { return branches_; }
  void add_branch(FockStateVector v) {
    if (v.cutoff() != cutoff_) throw CutoffError("branch cutoff mismatch");
    branches_.push_back(std::move(v));
  }

  double trace() const {
    double t = 0.0;
    for (const auto& b : branches_) t += b.norm_squared();
    return t;
  }

  double top_level_mass() const {
    double t = 0.0;
    for (const auto& b : branches_) t += b.top_level_mass();
    return t;
  }

  cd expectation_mode_a(const ModeOperator& op) const {
    cd s = 0.0;
    for (const auto& b : branches_) s += b.expectation_mode_a(op);
    return s;
  }

  double mean_na() const {
    double s = 0.0;
    for (const auto& b : branches_) s += b.mean_na();
    return s;
  }

  // Branch vectors as the columns of a d^2 x rank matrix, rho = V V^dag.
  Eigen::MatrixXcd factor() const {
    const Eigen::Index n = static_cast<Eigen::Index>(cutoff_) * cutoff_;
    Eigen::MatrixXcd v(n, static_cast<Eigen::Index>(branches_.size()));
    for (std::size_t k = 0; k < branches_.size(); ++k)
      v.col(static_cast<Eigen::Index>(k)) =
          Eigen::Map<const Eigen::VectorXcd>(branches_[k].amplitudes().data(), n);
    return v;
  }

  // Full d^2 x d^2 matrix in the flat basis n_a * d + n_b. Small cutoffs only.
  Eigen::MatrixXcd to_dense() const {
    const Eigen::MatrixXcd v = factor();
    return v * v.adjoint();
  }

 private:
  int cutoff_;
  std::vector<FockStateVector> branches_;
};

// Truncated annihilation operator a|n> = sqrt(n)|n-1>.
inline Eigen::MatrixXd annihilation(int cutoff) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

// Sparse a, a^dag and identity on one truncated mode.
inline ModeOperator lowering_operator(int cutoff) {
  ModeOperator a(cutoff, cutoff);
  std::vector<Eigen::Triplet<cd>> t;
  for (int n = 1; n < cutoff; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline ModeOperator raising_operator(int cutoff) { return ModeOperator(lowering_operator(cutoff).adjoint()); }

inline ModeOperator identity_operator(int cutoff) {
  ModeOperator id(cutoff, cutoff);
  id.setIdentity();
  return id;
}

// Smallest cutoff recommended for a coherent amplitude.
inline int coherent_cutoff_hint(cd alpha) {
  const double a = std::abs(alpha);
  return static_cast<int>(std::ceil(a * a + 8.0 * a + 10.0));
}

// Probability mass of |alpha> above level cutoff-1.
inline double coherent_tail_mass(cd alpha, int cutoff) {
  const double mean = std::norm(alpha);
  if (mean == 0.0) return 0.0;
  // p_n = e^{-m} m^n / n!, summed from n = cutoff until negligible.
  double log_p = -mean + cutoff * std::log(mean) - std::lgamma(cutoff + 1.0);
  double tail = 0.0;
  for (int n = cutoff; n < cutoff + 10000; ++n) {
    const double p = std::exp(log_p);
    tail += p;
    if (p < 1e-18 * tail || (p == 0.0 && n > mean)) break;
    log_p += std::log(mean) - std::log(n + 1.0);
  }
  return tail;
}

inline constexpr double kCoherentTailTolerance = 1e-12;

// |alpha>_a |0>_b.
inline FockStateVector build_input(cd alpha, int cutoff) {
  FockStateVector s(cutoff);
  const double tail = coherent_tail_mass(alpha, cutoff);
  if (tail >= kCoherentTailTolerance)
    throw CutoffError("cutoff " + std::to_string(cutoff) + " leaves coherent tail mass " + su11::detail::sci(tail));
  const double a = std::abs(alpha);
  const double arg = std::arg(alpha);
  for (int n = 0; n < cutoff; ++n) {
    double mag;
    if (a == 0.0) {
      mag = n == 0 ? 1.0 : 0.0;
    } else {
      mag = std::exp(-0.5 * a * a + n * std::log(a) - 0.5 * std::lgamma(n + 1.0));
    }
    s(n, 0) = std::polar(mag, n * arg);
  }
  return s;
}

}  // namespace su11::fock
