#pragma once

// Exponential of a truncated bosonic generator restricted to one of its
// invariant chains.
//
// Both squeezing generators used by the oracle are, in the truncated Fock
// basis, direct sums of chains on which they act as
//
//   A = z* c_j |j><j+1|  -  z c_j |j+1><j|,      z = t e^{i theta},
//
// i.e. tridiagonal and anti-Hermitian. With P = diag(e^{i theta j}) and
// D = diag(i^j), A = (PD) (i t J) (PD)^{-1} where J is the real symmetric
// tridiagonal matrix with off-diagonal c_j. Diagonalising J once gives
// exp(A) = (PD) V e^{i t Lambda} V^T (PD)^{-1} exactly, for the truncated
// generator as it stands. J does not depend on (t, theta), so one spectrum
// serves every gate on the same chain.

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

namespace su11::fock {

using cd = std::complex<double>;

// Eigenpairs of the symmetric tridiagonal matrix with zero diagonal and the
// given off-diagonal.
class ChainSpectrum {
 public:
  explicit ChainSpectrum(std::span<const double> couplings) {
    const auto m = static_cast<lapack_int>(couplings.size() + 1);
    values_.resize(m);
    vectors_.resize(m, m);
    if (m == 1) {
      values_[0] = 0.0;
      vectors_(0, 0) = 1.0;
      return;
    }
    std::vector<double> diag(static_cast<std::size_t>(m), 0.0);
    std::vector<double> off(couplings.begin(), couplings.end());
    off.push_back(0.0);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(m));
    lapack_int found = 0;
    const lapack_int info =
        LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', m, diag.data(), off.data(), 0.0, 0.0, 0, 0, 0.0, &found,
                       values_.data(), vectors_.data(), m, support.data());
    if (info != 0 || found != m)
      throw std::runtime_error("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");
  }

  Eigen::Index size() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }
  std::size_t memory_doubles() const { return static_cast<std::size_t>(vectors_.size() + values_.size()); }

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

class ChainExponential {
 public:
  ChainExponential() = default;

  ChainExponential(std::shared_ptr<const ChainSpectrum> spectrum, double t, double theta)
      : spectrum_(std::move(spectrum)) {
    const Eigen::Index m = spectrum_->size();
    twist_.resize(m);
    const cd step = std::polar(1.0, theta) * cd(0.0, 1.0);
    cd w = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      twist_[j] = w;
      w *= step;
    }
    phases_.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) phases_[k] = std::polar(1.0, t * spectrum_->values()[k]);
  }

  ChainExponential(std::span<const double> couplings, double t, double theta)
      : ChainExponential(std::make_shared<const ChainSpectrum>(couplings), t, theta) {}

  Eigen::Index size() const { return spectrum_ ? spectrum_->size() : 0; }

  // In place on columns of `x` (size() rows, any number of columns).
  void apply(Eigen::Ref<Eigen::MatrixXcd> x) const {
    const Eigen::Index m = size();
    if (m <= 1) return;
    const Eigen::MatrixXd& v = spectrum_->vectors();
    for (Eigen::Index j = 0; j < m; ++j) x.row(j) *= std::conj(twist_[j]);
    // Real eigenvector GEMMs on the real and imaginary parts separately.
    Eigen::MatrixXd re = x.real();
    Eigen::MatrixXd im = x.imag();
    Eigen::MatrixXd ure = v.transpose() * re;
    Eigen::MatrixXd uim = v.transpose() * im;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double c = phases_[k].real(), s = phases_[k].imag();
      for (Eigen::Index col = 0; col < x.cols(); ++col) {
        const double a = ure(k, col), b = uim(k, col);
        ure(k, col) = c * a - s * b;
        uim(k, col) = s * a + c * b;
      }
    }
    re.noalias() = v * ure;
    im.noalias() = v * uim;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index col = 0; col < x.cols(); ++col) x(j, col) = twist_[j] * cd(re(j, col), im(j, col));
  }

  // Dense matrix of the chain exponential (tests and small systems).
  Eigen::MatrixXcd matrix() const {
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(size(), size());
    apply(id);
    return id;
  }

 private:
  std::shared_ptr<const ChainSpectrum> spectrum_;
  Eigen::VectorXcd phases_;
  Eigen::VectorXcd twist_;
};

}  // namespace su11::fock
