#pragma once

// Unitary gates on truncated two-mode states.
//
//   two-mode squeezer  U(g, theta) = exp(xi* ab - xi a^dag b^dag),   xi = g e^{i theta}
//   local squeezer     S(r, theta) = exp[(zeta* a^2 - zeta a^dag^2)/2], zeta = r e^{i theta}
//   phase shifter      U(phi)      = exp(-i phi a^dag a)
//
// The squeezers are exponentials of the truncated generators themselves, not
// of their infinite-dimensional Bogoliubov forms. The two-mode generator
// preserves n_a - n_b and the local one preserves the parity of n_a, so each
// splits exactly into tridiagonal chains handled by ChainExponential.

#include <cmath>
#include <complex>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "su11/errors.hpp"
#include "su11/fock/chain_exponential.hpp"
#include "su11/fock/state.hpp"

namespace su11::fock {

// Spectra of the two-mode chains at one cutoff: chain k (n_a - n_b = +-k)
// has d - k sites and couplings sqrt((j + k + 1)(j + 1)) for either sign.
class TwoModeSpectra {
 public:
  explicit TwoModeSpectra(int cutoff) : cutoff_(cutoff) {
    if (cutoff < 2) throw CutoffError("cutoff must be >= 2");
    chains_.reserve(static_cast<std::size_t>(cutoff));
    for (int k = 0; k < cutoff; ++k) {
      const int m = cutoff - k;
      std::vector<double> c(static_cast<std::size_t>(m - 1));
      for (int j = 0; j + 1 < m; ++j) c[static_cast<std::size_t>(j)] = std::sqrt((j + k + 1.0) * (j + 1.0));
      chains_.push_back(std::make_shared<const ChainSpectrum>(c));
    }
  }

  int cutoff() const { return cutoff_; }
  const std::shared_ptr<const ChainSpectrum>& chain(int k) const { return chains_[static_cast<std::size_t>(k)]; }

  std::size_t memory_doubles() const {
    std::size_t n = 0;
    for (const auto& c : chains_) n += c->memory_doubles();
    return n;
  }

 private:
  int cutoff_;
  std::vector<std::shared_ptr<const ChainSpectrum>> chains_;
};

// Spectra of the two parity chains of a^dag^2 - a^2 at one cutoff.
class LocalSpectra {
 public:
  explicit LocalSpectra(int cutoff) : cutoff_(cutoff) {
    if (cutoff < 2) throw CutoffError("cutoff must be >= 2");
    for (int parity = 0; parity < 2; ++parity) {
      std::vector<double> c;
      for (int n = parity; n + 2 < cutoff; n += 2) c.push_back(std::sqrt((n + 1.0) * (n + 2.0)));
      chains_[parity] = std::make_shared<const ChainSpectrum>(c);
    }
  }

  int cutoff() const { return cutoff_; }
  const std::shared_ptr<const ChainSpectrum>& chain(int parity) const { return chains_[parity]; }

 private:
  int cutoff_;
  std::shared_ptr<const ChainSpectrum> chains_[2];
};

class TwoModeSqueezerGate {
 public:
  TwoModeSqueezerGate(double g, double theta, int cutoff)
      : TwoModeSqueezerGate(g, theta, std::make_shared<const TwoModeSpectra>(cutoff)) {}

  TwoModeSqueezerGate(double g, double theta, std::shared_ptr<const TwoModeSpectra> spectra)
      : g_(g), theta_(theta), cutoff_(spectra->cutoff()), spectra_(std::move(spectra)) {
    chains_.reserve(static_cast<std::size_t>(cutoff_));
    for (int k = 0; k < cutoff_; ++k) chains_.emplace_back(spectra_->chain(k), g, theta);
  }

  double gain() const { return g_; }
  double theta() const { return theta_; }
  int cutoff() const { return cutoff_; }

  void apply(FockStateVector& s) const {
    check(s);
    auto& amp = s.amplitudes();
    for (int k = 0; k < cutoff_; ++k) {
      for (int sign : {+1, -1}) {
        if (k == 0 && sign < 0) continue;
        const int m = cutoff_ - k;
        Eigen::MatrixXcd col(m, 1);
        for (int j = 0; j < m; ++j) col(j, 0) = sign > 0 ? amp(j + k, j) : amp(j, j + k);
        chains_[static_cast<std::size_t>(k)].apply(col);
        for (int j = 0; j < m; ++j) (sign > 0 ? amp(j + k, j) : amp(j, j + k)) = col(j, 0);
      }
    }
  }

  // Same gate on every branch, batched per chain.
  void apply(std::vector<FockStateVector>& states) const {
    if (states.empty()) return;
    for (auto& s : states) check(s);
    const auto nb = static_cast<Eigen::Index>(states.size());
    for (int k = 0; k < cutoff_; ++k) {
      for (int sign : {+1, -1}) {
        if (k == 0 && sign < 0) continue;
        const int m = cutoff_ - k;
        Eigen::MatrixXcd block(m, nb);
        for (Eigen::Index b = 0; b < nb; ++b) {
          const auto& amp = states[static_cast<std::size_t>(b)].amplitudes();
          for (int j = 0; j < m; ++j) block(j, b) = sign > 0 ? amp(j + k, j) : amp(j, j + k);
        }
        chains_[static_cast<std::size_t>(k)].apply(block);
        for (Eigen::Index b = 0; b < nb; ++b) {
          auto& amp = states[static_cast<std::size_t>(b)].amplitudes();
          for (int j = 0; j < m; ++j) (sign > 0 ? amp(j + k, j) : amp(j, j + k)) = block(j, b);
        }
      }
    }
  }

  std::size_t memory_doubles() const { return spectra_->memory_doubles(); }

 private:
  void check(const FockStateVector& s) const {
    if (s.cutoff() != cutoff_)
      throw CutoffError("gate built for cutoff " + std::to_string(cutoff_) + ", state has " +
                        std::to_string(s.cutoff()));
  }

  double g_, theta_;
  int cutoff_;
  std::shared_ptr<const TwoModeSpectra> spectra_;
  std::vector<ChainExponential> chains_;
};

class LocalSqueezerGate {
 public:
  LocalSqueezerGate(double r, double theta, int cutoff)
      : LocalSqueezerGate(r, theta, std::make_shared<const LocalSpectra>(cutoff)) {}

  LocalSqueezerGate(double r, double theta, std::shared_ptr<const LocalSpectra> spectra)
      : r_(r), theta_(theta), cutoff_(spectra->cutoff()) {
    for (int parity = 0; parity < 2; ++parity) chains_[parity] = ChainExponential(spectra->chain(parity), 0.5 * r, theta);
  }

  double squeezing() const { return r_; }
  double theta() const { return theta_; }
  int cutoff() const { return cutoff_; }

  void apply(FockStateVector& s) const {
    if (s.cutoff() != cutoff_) throw CutoffError("local squeezer cutoff mismatch");
    auto& amp = s.amplitudes();
    for (int parity = 0; parity < 2; ++parity) {
      const auto& chain = chains_[parity];
      const Eigen::Index m = chain.size();
      Eigen::MatrixXcd rows(m, cutoff_);
      for (Eigen::Index j = 0; j < m; ++j) rows.row(j) = amp.row(2 * j + parity);
      chain.apply(rows);
      for (Eigen::Index j = 0; j < m; ++j) amp.row(2 * j + parity) = rows.row(j);
    }
  }

 private:
  double r_, theta_;
  int cutoff_;
  ChainExponential chains_[2];
};

// Theta of the local squeezer used throughout: zeta = r e^{i pi}.
inline constexpr double kLocalSqueezerTheta = std::numbers::pi;

inline FockStateVector apply_phase(FockStateVector s, double phi) {
  auto& amp = s.amplitudes();
  for (int n = 0; n < s.cutoff(); ++n) amp.row(n) *= std::polar(1.0, -phi * n);
  return s;
}

namespace detail {

inline void check_tail(const FockStateVector& s, std::optional<double> tol, const char* gate) {
  if (!tol) return;
  const double m = s.top_level_mass();
  if (m > *tol)
    throw CutoffError(std::string(gate) + ": top-level mass " + su11::detail::sci(m) + " exceeds tolerance at cutoff " +
                      std::to_string(s.cutoff()));
}

}  // namespace detail

inline FockStateVector apply_two_mode_squeezer(FockStateVector s, double g, double theta,
                                               std::optional<double> tail_tolerance = std::nullopt) {
  if (g != 0.0) TwoModeSqueezerGate(g, theta, s.cutoff()).apply(s);
  detail::check_tail(s, tail_tolerance, "two-mode squeezer");
  return s;
}

inline FockStateVector apply_single_mode_squeezer(FockStateVector s, double r, double theta = kLocalSqueezerTheta,
                                                  std::optional<double> tail_tolerance = std::nullopt) {
  if (r != 0.0) LocalSqueezerGate(r, theta, s.cutoff()).apply(s);
  detail::check_tail(s, tail_tolerance, "local squeezer");
  return s;
}

// Memo of chain spectra shared across oracle evaluations, keyed by cutoff.
// Building the two-mode spectra costs O(d^3) and holds about d^3/3 doubles;
// a gate for any (g, theta) is then O(d^2) on top. Least recently used
// spectra are evicted once the total exceeds the budget; the newest entry is
// always kept.
class GateCache {
 public:
  static constexpr std::size_t kDefaultBudgetDoubles = 120'000'000;

  explicit GateCache(std::size_t budget_doubles = kDefaultBudgetDoubles) : budget_(budget_doubles) {}

  std::shared_ptr<const TwoModeSpectra> two_mode_spectra(int cutoff) {
    {
      std::lock_guard lock(mutex_);
      for (auto it = two_mode_.begin(); it != two_mode_.end(); ++it)
        if (it->first == cutoff) {
          two_mode_.splice(two_mode_.begin(), two_mode_, it);
          return two_mode_.front().second;
        }
    }
    auto value = std::make_shared<const TwoModeSpectra>(cutoff);
    std::lock_guard lock(mutex_);
    two_mode_.emplace_front(cutoff, value);
    std::size_t used = 0;
    for (const auto& [d, s] : two_mode_) used += s->memory_doubles();
    while (two_mode_.size() > 1 && used > budget_) {
      used -= two_mode_.back().second->memory_doubles();
      two_mode_.pop_back();
    }
    return value;
  }

  // Cheap to rebuild; not cached.
  static std::shared_ptr<const LocalSpectra> local_spectra(int cutoff) {
    return std::make_shared<const LocalSpectra>(cutoff);
  }

  std::shared_ptr<const TwoModeSqueezerGate> two_mode(double g, double theta, int cutoff) {
    return std::make_shared<const TwoModeSqueezerGate>(g, theta, two_mode_spectra(cutoff));
  }
  std::shared_ptr<const LocalSqueezerGate> local(double r, double theta, int cutoff) {
    return std::make_shared<const LocalSqueezerGate>(r, theta, local_spectra(cutoff));
  }

  std::size_t cached_doubles() const {
    std::lock_guard lock(mutex_);
    std::size_t used = 0;
    for (const auto& [d, s] : two_mode_) used += s->memory_doubles();
    return used;
  }

 private:
  std::size_t budget_;
  mutable std::mutex mutex_;
  std::list<std::pair<int, std::shared_ptr<const TwoModeSpectra>>> two_mode_;
};

}  // namespace su11::fock
