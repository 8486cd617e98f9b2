// Acceptance criteria for the analytic path, the Fock-space oracle and the
// CLI. Prints one PASS/FAIL line per criterion; exits 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "su11/fock/oracle.hpp"
#include "su11/metrology.hpp"
#include "su11/moment_engine.hpp"
#include "su11/sweeps.hpp"

namespace {

using namespace su11;

struct Outcome {
  bool pass = true;
  std::string detail;
};

InterferometerParams make(double g, double alpha, double r, double t1 = 1.0, double t2 = 1.0, double phi = 0.0) {
  InterferometerParams p;
  p.g = g;
  p.alpha = alpha;
  p.r = r;
  p.t1 = t1;
  p.t2 = t2;
  p.phi = phi;
  return p;
}

double rel(double a, double b) { return relative_deviation(a, b); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double delta_phi_min(const InterferometerParams& p) { return optimal_phase(p).delta_phi_min; }

fock::OracleOptions oracle_options(double tail, bool local_squeezer = true) {
  fock::OracleOptions o;
  o.cutoff = fock::CutoffPolicy{20, 10, 800, tail, 1.25};
  o.local_squeezer = local_squeezer;
  return o;
}

// 1. Analytic Delta phi, N and F against the oracle on the full product grid.
Outcome cross_path() {
  fock::OracleOptions o;
  o.cutoff = cross_check_policy();
  const CrossCheckResult res = run_cross_check(CrossCheckGrid{}, o, default_thread_count());
  const double worst = std::max({res.delta_phi.max_relative, res.n_total.max_relative, res.fisher.max_relative});
  const bool accurate = worst < 1e-6 && res.divergence_mismatch == 0 && res.nonconverged == 0;
  const bool budget = res.seconds <= 300.0 && res.max_cutoff_used <= 40;
  Outcome out;
  out.pass = accurate && budget;
  out.detail = fmt("%zu points, %zu divergent excluded, %zu non-converged, %zu divergence mismatches; max rel dev "
                   "delta_phi %.2e, N %.2e, F %.2e; max cutoff %d, %.0f s (budget: 300 s at cutoff <= 40)",
                   res.entries.size(), res.divergent, res.nonconverged, res.divergence_mismatch,
                   res.delta_phi.max_relative, res.n_total.max_relative, res.fisher.max_relative,
                   res.max_cutoff_used, res.seconds);
  return out;
}

// 2. r = 0 against the oracle of the circuit without the local squeezer.
Outcome standard_reduction() {
  double worst = 0.0;
  int points = 0;
  fock::GateCache cache;
  const double t2s[] = {1.0, 0.7};
  for (double alpha : {0.5, 1.0})
    for (double g : {0.5, 1.0})
      for (double t1 : {1.0, 0.7})
        for (double phi : {0.3, 0.8, 1.5}) {
          const InterferometerParams p = make(g, alpha, 0.0, t1, 1.0, phi);
          const auto reps = fock::oracle_sensitivity(p, t2s, oracle_options(1e-13, false), &cache);
          for (std::size_t k = 0; k < 2; ++k) {
            InterferometerParams q = p;
            q.t2 = t2s[k];
            const MomentTable m(q);
            const QfiReport qfi = qfi_ideal(m);
            const double n_oracle = reps[k].n_total;
            worst = std::max({worst, rel(phase_sensitivity(m, q).delta_phi, *reps[k].delta_phi),
                              rel(qfi.n_total, n_oracle), rel(qfi.fisher, reps[k].fisher),
                              rel(qfi.sql, 1.0 / std::sqrt(n_oracle)), rel(qfi.hl, 1.0 / n_oracle),
                              rel(qfi.qcrb, 1.0 / std::sqrt(reps[k].fisher)),
                              rel(quadrature_mean(m, q), reps[k].mean),
                              rel(quadrature_second_moment(m, q), reps[k].second_moment)});
            ++points;
          }
        }
  return {worst < 1e-8, fmt("%d points, max rel dev %.2e over delta_phi, mean, second moment, N, SQL, HL, F, QCRB "
                            "(tolerance 1e-8)",
                            points, worst)};
}

// 3. Optimal sensitivity improves with squeezing and the optimum leaves phi = 0.
Outcome squeezing_trend() {
  std::string d;
  bool ok = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.0, 0.3, 0.6, 1.0}) {
    const OptimalPhaseResult o = optimal_phase(make(1.0, 1.0, r));
    ok = ok && o.delta_phi_min < prev && o.phi_opt > 1e-3;
    prev = o.delta_phi_min;
    d += fmt("r=%.1f: min %.6g at phi %.4f; ", r, o.delta_phi_min, o.phi_opt);
  }
  return {ok, d + "strictly decreasing, phi_opt > 0"};
}

// 4. Loss trends: monotone in T, internal loss worse than external loss.
Outcome loss_trend() {
  bool ok = true;
  double min_gap = std::numeric_limits<double>::infinity();
  double gap_half = std::numeric_limits<double>::infinity();
  for (double r : {0.0, 0.3, 0.6, 1.0}) {
    double prev_i = std::numeric_limits<double>::infinity(), prev_e = prev_i;
    for (int k = 2; k <= 10; ++k) {
      const double t = k / 10.0;
      const double in = delta_phi_min(make(1.0, 1.0, r, t, 1.0));
      const double ex = delta_phi_min(make(1.0, 1.0, r, 1.0, t));
      ok = ok && in <= prev_i && ex <= prev_e;
      if (k < 10) {
        ok = ok && in >= ex;
        min_gap = std::min(min_gap, (in - ex) / ex);
      }
      if (k == 5) {
        gap_half = std::min(gap_half, (in - ex) / ex);
        ok = ok && in > ex * (1.0 + 1e-6);
      }
      prev_i = in;
      prev_e = ex;
    }
  }
  return {ok, fmt("r in {0,0.3,0.6,1}, T in {0.2..1.0}: monotone; smallest relative internal-external gap %.3g "
                  "(T<=0.9), %.3g at T=0.5",
                  min_gap, gap_half)};
}

// 5. Benchmarks of the standard interferometer (N at r = 0).
Outcome benchmark_claims() {
  const double n0 = total_photon_number(make(1.0, 1.0, 0.0));
  const Benchmarks b = sql_hl(n0);
  const double d0 = delta_phi_min(make(1.0, 1.0, 0.0));
  const double d3 = delta_phi_min(make(1.0, 1.0, 0.3));
  const double d10 = delta_phi_min(make(1.0, 1.0, 1.0));
  const bool ok = d3 < b.sql && d10 < b.hl && d0 > b.sql;
  const Benchmarks own = sql_hl(make(1.0, 1.0, 1.0));
  return {ok, fmt("standard N=%.4f, SQL %.4f, HL %.4f; min delta_phi r=0 %.4f, r=0.3 %.4f, r=1 %.4f "
                  "(against r=1's own N: SQL %.4f, HL %.4f)",
                  n0, b.sql, b.hl, d0, d3, d10, own.sql, own.hl)};
}

// 6. QFI of the closed form against the oracle number variance, and closed forms.
Outcome qfi_identities() {
  double worst_oracle = 0.0;
  int points = 0;
  for (double alpha : {0.0, 0.5, 1.0})
    for (double g : {0.0, 0.5, 1.0})
      for (double r : {0.0, 0.5, 1.0}) {
        if (alpha == 0.0 && g == 0.0 && r == 0.0) continue;
        const InterferometerParams p = make(g, alpha, r);
        const auto o = fock::oracle_qfi_pure(p, oracle_options(1e-15));
        worst_oracle = std::max(worst_oracle, rel(qfi_ideal(p).fisher, o.fisher));
        ++points;
      }
  double worst_closed = 0.0;
  for (double alpha : {0.1, 0.5, 1.0, 2.0, 3.0})
    worst_closed = std::max(worst_closed, rel(qfi_ideal(make(0.0, alpha, 0.0)).fisher, 4.0 * alpha * alpha));
  for (double r : {0.1, 0.5, 1.0, 1.5}) {
    const double s = std::sinh(2.0 * r);
    worst_closed = std::max(worst_closed, rel(qfi_ideal(make(0.0, 0.0, r)).fisher, 2.0 * s * s));
  }
  return {worst_oracle < 1e-8 && worst_closed < 1e-10,
          fmt("oracle 4Var(n_a): %d points, max rel dev %.2e (tolerance 1e-8); closed forms max rel dev %.2e "
              "(tolerance 1e-10)",
              points, worst_oracle, worst_closed)};
}

// 7. Lossy QFI endpoints, monotonicity and the bound on the true mixed-state QFI.
Outcome lossy_qfi() {
  bool ok = true;
  double worst_violation = -std::numeric_limits<double>::infinity();
  int compared = 0;
  // The mixed-state oracle stores one branch per loss order; r = g = 1 would
  // need several GB, so the bound is checked on points up to a few hundred levels.
  const InterferometerParams points[] = {make(1.0, 1.0, 0.0), make(0.5, 1.0, 0.5), make(0.5, 1.0, 1.0),
                                         make(1.0, 0.5, 0.5), make(0.0, 1.0, 1.0), make(0.5, 0.0, 0.5)};
  for (const InterferometerParams& p : points) {
    const MomentTable q(p);
    const double f = fisher_ideal(q);
    ok = ok && qfi_lossy(q, 1.0).fisher_lossy == f && qfi_lossy(q, 0.0).fisher_lossy == 0.0;
    double prev = -1.0;
    fock::GateCache cache;
    for (int i = 0; i <= 20; ++i) {
      const double eta = i / 20.0;
      const double fl = qfi_lossy(q, eta).fisher_lossy;
      ok = ok && fl >= prev;
      prev = fl;
      const double true_qfi = fock::oracle_qfi_mixed(p, eta, oracle_options(1e-13), &cache).fisher;
      worst_violation = std::max(worst_violation, true_qfi - fl);
      ok = ok && true_qfi <= fl + 1e-8;
      ++compared;
    }
  }
  return {ok, fmt("%zu parameter points x 21 eta: endpoints exact, non-decreasing; max(oracle QFI - F_L) = %.3g "
                  "over %d comparisons (slack 1e-8)",
                  std::size(points), worst_violation, compared)};
}

// 8. Analytic phase slope against central differences of the analytic mean.
Outcome derivative() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.1, 1.2), t(0.1, 1.0), ph(0.05, 3.1);
  double worst = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const InterferometerParams p = make(u(rng), u(rng), u(rng), t(rng), t(rng), ph(rng));
    const MomentTable q(p);
    InterferometerParams lo = p, hi = p;
    lo.phi -= h;
    hi.phi += h;
    const double fd = (quadrature_mean(q, hi) - quadrature_mean(q, lo)) / (2.0 * h);
    worst = std::max(worst, std::abs(dmean_dphi(q, p) - fd) / std::abs(dmean_dphi(q, p)));
  }
  return {worst < 1e-7, fmt("50 seeded points, max rel dev %.2e (tolerance 1e-7)", worst)};
}

// Monotonicity of one quantity along every curve of a preset, and across
// curves (increasing r) at every grid point.
struct Trend {
  std::string preset;
  Quantity quantity;
  int along;   // +1 increasing, -1 decreasing, 0 unchecked
  int across;  // same, in r
};

bool check_trend(const Trend& t, std::string& why) {
  const FigurePreset p = figure_preset(t.preset);
  const auto rows = run_sweep(p.spec, default_thread_count());
  const std::size_t per = static_cast<std::size_t>(p.spec.range.count);
  const std::size_t curves = rows.size() / per;
  auto value = [&](std::size_t c, std::size_t i) -> std::optional<double> {
    const auto& v = rows[c * per + i].values;
    const auto it = v.find(t.quantity);
    return it == v.end() ? std::nullopt : std::optional<double>(it->second);
  };
  for (std::size_t c = 0; c < curves; ++c)
    for (std::size_t i = 1; i < per; ++i) {
      const auto a = value(c, i - 1), b = value(c, i);
      if (!a || !b) continue;
      if (t.along * (*b - *a) <= 0.0) {
        why = fmt("%s %s not monotone along %s at %s=%.4g", t.preset.c_str(), std::string(name(t.quantity)).c_str(),
                  rows[c * per].series.c_str(), std::string(name(p.spec.swept)).c_str(), p.spec.range.at(int(i)));
        return false;
      }
    }
  if (t.across != 0)
    for (std::size_t i = 0; i < per; ++i)
      for (std::size_t c = 1; c < curves; ++c) {
        const auto a = value(c - 1, i), b = value(c, i);
        if (!a || !b) continue;
        // Total loss (eta = 0) gives zero information for every r.
        if (*a == 0.0 && *b == 0.0) continue;
        if (t.across * (*b - *a) <= 0.0) {
          why = fmt("%s %s not monotone in r at %s=%.4g", t.preset.c_str(), std::string(name(t.quantity)).c_str(),
                    std::string(name(p.spec.swept)).c_str(), p.spec.range.at(int(i)));
          return false;
        }
      }
  return true;
}

// 9. QFI, QCRB and lossy QFI trends over the preset sweeps.
Outcome preset_trends() {
  using Q = Quantity;
  const Trend trends[] = {
      {"fig7a", Q::qfi, +1, +1},       {"fig7b", Q::qfi, +1, +1},        {"fig8a", Q::qcrb, -1, -1},
      {"fig8b", Q::qcrb, -1, -1},      {"fig10", Q::qfi_lossy, +1, +1},  {"fig10", Q::qcrb_lossy, -1, -1},
      {"fig11a", Q::qfi_lossy, +1, +1}, {"fig11b", Q::qfi_lossy, +1, +1},
  };
  std::string failures;
  for (const Trend& t : trends) {
    std::string why;
    if (!check_trend(t, why)) failures += why + "; ";
  }
  if (failures.empty())
    return {true, "fig7a/b qfi and fig11a/b qfi_lossy increasing in g, alpha and r; fig8a/b qcrb decreasing; fig10 "
                  "qfi_lossy increasing and qcrb_lossy decreasing in eta (strict, every curve and grid point; ties at eta=0 where F_L vanishes)"};
  return {false, failures};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// 10. `figure fig2` twice, byte for byte.
Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "CLI path not given (--cli)"};
  const auto dir = std::filesystem::temp_directory_path() / ("su11_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto a = dir / "fig2_a.csv", b = dir / "fig2_b.csv";
  const int ra = std::system(("\"" + cli + "\" figure fig2 -o \"" + a.string() + "\"").c_str());
  const int rb = std::system(("\"" + cli + "\" figure fig2 -o \"" + b.string() + "\"").c_str());
  const std::string sa = slurp(a), sb = slurp(b);
  std::filesystem::remove_all(dir);
  const bool ok = ra == 0 && rb == 0 && !sa.empty() && sa == sb;
  std::size_t rows = 0;
  for (char c : sa) rows += c == '\n';
  return {ok, fmt("exit codes %d/%d, %zu bytes, %zu lines, %s", ra, rb, sa.size(), rows,
                  sa == sb ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the su11 executable");
  app.add_option("--only", only, "Run only these criteria (comma-separated numbers)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "cross-path equivalence", cross_path},
      {2, "standard-interferometer reduction", standard_reduction},
      {3, "squeezing improves optimal sensitivity", squeezing_trend},
      {4, "loss trends", loss_trend},
      {5, "SQL/HL benchmarks", benchmark_claims},
      {6, "QFI identities", qfi_identities},
      {7, "lossy QFI bound", lossy_qfi},
      {8, "phase derivative", derivative},
      {9, "preset monotonicity", preset_trends},
      {10, "determinism", [&] { return determinism(cli); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("C%-2d %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str(), s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
