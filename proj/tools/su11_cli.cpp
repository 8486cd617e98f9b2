// su11: command-line front end for the interferometer engine.
//
//   su11 point  [physics flags] [--quantities q1,q2,...]
//   su11 sweep  --var phi --start 0 --stop 3 --count 200 [--series-var r --series 0,0.3]
//   su11 figure <preset> [--points 200]
//   su11 check  [--tolerance 1e-6] [--max-cutoff 640]
//
// Exit codes: 0 ok, 1 usage or I/O error, 2 divergent or degenerate physics
// (and, for check, deviations above tolerance), 3 oracle non-convergence.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "su11/errors.hpp"
#include "su11/fock/oracle.hpp"
#include "su11/metrology.hpp"
#include "su11/sweeps.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPhysics = 2;
constexpr int kExitNonConverged = 3;

struct Globals {
  double g = 0.0;
  double alpha = 0.0;
  double r = 0.0;
  double t1 = 1.0;
  double t2 = 1.0;
  double eta = 1.0;
  double phi = 0.0;
  std::vector<std::string> quantities;
  int opt_grid = 2001;
  unsigned threads = su11::default_thread_count();

  su11::Point point() const {
    su11::Point p;
    p.params.g = g;
    p.params.alpha = alpha;
    p.params.r = r;
    p.params.t1 = t1;
    p.params.t2 = t2;
    p.params.phi = phi;
    p.eta = eta;
    return p;
  }
  std::string quantity_list(const char* fallback) const {
    if (quantities.empty()) return fallback;
    std::string s;
    for (const auto& q : quantities) s += (s.empty() ? "" : ",") + q;
    return s;
  }
  su11::PhaseSearch search() const {
    su11::PhaseSearch s;
    s.grid = opt_grid;
    return s;
  }
};

struct OutputOptions {
  std::string path;
  std::string format = "csv";
};

// Writes via a temporary string so a failed evaluation leaves no partial file.
int emit(const OutputOptions& out, const std::vector<su11::ResultRow>& rows,
         const std::vector<su11::Quantity>& quantities) {
  std::ostringstream buf;
  if (out.format == "csv")
    su11::write_csv(buf, rows, quantities);
  else if (out.format == "jsonl")
    su11::write_jsonl(buf, rows, quantities);
  else
    throw su11::InvalidParameter("unknown format '" + out.format + "' (csv or jsonl)");
  if (out.path.empty() || out.path == "-") {
    std::cout << buf.str() << std::flush;
    return std::cout ? kExitOk : kExitUsage;
  }
  std::ofstream f(out.path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot open " << out.path << " for writing\n";
    return kExitUsage;
  }
  f << buf.str();
  f.close();
  if (!f) {
    std::cerr << "error: failed writing " << out.path << "\n";
    return kExitUsage;
  }
  std::cerr << "wrote " << rows.size() << " rows to " << out.path << "\n";
  return kExitOk;
}

int cmd_point(const Globals& gl) {
  const auto quantities =
      su11::parse_quantities(gl.quantity_list("delta_phi,N,sql,hl,qfi,qcrb"));
  const su11::Point pt = gl.point();
  const su11::ResultRow row = su11::evaluate_point(pt, quantities, gl.search());
  nlohmann::ordered_json j = su11::to_json(row, quantities);
  j.erase("series");
  j.erase("swept");
  j.erase("value");
  const bool wants_phase = std::find(quantities.begin(), quantities.end(), su11::Quantity::delta_phi) !=
                           quantities.end();
  if (wants_phase) {
    const su11::QuadratureStats s = su11::quadrature_stats(pt.params);
    j["diagnostics"] = {{"mean", s.mean}, {"second_moment", s.second_moment}, {"variance", s.variance},
                        {"dmean_dphi", s.dmean_dphi}};
  }
  std::cout << j.dump(2) << "\n";
  if (row.flags & su11::kFlagDivergent) {
    std::cerr << "divergent sensitivity: |d<X>/dphi| below " << su11::kDivergenceThreshold << " at "
              << su11::to_string(pt.params) << "\n";
    return kExitPhysics;
  }
  if (row.flags & su11::kFlagDegenerate) {
    std::cerr << "degenerate configuration at " << su11::to_string(pt.params) << "\n";
    return kExitPhysics;
  }
  return kExitOk;
}

struct SweepArgs {
  std::string var = "phi";
  double start = 0.0;
  double stop = 3.0;
  int count = su11::kPresetPoints;
  std::string series_var;
  std::vector<double> series;
};

int cmd_sweep(const Globals& gl, const SweepArgs& a, const OutputOptions& out) {
  su11::SweepSpec spec;
  spec.swept = su11::parse_variable(a.var);
  spec.range = {a.start, a.stop, a.count};
  spec.fixed = gl.point();
  spec.quantities = su11::parse_quantities(gl.quantity_list("delta_phi"));
  spec.search = gl.search();
  if (!a.series.empty()) {
    if (a.series_var.empty()) throw su11::InvalidParameter("--series needs --series-var");
    const su11::Variable sv = su11::parse_variable(a.series_var);
    if (sv == spec.swept) throw su11::InvalidParameter("series variable must differ from the swept variable");
    for (double v : a.series)
      spec.series.push_back({a.series_var + "=" + su11::detail::format_number(v), {{sv, v}}, std::nullopt});
  }
  const auto rows = su11::run_sweep(spec, gl.threads);
  return emit(out, rows, spec.quantities);
}

int cmd_figure(const Globals& gl, const std::string& preset, int points, bool list, const OutputOptions& out) {
  if (list) {
    for (const auto& p : su11::figure_presets()) std::cout << p.name << "\t" << p.description << "\n";
    return kExitOk;
  }
  if (preset.empty()) throw su11::InvalidParameter("figure needs a preset name (see --list)");
  su11::FigurePreset p = su11::figure_preset(preset, points);
  p.spec.search = gl.search();
  if (!gl.quantities.empty()) p.spec.quantities = su11::parse_quantities(gl.quantity_list(""));
  const auto rows = su11::run_sweep(p.spec, gl.threads);
  return emit(out, rows, p.spec.quantities);
}

struct CheckArgs {
  double tolerance = 1e-6;
  int initial_cutoff = 20;
  int max_cutoff = su11::cross_check_policy().max;
  double tail_tolerance = 1e-10;
  std::vector<double> alpha, g, r, t1, t2, phi;
  bool verbose = false;
};

int cmd_check(const Globals& gl, const CheckArgs& a) {
  su11::CrossCheckGrid grid;
  if (!a.alpha.empty()) grid.alpha = a.alpha;
  if (!a.g.empty()) grid.g = a.g;
  if (!a.r.empty()) grid.r = a.r;
  if (!a.t1.empty()) grid.t1 = a.t1;
  if (!a.t2.empty()) grid.t2 = a.t2;
  if (!a.phi.empty()) grid.phi = a.phi;
  for (const auto* axis : {&grid.alpha, &grid.g, &grid.r})
    for (double v : *axis)
      if (std::abs(v) > 1.2) throw su11::InvalidParameter("check grid limited to |alpha|, g, r <= 1.2");

  su11::fock::OracleOptions opts;
  opts.cutoff = su11::cross_check_policy();
  opts.cutoff.initial = a.initial_cutoff;
  opts.cutoff.max = a.max_cutoff;
  opts.cutoff.tolerance = a.tail_tolerance;
  opts.require_convergence = true;
  opts.cutoff.validate();

  std::function<void(const su11::CrossCheckEntry&)> progress;
  if (a.verbose)
    progress = [](const su11::CrossCheckEntry& e) {
      std::fprintf(stderr, "  %s  d=%d tail=%.2e%s\n", su11::to_string(e.params).c_str(), e.cutoff, e.tail_mass,
                   e.converged ? "" : "  NOT CONVERGED");
    };
  const su11::CrossCheckResult res = su11::run_cross_check(grid, opts, gl.threads, progress);

  auto line = [&](const char* q, const su11::Deviation& d) {
    const bool ok = d.max_relative <= a.tolerance;
    std::printf("%-10s %-4s max_rel=%.3e compared=%zu%s%s\n", q, ok ? "ok" : "FAIL", d.max_relative, d.compared,
                d.worst ? "  worst: " : "", d.worst ? su11::to_string(*d.worst).c_str() : "");
    return ok;
  };
  std::printf("cross-check: %zu points, tolerance %.1e, max cutoff used %d, %.1f s\n", grid.size(), a.tolerance,
              res.max_cutoff_used, res.seconds);
  bool ok = line("delta_phi", res.delta_phi);
  ok = line("N", res.n_total) && ok;
  ok = line("qfi", res.fisher) && ok;
  std::printf("divergent (excluded): %zu, divergence mismatches: %zu, non-converged: %zu\n", res.divergent,
              res.divergence_mismatch, res.nonconverged);
  for (const auto& e : res.entries)
    if (!e.error.empty()) std::fprintf(stderr, "oracle: %s: %s\n", su11::to_string(e.params).c_str(), e.error.c_str());
  if (res.nonconverged > 0) return kExitNonConverged;
  return ok && res.divergence_mismatch == 0 ? kExitOk : kExitPhysics;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SU(1,1) interferometer with a local squeezer: phase sensitivity, QFI and oracle cross-checks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Flat key=value file supplying defaults for the long flags; flags override");

  Globals gl;
  app.add_option("--g", gl.g, "OPA gain g (>= 0)");
  app.add_option("--alpha", gl.alpha, "Coherent amplitude alpha (real)");
  app.add_option("--r", gl.r, "Local squeezing r (>= 0)");
  app.add_option("--t1", gl.t1, "Internal transmittance T1 in [0,1]");
  app.add_option("--t2", gl.t2, "External transmittance T2 in [0,1]");
  app.add_option("--eta", gl.eta, "Transmittance eta for the lossy QFI bound, in [0,1]");
  app.add_option("--phi", gl.phi, "Phase shift phi (rad)");
  app.add_option("--quantities", gl.quantities,
                 "Comma-separated subset of delta_phi,delta_phi_min,N,sql,hl,qfi,qcrb,qfi_lossy,qcrb_lossy")
      ->delimiter(',');
  app.add_option("--opt-grid", gl.opt_grid, "Grid points for the optimal-phase scan")->check(CLI::Range(3, 10000000));
  app.add_option("--threads", gl.threads, "Worker threads")->check(CLI::Range(1u, 4096u));

  OutputOptions out;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--output,-o", out.path, "Output file (default: standard output)");
    sub->add_option("--format", out.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  };

  CLI::App* point = app.add_subcommand("point", "Evaluate one parameter point; prints a JSON object");

  SweepArgs sa;
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one variable over a linear grid");
  sweep->add_option("--var", sa.var, "Swept variable: phi, g, alpha, r, t1, t2, eta");
  sweep->add_option("--start", sa.start, "Grid start");
  sweep->add_option("--stop", sa.stop, "Grid stop");
  sweep->add_option("--count", sa.count, "Grid points (>= 2)");
  sweep->add_option("--series-var", sa.series_var, "Secondary variable, one curve per value");
  sweep->add_option("--series", sa.series, "Comma-separated values of the secondary variable")->delimiter(',');
  add_output(sweep);

  std::string preset;
  int points = su11::kPresetPoints;
  bool list = false;
  CLI::App* figure = app.add_subcommand("figure", "Reproduce a figure's dataset from a preset");
  figure->add_option("preset", preset, "Preset name (see --list)");
  figure->add_option("--points", points, "Points per curve")->check(CLI::Range(2, 1000000));
  figure->add_flag("--list", list, "List presets");
  add_output(figure);

  CheckArgs ca;
  CLI::App* check = app.add_subcommand("check", "Cross-check the analytic path against the Fock-space oracle");
  check->add_option("--tolerance", ca.tolerance, "Relative tolerance on delta_phi, N and qfi");
  check->add_option("--initial-cutoff", ca.initial_cutoff, "First cutoff tried");
  check->add_option("--max-cutoff", ca.max_cutoff, "Largest cutoff before reporting non-convergence");
  check->add_option("--tail-tolerance", ca.tail_tolerance, "Top-level occupation mass counted as converged");
  check->add_option("--grid-alpha", ca.alpha, "Comma-separated alpha values")->delimiter(',');
  check->add_option("--grid-g", ca.g, "Comma-separated g values")->delimiter(',');
  check->add_option("--grid-r", ca.r, "Comma-separated r values")->delimiter(',');
  check->add_option("--grid-t1", ca.t1, "Comma-separated T1 values")->delimiter(',');
  check->add_option("--grid-t2", ca.t2, "Comma-separated T2 values")->delimiter(',');
  check->add_option("--grid-phi", ca.phi, "Comma-separated phi values")->delimiter(',');
  check->add_flag("--verbose,-v", ca.verbose, "Per-point oracle diagnostics on standard error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*point) return cmd_point(gl);
    if (*sweep) return cmd_sweep(gl, sa, out);
    if (*figure) return cmd_figure(gl, preset, points, list, out);
    if (*check) return cmd_check(gl, ca);
  } catch (const su11::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const su11::DivergentSensitivity& e) {
    std::cerr << "divergent: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const su11::DegenerateConfiguration& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const su11::CutoffError& e) {
    std::cerr << "oracle: " << e.what() << "\n";
    return kExitNonConverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
