#pragma once

// Parameter sweeps over the analytic path, figure presets, row formatting
// and the analytic-versus-oracle cross-check grid.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "su11/errors.hpp"
#include "su11/fock/oracle.hpp"
#include "su11/metrology.hpp"
#include "su11/moment_engine.hpp"
#include "su11/params.hpp"

namespace su11 {

enum class Variable { phi, g, alpha, r, t1, t2, eta };

inline constexpr std::array kAllVariables{Variable::phi, Variable::g,  Variable::alpha, Variable::r,
                                          Variable::t1,  Variable::t2, Variable::eta};

inline std::string_view name(Variable v) {
  switch (v) {
    case Variable::phi: return "phi";
    case Variable::g: return "g";
    case Variable::alpha: return "alpha";
    case Variable::r: return "r";
    case Variable::t1: return "t1";
    case Variable::t2: return "t2";
    case Variable::eta: return "eta";
  }
  return "?";
}

inline Variable parse_variable(std::string_view s) {
  for (Variable v : kAllVariables)
    if (name(v) == s) return v;
  throw InvalidParameter("unknown variable '" + std::string(s) + "'");
}

enum class Quantity { delta_phi, delta_phi_min, N, sql, hl, qfi, qcrb, qfi_lossy, qcrb_lossy };

inline constexpr std::array kAllQuantities{Quantity::delta_phi, Quantity::delta_phi_min, Quantity::N,
                                           Quantity::sql,       Quantity::hl,            Quantity::qfi,
                                           Quantity::qcrb,      Quantity::qfi_lossy,     Quantity::qcrb_lossy};

inline std::string_view name(Quantity q) {
  switch (q) {
    case Quantity::delta_phi: return "delta_phi";
    case Quantity::delta_phi_min: return "delta_phi_min";
    case Quantity::N: return "N";
    case Quantity::sql: return "sql";
    case Quantity::hl: return "hl";
    case Quantity::qfi: return "qfi";
    case Quantity::qcrb: return "qcrb";
    case Quantity::qfi_lossy: return "qfi_lossy";
    case Quantity::qcrb_lossy: return "qcrb_lossy";
  }
  return "?";
}

inline Quantity parse_quantity(std::string_view s) {
  for (Quantity q : kAllQuantities)
    if (name(q) == s) return q;
  throw InvalidParameter("unknown quantity '" + std::string(s) + "'");
}

// Comma-separated list; duplicates removed, order kept.
inline std::vector<Quantity> parse_quantities(std::string_view s) {
  std::vector<Quantity> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    std::string_view item = s.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const Quantity q = parse_quantity(item);
      if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
    }
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) throw InvalidParameter("no quantities requested");
  return out;
}

// A parameter point plus the loss eta used by the lossy QFI bound.
struct Point {
  InterferometerParams params;
  double eta = 1.0;

  double get(Variable v) const {
    switch (v) {
      case Variable::phi: return params.phi;
      case Variable::g: return params.g;
      case Variable::alpha: return params.alpha.real();
      case Variable::r: return params.r;
      case Variable::t1: return params.t1;
      case Variable::t2: return params.t2;
      case Variable::eta: return eta;
    }
    return 0.0;
  }
  void set(Variable v, double x) {
    switch (v) {
      case Variable::phi: params.phi = x; break;
      case Variable::g: params.g = x; break;
      case Variable::alpha: params.alpha = x; break;
      case Variable::r: params.r = x; break;
      case Variable::t1: params.t1 = x; break;
      case Variable::t2: params.t2 = x; break;
      case Variable::eta: eta = x; break;
    }
  }
  void validate() const {
    params.validate();
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter("eta must lie in [0,1]");
  }
};

struct Range {
  double start = 0.0;
  double stop = 1.0;
  int count = 2;

  void validate() const {
    if (count < 2) throw InvalidParameter("sweep needs at least 2 points");
    if (!(start < stop)) throw InvalidParameter("sweep range must satisfy start < stop");
  }
  double at(int i) const { return i == count - 1 ? stop : start + (stop - start) * i / (count - 1); }
};

struct Series {
  std::string label;
  std::vector<std::pair<Variable, double>> assignments;
  std::optional<Variable> swept;  // overrides SweepSpec::swept for this curve
};

struct SweepSpec {
  Variable swept = Variable::phi;
  Range range{};
  Point fixed{};
  std::vector<Quantity> quantities;
  std::vector<Series> series;  // empty: one unlabeled curve
  PhaseSearch search{};

  std::vector<Series> curves() const { return series.empty() ? std::vector<Series>{Series{}} : series; }

  void validate() const {
    range.validate();
    if (quantities.empty()) throw InvalidParameter("no quantities requested");
    for (const Series& s : curves()) {
      Point p = fixed;
      for (auto [v, x] : s.assignments) p.set(v, x);
      const Variable v = s.swept.value_or(swept);
      p.set(v, range.start);
      p.validate();
      p.set(v, range.stop);
      p.validate();
    }
  }
};

enum Flag : unsigned {
  kFlagNone = 0,
  kFlagDivergent = 1u << 0,
  kFlagDegenerate = 1u << 1,
  kFlagUnbounded = 1u << 2,
  kFlagNonConverged = 1u << 3,
};

inline std::string flags_string(unsigned f) {
  std::string s;
  auto add = [&](unsigned bit, const char* word) {
    if (!(f & bit)) return;
    if (!s.empty()) s += ';';
    s += word;
  };
  add(kFlagDivergent, "divergent");
  add(kFlagDegenerate, "degenerate");
  add(kFlagUnbounded, "unbounded");
  add(kFlagNonConverged, "nonconverged");
  return s;
}

struct ResultRow {
  std::string series;
  Variable swept = Variable::phi;
  Point point{};
  std::map<Quantity, double> values;  // absent: not computable at this point, see flags
  std::optional<double> phi_opt;
  unsigned flags = kFlagNone;
};

// Evaluates the requested quantities at one point of the analytic path.
inline ResultRow evaluate_point(const Point& pt, std::span<const Quantity> quantities, const PhaseSearch& search = {}) {
  pt.validate();
  ResultRow row;
  row.point = pt;
  const MomentTable q(pt.params);
  auto want = [&](Quantity x) { return std::find(quantities.begin(), quantities.end(), x) != quantities.end(); };

  if (want(Quantity::delta_phi)) {
    try {
      row.values[Quantity::delta_phi] = phase_sensitivity(q, pt.params).delta_phi;
    } catch (const DivergentSensitivity&) {
      row.flags |= kFlagDivergent;
    }
  }
  if (want(Quantity::delta_phi_min)) {
    try {
      const OptimalPhaseResult opt = optimal_phase(q, pt.params, search);
      row.values[Quantity::delta_phi_min] = opt.delta_phi_min;
      row.phi_opt = opt.phi_opt;
    } catch (const DivergentSensitivity&) {
      row.flags |= kFlagDivergent;
    }
  }
  if (want(Quantity::N) || want(Quantity::sql) || want(Quantity::hl)) {
    const double n = total_photon_number(q);
    if (want(Quantity::N)) row.values[Quantity::N] = n;
    if (want(Quantity::sql) || want(Quantity::hl)) {
      try {
        const Benchmarks b = sql_hl(n);
        if (want(Quantity::sql)) row.values[Quantity::sql] = b.sql;
        if (want(Quantity::hl)) row.values[Quantity::hl] = b.hl;
      } catch (const DegenerateConfiguration&) {
        row.flags |= kFlagDegenerate;
      }
    }
  }
  if (want(Quantity::qfi) || want(Quantity::qcrb)) {
    const double f = fisher_ideal(q);
    if (want(Quantity::qfi)) row.values[Quantity::qfi] = f;
    if (want(Quantity::qcrb)) {
      if (f > 0.0)
        row.values[Quantity::qcrb] = 1.0 / std::sqrt(f);
      else
        row.flags |= kFlagDegenerate;
    }
  }
  if (want(Quantity::qfi_lossy) || want(Quantity::qcrb_lossy)) {
    try {
      const LossyQfiReport l = qfi_lossy(q, pt.eta);
      if (want(Quantity::qfi_lossy)) row.values[Quantity::qfi_lossy] = l.fisher_lossy;
      if (want(Quantity::qcrb_lossy)) {
        if (l.unbounded())
          row.flags |= kFlagUnbounded;
        else
          row.values[Quantity::qcrb_lossy] = l.qcrb_lossy;
      }
    } catch (const DegenerateConfiguration&) {
      row.flags |= kFlagDegenerate;
    }
  }
  return row;
}

inline unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs body(i) for i in [0, n) on up to `threads` workers. Work items are
// claimed dynamically but each writes only its own slot, so results do not
// depend on scheduling. The first exception is rethrown after all workers join.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Rows in series-major, grid-minor order.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec, unsigned threads = default_thread_count()) {
  spec.validate();
  const std::vector<Series> curves = spec.curves();
  const std::size_t per = static_cast<std::size_t>(spec.range.count);
  std::vector<ResultRow> rows(curves.size() * per);
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const Series& s = curves[k / per];
    const int i = static_cast<int>(k % per);
    Point p = spec.fixed;
    for (auto [v, x] : s.assignments) p.set(v, x);
    const Variable v = s.swept.value_or(spec.swept);
    p.set(v, spec.range.at(i));
    ResultRow row = evaluate_point(p, spec.quantities, spec.search);
    row.series = s.label;
    row.swept = v;
    rows[k] = std::move(row);
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Figure presets. Ranges are not stated in the captions; these cover the
// plotted regimes at 200 points per curve.

struct FigurePreset {
  std::string name;
  std::string description;
  SweepSpec spec;
};

inline constexpr std::array kPresetSqueezing{0.0, 0.3, 0.6, 1.0};
inline constexpr int kPresetPoints = 200;

namespace detail {

inline std::string format_number(double v);

inline std::vector<Series> squeezing_series() {
  std::vector<Series> s;
  for (double r : kPresetSqueezing) s.push_back({"r=" + format_number(r), {{Variable::r, r}}, std::nullopt});
  return s;
}

inline Point point(double g, double alpha, double t1 = 1.0, double t2 = 1.0, double eta = 1.0) {
  Point p;
  p.params.g = g;
  p.params.alpha = alpha;
  p.params.t1 = t1;
  p.params.t2 = t2;
  p.eta = eta;
  return p;
}

inline FigurePreset preset(std::string name, std::string description, Variable swept, Range range, Point fixed,
                           std::vector<Quantity> quantities, std::vector<Series> series) {
  SweepSpec s;
  s.swept = swept;
  s.range = range;
  s.fixed = fixed;
  s.quantities = std::move(quantities);
  s.series = std::move(series);
  return {std::move(name), std::move(description), std::move(s)};
}

}  // namespace detail

inline std::vector<FigurePreset> figure_presets(int points = kPresetPoints) {
  using Q = Quantity;
  using V = Variable;
  const Range phi{0.0, 3.0, points};
  const Range gain{0.0, 2.0, points};
  const Range amp{0.0, 3.0, points};
  const Range trans{0.0, 1.0, points};
  const auto rs = detail::squeezing_series();

  std::vector<Series> loss;
  for (double r : kPresetSqueezing) {
    loss.push_back({"r=" + detail::format_number(r) + ",internal", {{V::r, r}, {V::t2, 1.0}}, V::t1});
    loss.push_back({"r=" + detail::format_number(r) + ",external", {{V::r, r}, {V::t1, 1.0}}, V::t2});
  }

  std::vector<FigurePreset> p;
  p.push_back(detail::preset("fig2", "delta_phi vs phi, alpha=1, g=1, lossless", V::phi, phi, detail::point(1, 1),
                             {Q::delta_phi}, rs));
  p.push_back(detail::preset("fig3", "optimal delta_phi vs g, alpha=1", V::g, gain, detail::point(1, 1),
                             {Q::delta_phi_min}, rs));
  p.push_back(detail::preset("fig4", "optimal delta_phi vs alpha, g=1", V::alpha, amp, detail::point(1, 1),
                             {Q::delta_phi_min}, rs));
  p.push_back(detail::preset("fig5", "optimal delta_phi vs T_k, g=1, alpha=1; internal and external loss", V::t1,
                             trans, detail::point(1, 1), {Q::delta_phi_min}, loss));
  p.push_back(detail::preset("fig6a", "delta_phi vs phi with SQL and HL, g=1, alpha=1, T1=T2=1", V::phi, phi,
                             detail::point(1, 1), {Q::delta_phi, Q::N, Q::sql, Q::hl}, rs));
  p.push_back(detail::preset("fig6b", "delta_phi vs phi with SQL and HL, g=1, alpha=1, T1=T2=0.5", V::phi, phi,
                             detail::point(1, 1, 0.5, 0.5), {Q::delta_phi, Q::N, Q::sql, Q::hl}, rs));
  p.push_back(detail::preset("fig7a", "QFI vs g, alpha=1", V::g, gain, detail::point(1, 1), {Q::qfi}, rs));
  p.push_back(detail::preset("fig7b", "QFI vs alpha, g=1", V::alpha, amp, detail::point(1, 1), {Q::qfi}, rs));
  p.push_back(detail::preset("fig8a", "QCRB vs g, alpha=1", V::g, gain, detail::point(1, 1), {Q::qcrb}, rs));
  p.push_back(detail::preset("fig8b", "QCRB vs alpha, g=1", V::alpha, amp, detail::point(1, 1), {Q::qcrb}, rs));
  p.push_back(detail::preset("fig10", "lossy QFI and QCRB vs eta, g=1, alpha=1", V::eta, trans, detail::point(1, 1),
                             {Q::qfi_lossy, Q::qcrb_lossy}, rs));
  p.push_back(detail::preset("fig11a", "lossy QFI vs g, alpha=1, eta=0.5", V::g, gain,
                             detail::point(1, 1, 1, 1, 0.5), {Q::qfi_lossy}, rs));
  p.push_back(detail::preset("fig11b", "lossy QFI vs alpha, g=1, eta=0.5", V::alpha, amp,
                             detail::point(1, 1, 1, 1, 0.5), {Q::qfi_lossy}, rs));
  return p;
}

inline FigurePreset figure_preset(std::string_view name, int points = kPresetPoints) {
  for (FigurePreset& p : figure_presets(points))
    if (p.name == name) return p;
  throw InvalidParameter("unknown figure preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Output.

namespace detail {

// Shortest of %.15g, locale independent.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline constexpr std::array kParameterColumns{Variable::g, Variable::alpha, Variable::r, Variable::t1,
                                              Variable::t2, Variable::eta, Variable::phi};

// Column order: series, swept, value, parameters, quantities, [phi_opt], flags.
inline std::vector<std::string> csv_header(std::span<const Quantity> quantities) {
  std::vector<std::string> h{"series", "swept", "value"};
  for (Variable v : kParameterColumns) h.emplace_back(name(v));
  for (Quantity q : quantities) h.emplace_back(name(q));
  if (std::find(quantities.begin(), quantities.end(), Quantity::delta_phi_min) != quantities.end())
    h.emplace_back("phi_opt");
  h.emplace_back("flags");
  return h;
}

inline void write_csv_line(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << detail::csv_field(fields[i]);
  }
  os << "\r\n";
}

inline void write_csv(std::ostream& os, std::span<const ResultRow> rows, std::span<const Quantity> quantities) {
  write_csv_line(os, csv_header(quantities));
  const bool has_opt =
      std::find(quantities.begin(), quantities.end(), Quantity::delta_phi_min) != quantities.end();
  for (const ResultRow& r : rows) {
    std::vector<std::string> f{r.series, std::string(name(r.swept)), detail::format_number(r.point.get(r.swept))};
    for (Variable v : kParameterColumns) f.push_back(detail::format_number(r.point.get(v)));
    for (Quantity q : quantities) {
      const auto it = r.values.find(q);
      f.push_back(it == r.values.end() ? std::string() : detail::format_number(it->second));
    }
    if (has_opt) f.push_back(r.phi_opt ? detail::format_number(*r.phi_opt) : std::string());
    f.push_back(flags_string(r.flags));
    write_csv_line(os, f);
  }
}

inline nlohmann::ordered_json to_json(const ResultRow& r, std::span<const Quantity> quantities) {
  nlohmann::ordered_json j;
  j["series"] = r.series;
  j["swept"] = name(r.swept);
  j["value"] = r.point.get(r.swept);
  for (Variable v : kParameterColumns) j[std::string(name(v))] = r.point.get(v);
  for (Quantity q : quantities) {
    const auto it = r.values.find(q);
    j[std::string(name(q))] = it == r.values.end() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(it->second);
  }
  if (std::find(quantities.begin(), quantities.end(), Quantity::delta_phi_min) != quantities.end())
    j["phi_opt"] = r.phi_opt ? nlohmann::ordered_json(*r.phi_opt) : nlohmann::ordered_json(nullptr);
  j["flags"] = flags_string(r.flags);
  return j;
}

inline void write_jsonl(std::ostream& os, std::span<const ResultRow> rows, std::span<const Quantity> quantities) {
  for (const ResultRow& r : rows) os << to_json(r, quantities).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Analytic versus oracle on a product grid.

struct CrossCheckGrid {
  std::vector<double> alpha{0.0, 0.5, 1.0};
  std::vector<double> g{0.0, 0.5, 1.0};
  std::vector<double> r{0.0, 0.5, 1.0};
  std::vector<double> t1{1.0, 0.7};
  std::vector<double> t2{1.0, 0.7};
  std::vector<double> phi{0.3, 0.8, 1.5};

  std::size_t size() const { return alpha.size() * g.size() * r.size() * t1.size() * t2.size() * phi.size(); }
};

struct CrossCheckEntry {
  InterferometerParams params;
  std::optional<double> analytic_delta_phi, oracle_delta_phi;  // empty when divergent
  double analytic_n = 0.0, oracle_n = 0.0;
  double analytic_fisher = 0.0, oracle_fisher = 0.0;
  int cutoff = 0;
  double tail_mass = 0.0;
  bool converged = false;
  std::string error;  // oracle failure message, if any
};

struct Deviation {
  double max_relative = 0.0;
  std::size_t compared = 0;
  std::optional<InterferometerParams> worst;
};

struct CrossCheckResult {
  std::vector<CrossCheckEntry> entries;
  Deviation delta_phi, n_total, fisher;
  std::size_t divergent = 0;            // both paths divergent; excluded from delta_phi
  std::size_t divergence_mismatch = 0;  // exactly one path divergent
  std::size_t nonconverged = 0;
  int max_cutoff_used = 0;
  double seconds = 0.0;
};

inline double relative_deviation(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Cutoff schedule for the cross-check: the internal states at r = g = 1 need
// cutoffs in the hundreds before the top-level mass falls below 1e-10.
inline fock::CutoffPolicy cross_check_policy() {
  fock::CutoffPolicy p;
  p.initial = 20;
  p.step = 10;
  p.growth = 1.25;
  p.max = 640;
  p.tolerance = 1e-10;
  return p;
}

inline CrossCheckResult run_cross_check(const CrossCheckGrid& grid, const fock::OracleOptions& options,
                                        unsigned threads = 1,
                                        const std::function<void(const CrossCheckEntry&)>& progress = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  // Work unit: one (alpha, g, r, t1) group; within it phi values run in order
  // and both t2 values share one pipeline.
  struct Group {
    double alpha, g, r, t1;
  };
  std::vector<Group> groups;
  for (double a : grid.alpha)
    for (double g : grid.g)
      for (double r : grid.r)
        for (double t1 : grid.t1) groups.push_back({a, g, r, t1});

  const std::size_t per = grid.phi.size() * grid.t2.size();
  std::vector<CrossCheckEntry> entries(groups.size() * per);
  std::mutex progress_mutex;
  parallel_for(groups.size(), threads, [&](std::size_t gi) {
    const Group& grp = groups[gi];
    fock::GateCache cache;
    fock::OracleOptions opts = options;
    for (std::size_t pi = 0; pi < grid.phi.size(); ++pi) {
      InterferometerParams p;
      p.alpha = grp.alpha;
      p.g = grp.g;
      p.r = grp.r;
      p.t1 = grp.t1;
      p.phi = grid.phi[pi];
      std::vector<fock::OracleReport> oracle;
      std::string error;
      try {
        oracle = fock::oracle_sensitivity(p, grid.t2, opts, &cache);
        // Later phases of the same state need at least the same cutoff.
        opts.cutoff.initial = std::max(opts.cutoff.initial, oracle.front().diagnostics.cutoff);
        opts.cutoff.initial = std::min(opts.cutoff.initial, opts.cutoff.max);
      } catch (const CutoffError& e) {
        error = e.what();
      }
      for (std::size_t ti = 0; ti < grid.t2.size(); ++ti) {
        CrossCheckEntry& e = entries[gi * per + pi * grid.t2.size() + ti];
        e.params = p;
        e.params.t2 = grid.t2[ti];
        const MomentTable q(e.params);
        try {
          e.analytic_delta_phi = phase_sensitivity(q, e.params).delta_phi;
        } catch (const DivergentSensitivity&) {
        }
        e.analytic_n = total_photon_number(q);
        e.analytic_fisher = fisher_ideal(q);
        e.error = error;
        if (!oracle.empty()) {
          const fock::OracleReport& o = oracle[ti];
          e.oracle_delta_phi = o.delta_phi;
          e.oracle_n = o.n_total;
          e.oracle_fisher = o.fisher;
          e.cutoff = o.diagnostics.cutoff;
          e.tail_mass = o.diagnostics.tail_mass;
          e.converged = o.diagnostics.converged;
        }
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress(e);
        }
      }
    }
  });

  CrossCheckResult res;
  auto update = [](Deviation& d, double a, double b, const InterferometerParams& p) {
    const double rel = relative_deviation(a, b);
    ++d.compared;
    if (!d.worst || rel > d.max_relative) {
      d.max_relative = rel;
      d.worst = p;
    }
  };
  for (const CrossCheckEntry& e : entries) {
    res.max_cutoff_used = std::max(res.max_cutoff_used, e.cutoff);
    if (!e.converged) {
      ++res.nonconverged;
      continue;
    }
    update(res.n_total, e.analytic_n, e.oracle_n, e.params);
    update(res.fisher, e.analytic_fisher, e.oracle_fisher, e.params);
    if (e.analytic_delta_phi.has_value() != e.oracle_delta_phi.has_value()) {
      ++res.divergence_mismatch;
      continue;
    }
    if (!e.analytic_delta_phi) {
      ++res.divergent;
      continue;
    }
    update(res.delta_phi, *e.analytic_delta_phi, *e.oracle_delta_phi, e.params);
  }
  res.entries = std::move(entries);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace su11
