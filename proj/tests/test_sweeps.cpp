#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "su11/sweeps.hpp"

namespace {

using namespace su11;

struct PresetExpectation {
  std::string name;
  Variable swept;
  double g, alpha, t1, t2, eta;
  std::vector<Quantity> quantities;
};

// Fixed parameters as stated in the figure captions.
const std::vector<PresetExpectation>& caption_table() {
  using Q = Quantity;
  using V = Variable;
  static const std::vector<PresetExpectation> t{
      {"fig2", V::phi, 1, 1, 1, 1, 1, {Q::delta_phi}},
      {"fig3", V::g, 1, 1, 1, 1, 1, {Q::delta_phi_min}},
      {"fig4", V::alpha, 1, 1, 1, 1, 1, {Q::delta_phi_min}},
      {"fig5", V::t1, 1, 1, 1, 1, 1, {Q::delta_phi_min}},
      {"fig6a", V::phi, 1, 1, 1, 1, 1, {Q::delta_phi, Q::N, Q::sql, Q::hl}},
      {"fig6b", V::phi, 1, 1, 0.5, 0.5, 1, {Q::delta_phi, Q::N, Q::sql, Q::hl}},
      {"fig7a", V::g, 1, 1, 1, 1, 1, {Q::qfi}},
      {"fig7b", V::alpha, 1, 1, 1, 1, 1, {Q::qfi}},
      {"fig8a", V::g, 1, 1, 1, 1, 1, {Q::qcrb}},
      {"fig8b", V::alpha, 1, 1, 1, 1, 1, {Q::qcrb}},
      {"fig10", V::eta, 1, 1, 1, 1, 1, {Q::qfi_lossy, Q::qcrb_lossy}},
      {"fig11a", V::g, 1, 1, 1, 1, 0.5, {Q::qfi_lossy}},
      {"fig11b", V::alpha, 1, 1, 1, 1, 0.5, {Q::qfi_lossy}},
  };
  return t;
}

std::string csv_of(const std::vector<ResultRow>& rows, const std::vector<Quantity>& q) {
  std::ostringstream os;
  write_csv(os, rows, q);
  return os.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t end = s.find("\r\n", pos);
    out.push_back(s.substr(pos, end - pos));
    pos = end + 2;
  }
  return out;
}

TEST(ParsingTest, VariablesAndQuantities) {
  for (Variable v : kAllVariables) EXPECT_EQ(parse_variable(name(v)), v);
  for (Quantity q : kAllQuantities) EXPECT_EQ(parse_quantity(name(q)), q);
  EXPECT_THROW(parse_variable("theta"), InvalidParameter);
  EXPECT_EQ(parse_quantities("qfi, N,qfi"), (std::vector<Quantity>{Quantity::qfi, Quantity::N}));
  EXPECT_THROW(parse_quantities(""), InvalidParameter);
  EXPECT_THROW(parse_quantities("qfi,bogus"), InvalidParameter);
}

TEST(RangeTest, Endpoints) {
  const Range r{0.0, 3.0, 7};
  EXPECT_EQ(r.at(0), 0.0);
  EXPECT_EQ(r.at(6), 3.0);
  EXPECT_DOUBLE_EQ(r.at(3), 1.5);
  EXPECT_THROW((Range{0.0, 1.0, 1}.validate()), InvalidParameter);
  EXPECT_THROW((Range{1.0, 1.0, 5}.validate()), InvalidParameter);
}

TEST(PresetTest, MatchesCaptions) {
  const auto presets = figure_presets();
  ASSERT_EQ(presets.size(), caption_table().size());
  for (const auto& e : caption_table()) {
    const FigurePreset p = figure_preset(e.name);
    SCOPED_TRACE(e.name);
    EXPECT_EQ(p.spec.swept, e.swept);
    EXPECT_EQ(p.spec.fixed.params.g, e.g);
    EXPECT_EQ(p.spec.fixed.params.alpha, cd(e.alpha));
    EXPECT_EQ(p.spec.fixed.params.t1, e.t1);
    EXPECT_EQ(p.spec.fixed.params.t2, e.t2);
    EXPECT_EQ(p.spec.fixed.eta, e.eta);
    EXPECT_EQ(p.spec.quantities, e.quantities);
    EXPECT_EQ(p.spec.range.count, 200);
    EXPECT_NO_THROW(p.spec.validate());
  }
  EXPECT_THROW(figure_preset("fig9"), InvalidParameter);
}

TEST(PresetTest, SqueezingSeries) {
  const FigurePreset p = figure_preset("fig2");
  ASSERT_EQ(p.spec.series.size(), 4u);
  const double rs[] = {0.0, 0.3, 0.6, 1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    ASSERT_EQ(p.spec.series[i].assignments.size(), 1u);
    EXPECT_EQ(p.spec.series[i].assignments[0], std::make_pair(Variable::r, rs[i]));
  }
  EXPECT_EQ(p.spec.series[1].label, "r=0.3");
}

TEST(PresetTest, LossSeriesSweepEachTransmittance) {
  const FigurePreset p = figure_preset("fig5");
  ASSERT_EQ(p.spec.series.size(), 8u);
  for (const Series& s : p.spec.series) {
    ASSERT_TRUE(s.swept);
    const bool internal = s.label.ends_with(",internal");
    EXPECT_EQ(*s.swept, internal ? Variable::t1 : Variable::t2);
    const Variable other = internal ? Variable::t2 : Variable::t1;
    bool other_fixed = false;
    for (auto [v, x] : s.assignments)
      if (v == other) other_fixed = x == 1.0;
    EXPECT_TRUE(other_fixed) << s.label;
  }
}

TEST(SweepTest, Fig2RowCount) {
  const FigurePreset p = figure_preset("fig2");
  const auto rows = run_sweep(p.spec, 1);
  ASSERT_EQ(rows.size(), 800u);
  EXPECT_EQ(rows[0].series, "r=0");
  EXPECT_EQ(rows[199].series, "r=0");
  EXPECT_EQ(rows[200].series, "r=0.3");
  EXPECT_EQ(rows[200].point.params.phi, 0.0);
  EXPECT_EQ(rows[399].point.params.phi, 3.0);
}

TEST(SweepTest, DeterministicAcrossThreadCounts) {
  const FigurePreset p = figure_preset("fig4", 25);
  const auto one = run_sweep(p.spec, 1), four = run_sweep(p.spec, 4);
  EXPECT_EQ(csv_of(one, p.spec.quantities), csv_of(four, p.spec.quantities));
}

TEST(SweepTest, DivergentPointsFlaggedNotDropped) {
  SweepSpec s;
  s.swept = Variable::alpha;
  s.range = {0.0, 1.0, 3};
  s.fixed.params.g = 1.0;
  s.fixed.params.phi = 0.4;
  s.quantities = {Quantity::delta_phi, Quantity::N};
  const auto rows = run_sweep(s, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].flags, kFlagDivergent);
  EXPECT_FALSE(rows[0].values.count(Quantity::delta_phi));
  EXPECT_TRUE(rows[0].values.count(Quantity::N));
  EXPECT_EQ(rows[1].flags, kFlagNone);
}

TEST(SweepTest, UnboundedAndDegenerateFlags) {
  Point p;
  p.eta = 0.0;
  p.params.g = 1.0;
  p.params.alpha = 1.0;
  const Quantity q[] = {Quantity::qfi_lossy, Quantity::qcrb_lossy};
  const ResultRow row = evaluate_point(p, q);
  EXPECT_EQ(row.flags, kFlagUnbounded);
  EXPECT_EQ(row.values.at(Quantity::qfi_lossy), 0.0);

  Point vacuum;
  const Quantity b[] = {Quantity::sql, Quantity::qcrb};
  EXPECT_EQ(evaluate_point(vacuum, b).flags, kFlagDegenerate);
  EXPECT_EQ(flags_string(kFlagDivergent | kFlagDegenerate), "divergent;degenerate");
  EXPECT_EQ(flags_string(kFlagNone), "");
}

TEST(SweepTest, InvalidSpecRejected) {
  SweepSpec s;
  s.swept = Variable::t1;
  s.range = {0.0, 1.5, 5};
  s.quantities = {Quantity::qfi};
  EXPECT_THROW(run_sweep(s, 1), InvalidParameter);
  s.range = {0.0, 1.0, 5};
  s.quantities.clear();
  EXPECT_THROW(run_sweep(s, 1), InvalidParameter);
}

TEST(CsvTest, HeaderAndLayout) {
  const FigurePreset p = figure_preset("fig3", 5);
  const std::string csv = csv_of(run_sweep(p.spec, 1), p.spec.quantities);
  const auto ls = lines(csv);
  ASSERT_EQ(ls.size(), 21u);
  EXPECT_EQ(ls[0], "series,swept,value,g,alpha,r,t1,t2,eta,phi,delta_phi_min,phi_opt,flags");
  // First point of the first curve is g = 0 where both OPAs vanish.
  EXPECT_TRUE(ls[1].starts_with("r=0,g,0,0,1,0,1,1,1,0,"));
  EXPECT_EQ(csv.find('\n', 0), csv.find("\r\n") + 1);
}

TEST(CsvTest, NumberFormatting) {
  EXPECT_EQ(detail::format_number(0.1), "0.1");
  EXPECT_EQ(detail::format_number(1.0 / 3.0), "0.333333333333333");
  EXPECT_EQ(detail::format_number(2.0), "2");
  EXPECT_EQ(detail::format_number(1e-20), "1e-20");
  EXPECT_EQ(detail::format_number(123456789012345678.0), "1.23456789012346e+17");
}

TEST(CsvTest, Quoting) {
  EXPECT_EQ(detail::csv_field("plain"), "plain");
  EXPECT_EQ(detail::csv_field("r=0.3,internal"), "\"r=0.3,internal\"");
  EXPECT_EQ(detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(detail::csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(CsvTest, EmptyCellForMissingValue) {
  ResultRow row;
  row.swept = Variable::alpha;
  row.flags = kFlagDivergent;
  const Quantity q[] = {Quantity::delta_phi};
  std::ostringstream os;
  write_csv(os, std::span<const ResultRow>(&row, 1), q);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_TRUE(ls[1].ends_with(",,divergent")) << ls[1];
}

TEST(JsonlTest, OneObjectPerRow) {
  const FigurePreset p = figure_preset("fig5", 3);
  const auto rows = run_sweep(p.spec, 1);
  std::ostringstream os;
  write_jsonl(os, rows, p.spec.quantities);
  std::istringstream is(os.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("delta_phi_min"));
    EXPECT_TRUE(j.contains("phi_opt"));
    EXPECT_EQ(j["swept"], j["series"].get<std::string>().ends_with("internal") ? "t1" : "t2");
    if (j["value"] == 0.0) {
      EXPECT_TRUE(j["delta_phi_min"].is_null());
      EXPECT_EQ(j["flags"], "divergent");
    }
    ++n;
  }
  EXPECT_EQ(n, rows.size());
}

TEST(ParallelForTest, PropagatesException) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 4) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(CrossCheckTest, SmallGridAgrees) {
  CrossCheckGrid grid;
  grid.alpha = {0.0, 1.0};
  grid.g = {0.5};
  grid.r = {0.0, 0.5};
  grid.t1 = {1.0, 0.7};
  grid.t2 = {1.0, 0.7};
  grid.phi = {0.3, 1.5};
  fock::OracleOptions o;
  o.cutoff = cross_check_policy();
  const CrossCheckResult res = run_cross_check(grid, o, 1);
  EXPECT_EQ(res.entries.size(), grid.size());
  EXPECT_EQ(res.nonconverged, 0u);
  EXPECT_EQ(res.divergence_mismatch, 0u);
  EXPECT_EQ(res.divergent, 16u);
  EXPECT_EQ(res.delta_phi.compared, 16u);
  EXPECT_LT(res.delta_phi.max_relative, 1e-6);
  EXPECT_LT(res.n_total.max_relative, 1e-6);
  EXPECT_LT(res.fisher.max_relative, 1e-6);
  // A zero tolerance is never met in floating point.
  EXPECT_GT(res.delta_phi.max_relative, 0.0);
}

TEST(CrossCheckTest, RelativeDeviation) {
  EXPECT_EQ(relative_deviation(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_deviation(1.0, 2.0), 0.5);
}

}  // namespace
