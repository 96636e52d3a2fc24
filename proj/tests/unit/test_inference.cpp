#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "factor_dgp.hpp"
#include "oracles.hpp"
#include "record_gen.hpp"
#include "synthpanel/error.hpp"
#include "synthpanel/inference.hpp"

using namespace synthpanel;

namespace {

PanelSeries from_rows(const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& rows, std::int64_t first) {
  std::vector<double> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  return PanelSeries("y", names, {first, first + std::int64_t(rows[0].size()) - 1}, values);
}

PanelSeries scaled(const PanelSeries& p, double c) {
  auto v = p.values();
  for (auto& x : v) x *= c;
  return PanelSeries(p.outcome_name(), p.countries(), p.periods(), v, p.calendar());
}

PlaceboConfig serial() {
  PlaceboConfig c;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("quantiles") {
  const std::vector<double> sym = {-2, -1, 1, 2};
  CHECK(quantile(sym, 0.5) == 0.0);
  const std::vector<double> flat(7, 0.3);
  CHECK(quantile(flat, 0.025) == 0.3);
  CHECK(quantile(flat, 0.975) == 0.3);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 3);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(1 + rng() % 40);
    for (auto& x : v) x = n(rng);
    for (double level : {0.0, 0.025, 0.1, 0.5, 0.9, 0.975, 1.0}) {
      CHECK(std::abs(quantile(v, level) - testsupport::sorted_quantile(v, level)) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), DegenerateInferenceError);
}

TEST_CASE("too few donors") {
  testsupport::FactorPanelSpec spec;
  spec.donors = 4;
  const auto panel = testsupport::simulate_factor_panel(spec);
  CHECK_THROWS_AS(placebo_distribution(panel, "UG", testsupport::donors_excluding(panel, "UG")),
                  DegenerateInferenceError);
}

TEST_CASE("equal fit quality gives unit scaling") {
  // Donors on a regular pentagon; each sits at distance d = 1 - cos 72deg
  // from the chord of its neighbours. The treated unit lies d outside the
  // midpoint of one edge, so every unit has the same pre-period RMSE.
  std::vector<std::string> names = {"AA", "AB", "AC", "AD", "AE", "UG"};
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 5; ++i) {
    const double a = i * 2 * std::numbers::pi / 5;
    rows.push_back({std::cos(a), std::sin(a), 0.1 * i});
  }
  const double d = 1 - std::cos(2 * std::numbers::pi / 5);
  const double r = std::cos(std::numbers::pi / 5) + d;
  rows.push_back({r * std::cos(std::numbers::pi / 5), r * std::sin(std::numbers::pi / 5), 0.0});
  const auto panel = from_rows(names, rows, -2);
  const std::vector<std::string> donors(names.begin(), names.end() - 1);
  const auto dist = placebo_distribution(panel, "UG", donors, serial());
  REQUIRE(dist.placebos.size() == 5);
  for (const auto& p : dist.placebos) {
    CHECK(p.sigma == doctest::Approx(dist.sigma_treated).epsilon(1e-9));
    CHECK(p.scale == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < p.raw_effects.values.size(); ++i) {
      CHECK(p.scaled_effects.values[i] == doctest::Approx(p.raw_effects.values[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("perfectly fitted donors are excluded") {
  testsupport::FactorPanelSpec spec;
  spec.donors = 8;
  auto panel = testsupport::simulate_factor_panel(spec);
  // Make AB an exact copy of AA: each becomes the other's perfect twin.
  auto v = panel.values();
  const auto n = panel.num_periods();
  const auto aa = panel.country_index("AA"), ab = panel.country_index("AB");
  std::copy_n(v.begin() + aa * n, n, v.begin() + ab * n);
  panel = PanelSeries("y", panel.countries(), panel.periods(), v);
  const auto dist = placebo_distribution(panel, "UG", testsupport::donors_excluding(panel, "UG"), serial());
  REQUIRE(dist.excluded.size() == 2);
  CHECK(dist.excluded[0].donor == "AA");
  CHECK(dist.excluded[1].donor == "AB");
  CHECK(dist.placebos.size() == 6);
}

TEST_CASE("all donors excluded") {
  std::vector<std::string> names = {"AA", "AB", "AC", "AD", "AE", "UG"};
  std::vector<std::vector<double>> rows(5, std::vector<double>{1, 2, 3, 4});
  rows.push_back({2, 1, 0, 0});
  const auto panel = from_rows(names, rows, -3);
  CHECK_THROWS_AS(placebo_distribution(panel, "UG", {names.begin(), names.end() - 1}, serial()),
                  DegenerateInferenceError);
}

TEST_CASE("the treated unit never enters its placebo distribution") {
  testsupport::FactorPanelSpec spec;
  spec.seed = 3;
  spec.tau = -0.15;
  const auto a = testsupport::simulate_factor_panel(spec);
  auto v = a.values();
  const auto ug = a.country_index("UG");
  for (std::size_t t = 0; t < a.num_periods(); ++t) v[ug * a.num_periods() + t] += 50.0 * t;
  const PanelSeries b("y", a.countries(), a.periods(), v);
  const auto donors = testsupport::donors_excluding(a, "UG");
  const auto da = placebo_distribution(a, "UG", donors, serial());
  const auto db = placebo_distribution(b, "UG", donors, serial());
  REQUIRE(da.placebos.size() == db.placebos.size());
  for (std::size_t j = 0; j < da.placebos.size(); ++j) {
    CHECK(da.placebos[j].raw_effects.values == db.placebos[j].raw_effects.values);
    CHECK(da.placebos[j].sigma == db.placebos[j].sigma);
  }
}

TEST_CASE("thread count does not change results") {
  testsupport::FactorPanelSpec spec;
  spec.seed = 9;
  const auto panel = testsupport::simulate_factor_panel(spec);
  const auto donors = testsupport::donors_excluding(panel, "UG");
  PlaceboConfig many;
  many.threads = 4;
  const auto a = placebo_distribution(panel, "UG", donors, serial());
  const auto b = placebo_distribution(panel, "UG", donors, many);
  CHECK(a.treated_fit.effects.values == b.treated_fit.effects.values);
  for (std::size_t j = 0; j < a.placebos.size(); ++j) {
    CHECK(a.placebos[j].scaled_effects.values == b.placebos[j].scaled_effects.values);
  }
}

TEST_CASE("bands and averages against recomputation") {
  testsupport::FactorPanelSpec spec;
  spec.seed = 21;
  const auto panel = testsupport::simulate_factor_panel(spec);
  const auto dist = placebo_distribution(panel, "UG", testsupport::donors_excluding(panel, "UG"), serial());
  const auto band = pointwise_band(dist);
  CHECK(band.n_placebos == dist.placebos.size());
  for (std::size_t i = 0; i < band.lower.size(); ++i) {
    std::vector<double> col;
    for (const auto& p : dist.placebos) col.push_back(p.scaled_effects.values[i]);
    CHECK(band.lower[i] == testsupport::sorted_quantile(col, 0.025));
    CHECK(band.upper[i] == testsupport::sorted_quantile(col, 0.975));
    CHECK(band.upper[i] >= band.lower[i]);
  }
  const auto avg = averaged_post_effect(dist.treated_fit, dist);
  double mean = 0;
  for (std::int64_t t = 0; t < spec.post; ++t) mean += dist.treated_fit.effects.at(t);
  mean /= spec.post;
  CHECK(avg.value == doctest::Approx(mean).epsilon(1e-14));
  std::vector<double> means;
  for (const auto& p : dist.placebos) {
    double m = 0;
    for (std::int64_t t = 0; t < spec.post; ++t) m += p.scaled_effects.at(t);
    means.push_back(m / spec.post);
  }
  CHECK(avg.band_lower == doctest::Approx(testsupport::sorted_quantile(means, 0.025)).epsilon(1e-14));
  CHECK(avg.band_upper == doctest::Approx(testsupport::sorted_quantile(means, 0.975)).epsilon(1e-14));
  CHECK(avg.band_lower <= avg.band_upper);
}

TEST_CASE("constant post effect") {
  std::vector<std::string> names = {"AA", "AB", "AC", "AD", "AE", "UG"};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> rows(5, std::vector<double>(8));
  for (auto& r : rows) {
    for (auto& x : r) x = n(rng);
  }
  std::vector<double> treated(8);
  for (int t = 0; t < 8; ++t) treated[t] = 0.5 * rows[1][t] + 0.5 * rows[3][t] - (t >= 5 ? 0.127 : 0.0);
  rows.push_back(treated);
  const auto panel = from_rows(names, rows, -5);
  const auto dist = placebo_distribution(panel, "UG", {names.begin(), names.end() - 1}, serial());
  CHECK(averaged_post_effect(dist.treated_fit, dist).value == doctest::Approx(-0.127).epsilon(1e-9));
}

TEST_CASE("twin of a donor has zero effects") {
  testsupport::FactorPanelSpec spec;
  spec.seed = 5;
  auto panel = testsupport::simulate_factor_panel(spec);
  auto v = panel.values();
  const auto n = panel.num_periods();
  std::copy_n(v.begin() + panel.country_index("AC") * n, n, v.begin() + panel.country_index("UG") * n);
  panel = PanelSeries("y", panel.countries(), panel.periods(), v);
  const auto donors = testsupport::donors_excluding(panel, "UG");
  const auto dist = placebo_distribution(panel, "UG", donors, serial());
  CHECK(std::abs(averaged_post_effect(dist.treated_fit, dist).value) < 1e-12);
  const auto f = falsification_run(panel, "UG", donors, 100, serial());
  CHECK(std::abs(f.averaged.value) < 1e-12);
}

TEST_CASE("band membership is scale invariant") {
  testsupport::FactorPanelSpec spec;
  spec.seed = 14;
  spec.tau = -0.05;
  const auto panel = testsupport::simulate_factor_panel(spec);
  const auto donors = testsupport::donors_excluding(panel, "UG");
  const auto a = placebo_distribution(panel, "UG", donors, serial());
  const auto b = placebo_distribution(scaled(panel, 3.7), "UG", donors, serial());
  const auto ba = pointwise_band(a), bb = pointwise_band(b);
  for (std::size_t i = 0; i < ba.lower.size(); ++i) {
    const double ea = a.treated_fit.effects.values[i], eb = b.treated_fit.effects.values[i];
    CHECK(eb == doctest::Approx(3.7 * ea).epsilon(1e-6));
    // Skip cells on the band edge where rounding could flip membership.
    if (std::min(std::abs(ea - ba.lower[i]), std::abs(ea - ba.upper[i])) < 1e-6) continue;
    CHECK((ea >= ba.lower[i] && ea <= ba.upper[i]) == (eb >= bb.lower[i] && eb <= bb.upper[i]));
  }
}

TEST_CASE("falsification windows") {
  testsupport::FactorPanelSpec spec;
  spec.seed = 2;
  const auto panel = testsupport::simulate_factor_panel(spec);
  const auto donors = testsupport::donors_excluding(panel, "UG");
  const auto f = falsification_run(panel, "UG", donors, 100, serial());
  CHECK(f.pseudo_intervention == -10);
  CHECK(f.distribution.evaluation_periods.front() == -10);
  CHECK(f.distribution.evaluation_periods.back() == -1);
  CHECK(f.averaged.band_lower <= f.averaged.value);
  CHECK(f.averaged.value <= f.averaged.band_upper);
  CHECK_THROWS_AS(falsification_run(panel, "UG", donors, 190, serial()), RangeError);
  CHECK_THROWS_AS(falsification_run(panel, "UG", donors, 400, serial()), RangeError);
  CHECK(falsification_run(panel, "UG", donors, 95, serial()).pseudo_intervention == -10);
}

TEST_CASE("day windows") {
  DayWindow w;
  CHECK(w.periods(10, 5) == PeriodRange{-10, 5});
  CHECK(w.periods(7, -3) == PeriodRange{-15, 0});
  CHECK(w.periods(1, 40) == PeriodRange{-100, 40});
  CHECK(w.periods(28, 2) == PeriodRange{-4, 2});
  w.post_days = 30;
  CHECK(w.periods(10, 99) == PeriodRange{-10, 2});
  CHECK(aggregation_stride(1) == 10);
  CHECK(aggregation_stride(7) == 4);
  CHECK(aggregation_stride(10) == 1);
  CHECK(aggregation_stride(28) == 1);
}

TEST_CASE("aggregation on constant data") {
  const std::vector<std::string> cs = {"AA", "AB", "AC", "AD", "AE", "AF", "AG", "AH", "AI", "UG"};
  const std::vector<int> sizes = {1, 2, 3, 4, 6, 7, 8, 9, 10, 5};
  const auto records = testsupport::daily_user_tweets(
      cs, -112, 83,
      [&](const std::string& c, int) { return sizes[std::find(cs.begin(), cs.end(), c) - cs.begin()]; },
      false);
  AggregationConfig config;
  config.placebo.threads = 1;
  const auto levels = aggregation_suite(records, config);
  REQUIRE(levels.size() == 4);
  for (const auto& level : levels) {
    INFO("level " << level.period_length_days);
    CHECK(level.panel.num_countries() == 8);
    for (double e : level.distribution.treated_fit.effects.values) CHECK(std::abs(e) < 1e-9);
  }
  CHECK(levels[0].pre_stride == 10);
  CHECK(levels[1].pre_stride == 4);
}

TEST_CASE("aggregation recovers a negative step at every level") {
  const std::vector<std::string> cs = {"AA", "AB", "AC", "AD", "AE", "AF", "AG", "AH", "UG"};
  std::mt19937_64 rng(77);
  std::vector<double> base, load;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    base.push_back(8 + double(rng() % 12));
    load.push_back(0.2 + 0.6 * double(rng() % 100) / 99.0);
  }
  auto users = [&](const std::string& c, int d) {
    const auto i = std::size_t(std::find(cs.begin(), cs.end(), c) - cs.begin());
    const double season = 1 + load[i] * std::sin(d / 20.0);
    const double drop = (c == "UG" && d >= 0) ? 0.6 : 1.0;
    return int(std::lround(base[i] * season * drop));
  };
  const auto records = testsupport::daily_user_tweets(cs, -112, 83, users, true);
  AggregationConfig config;
  config.top_share = 1.0;
  const auto levels = aggregation_suite(records, config);
  for (const auto& level : levels) {
    INFO("level " << level.period_length_days);
    const auto avg = averaged_post_effect(level.distribution.treated_fit, level.distribution);
    CHECK(avg.value < 0.0);
  }
}
