#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "factor_dgp.hpp"
#include "oracles.hpp"
#include "synthpanel/error.hpp"
#include "synthpanel/synth.hpp"

using namespace synthpanel;

namespace {

// Row 0 is the treated unit "TR"; donors are D0, D1, ...
PanelSeries make_panel(const std::vector<std::vector<double>>& rows, std::int64_t first) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    names.push_back(i == 0 ? "TR" : "D" + std::to_string(i - 1));
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  // PanelSeries rows need not be sorted for estimation.
  return PanelSeries("y", names, {first, first + std::int64_t(rows[0].size()) - 1}, values);
}

std::vector<std::string> donor_names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("D" + std::to_string(i));
  return out;
}

SynthProblem problem_from(const std::vector<std::vector<double>>& rows, int pre,
                          EstimationWindow window = {}) {
  auto panel = make_panel(rows, -pre);
  return make_problem(panel, "TR", donor_names(rows.size() - 1), window);
}

}  // namespace

TEST_CASE("one donor is not enough") {
  CHECK_THROWS_AS(problem_from({{1, 2, 3}, {1, 2, 3}}, 2), InsufficientDonorsError);
}

TEST_CASE("identical donor gets all the weight") {
  const auto p = problem_from({{1, 3, 2, 5}, {1, 3, 2, 9}, {4, 0, 7, 1}}, 3);
  const auto w = fit_weights(p);
  CHECK(w.w[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit_objective(p, w.w) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("midpoint of two donors") {
  const auto p = problem_from({{2, 3, 0}, {1, 5, 0}, {3, 1, 0}}, 2);
  const auto w = fit_weights(p);
  CHECK(w.w[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(w.w[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("objective matches simplex grid search") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 4, m = 6;
    std::vector<std::vector<double>> rows(k + 1, std::vector<double>(m));
    for (auto& r : rows) {
      for (auto& v : r) v = n(rng);
    }
    const auto p = problem_from(rows, m);
    const auto w = fit_weights(p);
    CHECK(w.is_valid());
    std::vector<double> x0(rows[0]);
    std::vector<std::vector<double>> x1(m, std::vector<double>(k));
    for (int t = 0; t < m; ++t) {
      for (int j = 0; j < k; ++j) x1[t][j] = rows[j + 1][t];
    }
    const double grid = testsupport::simplex_grid_min(x0, x1);
    CHECK(fit_objective(p, w.w) <= grid + 1e-8);
    CHECK(fit_objective(p, w.w) >= grid - 1e-3);
  }
}

TEST_CASE("weights beat every vertex and stay on the simplex") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + int(rng() % 15), m = 2 + int(rng() % 20);
    std::vector<std::vector<double>> rows(k + 1, std::vector<double>(m + 3));
    for (auto& r : rows) {
      for (auto& v : r) v = 5 + n(rng);
    }
    const auto p = problem_from(rows, m);
    const auto w = fit_weights(p);
    CHECK(w.is_valid(1e-9));
    const double obj = fit_objective(p, w.w);
    for (int j = 0; j < k; ++j) {
      std::vector<double> e(k, 0.0);
      e[j] = 1.0;
      CHECK(obj <= fit_objective(p, e) + 1e-12);
    }
  }
}

TEST_CASE("donor reordering permutes the weights") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 6, m = 8;
    std::vector<std::vector<double>> rows(k + 1, std::vector<double>(m));
    for (auto& r : rows) {
      for (auto& v : r) v = n(rng);
    }
    auto panel = make_panel(rows, -m);
    auto donors = donor_names(k);
    const auto p1 = make_problem(panel, "TR", donors);
    std::shuffle(donors.begin(), donors.end(), rng);
    const auto p2 = make_problem(panel, "TR", donors);
    const auto w1 = fit_weights(p1);
    const auto w2 = fit_weights(p2);
    CHECK(fit_objective(p1, w1.w) == doctest::Approx(fit_objective(p2, w2.w)).epsilon(1e-10));
    for (int j = 0; j < k; ++j) {
      const auto pos = std::find(p1.donors.begin(), p1.donors.end(), p2.donors[j]) - p1.donors.begin();
      CHECK(w2.w[j] == doctest::Approx(w1.w[pos]).epsilon(1e-6));
    }
  }
}

TEST_CASE("a duplicate donor cannot raise the objective") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 4, m = 7;
    std::vector<std::vector<double>> rows(k + 1, std::vector<double>(m));
    for (auto& r : rows) {
      for (auto& v : r) v = n(rng);
    }
    const auto base = problem_from(rows, m);
    rows.push_back(rows[1 + rng() % k]);
    const auto dup = problem_from(rows, m);
    CHECK(fit_objective(dup, fit_weights(dup).w) <=
          fit_objective(base, fit_weights(base).w) + 1e-12);
  }
}

TEST_CASE("noise-free factor data is fit exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    testsupport::FactorPanelSpec spec;
    spec.noise = 0.0;
    spec.seed = seed;
    const auto panel = testsupport::simulate_factor_panel(spec);
    const auto p = make_problem(panel, "UG", testsupport::donors_excluding(panel, "UG"));
    const auto fit = estimate(p);
    for (std::int64_t t = -spec.pre; t < 0; ++t) CHECK(std::abs(fit.effects.at(t)) < 1e-8);
  }
}

TEST_CASE("non-finite outcomes are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(problem_from({{1, nan, 3}, {1, 2, 3}, {0, 1, 2}}, 2), DataError);
}

TEST_CASE("explicit V must be a trace-one nonnegative diagonal") {
  const auto p = problem_from({{1, 3, 2, 5}, {1, 3, 2, 9}, {4, 0, 7, 1}}, 3);
  const std::vector<double> bad = {0.5, 0.5, 0.5};
  CHECK_THROWS(fit_weights(p, std::span<const double>(bad)));
  const std::vector<double> neg = {1.5, -0.5, 0.0};
  CHECK_THROWS(fit_weights(p, std::span<const double>(neg)));
}

TEST_CASE("strided pre periods count back from t = -1") {
  testsupport::FactorPanelSpec spec;
  const auto panel = testsupport::simulate_factor_panel(spec);
  EstimationWindow window;
  window.pre_stride = 4;
  const auto p = make_problem(panel, "UG", testsupport::donors_excluding(panel, "UG"), window);
  CHECK(p.pre_periods == std::vector<std::int64_t>{-17, -13, -9, -5, -1});
  CHECK(p.all_pre_periods.size() == 20);
  CHECK(p.post_periods.size() == 10);
}

TEST_CASE("V search is the identity when fit and MSPE periods coincide") {
  testsupport::FactorPanelSpec spec;
  spec.donors = 6;
  spec.pre = 8;
  spec.noise = 0.05;
  const auto panel = testsupport::simulate_factor_panel(spec);
  const auto p = make_problem(panel, "UG", testsupport::donors_excluding(panel, "UG"));
  const auto r = optimize_v(p);
  for (double v : r.v_diag) CHECK(v == doctest::Approx(1.0 / 8).epsilon(1e-12));
}

TEST_CASE("V search never loses to uniform and shrinks a noisy period") {
  int shrunk = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    testsupport::FactorPanelSpec spec;
    spec.seed = 100 + trial;
    spec.donors = 8;
    spec.pre = 24;
    spec.noise = 0.01;
    auto panel = testsupport::simulate_factor_panel(spec);
    // Corrupt the treated unit at one fitted period.
    auto values = panel.values();
    const auto ug = panel.country_index("UG");
    const std::int64_t noisy = -9;
    values[ug * panel.num_periods() + std::size_t(noisy - panel.periods().first)] += 1.5;
    panel = PanelSeries("y", panel.countries(), panel.periods(), values);

    EstimationWindow window;
    window.pre_stride = 4;
    const auto p = make_problem(panel, "UG", testsupport::donors_excluding(panel, "UG"), window);
    REQUIRE(std::find(p.pre_periods.begin(), p.pre_periods.end(), noisy) != p.pre_periods.end());
    const auto r = optimize_v(p);
    const auto uniform = fit_weights(p);
    CHECK(r.mspe <= pre_mspe(p, uniform.w));
    CHECK(r.mspe == doctest::Approx(pre_mspe(p, r.weights.w)).epsilon(1e-12));
    CHECK(std::accumulate(r.v_diag.begin(), r.v_diag.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const auto idx = std::find(p.pre_periods.begin(), p.pre_periods.end(), noisy) - p.pre_periods.begin();
    if (r.v_diag[idx] < 1.0 / p.pre_periods.size()) ++shrunk;
  }
  CHECK(shrunk >= 9);
}

TEST_CASE("estimate uses V search only for strided fits") {
  testsupport::FactorPanelSpec spec;
  const auto panel = testsupport::simulate_factor_panel(spec);
  const auto donors = testsupport::donors_excluding(panel, "UG");
  const auto full = estimate(make_problem(panel, "UG", donors));
  for (double v : full.v_diag) CHECK(v == doctest::Approx(1.0 / 20).epsilon(1e-15));
  EstimationWindow window;
  window.pre_stride = 10;
  const auto p = make_problem(panel, "UG", donors, window);
  const auto strided = estimate(p);
  CHECK(strided.v_diag.size() == 2);
  CHECK(strided.rmse_pre == doctest::Approx(std::sqrt(pre_mspe(p, strided.weights.w))).epsilon(1e-12));
}

TEST_CASE("effect series") {
  SUBCASE("perfect pre fit") {
    const auto p = problem_from({{2, 3, 7}, {1, 5, 0}, {3, 1, 0}}, 2);
    const auto fit = estimate(p);
    CHECK(std::abs(fit.effects.at(-2)) < 1e-9);
    CHECK(std::abs(fit.effects.at(-1)) < 1e-9);
    CHECK(fit.effects.at(0) == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(fit.rmse_pre < 1e-9);
  }
  SUBCASE("donor shift moves post effects the other way") {
    std::vector<std::vector<double>> rows = {{2, 3, 4, 4}, {1, 5, 2, 2}, {3, 1, 3, 1}};
    const auto p = problem_from(rows, 2);
    const auto w = fit_weights(p);
    const auto base = effect_series(p, w);
    for (std::size_t j = 1; j < rows.size(); ++j) {
      rows[j][2] += 0.75;
      rows[j][3] += 0.75;
    }
    const auto shifted = effect_series(problem_from(rows, 2), w);
    CHECK(shifted.at(0) == doctest::Approx(base.at(0) - 0.75).epsilon(1e-12));
    CHECK(shifted.at(1) == doctest::Approx(base.at(1) - 0.75).epsilon(1e-12));
    CHECK(shifted.at(-1) == base.at(-1));
  }
  SUBCASE("matches direct recomputation") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    std::vector<std::vector<double>> rows(6, std::vector<double>(12));
    for (auto& r : rows) {
      for (auto& v : r) v = n(rng);
    }
    const auto p = problem_from(rows, 8);
    const auto w = fit_weights(p);
    const auto eff = effect_series(p, w);
    CHECK(eff.first_period == -8);
    REQUIRE(eff.values.size() == 12);
    for (int t = 0; t < 12; ++t) {
      double synth = 0.0;
      for (int j = 0; j < 5; ++j) synth += w.w[j] * rows[j + 1][t];
      CHECK(eff.values[t] == doctest::Approx(rows[0][t] - synth).epsilon(1e-14));
    }
  }
}

TEST_CASE("simplex projection satisfies the variational inequality") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 8);
    for (auto& x : v) x = n(rng);
    const auto p = project_to_simplex(v);
    CHECK(WeightVector{p}.is_valid(1e-12));
    for (int probe = 0; probe < 20; ++probe) {
      std::vector<double> q(v.size());
      double s = 0;
      for (auto& x : q) s += (x = std::abs(n(rng)));
      double inner = 0;
      for (std::size_t i = 0; i < v.size(); ++i) inner += (v[i] - p[i]) * (q[i] / s - p[i]);
      CHECK(inner <= 1e-12);
    }
  }
}
