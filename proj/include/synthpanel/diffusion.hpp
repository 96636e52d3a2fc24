#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

namespace synthpanel::diffusion {

/// Joint normal law of protest cost c and platform valuation w. The normals
/// are not truncated at zero.
struct PopulationParams {
  double mu_c = 0.0;
  double mu_w = 0.0;
  double sigma_c = 1.0;
  double sigma_w = 1.0;
  double rho = 0.0;

  double cov_cw() const { return rho * sigma_c * sigma_w; }
  /// Throws ConfigError unless both sigmas are positive and |rho| <= 1.
  void validate() const;
};

/// Value of protesting as a function of participation x in [0, 1], with
/// v(0) = 0 and v nondecreasing.
class ResponseFunction {
 public:
  enum class Form { linear, logistic, table };

  /// v(x) = slope * x. A zero slope gives the flat v = 0 reduction.
  static ResponseFunction linear(double slope);
  /// v(x) = scale * (s(k (x - m)) - s(-k m)) with s the logistic function.
  static ResponseFunction logistic(double scale, double steepness, double midpoint);
  /// Piecewise-linear through (x, v) points starting at (0, 0), ending at
  /// x = 1, strictly increasing in both coordinates.
  static ResponseFunction table(std::vector<std::pair<double, double>> points);

  double operator()(double x) const;
  Form form() const { return form_; }

 private:
  Form form_ = Form::linear;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
  std::vector<std::pair<double, double>> points_;
};

double normal_cdf(double z);

/// P(X > h, Y > k) for standard bivariate normals with correlation r
/// (Genz's Gauss-Legendre scheme, absolute error well below 1e-10).
double bivariate_normal_upper(double h, double k, double r);

/// P(c <= t, w >= a).
double rect_prob(double t, double a, const PopulationParams& p);

/// Share of platform joiners who protest at participation x and price q:
/// P(c <= v(x) | w >= q - v(x)). Throws EmptyPlatformError when the
/// joining probability is at most 1e-12.
double phi(double x, double q, const ResponseFunction& v, const PopulationParams& p);

enum class Stability { stable, tipping, degenerate };

std::string_view to_string(Stability s);

struct FixedPoint {
  double x = 0.0;
  Stability stability = Stability::stable;
};

struct EquilibriumSet {
  double price = 0.0;
  std::vector<FixedPoint> points;  // sorted by x
  std::vector<double> grid_x;
  /// phi on the grid; NaN where the platform is empty.
  std::vector<double> grid_phi;
  bool degenerate = false;

  std::vector<double> stable_points() const;
  std::vector<double> tipping_points() const;
};

/// Fixed points of an arbitrary map on [0, 1]: sign changes of map(x) - x on
/// a uniform grid refined by bisection, plus exact grid zeros. A crossing
/// from above is stable, from below a tipping point. If |map(x) - x| < 1e-8
/// on the whole grid every grid point is reported as degenerate. Grid
/// points where map throws EmptyPlatformError are left out of the domain.
EquilibriumSet find_fixed_points(const std::function<double(double)>& map, int grid_n = 2001);

EquilibriumSet equilibria(double q, const ResponseFunction& v, const PopulationParams& p,
                          int grid_n = 2001);

struct Theorem1Report {
  double q = 0.0;
  double q_prime = 0.0;
  double cov_cw = 0.0;
  bool holds = true;
  /// Largest amount by which phi(x, q') - phi(x, q) has the wrong sign.
  double max_violation = 0.0;
  std::vector<double> offending_x;
  std::vector<double> grid_x;
  std::vector<double> difference;  // phi(x, q') - phi(x, q)
  EquilibriumSet at_q;
  EquilibriumSet at_q_prime;
  /// Paired shifts (x at q' minus x at q); empty when the counts differ.
  std::vector<double> stable_shifts;
  std::vector<double> tipping_shifts;
};

/// Checks phi(x, q') - phi(x, q) >= 0 when cov_cw < 0, <= 0 when cov_cw > 0
/// and == 0 when cov_cw = 0, within `tolerance`, on a uniform grid.
Theorem1Report theorem1_check(double q, double q_prime, const ResponseFunction& v,
                              const PopulationParams& p, int grid_n = 2001,
                              double tolerance = 1e-9);

struct SimulationBranch {
  double x = 0.0;
  int rounds = 0;
  bool converged = false;
  bool empty_platform = false;
};

struct SimulationResult {
  SimulationBranch from_zero;
  SimulationBranch from_one;
};

/// Best-response dynamics for `n_agents` sampled agents. Each round agents
/// with w >= q - v(x) join; joiners with v(x) > c protest; x becomes
/// protesters / joiners. Runs from x = 0 and x = 1 until |dx| < 1e-6.
SimulationResult agent_simulation(std::size_t n_agents, double q, const ResponseFunction& v,
                                  const PopulationParams& p, std::uint64_t seed,
                                  int max_rounds = 500);

}  // namespace synthpanel::diffusion
