#include "synthpanel/diffusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "synthpanel/error.hpp"

namespace synthpanel::diffusion {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEmptyPlatform = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct GaussLegendre {
  std::span<const double> weights;
  std::span<const double> nodes;
};

// Half-rules of 6-, 12- and 20-point Gauss-Legendre quadrature on [-1, 1].
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384,
                                       0.4679139345726904};
constexpr std::array<double, 3> kX6 = {0.9324695142031522, 0.6612093864662647,
                                       0.2386191860831970};
constexpr std::array<double, 6> kW12 = {0.04717533638651177, 0.1069393259953183,
                                        0.1600783285433464,  0.2031674267230659,
                                        0.2334925365383547,  0.2491470458134029};
constexpr std::array<double, 6> kX12 = {0.9815606342467191, 0.9041172563704750,
                                        0.7699026741943050, 0.5873179542866171,
                                        0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20 = {
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
    0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
    0.1491729864726037,  0.1527533871307259};
constexpr std::array<double, 10> kX20 = {
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
    0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
    0.2277858511416451, 0.07652652113349733};

GaussLegendre rule_for(double abs_r) {
  if (abs_r < 0.3) return {kW6, kX6};
  if (abs_r < 0.75) return {kW12, kX12};
  return {kW20, kX20};
}

}  // namespace

void PopulationParams::validate() const {
  if (!(sigma_c > 0.0) || !(sigma_w > 0.0) || !std::isfinite(sigma_c) || !std::isfinite(sigma_w)) {
    throw ConfigError("population standard deviations must be positive and finite");
  }
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("correlation must lie in [-1, 1]");
  if (!std::isfinite(mu_c) || !std::isfinite(mu_w)) throw ConfigError("means must be finite");
}

ResponseFunction ResponseFunction::linear(double slope) {
  if (!(slope >= 0.0) || !std::isfinite(slope)) {
    throw ConfigError("linear response slope must be finite and >= 0");
  }
  ResponseFunction f;
  f.form_ = Form::linear;
  f.a_ = slope;
  return f;
}

ResponseFunction ResponseFunction::logistic(double scale, double steepness, double midpoint) {
  if (!(scale > 0.0) || !(steepness > 0.0) || !std::isfinite(scale) ||
      !std::isfinite(steepness) || !std::isfinite(midpoint)) {
    throw ConfigError("logistic response needs positive scale and steepness");
  }
  ResponseFunction f;
  f.form_ = Form::logistic;
  f.a_ = scale;
  f.b_ = steepness;
  f.c_ = midpoint;
  return f;
}

ResponseFunction ResponseFunction::table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2 || points.front() != std::pair<double, double>{0.0, 0.0} ||
      points.back().first != 1.0) {
    throw ConfigError("response table must start at (0, 0) and end at x = 1");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].first > points[i - 1].first) || !(points[i].second > points[i - 1].second)) {
      throw ConfigError("response table must be strictly increasing");
    }
  }
  ResponseFunction f;
  f.form_ = Form::table;
  f.points_ = std::move(points);
  return f;
}

double ResponseFunction::operator()(double x) const {
  switch (form_) {
    case Form::linear:
      return a_ * x;
    case Form::logistic:
      return a_ * (sigmoid(b_ * (x - c_)) - sigmoid(-b_ * c_));
    case Form::table: {
      if (x <= 0.0) return points_.front().second;
      if (x >= 1.0) return points_.back().second;
      auto it = std::upper_bound(points_.begin(), points_.end(), x,
                                 [](double v, const auto& p) { return v < p.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      return lo.second + (hi.second - lo.second) * (x - lo.first) / (hi.first - lo.first);
    }
  }
  return 0.0;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double bivariate_normal_upper(double h, double k, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == inf || k == inf) return 0.0;
  if (h == -inf) return k == -inf ? 1.0 : normal_cdf(-k);
  if (k == -inf) return normal_cdf(-h);
  if (r == 0.0) return normal_cdf(-h) * normal_cdf(-k);
  if (r >= 1.0) return normal_cdf(-std::max(h, k));
  if (r <= -1.0) return std::max(0.0, normal_cdf(-h) - normal_cdf(k));

  const GaussLegendre rule = rule_for(std::abs(r));
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (double side : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + side * rule.nodes[i]));
        bvn += rule.weights[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / kTwoPi + normal_cdf(-h) * normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    const double as = 1.0 - r * r;
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -(bs / as + hk) / 2.0;
    if (asr > -100.0) {
      bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(kTwoPi) * normal_cdf(-b / a);
      bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a /= 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (double side : {-1.0, 1.0}) {
        const double xs = std::pow(a * (1.0 + side * rule.nodes[i]), 2);
        asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          const double rs = std::sqrt(1.0 - xs);
          const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += rule.weights[i] * std::exp(asr) * (sp - ep);
        }
      }
    }
    bvn = (a * sum - bvn) / kTwoPi;
    if (r > 0.0) {
      bvn += normal_cdf(-std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
      bvn = l - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

double rect_prob(double t, double a, const PopulationParams& p) {
  p.validate();
  const double h = (t - p.mu_c) / p.sigma_c;
  const double k = (a - p.mu_w) / p.sigma_w;
  // P(Zc <= h, Zw >= k) = P(-Zc >= -h, Zw >= k), corr(-Zc, Zw) = -rho.
  return bivariate_normal_upper(-h, k, -p.rho);
}

double phi(double x, double q, const ResponseFunction& v, const PopulationParams& p) {
  const double vx = v(x);
  const double threshold = q - vx;
  const double join = normal_cdf(-(threshold - p.mu_w) / p.sigma_w);
  if (!(join > kEmptyPlatform)) {
    throw EmptyPlatformError("no agent joins the platform at x=" + std::to_string(x) +
                             ", q=" + std::to_string(q));
  }
  return std::clamp(rect_prob(vx, threshold, p) / join, 0.0, 1.0);
}

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable:
      return "stable";
    case Stability::tipping:
      return "tipping";
    case Stability::degenerate:
      return "degenerate";
  }
  return "unknown";
}

std::vector<double> EquilibriumSet::stable_points() const {
  std::vector<double> out;
  for (const auto& p : points) {
    if (p.stability == Stability::stable) out.push_back(p.x);
  }
  return out;
}

std::vector<double> EquilibriumSet::tipping_points() const {
  std::vector<double> out;
  for (const auto& p : points) {
    if (p.stability == Stability::tipping) out.push_back(p.x);
  }
  return out;
}

EquilibriumSet find_fixed_points(const std::function<double(double)>& map, int grid_n) {
  if (grid_n < 2) throw ConfigError("fixed-point grid needs at least 2 points");
  constexpr double kGridZero = 1e-12;
  constexpr double kFlat = 1e-8;
  const auto n = static_cast<std::size_t>(grid_n);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  EquilibriumSet set;
  set.grid_x.resize(n);
  set.grid_phi.resize(n, nan);
  std::vector<double> gap(n, nan);
  bool all_valid = true;
  double max_gap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    set.grid_x[i] = x;
    try {
      set.grid_phi[i] = map(x);
      gap[i] = set.grid_phi[i] - x;
      max_gap = std::max(max_gap, std::abs(gap[i]));
    } catch (const EmptyPlatformError&) {
      all_valid = false;
    }
  }
  if (all_valid && max_gap < kFlat) {
    set.degenerate = true;
    for (double x : set.grid_x) set.points.push_back({x, Stability::degenerate});
    return set;
  }

  auto valid = [&](std::size_t i) { return !std::isnan(gap[i]); };
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid(i)) continue;
    if (std::abs(gap[i]) <= kGridZero) {
      // The boundary acts as "from above" at 0 and "below" at 1.
      const bool above_left = i == 0 ? true : (valid(i - 1) && gap[i - 1] > 0.0);
      const bool below_right = i + 1 == n ? true : (valid(i + 1) && gap[i + 1] < 0.0);
      set.points.push_back(
          {set.grid_x[i], above_left && below_right ? Stability::stable : Stability::tipping});
      continue;
    }
    if (i + 1 < n && valid(i + 1) && std::abs(gap[i + 1]) > kGridZero &&
        (gap[i] > 0.0) != (gap[i + 1] > 0.0)) {
      double lo = set.grid_x[i];
      double hi = set.grid_x[i + 1];
      const bool descending = gap[i] > 0.0;
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = map(mid) - mid;
        if (g == 0.0) {
          lo = hi = mid;
          break;
        }
        ((g > 0.0) == descending ? lo : hi) = mid;
      }
      set.points.push_back({0.5 * (lo + hi), descending ? Stability::stable : Stability::tipping});
    }
  }
  return set;
}

EquilibriumSet equilibria(double q, const ResponseFunction& v, const PopulationParams& p,
                          int grid_n) {
  p.validate();
  EquilibriumSet set = find_fixed_points([&](double x) { return phi(x, q, v, p); }, grid_n);
  set.price = q;
  return set;
}

Theorem1Report theorem1_check(double q, double q_prime, const ResponseFunction& v,
                              const PopulationParams& p, int grid_n, double tolerance) {
  p.validate();
  if (!(q_prime > q)) throw ConfigError("theorem check needs q' > q");
  Theorem1Report rep;
  rep.q = q;
  rep.q_prime = q_prime;
  rep.cov_cw = p.cov_cw();
  rep.at_q = equilibria(q, v, p, grid_n);
  rep.at_q_prime = equilibria(q_prime, v, p, grid_n);
  for (std::size_t i = 0; i < rep.at_q.grid_x.size(); ++i) {
    const double a = rep.at_q.grid_phi[i];
    const double b = rep.at_q_prime.grid_phi[i];
    if (std::isnan(a) || std::isnan(b)) continue;
    const double diff = b - a;
    rep.grid_x.push_back(rep.at_q.grid_x[i]);
    rep.difference.push_back(diff);
    double violation = 0.0;
    if (rep.cov_cw < 0.0) {
      violation = -diff;
    } else if (rep.cov_cw > 0.0) {
      violation = diff;
    } else {
      violation = std::abs(diff);
    }
    if (violation > tolerance) {
      rep.holds = false;
      rep.offending_x.push_back(rep.at_q.grid_x[i]);
    }
    rep.max_violation = std::max(rep.max_violation, violation);
  }
  auto pair_shifts = [](const std::vector<double>& before, const std::vector<double>& after) {
    std::vector<double> shifts;
    if (before.size() != after.size()) return shifts;
    for (std::size_t i = 0; i < before.size(); ++i) shifts.push_back(after[i] - before[i]);
    return shifts;
  };
  if (!rep.at_q.degenerate && !rep.at_q_prime.degenerate) {
    rep.stable_shifts = pair_shifts(rep.at_q.stable_points(), rep.at_q_prime.stable_points());
    rep.tipping_shifts = pair_shifts(rep.at_q.tipping_points(), rep.at_q_prime.tipping_points());
  }
  return rep;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

SimulationBranch run_branch(const std::vector<double>& c, const std::vector<double>& w, double q,
                            const ResponseFunction& v, double x0, int max_rounds) {
  SimulationBranch b;
  double x = x0;
  for (int round = 1; round <= max_rounds; ++round) {
    const double vx = v(x);
    const double threshold = q - vx;
    std::size_t joiners = 0;
    std::size_t protesters = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (w[i] >= threshold) {
        ++joiners;
        if (vx > c[i]) ++protesters;
      }
    }
    b.rounds = round;
    if (joiners == 0) {
      b.x = 0.0;
      b.empty_platform = true;
      return b;
    }
    const double next = static_cast<double>(protesters) / static_cast<double>(joiners);
    const bool done = std::abs(next - x) < 1e-6;
    x = next;
    if (done) {
      b.converged = true;
      break;
    }
  }
  b.x = x;
  return b;
}

}  // namespace

SimulationResult agent_simulation(std::size_t n_agents, double q, const ResponseFunction& v,
                                  const PopulationParams& p, std::uint64_t seed, int max_rounds) {
  p.validate();
  if (n_agents < 1000) throw ConfigError("agent simulation needs at least 1000 agents");
  std::vector<double> c(n_agents), w(n_agents);
  const double ortho = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  for (std::size_t i = 0; i < n_agents; ++i) {
    // Per-agent stream: draws depend only on (seed, i).
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(i) + 1));
    const double u1 = unit_open(splitmix64(state));
    const double u2 = unit_open(splitmix64(state));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double z1 = radius * std::cos(kTwoPi * u2);
    const double z2 = radius * std::sin(kTwoPi * u2);
    c[i] = p.mu_c + p.sigma_c * z1;
    w[i] = p.mu_w + p.sigma_w * (p.rho * z1 + ortho * z2);
  }
  return {run_branch(c, w, q, v, 0.0, max_rounds), run_branch(c, w, q, v, 1.0, max_rounds)};
}

}  // namespace synthpanel::diffusion
