#include "synthpanel/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "synthpanel/error.hpp"

namespace synthpanel {

namespace {

// Treated pre-period outcomes and donor matrix restricted to a period list.
struct DesignMatrix {
  Eigen::VectorXd x0;
  Eigen::MatrixXd x1;  // periods x donors
};

DesignMatrix design(const SynthProblem& p, std::span<const std::int64_t> periods) {
  const PanelSeries& y = p.outcome;
  const std::size_t treated = y.country_index(p.treated);
  DesignMatrix d{Eigen::VectorXd(static_cast<Eigen::Index>(periods.size())),
                 Eigen::MatrixXd(static_cast<Eigen::Index>(periods.size()),
                                 static_cast<Eigen::Index>(p.donors.size()))};
  std::vector<std::size_t> rows;
  for (const auto& donor : p.donors) rows.push_back(y.country_index(donor));
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d.x0(r) = y.at(treated, periods[i]);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      d.x1(r, static_cast<Eigen::Index>(j)) = y.at(rows[j], periods[i]);
    }
  }
  return d;
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd project(const Eigen::VectorXd& v) {
  return to_eigen(project_to_simplex(std::span<const double>(v.data(), v.size())));
}

// f(w) = sum_i v_i (x0 - X1 w)_i^2, evaluated through residuals so that
// near-perfect fits keep their relative precision.
class WeightedLeastSquares {
 public:
  WeightedLeastSquares(DesignMatrix d, Eigen::VectorXd v) : d_(std::move(d)), v_(std::move(v)) {
    gram_ = d_.x1.transpose() * v_.asDiagonal() * d_.x1;
    cross_ = d_.x1.transpose() * v_.asDiagonal() * d_.x0;
  }

  Eigen::Index dim() const { return d_.x1.cols(); }

  double value(const Eigen::VectorXd& w) const {
    Eigen::VectorXd r = d_.x0 - d_.x1 * w;
    return r.cwiseProduct(r).dot(v_);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
    Eigen::VectorXd r = d_.x0 - d_.x1 * w;
    return -2.0 * (d_.x1.transpose() * v_.cwiseProduct(r));
  }

  double lipschitz() const {
    if (gram_.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
    return 2.0 * std::max(0.0, es.eigenvalues().maxCoeff());
  }

  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& cross() const { return cross_; }

 private:
  DesignMatrix d_;
  Eigen::VectorXd v_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd cross_;
};

double gradient_mapping_norm(const WeightedLeastSquares& f, const Eigen::VectorXd& w,
                             double lip) {
  const Eigen::VectorXd mapped = project(w - f.gradient(w) / lip);
  return lip * (w - mapped).norm();
}

// Accelerated projected gradient with function-value restart. Runs at most
// `budget` iterations from `w`; returns true once a stopping rule fires.
bool projected_gradient(const WeightedLeastSquares& f, const SolverOptions& opt, double lip,
                        int budget, Eigen::VectorXd& w) {
  const double step = 1.0 / lip;
  Eigen::VectorXd y = w;
  double momentum = 1.0;
  double fw = f.value(w);
  for (int it = 0; it < budget; ++it) {
    Eigen::VectorXd next = project(y - step * f.gradient(y));
    double fnext = f.value(next);
    if (fnext > fw) {
      y = w;
      momentum = 1.0;
      next = project(w - step * f.gradient(w));
      fnext = f.value(next);
    }
    const double improvement = fw - fnext;
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = next + ((momentum - 1.0) / next_momentum) * (next - w);
    momentum = next_momentum;
    w = next;
    fw = fnext;

    if (gradient_mapping_norm(f, w, lip) < opt.gradient_tolerance) return true;
    if (improvement >= 0.0 && improvement < opt.improvement_tolerance) return true;
  }
  return false;
}

// Primal active-set refinement on the support found by the gradient phase.
// Returns nullopt if an intermediate KKT system is inconsistent.
std::optional<Eigen::VectorXd> active_set_polish(const WeightedLeastSquares& f,
                                                 Eigen::VectorXd w) {
  const Eigen::Index k = f.dim();
  const Eigen::MatrixXd& gram = f.gram();
  const Eigen::VectorXd& cross = f.cross();
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());

  std::vector<bool> fixed(static_cast<std::size_t>(k), false);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (w(j) <= 1e-12) {
      w(j) = 0.0;
      fixed[static_cast<std::size_t>(j)] = true;
    }
  }
  w /= w.sum();

  const int max_iter = 10 * static_cast<int>(k) + 50;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!fixed[static_cast<std::size_t>(j)]) free.push_back(j);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
    Eigen::VectorXd rhs(nf + 1);
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = gram(free[a], free[b]);
      kkt(a, nf) = 1.0;
      kkt(nf, a) = 1.0;
      rhs(a) = cross(free[a]);
    }
    rhs(nf) = 1.0;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
    Eigen::VectorXd sol = cod.solve(rhs);
    if ((kkt * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm()) * scale) return std::nullopt;
    const double multiplier = sol(nf);

    Eigen::VectorXd dir(nf);
    for (Eigen::Index a = 0; a < nf; ++a) dir(a) = sol(a) - w(free[a]);

    if (dir.cwiseAbs().maxCoeff() <= 1e-15) {
      // Stationary on the current face: release the most violated bound.
      Eigen::VectorXd grad = gram * w - cross;
      double worst = -1e-12 * scale;
      Eigen::Index release = -1;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (!fixed[static_cast<std::size_t>(j)]) continue;
        const double mu = grad(j) + multiplier;
        if (mu < worst) {
          worst = mu;
          release = j;
        }
      }
      if (release < 0) return w;
      fixed[static_cast<std::size_t>(release)] = false;
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < nf; ++a) {
      if (dir(a) < 0.0) {
        const double ratio = -w(free[a]) / dir(a);
        if (ratio < alpha) {
          alpha = ratio;
          blocking = free[a];
        }
      }
    }
    for (Eigen::Index a = 0; a < nf; ++a) w(free[a]) += alpha * dir(a);
    if (blocking >= 0) {
      w(blocking) = 0.0;
      fixed[static_cast<std::size_t>(blocking)] = true;
    }
  }
  return w;
}

Eigen::VectorXd normalized_weights(std::span<const double> v_diag, std::size_t m) {
  if (v_diag.empty()) return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
  return to_eigen(v_diag);
}

void check_v_diag(std::span<const double> v, std::size_t m) {
  if (v.size() != m) {
    throw DataError("V diagonal has " + std::to_string(v.size()) + " entries for " +
                    std::to_string(m) + " fitting periods");
  }
  double trace = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw DataError("V diagonal entries must be >= 0");
    trace += x;
  }
  if (std::abs(trace - 1.0) > 1e-9) throw DataError("V diagonal must have trace 1");
}

}  // namespace

void SynthProblem::validate() const {
  if (std::find(donors.begin(), donors.end(), treated) != donors.end()) {
    throw DataError("treated unit '" + treated + "' is listed as a donor");
  }
  if (donors.size() < 2) {
    throw InsufficientDonorsError("synthetic control needs at least 2 donors, got " +
                                  std::to_string(donors.size()));
  }
  if (std::set<std::string>(donors.begin(), donors.end()).size() != donors.size()) {
    throw DataError("donor list contains duplicates");
  }
  if (pre_periods.empty()) throw RangeError("no fitting periods");
  std::set<std::int64_t> all(all_pre_periods.begin(), all_pre_periods.end());
  for (auto t : pre_periods) {
    if (!all.count(t)) throw RangeError("fitting period " + std::to_string(t) + " is not a pre period");
  }
  const PeriodRange range = outcome.periods();
  std::vector<std::size_t> rows{outcome.country_index(treated)};
  for (const auto& d : donors) rows.push_back(outcome.country_index(d));
  auto check_periods = [&](const std::vector<std::int64_t>& ts) {
    for (auto t : ts) {
      if (!range.contains(t)) throw RangeError("period " + std::to_string(t) + " outside panel");
    }
  };
  check_periods(all_pre_periods);
  check_periods(post_periods);
  for (auto r : rows) {
    for (double v : outcome.row(r)) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite outcome value for '" + outcome.countries()[r] + "'");
      }
    }
  }
}

SynthProblem make_problem(const PanelSeries& outcome, std::string treated,
                          std::vector<std::string> donors, const EstimationWindow& window) {
  if (window.pre_stride < 1) throw ConfigError("pre-period stride must be >= 1");
  SynthProblem p;
  p.treated = std::move(treated);
  p.donors = std::move(donors);
  p.outcome = outcome;
  const PeriodRange range = outcome.periods();
  const std::int64_t last = window.post_last.value_or(range.last);
  if (last > range.last) throw RangeError("evaluation window extends past the panel");
  for (std::int64_t t = range.first; t < window.intervention && t <= range.last; ++t) {
    p.all_pre_periods.push_back(t);
  }
  for (std::int64_t t = window.intervention - 1; t >= range.first; t -= window.pre_stride) {
    p.pre_periods.push_back(t);
  }
  std::reverse(p.pre_periods.begin(), p.pre_periods.end());
  for (std::int64_t t = std::max(window.intervention, range.first); t <= last; ++t) {
    p.post_periods.push_back(t);
  }
  p.validate();
  return p;
}

bool WeightVector::is_valid(double tol) const {
  if (w.empty()) return false;
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
  return out;
}

WeightVector fit_weights(const SynthProblem& problem, std::optional<std::span<const double>> v_diag,
                         const SolverOptions& options) {
  problem.validate();
  const std::size_t m = problem.pre_periods.size();
  if (v_diag) check_v_diag(*v_diag, m);
  WeightedLeastSquares f(design(problem, problem.pre_periods),
                         normalized_weights(v_diag.value_or(std::span<const double>{}), m));

  // Seeded at the uniform weights. Gradient chunks alternate with an exact
  // active-set solve on the current support, which usually settles the
  // problem long before the gradient phase alone would.
  const Eigen::Index k = f.dim();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  const double lip = f.lipschitz();
  if (lip > 0.0) {
    int used = 0;
    int chunk = 32;
    while (used < options.max_iterations) {
      const int budget = std::min(chunk, options.max_iterations - used);
      const bool converged = projected_gradient(f, options, lip, budget, w);
      used += budget;
      if (auto polished = active_set_polish(f, w)) {
        Eigen::VectorXd candidate = polished->cwiseMax(0.0);
        candidate /= candidate.sum();
        if (f.value(candidate) <= f.value(w)) {
          w = candidate;
          if (gradient_mapping_norm(f, w, lip) < options.gradient_tolerance) break;
        }
      }
      if (converged) break;
      chunk *= 2;
    }
  }
  // A vertex can never beat the optimum; this only guards solver failure.
  double best = f.value(w);
  for (Eigen::Index j = 0; j < f.dim(); ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(f.dim(), j);
    const double fe = f.value(e);
    if (fe < best) {
      best = fe;
      w = e;
    }
  }
  w = w.cwiseMax(0.0);
  w /= w.sum();
  return WeightVector{to_std(w)};
}

double fit_objective(const SynthProblem& problem, std::span<const double> w,
                     std::span<const double> v_diag) {
  const std::size_t m = problem.pre_periods.size();
  WeightedLeastSquares f(design(problem, problem.pre_periods), normalized_weights(v_diag, m));
  return f.value(to_eigen(w));
}

double pre_mspe(const SynthProblem& problem, std::span<const double> w) {
  const DesignMatrix d = design(problem, problem.all_pre_periods);
  if (d.x0.size() == 0) throw RangeError("no pre periods for MSPE");
  const Eigen::VectorXd r = d.x0 - d.x1 * to_eigen(w);
  return r.squaredNorm() / static_cast<double>(r.size());
}

VOptimization optimize_v(const SynthProblem& problem, const VSearchOptions& options) {
  problem.validate();
  const std::size_t m = problem.pre_periods.size();
  std::vector<double> v(m, 1.0 / static_cast<double>(m));
  VOptimization best{v, fit_weights(problem, std::span<const double>(v)), 0.0, 0};
  best.mspe = pre_mspe(problem, best.weights.w);

  int exponent = 1;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const double step = std::ldexp(1.0, -exponent);
    if (step < options.min_step) break;
    best.sweeps = sweep + 1;
    bool improved = false;
    for (std::size_t i = 0; i < m; ++i) {
      for (double sign : {1.0, -1.0}) {
        std::vector<double> cand = best.v_diag;
        cand[i] = std::max(0.0, cand[i] + sign * step);
        const double trace = std::accumulate(cand.begin(), cand.end(), 0.0);
        if (!(trace > 0.0)) continue;
        for (double& x : cand) x /= trace;
        WeightVector w = fit_weights(problem, std::span<const double>(cand));
        const double mspe = pre_mspe(problem, w.w);
        // Relative margin keeps solver round-off from registering as progress.
        if (mspe < best.mspe * (1.0 - 1e-10) - 1e-300) {
          best.v_diag = std::move(cand);
          best.weights = std::move(w);
          best.mspe = mspe;
          improved = true;
        }
      }
    }
    if (!improved) ++exponent;
  }
  return best;
}

TimeSeries effect_series(const SynthProblem& problem, const WeightVector& weights) {
  const PanelSeries& y = problem.outcome;
  if (weights.w.size() != problem.donors.size()) {
    throw DataError("weight vector length does not match donor count");
  }
  const std::size_t treated = y.country_index(problem.treated);
  TimeSeries out{y.periods().first, std::vector<double>(y.num_periods())};
  auto base = y.row(treated);
  std::copy(base.begin(), base.end(), out.values.begin());
  for (std::size_t j = 0; j < problem.donors.size(); ++j) {
    auto row = y.row(y.country_index(problem.donors[j]));
    for (std::size_t i = 0; i < row.size(); ++i) out.values[i] -= weights.w[j] * row[i];
  }
  return out;
}

SynthFit estimate(const SynthProblem& problem, const EstimatorConfig& config) {
  problem.validate();
  SynthFit fit;
  const bool subsampled = problem.pre_periods.size() < problem.all_pre_periods.size();
  if (subsampled && config.optimize_v) {
    VOptimization vo = optimize_v(problem, config.v_search);
    fit.weights = std::move(vo.weights);
    fit.v_diag = std::move(vo.v_diag);
  } else {
    fit.weights = fit_weights(problem, std::nullopt, config.solver);
    fit.v_diag.assign(problem.pre_periods.size(),
                      1.0 / static_cast<double>(problem.pre_periods.size()));
  }
  fit.effects = effect_series(problem, fit.weights);
  fit.rmse_pre = std::sqrt(pre_mspe(problem, fit.weights.w));
  return fit;
}

}  // namespace synthpanel
