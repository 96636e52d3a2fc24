#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthpanel/panel.hpp"

namespace synthpanel {

/// Which periods a fit uses. Periods before `intervention` are pre periods;
/// the fit uses every `pre_stride`-th of them counting back from
/// intervention - 1, and MSPE is always taken over all of them.
struct EstimationWindow {
  std::int64_t intervention = 0;
  /// Last evaluated period; defaults to the end of the panel.
  std::optional<std::int64_t> post_last;
  int pre_stride = 1;
};

struct SynthProblem {
  std::string treated;
  std::vector<std::string> donors;
  std::vector<std::int64_t> pre_periods;
  std::vector<std::int64_t> all_pre_periods;
  std::vector<std::int64_t> post_periods;
  PanelSeries outcome;

  /// Throws DataError / RangeError / InsufficientDonorsError on violated
  /// preconditions (treated among donors, < 2 donors, empty or foreign
  /// pre periods, non-finite outcome values in used cells).
  void validate() const;
};

SynthProblem make_problem(const PanelSeries& outcome, std::string treated,
                          std::vector<std::string> donors, const EstimationWindow& window = {});

/// Donor weights on the probability simplex, in donor order.
struct WeightVector {
  std::vector<double> w;

  bool is_valid(double tol = 1e-9) const;
};

struct SolverOptions {
  int max_iterations = 50000;
  double gradient_tolerance = 1e-10;
  double improvement_tolerance = 1e-14;
};

/// Minimizes (x0 - X1 w)' V (x0 - X1 w) over the simplex, with x0 the
/// treated pre-period outcomes and X1 the donors'. Without `v_diag`,
/// V = I / |pre|. An explicit `v_diag` must be nonnegative with trace 1.
WeightVector fit_weights(const SynthProblem& problem,
                         std::optional<std::span<const double>> v_diag = std::nullopt,
                         const SolverOptions& options = {});

/// Objective value of `w` under `v_diag` (uniform when empty).
double fit_objective(const SynthProblem& problem, std::span<const double> w,
                     std::span<const double> v_diag = {});

/// Mean squared residual of `w` over all pre periods.
double pre_mspe(const SynthProblem& problem, std::span<const double> w);

struct VOptimization {
  std::vector<double> v_diag;
  WeightVector weights;
  double mspe = 0.0;
  int sweeps = 0;
};

struct VSearchOptions {
  int max_sweeps = 200;
  double min_step = 1e-8;
};

/// Direct search over trace-1 nonnegative diagonals of V minimizing the MSPE
/// over all pre periods of the weights that V induces. Starts at the uniform
/// diagonal and tries +/- 0.5^k on each coordinate, halving the step after a
/// sweep without improvement.
VOptimization optimize_v(const SynthProblem& problem, const VSearchOptions& options = {});

/// Treated minus weighted donors for every panel period.
TimeSeries effect_series(const SynthProblem& problem, const WeightVector& weights);

struct SynthFit {
  WeightVector weights;
  std::vector<double> v_diag;
  TimeSeries effects;
  double rmse_pre = 0.0;
};

struct EstimatorConfig {
  /// Search V when the fit uses a strict subset of the pre periods.
  bool optimize_v = true;
  SolverOptions solver;
  VSearchOptions v_search;
};

SynthFit estimate(const SynthProblem& problem, const EstimatorConfig& config = {});

/// Euclidean projection onto {w >= 0, sum w = 1}.
std::vector<double> project_to_simplex(std::span<const double> v);

}  // namespace synthpanel
