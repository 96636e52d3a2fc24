#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synthpanel/classify.hpp"
#include "synthpanel/panel.hpp"
#include "synthpanel/synth.hpp"

namespace synthpanel {

struct PlaceboConfig {
  EstimatorConfig estimator;
  EstimationWindow window;
  /// Donors with pre-period RMSE below this multiple of the outcome scale
  /// (largest |value| among treated and donors) are excluded.
  double sigma_floor_relative = 1e-12;
  std::size_t min_donors = 5;
  unsigned threads = 0;
};

struct PlaceboSeries {
  std::string donor;
  double sigma = 0.0;
  /// sigma_treated / sigma
  double scale = 1.0;
  TimeSeries raw_effects;
  TimeSeries scaled_effects;
};

struct ExcludedDonor {
  std::string donor;
  double sigma = 0.0;
  std::string reason;
};

/// Treated fit plus one rescaled placebo fit per donor. Each placebo treats
/// the donor as if treated, using the remaining donors (never the treated
/// unit) as its pool.
struct PlaceboDistribution {
  std::string treated;
  std::vector<std::string> donors;
  SynthFit treated_fit;
  double sigma_treated = 0.0;
  std::vector<PlaceboSeries> placebos;
  std::vector<ExcludedDonor> excluded;
  std::vector<std::int64_t> evaluation_periods;
};

PlaceboDistribution placebo_distribution(const PanelSeries& panel, const std::string& treated,
                                         const std::vector<std::string>& donors,
                                         const PlaceboConfig& config = {});

/// Empirical quantile with linear interpolation between order statistics
/// (position (n - 1) * level in the sorted sample).
double quantile(std::span<const double> values, double level);

struct PointwiseBand {
  std::int64_t first_period = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t n_placebos = 0;
};

/// Per-period quantiles of the scaled placebo effects. Throws
/// DegenerateInferenceError with fewer than 2 placebos.
PointwiseBand pointwise_band(const PlaceboDistribution& dist, double lower_level = 0.025,
                             double upper_level = 0.975);

struct AveragedEffect {
  double value = 0.0;
  double band_lower = 0.0;
  double band_upper = 0.0;
  std::size_t n_placebos = 0;
};

/// Mean treated effect over the evaluation periods; the band holds quantiles
/// of the donor-wise means of the scaled placebo series over the same periods.
AveragedEffect averaged_post_effect(const SynthFit& fit, const PlaceboDistribution& dist,
                                    double lower_level = 0.025, double upper_level = 0.975);

struct FalsificationResult {
  std::int64_t pseudo_intervention = 0;
  AveragedEffect averaged;
  PlaceboDistribution distribution;
};

/// Fits on periods that end more than `cutoff_days` before the anchor and
/// averages effects over the held-out periods up to t = -1. Throws
/// RangeError when fewer than 2 fitting periods remain or the panel ends
/// before t = -1.
FalsificationResult falsification_run(const PanelSeries& panel, const std::string& treated,
                                      const std::vector<std::string>& donors,
                                      int cutoff_days = 100, PlaceboConfig config = {});

/// Period range of a window expressed in days around the anchor.
struct DayWindow {
  int pre_days = 100;
  /// Post-anchor days; when absent the window runs to `data_last`.
  std::optional<int> post_days;

  PeriodRange periods(int period_length_days, std::int64_t data_last) const;
};

struct AggregationConfig {
  std::string treated = "UG";
  std::vector<int> levels{1, 7, 10, 28};
  Date anchor_date = PeriodCalendar{}.anchor_date;
  DayWindow window;
  double top_share = 0.8;
  PlaceboConfig placebo;
};

struct AggregationLevel {
  int period_length_days = 10;
  int pre_stride = 1;
  PanelSeries panel;  // log1p unique users, restricted sample
  PlaceboDistribution distribution;
  PointwiseBand band;
};

/// Fitting stride per aggregation level: every 10th daily and every 4th
/// weekly pre period, all periods otherwise.
int aggregation_stride(int period_length_days);

/// Restricted log1p unique-user panel at one aggregation level; the
/// treated country is always kept.
PanelSeries users_panel_for_level(std::span<const TweetRecord> records,
                                  const AggregationConfig& config, int period_length_days);

/// Rebuilds the unique-user outcome at each level and reruns the estimator
/// with placebo inference. Records must already be bot-filtered.
std::vector<AggregationLevel> aggregation_suite(std::span<const TweetRecord> records,
                                                const AggregationConfig& config);

}  // namespace synthpanel
