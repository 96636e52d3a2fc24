#include "synthpanel/inference.hpp"

#include <algorithm>
#include <cmath>

#include "synthpanel/error.hpp"
#include "synthpanel/parallel.hpp"

namespace synthpanel {

namespace {

double outcome_scale(const PanelSeries& panel, const std::string& treated,
                     const std::vector<std::string>& donors) {
  double scale = 0.0;
  auto scan = [&](const std::string& c) {
    for (double v : panel.row(panel.country_index(c))) scale = std::max(scale, std::abs(v));
  };
  scan(treated);
  for (const auto& d : donors) scan(d);
  return scale > 0.0 ? scale : 1.0;
}

double mean_over(const TimeSeries& s, std::span<const std::int64_t> periods) {
  double sum = 0.0;
  for (auto t : periods) sum += s.at(t);
  return sum / static_cast<double>(periods.size());
}

}  // namespace

PlaceboDistribution placebo_distribution(const PanelSeries& panel, const std::string& treated,
                                         const std::vector<std::string>& donors,
                                         const PlaceboConfig& config) {
  if (donors.size() < config.min_donors) {
    throw DegenerateInferenceError("placebo inference needs at least " +
                                   std::to_string(config.min_donors) + " donors, got " +
                                   std::to_string(donors.size()));
  }
  PlaceboDistribution dist;
  dist.treated = treated;
  dist.donors = donors;

  const SynthProblem treated_problem = make_problem(panel, treated, donors, config.window);
  dist.evaluation_periods = treated_problem.post_periods;
  if (dist.evaluation_periods.empty()) throw RangeError("no post periods to evaluate");

  // Slot 0 is the treated fit, slot j + 1 the placebo for donor j.
  std::vector<SynthFit> fits(donors.size() + 1);
  parallel_for(
      fits.size(),
      [&](std::size_t i) {
        if (i == 0) {
          fits[0] = estimate(treated_problem, config.estimator);
          return;
        }
        std::vector<std::string> pool;
        pool.reserve(donors.size() - 1);
        for (std::size_t j = 0; j < donors.size(); ++j) {
          if (j != i - 1) pool.push_back(donors[j]);
        }
        fits[i] = estimate(make_problem(panel, donors[i - 1], std::move(pool), config.window),
                           config.estimator);
      },
      config.threads);

  dist.treated_fit = std::move(fits[0]);
  dist.sigma_treated = dist.treated_fit.rmse_pre;
  const double floor = config.sigma_floor_relative * outcome_scale(panel, treated, donors);
  for (std::size_t j = 0; j < donors.size(); ++j) {
    SynthFit& fit = fits[j + 1];
    if (fit.rmse_pre < floor) {
      dist.excluded.push_back({donors[j], fit.rmse_pre, "pre-period RMSE below floor"});
      continue;
    }
    PlaceboSeries s;
    s.donor = donors[j];
    s.sigma = fit.rmse_pre;
    s.scale = dist.sigma_treated / fit.rmse_pre;
    s.scaled_effects = fit.effects;
    for (double& v : s.scaled_effects.values) v *= s.scale;
    s.raw_effects = std::move(fit.effects);
    dist.placebos.push_back(std::move(s));
  }
  if (dist.placebos.empty()) {
    throw DegenerateInferenceError("every placebo donor was excluded by the RMSE floor");
  }
  return dist;
}

double quantile(std::span<const double> values, double level) {
  if (values.empty()) throw DegenerateInferenceError("quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PointwiseBand pointwise_band(const PlaceboDistribution& dist, double lower_level,
                             double upper_level) {
  if (dist.placebos.size() < 2) {
    throw DegenerateInferenceError("pointwise band needs at least 2 placebos");
  }
  const TimeSeries& ref = dist.placebos.front().scaled_effects;
  PointwiseBand band;
  band.first_period = ref.first_period;
  band.n_placebos = dist.placebos.size();
  std::vector<double> column(dist.placebos.size());
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    for (std::size_t j = 0; j < dist.placebos.size(); ++j) {
      column[j] = dist.placebos[j].scaled_effects.values[i];
    }
    band.lower.push_back(quantile(column, lower_level));
    band.upper.push_back(quantile(column, upper_level));
  }
  return band;
}

AveragedEffect averaged_post_effect(const SynthFit& fit, const PlaceboDistribution& dist,
                                    double lower_level, double upper_level) {
  if (dist.evaluation_periods.empty()) throw RangeError("no periods to average over");
  AveragedEffect out;
  out.value = mean_over(fit.effects, dist.evaluation_periods);
  std::vector<double> placebo_means;
  placebo_means.reserve(dist.placebos.size());
  for (const auto& p : dist.placebos) {
    placebo_means.push_back(mean_over(p.scaled_effects, dist.evaluation_periods));
  }
  out.n_placebos = placebo_means.size();
  out.band_lower = quantile(placebo_means, lower_level);
  out.band_upper = quantile(placebo_means, upper_level);
  return out;
}

FalsificationResult falsification_run(const PanelSeries& panel, const std::string& treated,
                                      const std::vector<std::string>& donors, int cutoff_days,
                                      PlaceboConfig config) {
  if (cutoff_days <= 0) throw ConfigError("falsification cutoff must be positive");
  const int len = panel.calendar().period_length_days;
  const PeriodRange range = panel.periods();
  // Period t ends at day (t + 1) * len; fitting periods end at or before -cutoff.
  const std::int64_t pseudo = floor_div(-cutoff_days, len);
  if (range.last < -1) throw RangeError("panel ends before the anchor's preceding period");
  if (pseudo - range.first < 2) {
    throw RangeError("falsification needs at least 2 periods ending more than " +
                     std::to_string(cutoff_days) + " days before the anchor; panel starts at t=" +
                     std::to_string(range.first));
  }
  config.window.intervention = pseudo;
  config.window.post_last = -1;
  FalsificationResult out;
  out.pseudo_intervention = pseudo;
  out.distribution = placebo_distribution(panel, treated, donors, config);
  out.averaged = averaged_post_effect(out.distribution.treated_fit, out.distribution);
  return out;
}

PeriodRange DayWindow::periods(int period_length_days, std::int64_t data_last) const {
  if (pre_days <= 0) throw ConfigError("pre-window length must be positive");
  const std::int64_t first = -floor_div(pre_days + period_length_days - 1, period_length_days);
  std::int64_t last = 0;
  if (post_days) {
    if (*post_days <= 0) throw ConfigError("post-window length must be positive");
    last = floor_div(*post_days + period_length_days - 1, period_length_days) - 1;
  } else {
    last = std::max<std::int64_t>(0, data_last);
  }
  return PeriodRange{first, last};
}

int aggregation_stride(int period_length_days) {
  switch (period_length_days) {
    case 1:
      return 10;
    case 7:
      return 4;
    default:
      return 1;
  }
}

PanelSeries users_panel_for_level(std::span<const TweetRecord> records,
                                  const AggregationConfig& config, int period_length_days) {
  PeriodCalendar cal{config.anchor_date, period_length_days};
  cal.validate();
  std::int64_t data_last = 0;
  for (const auto& r : records) data_last = std::max(data_last, assign_period(r.timestamp, cal));
  PanelLayout layout{config.window.periods(period_length_days, data_last), {config.treated}};
  const PanelSeries users = unique_user_panel(records, cal, layout);
  std::vector<std::string> kept =
      retained_countries(users, {SampleRestriction::Kind::twitter_top_share, config.top_share, {}});
  if (std::find(kept.begin(), kept.end(), config.treated) == kept.end()) {
    kept.push_back(config.treated);
  }
  if (kept.size() < 3) {
    throw InsufficientDonorsError("sample restriction keeps " + std::to_string(kept.size()) +
                                  " countries; at least 3 required");
  }
  return apply_transform(select_countries(users, kept), Transform::log1p);
}

std::vector<AggregationLevel> aggregation_suite(std::span<const TweetRecord> records,
                                                const AggregationConfig& config) {
  std::vector<AggregationLevel> out;
  for (int len : config.levels) {
    AggregationLevel level;
    level.period_length_days = len;
    level.pre_stride = aggregation_stride(len);
    level.panel = users_panel_for_level(records, config, len);
    std::vector<std::string> donors;
    for (const auto& c : level.panel.countries()) {
      if (c != config.treated) donors.push_back(c);
    }
    PlaceboConfig pc = config.placebo;
    pc.window.pre_stride = level.pre_stride;
    pc.estimator.optimize_v = level.pre_stride > 1;
    level.distribution = placebo_distribution(level.panel, config.treated, donors, pc);
    level.band = pointwise_band(level.distribution);
    out.push_back(std::move(level));
  }
  return out;
}

}  // namespace synthpanel
