#include "synthpanel/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "synthpanel/error.hpp"

namespace synthpanel {

Transform parse_transform(std::string_view name) {
  if (name == "level") return Transform::level;
  if (name == "log1p") return Transform::log1p;
  throw ConfigError("unknown transform '" + std::string(name) + "' (expected level|log1p)");
}

std::string_view to_string(Transform t) {
  return t == Transform::level ? "level" : "log1p";
}

double TimeSeries::at(std::int64_t t) const {
  if (t < first_period || t > last_period()) {
    throw RangeError("period " + std::to_string(t) + " outside series range [" +
                     std::to_string(first_period) + ", " + std::to_string(last_period()) +
                     "]");
  }
  return values[static_cast<std::size_t>(t - first_period)];
}

PanelSeries::PanelSeries(std::string outcome_name, std::vector<std::string> countries,
                         PeriodRange periods, std::vector<double> values,
                         PeriodCalendar calendar)
    : outcome_name_(std::move(outcome_name)),
      countries_(std::move(countries)),
      periods_(periods),
      values_(std::move(values)),
      calendar_(calendar) {
  if (values_.size() != countries_.size() * periods_.size()) {
    throw DataError("panel '" + outcome_name_ + "': value count does not match " +
                    std::to_string(countries_.size()) + " countries x " +
                    std::to_string(periods_.size()) + " periods");
  }
}

std::optional<std::size_t> PanelSeries::find_country(std::string_view code) const {
  auto it = std::find(countries_.begin(), countries_.end(), code);
  if (it == countries_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - countries_.begin());
}

std::size_t PanelSeries::country_index(std::string_view code) const {
  if (auto idx = find_country(code)) return *idx;
  throw DataError("country '" + std::string(code) + "' not in panel '" + outcome_name_ + "'");
}

double PanelSeries::at(std::size_t country, std::int64_t t) const {
  if (!periods_.contains(t)) {
    throw RangeError("period " + std::to_string(t) + " outside panel range");
  }
  return values_[country * periods_.size() + static_cast<std::size_t>(t - periods_.first)];
}

std::span<const double> PanelSeries::row(std::size_t country) const {
  return std::span<const double>(values_).subspan(country * periods_.size(),
                                                  periods_.size());
}

TimeSeries PanelSeries::series(std::string_view code) const {
  auto r = row(country_index(code));
  return TimeSeries{periods_.first, std::vector<double>(r.begin(), r.end())};
}

PanelSeries PanelSeries::renamed(std::string outcome_name) const {
  PanelSeries copy = *this;
  copy.outcome_name_ = std::move(outcome_name);
  return copy;
}

bool is_country_code(std::string_view code) {
  return code.size() == 2 &&
         std::all_of(code.begin(), code.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

PanelSeries build_panel(std::string outcome_name, std::span<const CellCount> records,
                        const PeriodCalendar& cal, Transform transform,
                        const PanelLayout& layout) {
  std::set<std::string> country_set(layout.countries.begin(), layout.countries.end());
  std::map<std::pair<std::string, std::int64_t>, double> cells;
  std::int64_t lo = 0;
  std::int64_t hi = -1;
  bool any = false;
  for (const auto& rec : records) {
    if (!is_country_code(rec.country)) {
      throw DataError("invalid country code '" + rec.country + "'");
    }
    if (!std::isfinite(rec.count) || rec.count < 0.0) {
      throw DataError("negative or non-finite count for " + rec.country + " period " +
                      std::to_string(rec.period));
    }
    country_set.insert(rec.country);
    if (layout.window && !layout.window->contains(rec.period)) continue;
    auto [it, inserted] = cells.emplace(std::make_pair(rec.country, rec.period), rec.count);
    if (!inserted) {
      throw AggregationError("duplicate cell (" + rec.country + ", " +
                             std::to_string(rec.period) + "); pre-sum records");
    }
    lo = any ? std::min(lo, rec.period) : rec.period;
    hi = any ? std::max(hi, rec.period) : rec.period;
    any = true;
  }
  for (const auto& c : layout.countries) {
    if (!is_country_code(c)) throw DataError("invalid country code '" + c + "'");
  }
  PeriodRange range;
  if (layout.window) {
    range = *layout.window;
  } else if (any) {
    range = PeriodRange{lo, hi};
  } else {
    throw RangeError("panel '" + outcome_name + "': no records and no period window");
  }

  std::vector<std::string> countries(country_set.begin(), country_set.end());
  std::vector<double> values(countries.size() * range.size(), 0.0);
  for (const auto& [key, count] : cells) {
    auto row = static_cast<std::size_t>(
        std::lower_bound(countries.begin(), countries.end(), key.first) - countries.begin());
    values[row * range.size() + static_cast<std::size_t>(key.second - range.first)] = count;
  }
  PanelSeries panel(std::move(outcome_name), std::move(countries), range, std::move(values),
                    cal);
  return transform == Transform::level ? panel : apply_transform(panel, transform);
}

PanelSeries apply_transform(const PanelSeries& panel, Transform transform) {
  if (transform == Transform::level) return panel;
  std::vector<double> out(panel.values().size());
  std::transform(panel.values().begin(), panel.values().end(), out.begin(),
                 [](double v) { return std::log1p(v); });
  return PanelSeries(panel.outcome_name(), panel.countries(), panel.periods(), std::move(out),
                     panel.calendar());
}

PanelSeries resum_panel(const PanelSeries& panel, int target_period_length_days) {
  const int src_len = panel.calendar().period_length_days;
  if (target_period_length_days <= 0 || target_period_length_days % src_len != 0) {
    throw ConfigError("cannot resum " + std::to_string(src_len) + "-day periods into " +
                      std::to_string(target_period_length_days) + "-day periods");
  }
  PeriodCalendar cal = panel.calendar();
  cal.period_length_days = target_period_length_days;
  const PeriodRange src = panel.periods();
  auto target_of = [&](std::int64_t t) {
    return floor_div(t * src_len, target_period_length_days);
  };
  PeriodRange dst{target_of(src.first), target_of(src.last)};
  std::vector<double> values(panel.num_countries() * dst.size(), 0.0);
  for (std::size_t c = 0; c < panel.num_countries(); ++c) {
    auto row = panel.row(c);
    for (std::int64_t t = src.first; t <= src.last; ++t) {
      values[c * dst.size() + static_cast<std::size_t>(target_of(t) - dst.first)] +=
          row[static_cast<std::size_t>(t - src.first)];
    }
  }
  return PanelSeries(panel.outcome_name(), panel.countries(), dst, std::move(values), cal);
}

std::vector<std::string> retained_countries(const PanelSeries& panel,
                                            const SampleRestriction& r) {
  std::vector<std::string> kept;
  if (r.kind == SampleRestriction::Kind::events_intersection) {
    for (const auto& c : panel.countries()) {
      if (std::find(r.countries.begin(), r.countries.end(), c) != r.countries.end()) {
        kept.push_back(c);
      }
    }
    return kept;
  }
  if (!(r.parameter > 0.0 && r.parameter <= 1.0)) {
    throw ConfigError("top-share restriction parameter must lie in (0, 1]");
  }
  const std::size_t n = panel.num_countries();
  if (n == 0) return kept;
  std::vector<double> averages(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    auto row = panel.row(c);
    double sum = 0.0;
    for (double v : row) sum += v;
    averages[c] = row.empty() ? 0.0 : sum / static_cast<double>(row.size());
  }
  // 1e-9 absorbs rounding in parameter * n (0.8 * 10 must give 8, not 9).
  auto quota = static_cast<std::size_t>(std::ceil(r.parameter * static_cast<double>(n) - 1e-9));
  quota = std::clamp<std::size_t>(quota, 1, n);
  std::vector<double> sorted = averages;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double threshold = sorted[quota - 1];
  for (std::size_t c = 0; c < n; ++c) {
    if (averages[c] >= threshold) kept.push_back(panel.countries()[c]);
  }
  return kept;
}

PanelSeries restrict_sample(const PanelSeries& panel, const SampleRestriction& r) {
  auto kept = retained_countries(panel, r);
  if (kept.size() < 3) {
    throw InsufficientDonorsError("sample restriction keeps " + std::to_string(kept.size()) +
                                  " countries; at least 3 required");
  }
  return select_countries(panel, kept);
}

PanelSeries select_countries(const PanelSeries& panel, std::span<const std::string> countries) {
  std::vector<std::size_t> rows;
  for (const auto& c : countries) rows.push_back(panel.country_index(c));
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::vector<std::string> names;
  std::vector<double> values;
  values.reserve(rows.size() * panel.num_periods());
  for (auto idx : rows) {
    names.push_back(panel.countries()[idx]);
    auto row = panel.row(idx);
    values.insert(values.end(), row.begin(), row.end());
  }
  return PanelSeries(panel.outcome_name(), std::move(names), panel.periods(), std::move(values),
                     panel.calendar());
}

TimeSeries normalize_at_reference(const TimeSeries& target, const TimeSeries& comparison,
                                  std::int64_t t_ref) {
  const double shift = target.at(t_ref) - comparison.at(t_ref);
  TimeSeries out = comparison;
  for (double& v : out.values) v += shift;
  // Exact equality at the reference period regardless of rounding in the shift.
  out.values[static_cast<std::size_t>(t_ref - out.first_period)] = target.at(t_ref);
  return out;
}

TimeSeries average_series(const PanelSeries& panel, std::span<const std::string> countries) {
  if (countries.empty()) throw DataError("average of an empty country set");
  TimeSeries out{panel.periods().first, std::vector<double>(panel.num_periods(), 0.0)};
  for (const auto& c : countries) {
    auto row = panel.row(panel.country_index(c));
    for (std::size_t i = 0; i < row.size(); ++i) out.values[i] += row[i];
  }
  for (double& v : out.values) v /= static_cast<double>(countries.size());
  return out;
}

}  // namespace synthpanel
