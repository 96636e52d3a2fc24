#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthpanel/calendar.hpp"

namespace synthpanel {

enum class Transform { level, log1p };

Transform parse_transform(std::string_view name);
std::string_view to_string(Transform t);

/// Inclusive range of period indices.
struct PeriodRange {
  std::int64_t first = 0;
  std::int64_t last = -1;

  std::size_t size() const {
    return last < first ? 0 : static_cast<std::size_t>(last - first + 1);
  }
  bool contains(std::int64_t t) const { return t >= first && t <= last; }
  bool operator==(const PeriodRange&) const = default;
};

/// One series over consecutive periods starting at `first_period`.
struct TimeSeries {
  std::int64_t first_period = 0;
  std::vector<double> values;

  std::int64_t last_period() const {
    return first_period + static_cast<std::int64_t>(values.size()) - 1;
  }
  double at(std::int64_t t) const;
};

/// Dense country x period matrix of one outcome. Rows follow `countries()`;
/// missing cells do not exist (absent counts are stored as zero).
class PanelSeries {
 public:
  PanelSeries() = default;
  PanelSeries(std::string outcome_name, std::vector<std::string> countries,
              PeriodRange periods, std::vector<double> values,
              PeriodCalendar calendar = {});

  const std::string& outcome_name() const { return outcome_name_; }
  const std::vector<std::string>& countries() const { return countries_; }
  PeriodRange periods() const { return periods_; }
  const PeriodCalendar& calendar() const { return calendar_; }
  std::size_t num_countries() const { return countries_.size(); }
  std::size_t num_periods() const { return periods_.size(); }

  std::optional<std::size_t> find_country(std::string_view code) const;
  /// Throws DataError when the country is not in the panel.
  std::size_t country_index(std::string_view code) const;

  double at(std::size_t country, std::int64_t t) const;
  std::span<const double> row(std::size_t country) const;
  TimeSeries series(std::string_view code) const;
  const std::vector<double>& values() const { return values_; }

  PanelSeries renamed(std::string outcome_name) const;

 private:
  std::string outcome_name_;
  std::vector<std::string> countries_;
  PeriodRange periods_;
  std::vector<double> values_;
  PeriodCalendar calendar_;
};

/// Pre-summed count for one (country, period) cell.
struct CellCount {
  std::string country;
  std::int64_t period = 0;
  double count = 0.0;
};

struct PanelLayout {
  /// Clip window. When absent the range spans the records.
  std::optional<PeriodRange> window;
  /// Countries that get a row even without records.
  std::vector<std::string> countries;
};

bool is_country_code(std::string_view code);

/// Dense panel from cell counts. Countries are sorted; records outside the
/// window are dropped but their countries keep a row. Duplicate cells throw
/// AggregationError, negative or non-finite counts throw DataError.
PanelSeries build_panel(std::string outcome_name, std::span<const CellCount> records,
                        const PeriodCalendar& cal, Transform transform,
                        const PanelLayout& layout = {});

PanelSeries apply_transform(const PanelSeries& panel, Transform transform);

/// Sums a level panel into longer periods sharing the same anchor. The target
/// length must be a multiple of the source length. Blocks only partially
/// covered by the source window hold partial sums.
PanelSeries resum_panel(const PanelSeries& panel, int target_period_length_days);

struct SampleRestriction {
  enum class Kind { twitter_top_share, events_intersection };
  Kind kind = Kind::twitter_top_share;
  /// Share of countries kept, in (0, 1]; used by twitter_top_share.
  double parameter = 0.8;
  /// Countries present in every event dataset; used by events_intersection.
  std::vector<std::string> countries;
};

/// Countries retained by the restriction, in panel order. For top-share the
/// panel must hold per-period unique-user levels; a country is kept when its
/// period average reaches the average of the ceil(parameter * n)-th ranked
/// country (ties kept).
std::vector<std::string> retained_countries(const PanelSeries& panel,
                                            const SampleRestriction& r);

/// Throws InsufficientDonorsError when fewer than 3 countries survive.
PanelSeries restrict_sample(const PanelSeries& panel, const SampleRestriction& r);

/// Subset of rows in panel order. Unknown codes throw DataError.
PanelSeries select_countries(const PanelSeries& panel,
                             std::span<const std::string> countries);

/// Shifts `comparison` so that it equals `target` at period `t_ref`.
TimeSeries normalize_at_reference(const TimeSeries& target, const TimeSeries& comparison,
                                  std::int64_t t_ref = -1);

/// Cross-country mean of the listed rows, period by period.
TimeSeries average_series(const PanelSeries& panel, std::span<const std::string> countries);

}  // namespace synthpanel
