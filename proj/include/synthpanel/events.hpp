#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "synthpanel/calendar.hpp"
#include "synthpanel/csv.hpp"
#include "synthpanel/panel.hpp"

namespace synthpanel {

enum class EventDataset { acled, icews };

struct EventRecord {
  EventDataset dataset = EventDataset::acled;
  std::string country_code;
  Date date;
  std::string event_type;
};

inline constexpr const char* kAcledProtestType = "Riots/protests";
inline constexpr const char* kIcewsProtestType = "Protest";

/// Reads dataset,country_code,date,event_type rows. ICEWS protest labels
/// ("protest", "Protests", ...) are normalized to "Protest".
std::vector<EventRecord> read_events(const csv::Table& table);
std::vector<EventRecord> read_events(const std::filesystem::path& path);

/// Keeps ACLED "Riots/protests" and ICEWS "Protest" records.
std::vector<EventRecord> filter_protest_events(std::span<const EventRecord> records);

/// Countries with at least one record in both datasets, sorted.
std::vector<std::string> countries_in_both(std::span<const EventRecord> records);

/// Per (country, period): (ACLED count + ICEWS count) / 2, restricted to
/// countries present in both datasets, transform applied last. Throws
/// ConfigError when a dataset has no records at all.
PanelSeries event_panel(std::span<const EventRecord> records, const PeriodCalendar& cal,
                        Transform transform, const PanelLayout& layout = {});

}  // namespace synthpanel
