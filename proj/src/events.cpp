#include "synthpanel/events.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "synthpanel/classify.hpp"
#include "synthpanel/error.hpp"

namespace synthpanel {

std::vector<EventRecord> read_events(const csv::Table& table) {
  const std::size_t c_dataset = table.column("dataset");
  const std::size_t c_country = table.column("country_code");
  const std::size_t c_date = table.column("date");
  const std::size_t c_type = table.column("event_type");
  std::vector<EventRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto where = [&](const std::string& what) {
      return "event CSV line " + std::to_string(row.line) + ": " + what;
    };
    EventRecord rec;
    const std::string dataset = ascii_lower(row.fields[c_dataset]);
    if (dataset == "acled") {
      rec.dataset = EventDataset::acled;
    } else if (dataset == "icews") {
      rec.dataset = EventDataset::icews;
    } else {
      throw DataError(where("unknown dataset '" + row.fields[c_dataset] + "'"));
    }
    rec.country_code = row.fields[c_country];
    if (!is_country_code(rec.country_code)) {
      throw DataError(where("invalid country code '" + rec.country_code + "'"));
    }
    try {
      rec.date = parse_date(row.fields[c_date]);
    } catch (const RangeError& e) {
      throw RangeError(where(e.what()));
    } catch (const DataError& e) {
      throw DataError(where(e.what()));
    }
    rec.event_type = row.fields[c_type];
    if (rec.dataset == EventDataset::icews) {
      const std::string t = ascii_lower(rec.event_type);
      if (t == "protest" || t == "protests") rec.event_type = kIcewsProtestType;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<EventRecord> read_events(const std::filesystem::path& path) {
  return read_events(csv::read_file(path));
}

std::vector<EventRecord> filter_protest_events(std::span<const EventRecord> records) {
  std::vector<EventRecord> out;
  for (const auto& r : records) {
    const char* wanted =
        r.dataset == EventDataset::acled ? kAcledProtestType : kIcewsProtestType;
    if (r.event_type == wanted) out.push_back(r);
  }
  return out;
}

std::vector<std::string> countries_in_both(std::span<const EventRecord> records) {
  std::set<std::string> acled, icews;
  for (const auto& r : records) {
    (r.dataset == EventDataset::acled ? acled : icews).insert(r.country_code);
  }
  std::vector<std::string> both;
  std::set_intersection(acled.begin(), acled.end(), icews.begin(), icews.end(),
                        std::back_inserter(both));
  return both;
}

PanelSeries event_panel(std::span<const EventRecord> records, const PeriodCalendar& cal,
                        Transform transform, const PanelLayout& layout) {
  bool has_acled = false, has_icews = false;
  for (const auto& r : records) {
    (r.dataset == EventDataset::acled ? has_acled : has_icews) = true;
  }
  if (!has_acled || !has_icews) {
    throw ConfigError(std::string("event data has no ") + (has_acled ? "ICEWS" : "ACLED") +
                      " records");
  }
  const std::vector<std::string> both = countries_in_both(records);
  std::map<std::pair<std::string, std::int64_t>, double> sums;
  for (const auto& r : records) {
    if (!std::binary_search(both.begin(), both.end(), r.country_code)) continue;
    sums[{r.country_code, assign_period(r.date, cal)}] += 1.0;
  }
  std::vector<CellCount> cells;
  cells.reserve(sums.size());
  for (const auto& [key, total] : sums) cells.push_back({key.first, key.second, total / 2.0});

  PanelLayout restricted = layout;
  restricted.countries.clear();
  for (const auto& c : layout.countries) {
    if (std::binary_search(both.begin(), both.end(), c)) restricted.countries.push_back(c);
  }
  for (const auto& c : both) restricted.countries.push_back(c);
  return build_panel("events", cells, cal, transform, restricted);
}

}  // namespace synthpanel
