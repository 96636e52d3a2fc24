#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "synthpanel/error.hpp"
#include "synthpanel/events.hpp"

using namespace synthpanel;

namespace {

EventRecord event(EventDataset ds, std::string cc, std::string date) {
  return {ds, std::move(cc), parse_date(date),
          ds == EventDataset::acled ? kAcledProtestType : kIcewsProtestType};
}

}  // namespace

TEST_CASE("fixture events") {
  const auto raw = read_events(std::filesystem::path(SYNTHPANEL_TEST_DATA) / "events_fixture.csv");
  CHECK(raw.size() == 12);
  CHECK(raw[5].event_type == "Protest");
  const auto events = filter_protest_events(raw);
  CHECK(events.size() == 10);
  CHECK(countries_in_both(events) == std::vector<std::string>{"KE", "UG"});

  const auto p = event_panel(events, PeriodCalendar{}, Transform::level);
  CHECK(p.countries() == std::vector<std::string>{"KE", "UG"});
  CHECK(p.periods() == PeriodRange{-2, 0});
  const auto ug = p.country_index("UG");
  const auto ke = p.country_index("KE");
  CHECK(p.at(ug, -2) == 2.0);
  CHECK(p.at(ug, -1) == 0.5);
  CHECK(p.at(ug, 0) == 0.0);
  CHECK(p.at(ke, 0) == 1.5);
}

TEST_CASE("mean of two datasets") {
  std::vector<EventRecord> recs;
  for (int i = 0; i < 3; ++i) recs.push_back(event(EventDataset::acled, "UG", "2018-07-02"));
  recs.push_back(event(EventDataset::icews, "UG", "2018-07-03"));
  recs.push_back(event(EventDataset::acled, "TZ", "2018-07-03"));
  const auto p = event_panel(recs, PeriodCalendar{}, Transform::level);
  CHECK(p.countries() == std::vector<std::string>{"UG"});
  CHECK(p.at(0, 0) == 2.0);
}

TEST_CASE("missing dataset is a configuration error") {
  std::vector<EventRecord> recs = {event(EventDataset::acled, "UG", "2018-07-02")};
  CHECK_THROWS_AS(event_panel(recs, PeriodCalendar{}, Transform::level), ConfigError);
}

TEST_CASE("unknown dataset label") {
  const auto table = csv::parse("dataset,country_code,date,event_type\nGDELT,UG,2018-07-01,Protest\n");
  CHECK_THROWS_AS(read_events(table), DataError);
}

TEST_CASE("random records against a two-pass oracle") {
  std::mt19937_64 rng(23);
  const std::vector<std::string> cs = {"UG", "KE", "TZ", "RW", "BI"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EventRecord> recs;
    for (int i = 0; i < 400; ++i) {
      const auto ds = rng() % 2 ? EventDataset::acled : EventDataset::icews;
      const auto& c = cs[rng() % (ds == EventDataset::icews ? 4 : 5)];
      const Date d = parse_date("2018-05-01") + std::chrono::days(rng() % 90);
      recs.push_back({ds, c, d, ds == EventDataset::acled ? kAcledProtestType : kIcewsProtestType});
    }
    // Pass one: per-dataset counts. Pass two: average then log.
    std::map<std::pair<std::string, std::int64_t>, double> acled, icews;
    std::map<std::string, int> seen;
    for (const auto& r : recs) {
      const auto t = assign_period(r.date, PeriodCalendar{});
      (r.dataset == EventDataset::acled ? acled : icews)[{r.country_code, t}] += 1;
      seen[r.country_code] |= r.dataset == EventDataset::acled ? 1 : 2;
    }
    PanelLayout layout;
    layout.window = PeriodRange{-7, 2};
    const auto p = event_panel(recs, PeriodCalendar{}, Transform::log1p, layout);
    std::vector<std::string> both;
    for (const auto& [c, mask] : seen) {
      if (mask == 3) both.push_back(c);
    }
    CHECK(p.countries() == both);
    for (std::size_t i = 0; i < p.num_countries(); ++i) {
      for (std::int64_t t = -7; t <= 2; ++t) {
        const std::pair key{p.countries()[i], t};
        const double a = acled.count(key) ? acled[key] : 0.0;
        const double b = icews.count(key) ? icews[key] : 0.0;
        CHECK(p.at(i, t) == std::log1p((a + b) / 2));
        const double level = (a + b) / 2;
        CHECK(level <= std::max(a, b));
        CHECK(level >= std::min(a, b) / 2);
      }
    }
    // Record order and dataset interleaving do not matter.
    auto shuffled = recs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(event_panel(shuffled, PeriodCalendar{}, Transform::log1p, layout).values() == p.values());
  }
}
