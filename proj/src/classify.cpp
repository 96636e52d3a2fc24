#include "synthpanel/classify.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "synthpanel/error.hpp"

namespace synthpanel {

namespace {

const std::vector<std::string>& builtin_phrases(LexiconKind kind) {
  static const std::vector<std::string> collective = {
      "protest",        "rally",          "rallies",
      " freedom of assembly ", " freedom of expression ", " riot",
      "march against",  "march with",     "inciting violence",
      "unlawful assembly", "civil unrest", "demonstration",
      "i stand with",   "take to the street", "taking to the street",
      "boycott"};
  static const std::vector<std::string> political = {
      "supreme court", "legislator",   "election",        "president",
      "vote",          "ballot",       "administracao",   "presidente",
      " mp ",          "constitution", "partisan",        " mps ",
      "administration", "dictator",    "gouvernement",    "citizen",
      "republic",      "political party", "political parties", "parlement",
      "parliament",    "government",   " law ",           "constituent",
      "governo",       "democrac",     "politic",         "amministrazione",
      "military",      "constituency", "parlamento"};
  static const std::vector<std::string> bot = {"weather", "4:20",   "job",
                                               "career",  "hire",   "hiring"};
  static const std::vector<std::string> apple = {"ios", "ipad", "iphone"};
  static const std::vector<std::string> student = {
      "university", "college", "universite", "universita",
      "universidade", "faculdade", "student"};
  switch (kind) {
    case LexiconKind::collective:
      return collective;
    case LexiconKind::political:
      return political;
    case LexiconKind::bot:
      return bot;
    case LexiconKind::apple_source:
      return apple;
    case LexiconKind::student:
      return student;
  }
  return collective;
}

std::int64_t parse_count(const std::string& field, std::size_t line) {
  if (field.empty()) {
    throw DataError("tweet CSV line " + std::to_string(line) + ": statuses_count missing");
  }
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || value < 0) {
    throw DataError("tweet CSV line " + std::to_string(line) +
                    ": statuses_count is not a nonnegative integer: '" + field + "'");
  }
  return value;
}

bool contains_lower(const std::string& lowered, const PhraseLexicon& lexicon) {
  return std::any_of(lexicon.phrases.begin(), lexicon.phrases.end(),
                     [&](const std::string& p) { return lowered.find(p) != std::string::npos; });
}

}  // namespace

std::vector<TweetRecord> read_tweets(const csv::Table& table) {
  std::size_t idx[std::size(kTweetColumns)];
  for (std::size_t i = 0; i < std::size(kTweetColumns); ++i) {
    idx[i] = table.column(kTweetColumns[i]);
  }
  std::vector<TweetRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    auto where = [&](std::string_view what) {
      return "tweet CSV line " + std::to_string(row.line) + ": " + std::string(what);
    };
    TweetRecord rec;
    rec.tweet_id = f[idx[0]];
    rec.user_id = f[idx[1]];
    if (rec.tweet_id.empty() || rec.user_id.empty()) throw DataError(where("empty id"));
    try {
      rec.timestamp = parse_timestamp(f[idx[2]]);
      rec.user_created_at = parse_timestamp(f[idx[6]]);
    } catch (const RangeError& e) {
      throw RangeError(where(e.what()));
    } catch (const DataError& e) {
      throw DataError(where(e.what()));
    }
    rec.country_code = f[idx[3]];
    if (!is_country_code(rec.country_code)) {
      throw DataError(where("country_code must be two uppercase ASCII letters, got '" +
                            rec.country_code + "'"));
    }
    rec.text = f[idx[4]];
    rec.source = f[idx[5]];
    rec.statuses_count = parse_count(f[idx[7]], row.line);
    rec.user_description = f[idx[8]];
    rec.user_location = f[idx[9]];
    rec.user_lang = f[idx[10]];
    rec.tweet_lang = f[idx[11]];
    if (rec.timestamp < rec.user_created_at) {
      throw DataError(where("timestamp precedes user_created_at"));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<TweetRecord> read_tweets(const std::filesystem::path& path) {
  return read_tweets(csv::read_file(path));
}

std::string_view to_string(LexiconKind kind) {
  switch (kind) {
    case LexiconKind::collective:
      return "collective";
    case LexiconKind::political:
      return "political";
    case LexiconKind::bot:
      return "bot";
    case LexiconKind::apple_source:
      return "apple_source";
    case LexiconKind::student:
      return "student";
  }
  return "unknown";
}

PhraseLexicon default_lexicon(LexiconKind kind) { return {kind, builtin_phrases(kind)}; }

PhraseLexicon load_lexicon(const std::filesystem::path& path, LexiconKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open lexicon '" + path.string() + "'");
  PhraseLexicon lex{kind, {}};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lex.phrases.push_back(line);
  }
  return lex;
}

LexiconSet LexiconSet::defaults() {
  return {default_lexicon(LexiconKind::collective), default_lexicon(LexiconKind::political),
          default_lexicon(LexiconKind::bot), default_lexicon(LexiconKind::apple_source),
          default_lexicon(LexiconKind::student)};
}

LexiconSet LexiconSet::load(const std::filesystem::path& dir) {
  auto file = [&](LexiconKind k) {
    return load_lexicon(dir / (std::string(to_string(k)) + "_v1.txt"), k);
  };
  LexiconSet set{file(LexiconKind::collective), file(LexiconKind::political),
                 file(LexiconKind::bot), file(LexiconKind::apple_source),
                 file(LexiconKind::student)};
  set.validate();
  return set;
}

void LexiconSet::validate() const {
  for (const auto* lex : {&collective, &political, &bot, &apple_source, &student}) {
    for (const auto& p : lex->phrases) {
      if (p.empty() || p.find_first_not_of(' ') == std::string::npos) {
        throw ConfigError("lexicon '" + std::string(to_string(lex->name)) +
                          "' has an empty phrase");
      }
      if (ascii_lower(p) != p) {
        throw ConfigError("lexicon '" + std::string(to_string(lex->name)) +
                          "' phrase is not lowercase: '" + p + "'");
      }
    }
  }
  std::set<std::string> col(collective.phrases.begin(), collective.phrases.end());
  for (const auto& p : political.phrases) {
    if (col.count(p)) {
      throw ConfigError("collective and political lexicons share phrase '" + p + "'");
    }
  }
  auto same_set = [](const PhraseLexicon& lex) {
    std::set<std::string> a(lex.phrases.begin(), lex.phrases.end());
    const auto& ref = builtin_phrases(lex.name);
    return a == std::set<std::string>(ref.begin(), ref.end());
  };
  if (!same_set(bot)) throw ConfigError("bot lexicon differs from the fixed bot phrase list");
  if (!same_set(apple_source)) {
    throw ConfigError("apple-source lexicon differs from {ios, ipad, iphone}");
  }
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool match_phrases(std::string_view text, const PhraseLexicon& lexicon) {
  if (text.empty()) return false;
  return contains_lower(ascii_lower(text), lexicon);
}

std::vector<TweetRecord> bot_filter(std::span<const TweetRecord> records,
                                    const PhraseLexicon& bot_lexicon) {
  std::vector<TweetRecord> kept;
  kept.reserve(records.size());
  for (const auto& r : records) {
    if (!match_phrases(r.user_description, bot_lexicon)) kept.push_back(r);
  }
  return kept;
}

std::vector<UserPeriodFlags> user_period_flags(std::span<const TweetRecord> records,
                                               const PeriodCalendar& cal,
                                               const LexiconSet& lexicons) {
  // Earliest tweet per user decides the user-level infrequent flag.
  std::unordered_map<std::string, const TweetRecord*> first_seen;
  for (const auto& r : records) {
    auto [it, inserted] = first_seen.emplace(r.user_id, &r);
    if (!inserted) {
      const TweetRecord* cur = it->second;
      if (std::tie(r.timestamp, r.tweet_id) < std::tie(cur->timestamp, cur->tweet_id)) {
        it->second = &r;
      }
    }
  }
  std::unordered_map<std::string, bool> infrequent;
  for (const auto& [user, rec] : first_seen) {
    std::int64_t days = std::max<std::int64_t>(1, whole_days_between(rec->user_created_at,
                                                                      rec->timestamp));
    infrequent[user] =
        static_cast<double>(rec->statuses_count) / static_cast<double>(days) < 1.0;
  }

  using Key = std::tuple<std::string, std::int64_t, std::string>;  // country, period, user
  std::map<Key, UserPeriodFlags> cells;
  for (const auto& r : records) {
    const std::int64_t t = assign_period(r.timestamp, cal);
    auto [it, inserted] = cells.try_emplace(Key{r.country_code, t, r.user_id});
    UserPeriodFlags& f = it->second;
    if (inserted) {
      f.user_id = r.user_id;
      f.country_code = r.country_code;
      f.period = t;
      f.infrequent = infrequent.at(r.user_id);
    }
    f.new_account = f.new_account || assign_period(r.user_created_at, cal) == t;
    if (match_phrases(r.source, lexicons.apple_source)) f.not_apple = false;
    f.student = f.student || match_phrases(r.user_description, lexicons.student) ||
                match_phrases(r.user_location, lexicons.student);
    const std::string text = ascii_lower(r.text);
    f.activist = f.activist || contains_lower(text, lexicons.collective);
    f.political = f.political || contains_lower(text, lexicons.political);
  }
  std::vector<UserPeriodFlags> out;
  out.reserve(cells.size());
  for (auto& [key, f] : cells) out.push_back(std::move(f));
  return out;
}

bool is_proportion_outcome(std::string_view name) {
  return name == "prop_collective_users" || name == "prop_collective_tweets" ||
         name == "tax_mention_share";
}

namespace {

struct CellTally {
  double users = 0, new_accounts = 0, infrequent = 0, not_apple = 0, student = 0,
         activist = 0, political = 0, tweets = 0, collective = 0, political_tweets = 0,
         tax_collective = 0;
};

}  // namespace

TwitterOutcomes twitter_outcomes(std::span<const UserPeriodFlags> flags,
                                 std::span<const TweetRecord> records,
                                 const PeriodCalendar& cal, const LexiconSet& lexicons,
                                 const PanelLayout& layout) {
  std::map<std::pair<std::string, std::int64_t>, CellTally> tally;
  for (const auto& f : flags) {
    auto& c = tally[{f.country_code, f.period}];
    c.users += f.active ? 1 : 0;
    c.new_accounts += f.new_account ? 1 : 0;
    c.infrequent += f.infrequent ? 1 : 0;
    c.not_apple += f.not_apple ? 1 : 0;
    c.student += f.student ? 1 : 0;
    c.activist += f.activist ? 1 : 0;
    c.political += f.political ? 1 : 0;
  }
  for (const auto& r : records) {
    auto& c = tally[{r.country_code, assign_period(r.timestamp, cal)}];
    const std::string text = ascii_lower(r.text);
    const bool collective = contains_lower(text, lexicons.collective);
    c.tweets += 1;
    c.collective += collective ? 1 : 0;
    c.political_tweets += contains_lower(text, lexicons.political) ? 1 : 0;
    c.tax_collective += (collective && text.find("tax") != std::string::npos) ? 1 : 0;
  }

  using Getter = double (*)(const CellTally&);
  const std::pair<std::string_view, Getter> counts[] = {
      {"users", [](const CellTally& c) { return c.users; }},
      {"new_accounts", [](const CellTally& c) { return c.new_accounts; }},
      {"infrequent_users", [](const CellTally& c) { return c.infrequent; }},
      {"not_apple_users", [](const CellTally& c) { return c.not_apple; }},
      {"student_users", [](const CellTally& c) { return c.student; }},
      {"activist_users", [](const CellTally& c) { return c.activist; }},
      {"political_users", [](const CellTally& c) { return c.political; }},
      {"tweets", [](const CellTally& c) { return c.tweets; }},
      {"collective_tweets", [](const CellTally& c) { return c.collective; }},
      {"political_tweets", [](const CellTally& c) { return c.political_tweets; }},
  };

  TwitterOutcomes out;
  for (const auto& [name, get] : counts) {
    std::vector<CellCount> cells;
    cells.reserve(tally.size());
    for (const auto& [key, c] : tally) cells.push_back({key.first, key.second, get(c)});
    out.panels.emplace(std::string(name),
                       build_panel(std::string(name), cells, cal, Transform::level, layout));
  }

  struct Ratio {
    std::string_view name, numerator, denominator;
  };
  const Ratio ratios[] = {{"prop_collective_users", "activist_users", "users"},
                          {"prop_collective_tweets", "collective_tweets", "tweets"},
                          {"tax_mention_share", "tax_collective", "collective_tweets"}};
  // The tax numerator is not itself a published outcome.
  std::vector<CellCount> tax_cells;
  for (const auto& [key, c] : tally) tax_cells.push_back({key.first, key.second, c.tax_collective});
  const PanelSeries tax_panel =
      build_panel("tax_collective", tax_cells, cal, Transform::level, layout);

  for (const auto& ratio : ratios) {
    const PanelSeries& num =
        ratio.numerator == "tax_collective" ? tax_panel : out.panels.at(std::string(ratio.numerator));
    const PanelSeries& den = out.panels.at(std::string(ratio.denominator));
    std::vector<double> values(num.values().size(), 0.0);
    for (std::size_t c = 0; c < den.num_countries(); ++c) {
      for (std::int64_t t = den.periods().first; t <= den.periods().last; ++t) {
        const std::size_t i = c * den.num_periods() +
                              static_cast<std::size_t>(t - den.periods().first);
        if (den.values()[i] > 0.0) {
          values[i] = num.values()[i] / den.values()[i];
        } else {
          out.zero_denominator.push_back({std::string(ratio.name), den.countries()[c], t});
        }
      }
    }
    out.panels.emplace(std::string(ratio.name),
                       PanelSeries(std::string(ratio.name), den.countries(), den.periods(),
                                   std::move(values), cal));
  }
  return out;
}

PanelSeries unique_user_panel(std::span<const TweetRecord> records, const PeriodCalendar& cal,
                              const PanelLayout& layout) {
  std::set<std::tuple<std::string, std::int64_t, std::string>> seen;
  std::map<std::pair<std::string, std::int64_t>, double> counts;
  for (const auto& r : records) {
    const std::int64_t t = assign_period(r.timestamp, cal);
    if (seen.emplace(r.country_code, t, r.user_id).second) counts[{r.country_code, t}] += 1;
  }
  std::vector<CellCount> cells;
  for (const auto& [key, n] : counts) cells.push_back({key.first, key.second, n});
  return build_panel("users", cells, cal, Transform::level, layout);
}

}  // namespace synthpanel
