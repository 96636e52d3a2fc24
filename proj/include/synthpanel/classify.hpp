#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthpanel/calendar.hpp"
#include "synthpanel/csv.hpp"
#include "synthpanel/panel.hpp"

namespace synthpanel {

struct TweetRecord {
  std::string tweet_id;
  std::string user_id;
  Timestamp timestamp;
  std::string country_code;
  std::string text;
  std::string source;
  Timestamp user_created_at;
  std::int64_t statuses_count = 0;
  std::string user_description;
  std::string user_location;
  std::string user_lang;
  std::string tweet_lang;
};

/// Column order of the tweet CSV.
inline constexpr std::string_view kTweetColumns[] = {
    "tweet_id",     "user_id",          "timestamp",     "country_code",
    "text",         "source",           "user_created_at", "statuses_count",
    "user_description", "user_location", "user_lang",     "tweet_lang"};

/// Validates and converts parsed rows. Errors name the offending CSV line.
std::vector<TweetRecord> read_tweets(const csv::Table& table);
std::vector<TweetRecord> read_tweets(const std::filesystem::path& path);

enum class LexiconKind { collective, political, bot, apple_source, student };

std::string_view to_string(LexiconKind kind);

struct PhraseLexicon {
  LexiconKind name = LexiconKind::collective;
  /// Lowercase phrases; leading and trailing spaces are part of the phrase.
  std::vector<std::string> phrases;
};

/// Built-in phrase lists.
PhraseLexicon default_lexicon(LexiconKind kind);

/// One phrase per line. Only the line terminator is stripped; blank lines
/// are ignored.
PhraseLexicon load_lexicon(const std::filesystem::path& path, LexiconKind kind);

struct LexiconSet {
  PhraseLexicon collective;
  PhraseLexicon political;
  PhraseLexicon bot;
  PhraseLexicon apple_source;
  PhraseLexicon student;

  static LexiconSet defaults();
  /// Reads <dir>/<kind>_v1.txt for every kind and validates the result.
  static LexiconSet load(const std::filesystem::path& dir);

  /// Throws ConfigError if collective and political share a phrase, a phrase
  /// is empty or has uppercase letters, or the bot/apple lists differ from
  /// the fixed definitions.
  void validate() const;
};

std::string ascii_lower(std::string_view text);

/// True iff the ASCII-lowercased text contains any phrase as a substring.
bool match_phrases(std::string_view text, const PhraseLexicon& lexicon);

/// Drops tweets whose user description matches the bot lexicon.
std::vector<TweetRecord> bot_filter(std::span<const TweetRecord> records,
                                    const PhraseLexicon& bot_lexicon);

struct UserPeriodFlags {
  std::string user_id;
  std::string country_code;
  std::int64_t period = 0;
  bool active = true;
  bool new_account = false;
  bool infrequent = false;
  bool not_apple = true;
  bool student = false;
  bool activist = false;
  bool political = false;
};

/// One entry per (user, country, period), sorted by country, period, user.
/// `infrequent` is fixed from the user's earliest tweet (ties broken by
/// tweet_id): statuses_count / max(1, whole days since account creation) < 1.
std::vector<UserPeriodFlags> user_period_flags(std::span<const TweetRecord> records,
                                               const PeriodCalendar& cal,
                                               const LexiconSet& lexicons);

/// Outcome names in output order.
inline constexpr std::string_view kTwitterOutcomes[] = {
    "users",           "new_accounts",       "infrequent_users",      "not_apple_users",
    "student_users",   "activist_users",     "political_users",       "tweets",
    "collective_tweets", "political_tweets", "prop_collective_users", "prop_collective_tweets",
    "tax_mention_share"};

/// Proportion outcomes stay in levels; every other outcome is a count.
bool is_proportion_outcome(std::string_view name);

struct FlaggedCell {
  std::string outcome;
  std::string country;
  std::int64_t period = 0;
};

struct TwitterOutcomes {
  std::map<std::string, PanelSeries> panels;  // level panels
  /// Proportion cells whose denominator was zero (stored as 0).
  std::vector<FlaggedCell> zero_denominator;
};

TwitterOutcomes twitter_outcomes(std::span<const UserPeriodFlags> flags,
                                 std::span<const TweetRecord> records,
                                 const PeriodCalendar& cal, const LexiconSet& lexicons,
                                 const PanelLayout& layout = {});

/// Level panel of distinct active users per (country, period), the input to
/// the top-share restriction.
PanelSeries unique_user_panel(std::span<const TweetRecord> records, const PeriodCalendar& cal,
                              const PanelLayout& layout = {});

}  // namespace synthpanel
