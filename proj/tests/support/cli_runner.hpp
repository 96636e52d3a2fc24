#pragma once

// Helpers for driving the synthpanel executable from tests.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "record_gen.hpp"
#include "synthpanel/csv.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline int run_cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = std::string(SYNTHPANEL_CLI) + " " + args;
  cmd += log.empty() ? " > /dev/null 2>&1" : " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string without_first_line(const std::string& text) {
  const auto nl = text.find('\n');
  return nl == std::string::npos ? std::string() : text.substr(nl + 1);
}

inline fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("synthpanel_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Every regular file under `dir`, keyed by file name.
inline std::map<std::string, std::string> read_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

inline void write_tweets_csv(const fs::path& path, const std::vector<synthpanel::TweetRecord>& tweets) {
  std::ofstream out(path, std::ios::binary);
  out << "tweet_id,user_id,timestamp,country_code,text,source,user_created_at,statuses_count,"
         "user_description,user_location,user_lang,tweet_lang\n";
  auto ts = [](synthpanel::Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::hh_mm_ss hms(t - day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", int(hms.hours().count()),
                  int(hms.minutes().count()), int(hms.seconds().count()));
    return synthpanel::format_date(day) + buf;
  };
  for (const auto& t : tweets) {
    const std::vector<std::string> f = {t.tweet_id, t.user_id, ts(t.timestamp), t.country_code,
                                        t.text, t.source, ts(t.user_created_at),
                                        std::to_string(t.statuses_count), t.user_description,
                                        t.user_location, t.user_lang, t.tweet_lang};
    out << synthpanel::csv::join_row(f) << "\n";
  }
}

/// Ten countries with seasonal daily user counts; the treated unit's users
/// are multiplied by `post_factor` from the anchor on. Texts rotate through
/// collective, political and neutral phrases.
inline std::vector<synthpanel::TweetRecord> synthetic_country_tweets(double post_factor,
                                                                     std::uint64_t seed,
                                                                     int first_day = -210,
                                                                     int last_day = 59) {
  const std::vector<std::string> cs = {"BI", "CD", "ET", "KE", "MW", "NG", "RW", "TZ", "UG", "ZM"};
  std::mt19937_64 rng(seed);
  std::vector<double> base, amp, phase;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    base.push_back(6 + double(rng() % 10));
    amp.push_back(0.1 + 0.4 * double(rng() % 100) / 99.0);
    phase.push_back(double(rng() % 628) / 100.0);
  }
  auto users = [&](const std::string& c, int d) {
    const auto i = std::size_t(std::find(cs.begin(), cs.end(), c) - cs.begin());
    const double level = base[i] * (1 + amp[i] * std::sin(d / 25.0 + phase[i]));
    return int(std::lround(level * ((c == "UG" && d >= 0) ? post_factor : 1.0)));
  };
  auto tweets = daily_user_tweets(cs, first_day, last_day, users, true);
  const char* texts[] = {"protest against the tax", "hello friends", "the president spoke",
                         "good morning", "boycott now", "nice weather today"};
  for (std::size_t i = 0; i < tweets.size(); ++i) tweets[i].text = texts[i % 6];
  return tweets;
}

}  // namespace testsupport
