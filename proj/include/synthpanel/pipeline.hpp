#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synthpanel/classify.hpp"
#include "synthpanel/diffusion.hpp"
#include "synthpanel/events.hpp"
#include "synthpanel/inference.hpp"
#include "synthpanel/panel.hpp"

namespace synthpanel {

inline constexpr const char* kToolVersion = "0.1.0";

struct DiffusionConfig {
  diffusion::PopulationParams population{0.5, 0.0, 0.25, 1.0, -0.5};
  std::string response = "linear";  // linear | logistic
  double slope = 1.0;               // linear slope or logistic scale
  double steepness = 10.0;
  double midpoint = 0.5;
  double q = 0.0;
  double q_prime = 0.5;
  double sweep_min = 0.0;
  double sweep_max = 1.0;
  int sweep_steps = 11;
  int grid_n = 2001;
  std::size_t agents = 200000;
  std::uint64_t seed = 20180701;

  diffusion::ResponseFunction response_function() const;
};

struct RunConfig {
  std::filesystem::path tweets;
  std::filesystem::path events;
  std::filesystem::path lexicon_dir;  // empty: built-in lexicons
  std::filesystem::path output_dir = "out";
  Date anchor_date = PeriodCalendar{}.anchor_date;
  int period_length_days = 10;
  std::string treated = "UG";
  double top_share = 0.8;
  int pre_days = 100;
  std::optional<int> post_days;
  int cutoff_days = 100;
  std::string outcome = "users";
  Transform panel_transform = Transform::level;
  unsigned threads = 0;
  DiffusionConfig diffusion;

  /// Throws ConfigError for missing input files or invalid settings.
  void validate(bool need_tweets, bool need_events) const;
  /// Settings that affect outputs as sorted key=value pairs (the output
  /// directory is excluded).
  std::vector<std::pair<std::string, std::string>> canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
};

/// "# synthpanel <version> config=<hash>"
std::string provenance_line(const RunConfig& config);

/// Inputs loaded and aggregated once per command.
struct OutcomeData {
  PeriodCalendar calendar;
  PeriodRange window;
  std::vector<TweetRecord> tweets;  // bot-filtered
  std::map<std::string, PanelSeries> levels;
  std::vector<FlaggedCell> flagged;
  std::vector<std::string> twitter_sample;  // restricted countries incl. treated
  std::optional<Date> data_end;
};

OutcomeData load_outcomes(const RunConfig& config);

/// Panel the estimator sees: restricted sample, log1p for counts.
PanelSeries analysis_panel(const OutcomeData& data, const std::string& outcome,
                           const RunConfig& config);

std::vector<std::string> donors_of(const PanelSeries& panel, const std::string& treated);

PlaceboConfig placebo_config(const RunConfig& config);

struct EstimateSummary {
  std::string outcome;
  PlaceboDistribution distribution;
  PointwiseBand band;
  AveragedEffect averaged;
};

// Each command writes CSV (and SVG where meaningful) into output_dir and
// returns the paths it wrote.
std::vector<std::filesystem::path> cmd_build_panel(const RunConfig& config);
std::vector<std::filesystem::path> cmd_estimate(const RunConfig& config,
                                                EstimateSummary* summary = nullptr);
std::vector<std::filesystem::path> cmd_placebo(const RunConfig& config);
std::vector<std::filesystem::path> cmd_falsify(const RunConfig& config);
std::vector<std::filesystem::path> cmd_aggregate(const RunConfig& config);
std::vector<std::filesystem::path> cmd_diffusion(const RunConfig& config);
std::vector<std::filesystem::path> cmd_all_figures(const RunConfig& config);

/// Tidy effect rows: outcome,period,effect,band_lo,band_hi,n_placebos,excluded_donors
std::string effects_csv(const RunConfig& config, const std::string& outcome,
                        const PlaceboDistribution& dist, const PointwiseBand& band);

/// Process exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace synthpanel
