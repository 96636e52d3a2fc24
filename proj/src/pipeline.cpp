#include "synthpanel/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "synthpanel/csv.hpp"
#include "synthpanel/error.hpp"
#include "synthpanel/svg.hpp"

namespace synthpanel {

namespace fs = std::filesystem;

namespace {

using csv::format_number;

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const RunConfig& config, std::vector<std::string> header) {
    text_ = provenance_line(config) + "\n" + csv::join_row(header) + "\n";
  }
  void row(const std::vector<std::string>& fields) { text_ += csv::join_row(fields) + "\n"; }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

std::vector<double> as_doubles(std::int64_t first, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(first + static_cast<std::int64_t>(i));
  return xs;
}

std::vector<std::string> available_outcomes(const OutcomeData& data) {
  std::vector<std::string> out;
  for (auto name : kTwitterOutcomes) {
    if (data.levels.count(std::string(name))) out.emplace_back(name);
  }
  if (data.levels.count("events")) out.emplace_back("events");
  return out;
}

OutcomeData load_outcomes_extended(const RunConfig& config, int extra_pre_days) {
  const bool has_tweets = !config.tweets.empty();
  const bool has_events = !config.events.empty();
  config.validate(false, false);
  if (!has_tweets && !has_events) throw ConfigError("no input: pass --tweets and/or --events");

  OutcomeData data;
  data.calendar = PeriodCalendar{config.anchor_date, config.period_length_days};
  const LexiconSet lexicons =
      config.lexicon_dir.empty() ? LexiconSet::defaults() : LexiconSet::load(config.lexicon_dir);
  lexicons.validate();

  std::vector<EventRecord> events;
  if (has_tweets) {
    const auto raw = read_tweets(config.tweets);
    data.tweets = bot_filter(raw, lexicons.bot);
    for (const auto& t : data.tweets) {
      const Date d = std::chrono::floor<std::chrono::days>(t.timestamp);
      data.data_end = data.data_end ? std::max(*data.data_end, d) : d;
    }
  }
  if (has_events) {
    events = filter_protest_events(read_events(config.events));
    if (!has_tweets) {
      for (const auto& e : events) data.data_end = data.data_end ? std::max(*data.data_end, e.date) : e.date;
    }
  }
  const std::int64_t data_last = data.data_end ? assign_period(*data.data_end, data.calendar) : 0;
  DayWindow window{config.pre_days + extra_pre_days, config.post_days};
  data.window = window.periods(config.period_length_days, data_last);
  const PanelLayout layout{data.window, {config.treated}};

  if (has_tweets) {
    const auto flags = user_period_flags(data.tweets, data.calendar, lexicons);
    TwitterOutcomes outcomes = twitter_outcomes(flags, data.tweets, data.calendar, lexicons, layout);
    data.flagged = std::move(outcomes.zero_denominator);
    data.levels = std::move(outcomes.panels);
    data.twitter_sample = retained_countries(
        data.levels.at("users"),
        {SampleRestriction::Kind::twitter_top_share, config.top_share, {}});
    if (std::find(data.twitter_sample.begin(), data.twitter_sample.end(), config.treated) ==
        data.twitter_sample.end()) {
      data.twitter_sample.push_back(config.treated);
      std::sort(data.twitter_sample.begin(), data.twitter_sample.end());
    }
  }
  if (has_events) {
    data.levels.emplace("events", event_panel(events, data.calendar, Transform::level, layout));
  }
  return data;
}

EstimateSummary run_estimate(const OutcomeData& data, const std::string& outcome,
                             const RunConfig& config, PlaceboConfig pc) {
  const PanelSeries panel = analysis_panel(data, outcome, config);
  EstimateSummary s;
  s.outcome = outcome;
  s.distribution = placebo_distribution(panel, config.treated, donors_of(panel, config.treated), pc);
  s.band = pointwise_band(s.distribution);
  s.averaged = averaged_post_effect(s.distribution.treated_fit, s.distribution);
  return s;
}

std::string effect_svg(const std::string& title, const PlaceboDistribution& dist,
                       const PointwiseBand& band, double marker) {
  const TimeSeries& eff = dist.treated_fit.effects;
  svg::LineChart chart;
  chart.title = title;
  chart.x_label = "period";
  chart.y_label = "estimated effect";
  chart.zero_line = true;
  chart.vertical_marker = marker;
  const auto xs = as_doubles(eff.first_period, eff.values.size());
  chart.band = svg::Band{xs, band.lower, band.upper};
  chart.lines.push_back({dist.treated, xs, eff.values});
  return svg::render(chart);
}

std::vector<fs::path> write_estimate_outputs(const RunConfig& config, const OutcomeData& data,
                                             const EstimateSummary& s) {
  std::vector<fs::path> written;
  const fs::path dir = config.output_dir;
  const std::string& o = s.outcome;

  written.push_back(dir / ("effects_" + o + ".csv"));
  write_file(written.back(), effects_csv(config, o, s.distribution, s.band));

  CsvWriter weights(config, {"rank", "country", "weight"});
  std::vector<std::pair<double, std::string>> ranked;
  const auto& w = s.distribution.treated_fit.weights.w;
  for (std::size_t j = 0; j < w.size(); ++j) ranked.emplace_back(w[j], s.distribution.donors[j]);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    weights.row({std::to_string(r + 1), ranked[r].second, format_number(ranked[r].first)});
  }
  written.push_back(dir / ("weights_" + o + ".csv"));
  write_file(written.back(), weights.str());

  // Treated against its synthetic control, plus raw comparisons normalized
  // at t = -1 (donors individually and their average).
  const PanelSeries panel = analysis_panel(data, o, config);
  const TimeSeries treated = panel.series(config.treated);
  const TimeSeries& eff = s.distribution.treated_fit.effects;
  CsvWriter synth(config, {"period", "treated", "synthetic"});
  std::vector<double> synthetic(eff.values.size());
  for (std::size_t i = 0; i < eff.values.size(); ++i) {
    synthetic[i] = treated.values[i] - eff.values[i];
    synth.row({std::to_string(eff.first_period + static_cast<std::int64_t>(i)),
               format_number(treated.values[i]), format_number(synthetic[i])});
  }
  written.push_back(dir / ("synthetic_" + o + ".csv"));
  write_file(written.back(), synth.str());

  const bool has_reference = panel.periods().contains(-1);
  if (has_reference) {
    CsvWriter cmp(config, {"series", "period", "value", "normalized"});
    std::vector<std::string> donors = donors_of(panel, config.treated);
    auto emit = [&](const std::string& name, const TimeSeries& series) {
      const TimeSeries norm = normalize_at_reference(treated, series, -1);
      for (std::size_t i = 0; i < series.values.size(); ++i) {
        cmp.row({name, std::to_string(series.first_period + static_cast<std::int64_t>(i)),
                 format_number(series.values[i]), format_number(norm.values[i])});
      }
    };
    emit(config.treated, treated);
    emit("donor_average", average_series(panel, donors));
    for (const auto& d : donors) emit(d, panel.series(d));
    written.push_back(dir / ("comparison_" + o + ".csv"));
    write_file(written.back(), cmp.str());
  }

  svg::LineChart chart;
  chart.title = o + ": " + config.treated + " vs synthetic control";
  chart.x_label = "period";
  chart.y_label = o;
  chart.vertical_marker = -1.0;
  const auto xs = as_doubles(eff.first_period, eff.values.size());
  chart.lines.push_back({config.treated, xs, treated.values});
  chart.lines.push_back({"synthetic", xs, synthetic, "#777777", true});
  written.push_back(dir / ("synthetic_" + o + ".svg"));
  write_file(written.back(), svg::render(chart));

  written.push_back(dir / ("effects_" + o + ".svg"));
  write_file(written.back(), effect_svg(o + ": estimated effect", s.distribution, s.band, -1.0));
  return written;
}

std::string averaged_row_status(const std::exception& e) { return std::string("degenerate: ") + e.what(); }

}  // namespace

diffusion::ResponseFunction DiffusionConfig::response_function() const {
  if (response == "linear") return diffusion::ResponseFunction::linear(slope);
  if (response == "logistic") return diffusion::ResponseFunction::logistic(slope, steepness, midpoint);
  throw ConfigError("unknown response form '" + response + "' (expected linear|logistic)");
}

void RunConfig::validate(bool need_tweets, bool need_events) const {
  PeriodCalendar{anchor_date, period_length_days}.validate();
  if (need_tweets && tweets.empty()) throw ConfigError("--tweets is required");
  if (need_events && events.empty()) throw ConfigError("--events is required");
  for (const auto* p : {&tweets, &events}) {
    if (!p->empty() && !fs::is_regular_file(*p)) {
      throw ConfigError("input file '" + p->string() + "' does not exist");
    }
  }
  if (!lexicon_dir.empty() && !fs::is_directory(lexicon_dir)) {
    throw ConfigError("lexicon directory '" + lexicon_dir.string() + "' does not exist");
  }
  if (!is_country_code(treated)) throw ConfigError("treated country must be an ISO alpha-2 code");
  if (!(top_share > 0.0 && top_share <= 1.0)) throw ConfigError("top share must lie in (0, 1]");
  if (pre_days <= 0 || cutoff_days <= 0 || (post_days && *post_days <= 0)) {
    throw ConfigError("window lengths must be positive");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::canonical() const {
  const auto& d = diffusion;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"anchor_date", format_date(anchor_date)},
      {"cutoff_days", std::to_string(cutoff_days)},
      {"diffusion.agents", std::to_string(d.agents)},
      {"diffusion.grid_n", std::to_string(d.grid_n)},
      {"diffusion.midpoint", format_number(d.midpoint)},
      {"diffusion.mu_c", format_number(d.population.mu_c)},
      {"diffusion.mu_w", format_number(d.population.mu_w)},
      {"diffusion.q", format_number(d.q)},
      {"diffusion.q_prime", format_number(d.q_prime)},
      {"diffusion.response", d.response},
      {"diffusion.rho", format_number(d.population.rho)},
      {"diffusion.seed", std::to_string(d.seed)},
      {"diffusion.sigma_c", format_number(d.population.sigma_c)},
      {"diffusion.sigma_w", format_number(d.population.sigma_w)},
      {"diffusion.slope", format_number(d.slope)},
      {"diffusion.steepness", format_number(d.steepness)},
      {"diffusion.sweep_max", format_number(d.sweep_max)},
      {"diffusion.sweep_min", format_number(d.sweep_min)},
      {"diffusion.sweep_steps", std::to_string(d.sweep_steps)},
      {"events", events.generic_string()},
      {"lexicon_dir", lexicon_dir.generic_string()},
      {"outcome", outcome},
      {"panel_transform", std::string(to_string(panel_transform))},
      {"period_length_days", std::to_string(period_length_days)},
      {"post_days", post_days ? std::to_string(*post_days) : "data"},
      {"pre_days", std::to_string(pre_days)},
      {"top_share", format_number(top_share)},
      {"treated", treated},
      {"tweets", tweets.generic_string()},
  };
  std::sort(kv.begin(), kv.end());
  return kv;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : canonical()) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const RunConfig& config) {
  return std::string("# synthpanel ") + kToolVersion + " config=" + config.hash();
}

OutcomeData load_outcomes(const RunConfig& config) { return load_outcomes_extended(config, 0); }

PanelSeries analysis_panel(const OutcomeData& data, const std::string& outcome,
                           const RunConfig& config) {
  auto it = data.levels.find(outcome);
  if (it == data.levels.end()) {
    throw ConfigError("outcome '" + outcome + "' is not available from the given inputs");
  }
  PanelSeries panel = it->second;
  if (outcome != "events") panel = select_countries(panel, data.twitter_sample);
  if (!panel.find_country(config.treated)) {
    throw InsufficientDonorsError("treated country " + config.treated + " has no '" + outcome +
                                  "' data");
  }
  if (panel.num_countries() < 3) {
    throw InsufficientDonorsError("outcome '" + outcome + "' keeps " +
                                  std::to_string(panel.num_countries()) +
                                  " countries; at least 3 required");
  }
  return is_proportion_outcome(outcome) ? panel : apply_transform(panel, Transform::log1p);
}

std::vector<std::string> donors_of(const PanelSeries& panel, const std::string& treated) {
  std::vector<std::string> donors;
  for (const auto& c : panel.countries()) {
    if (c != treated) donors.push_back(c);
  }
  return donors;
}

PlaceboConfig placebo_config(const RunConfig& config) {
  PlaceboConfig pc;
  pc.threads = config.threads;
  return pc;
}

std::string effects_csv(const RunConfig& config, const std::string& outcome,
                        const PlaceboDistribution& dist, const PointwiseBand& band) {
  CsvWriter out(config, {"outcome", "period", "effect", "band_lo", "band_hi", "n_placebos",
                         "excluded_donors"});
  std::vector<std::string> excluded;
  for (const auto& e : dist.excluded) excluded.push_back(e.donor);
  const std::string excluded_list = join(excluded, ';');
  const TimeSeries& eff = dist.treated_fit.effects;
  for (std::size_t i = 0; i < eff.values.size(); ++i) {
    out.row({outcome, std::to_string(eff.first_period + static_cast<std::int64_t>(i)),
             format_number(eff.values[i]), format_number(band.lower[i]),
             format_number(band.upper[i]), std::to_string(band.n_placebos), excluded_list});
  }
  return out.str();
}

std::vector<fs::path> cmd_build_panel(const RunConfig& config) {
  const OutcomeData data = load_outcomes(config);
  std::vector<fs::path> written;
  for (const auto& name : available_outcomes(data)) {
    const PanelSeries panel = apply_transform(data.levels.at(name), config.panel_transform);
    CsvWriter out(config, {"outcome", "country", "period", "period_start", "value"});
    for (std::size_t c = 0; c < panel.num_countries(); ++c) {
      for (std::int64_t t = panel.periods().first; t <= panel.periods().last; ++t) {
        out.row({name, panel.countries()[c], std::to_string(t),
                 format_date(data.calendar.period_start(t)), format_number(panel.at(c, t))});
      }
    }
    written.push_back(config.output_dir / ("panel_" + name + ".csv"));
    write_file(written.back(), out.str());
  }
  if (!config.tweets.empty()) {
    CsvWriter flags(config, {"outcome", "country", "period"});
    for (const auto& f : data.flagged) flags.row({f.outcome, f.country, std::to_string(f.period)});
    written.push_back(config.output_dir / "panel_flags.csv");
    write_file(written.back(), flags.str());

    CsvWriter sample(config, {"country", "retained"});
    for (const auto& c : data.levels.at("users").countries()) {
      const bool kept = std::binary_search(data.twitter_sample.begin(), data.twitter_sample.end(), c);
      sample.row({c, kept ? "1" : "0"});
    }
    written.push_back(config.output_dir / "sample_restriction.csv");
    write_file(written.back(), sample.str());
  }
  return written;
}

std::vector<fs::path> cmd_estimate(const RunConfig& config, EstimateSummary* summary) {
  const OutcomeData data = load_outcomes(config);
  EstimateSummary s = run_estimate(data, config.outcome, config, placebo_config(config));
  auto written = write_estimate_outputs(config, data, s);

  CsvWriter avg(config, {"outcome", "value", "band_lo", "band_hi", "n_placebos"});
  avg.row({s.outcome, format_number(s.averaged.value), format_number(s.averaged.band_lower),
           format_number(s.averaged.band_upper), std::to_string(s.averaged.n_placebos)});
  written.push_back(config.output_dir / ("averaged_" + s.outcome + ".csv"));
  write_file(written.back(), avg.str());
  if (summary) *summary = std::move(s);
  return written;
}

std::vector<fs::path> cmd_placebo(const RunConfig& config) {
  const OutcomeData data = load_outcomes(config);
  const EstimateSummary s = run_estimate(data, config.outcome, config, placebo_config(config));
  CsvWriter out(config, {"donor", "period", "raw_effect", "scaled_effect", "sigma", "scale"});
  for (const auto& p : s.distribution.placebos) {
    for (std::size_t i = 0; i < p.raw_effects.values.size(); ++i) {
      out.row({p.donor, std::to_string(p.raw_effects.first_period + static_cast<std::int64_t>(i)),
               format_number(p.raw_effects.values[i]), format_number(p.scaled_effects.values[i]),
               format_number(p.sigma), format_number(p.scale)});
    }
  }
  CsvWriter excluded(config, {"donor", "sigma", "reason"});
  for (const auto& e : s.distribution.excluded) {
    excluded.row({e.donor, format_number(e.sigma), e.reason});
  }
  std::vector<fs::path> written{config.output_dir / ("placebo_" + s.outcome + ".csv"),
                                config.output_dir / ("placebo_excluded_" + s.outcome + ".csv")};
  write_file(written[0], out.str());
  write_file(written[1], excluded.str());
  return written;
}

std::vector<fs::path> cmd_falsify(const RunConfig& config) {
  // The fitting window keeps pre_days of data ahead of the held-out window.
  const OutcomeData data = load_outcomes_extended(config, config.cutoff_days);
  CsvWriter out(config, {"outcome", "value", "band_lo", "band_hi", "n_placebos", "status"});
  std::vector<svg::Interval> rows;
  for (const auto& o : available_outcomes(data)) {
    try {
      const PanelSeries panel = analysis_panel(data, o, config);
      const FalsificationResult r = falsification_run(panel, config.treated,
                                                      donors_of(panel, config.treated),
                                                      config.cutoff_days, placebo_config(config));
      out.row({o, format_number(r.averaged.value), format_number(r.averaged.band_lower),
               format_number(r.averaged.band_upper), std::to_string(r.averaged.n_placebos), "ok"});
      rows.push_back({o, r.averaged.value, r.averaged.band_lower, r.averaged.band_upper});
    } catch (const DegenerateInferenceError& e) {
      out.row({o, "", "", "", "0", averaged_row_status(e)});
    } catch (const InsufficientDonorsError& e) {
      out.row({o, "", "", "", "0", averaged_row_status(e)});
    }
  }
  std::vector<fs::path> written{config.output_dir / "falsify.csv", config.output_dir / "falsify.svg"};
  write_file(written[0], out.str());
  write_file(written[1], svg::render_intervals(
                             "Averaged effects over the " + std::to_string(config.cutoff_days) +
                                 " days before the anchor (fit restricted to earlier data)",
                             rows));
  return written;
}

std::vector<fs::path> cmd_aggregate(const RunConfig& config) {
  config.validate(true, false);
  const LexiconSet lexicons =
      config.lexicon_dir.empty() ? LexiconSet::defaults() : LexiconSet::load(config.lexicon_dir);
  const auto tweets = bot_filter(read_tweets(config.tweets), lexicons.bot);
  AggregationConfig ac;
  ac.treated = config.treated;
  ac.anchor_date = config.anchor_date;
  ac.window = DayWindow{config.pre_days, config.post_days};
  ac.top_share = config.top_share;
  ac.placebo = placebo_config(config);
  const auto levels = aggregation_suite(tweets, ac);

  std::vector<fs::path> written;
  for (const auto& level : levels) {
    const std::string tag = std::to_string(level.period_length_days) + "d";
    written.push_back(config.output_dir / ("aggregate_" + tag + ".csv"));
    write_file(written.back(), effects_csv(config, "users_" + tag, level.distribution, level.band));
    written.push_back(config.output_dir / ("aggregate_" + tag + ".svg"));
    write_file(written.back(),
               effect_svg("users, " + tag + " periods (fit stride " +
                              std::to_string(level.pre_stride) + ")",
                          level.distribution, level.band, -1.0));
  }
  return written;
}

std::vector<fs::path> cmd_diffusion(const RunConfig& config) {
  const DiffusionConfig& d = config.diffusion;
  const auto v = d.response_function();
  const auto& p = d.population;
  p.validate();
  if (d.sweep_steps < 2) throw ConfigError("diffusion sweep needs at least 2 steps");

  const diffusion::Theorem1Report rep = diffusion::theorem1_check(d.q, d.q_prime, v, p, d.grid_n);

  CsvWriter curve(config, {"x", "phi_q", "phi_q_prime", "difference"});
  std::vector<double> xs, at_q, at_qp;
  for (std::size_t i = 0; i < rep.at_q.grid_x.size(); ++i) {
    const double a = rep.at_q.grid_phi[i];
    const double b = rep.at_q_prime.grid_phi[i];
    curve.row({format_number(rep.at_q.grid_x[i]), format_number(a), format_number(b),
               format_number(b - a)});
    xs.push_back(rep.at_q.grid_x[i]);
    at_q.push_back(a);
    at_qp.push_back(b);
  }

  CsvWriter theorem(config, {"q", "q_prime", "cov_cw", "holds", "max_violation", "n_offending",
                             "stable_shifts", "tipping_shifts"});
  auto shifts = [](const std::vector<double>& s) {
    std::vector<std::string> parts;
    for (double x : s) parts.push_back(format_number(x));
    return join(parts, ';');
  };
  theorem.row({format_number(rep.q), format_number(rep.q_prime), format_number(rep.cov_cw),
               rep.holds ? "1" : "0", format_number(rep.max_violation),
               std::to_string(rep.offending_x.size()), shifts(rep.stable_shifts),
               shifts(rep.tipping_shifts)});

  CsvWriter sweep(config, {"q", "x", "stability"});
  CsvWriter sim(config, {"q", "from_zero", "from_one", "rounds_zero", "rounds_one",
                         "empty_platform"});
  for (int i = 0; i < d.sweep_steps; ++i) {
    const double q = d.sweep_min + (d.sweep_max - d.sweep_min) * i / (d.sweep_steps - 1);
    const auto eq = diffusion::equilibria(q, v, p, d.grid_n);
    if (eq.degenerate) {
      sweep.row({format_number(q), "", "degenerate"});
    } else {
      for (const auto& fp : eq.points) {
        sweep.row({format_number(q), format_number(fp.x), std::string(to_string(fp.stability))});
      }
    }
    const auto r = diffusion::agent_simulation(d.agents, q, v, p, d.seed);
    sim.row({format_number(q), format_number(r.from_zero.x), format_number(r.from_one.x),
             std::to_string(r.from_zero.rounds), std::to_string(r.from_one.rounds),
             (r.from_zero.empty_platform || r.from_one.empty_platform) ? "1" : "0"});
  }

  svg::LineChart chart;
  chart.title = "phi(x) at q = " + format_number(d.q) + " and q' = " + format_number(d.q_prime);
  chart.x_label = "participation x";
  chart.y_label = "phi(x)";
  chart.lines.push_back({"q", xs, at_q});
  chart.lines.push_back({"q'", xs, at_qp, "#c0392b", true});
  chart.lines.push_back({"45-degree", {0.0, 1.0}, {0.0, 1.0}, "#999999", true});

  const fs::path dir = config.output_dir;
  std::vector<fs::path> written{dir / "diffusion_phi.csv", dir / "diffusion_theorem1.csv",
                                dir / "diffusion_equilibria.csv", dir / "diffusion_simulation.csv",
                                dir / "diffusion_phi.svg"};
  write_file(written[0], curve.str());
  write_file(written[1], theorem.str());
  write_file(written[2], sweep.str());
  write_file(written[3], sim.str());
  write_file(written[4], svg::render(chart));
  return written;
}

std::vector<fs::path> cmd_all_figures(const RunConfig& config) {
  std::vector<fs::path> written = cmd_build_panel(config);
  const OutcomeData data = load_outcomes(config);

  CsvWriter avg(config, {"outcome", "value", "band_lo", "band_hi", "n_placebos", "status"});
  std::vector<svg::Interval> rows;
  for (const auto& o : available_outcomes(data)) {
    try {
      const EstimateSummary s = run_estimate(data, o, config, placebo_config(config));
      auto files = write_estimate_outputs(config, data, s);
      written.insert(written.end(), files.begin(), files.end());
      avg.row({o, format_number(s.averaged.value), format_number(s.averaged.band_lower),
               format_number(s.averaged.band_upper), std::to_string(s.averaged.n_placebos), "ok"});
      rows.push_back({o, s.averaged.value, s.averaged.band_lower, s.averaged.band_upper});
    } catch (const DegenerateInferenceError& e) {
      avg.row({o, "", "", "", "0", averaged_row_status(e)});
    } catch (const InsufficientDonorsError& e) {
      avg.row({o, "", "", "", "0", averaged_row_status(e)});
    }
  }
  written.push_back(config.output_dir / "averaged_effects.csv");
  write_file(written.back(), avg.str());
  written.push_back(config.output_dir / "averaged_effects.svg");
  write_file(written.back(), svg::render_intervals("Average post-period effects", rows));

  if (data.levels.count("tax_mention_share") && data.levels.at("tax_mention_share").find_country(config.treated)) {
    const TimeSeries share = data.levels.at("tax_mention_share").series(config.treated);
    CsvWriter tax(config, {"period", "tax_mention_share"});
    for (std::size_t i = 0; i < share.values.size(); ++i) {
      tax.row({std::to_string(share.first_period + static_cast<std::int64_t>(i)),
               format_number(share.values[i])});
    }
    written.push_back(config.output_dir / "tax_mention_share.csv");
    write_file(written.back(), tax.str());
    svg::LineChart chart;
    chart.title = "Share of collective-action tweets mentioning 'tax' (" + config.treated + ")";
    chart.x_label = "period";
    chart.y_label = "share";
    chart.vertical_marker = -1.0;
    chart.lines.push_back({config.treated, as_doubles(share.first_period, share.values.size()),
                           share.values});
    written.push_back(config.output_dir / "tax_mention_share.svg");
    write_file(written.back(), svg::render(chart));
  }

  auto add = [&](std::vector<fs::path> files) { written.insert(written.end(), files.begin(), files.end()); };
  add(cmd_falsify(config));
  if (!config.tweets.empty()) add(cmd_aggregate(config));
  add(cmd_diffusion(config));
  return written;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DegenerateInferenceError*>(&e) ||
      dynamic_cast<const InsufficientDonorsError*>(&e) ||
      dynamic_cast<const EmptyPlatformError*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const RangeError*>(&e)) return 2;
  return 1;
}

}  // namespace synthpanel
