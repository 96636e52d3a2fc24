// Command-line front end: one subcommand per figure pipeline.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "synthpanel/error.hpp"
#include "synthpanel/pipeline.hpp"

namespace {

using synthpanel::RunConfig;

struct RawOptions {
  std::string tweets, events, lexicons, out = "out";
  std::string anchor = "2018-07-01";
  std::string transform = "level";
  int post_days = 0;
};

void add_common_options(CLI::App& app, RunConfig& cfg, RawOptions& raw) {
  app.add_option("--tweets", raw.tweets, "Tweet CSV");
  app.add_option("--events", raw.events, "ACLED/ICEWS event CSV");
  app.add_option("--lexicons", raw.lexicons, "Directory of <kind>_v1.txt phrase lists");
  app.add_option("--out", raw.out, "Output directory")->capture_default_str();
  app.add_option("--anchor", raw.anchor, "Anchor date (period 0 starts here)")->capture_default_str();
  app.add_option("--period-length", cfg.period_length_days, "Days per period: 1, 7, 10 or 28")
      ->capture_default_str();
  app.add_option("--treated", cfg.treated, "Treated country (ISO alpha-2)")->capture_default_str();
  app.add_option("--top-share", cfg.top_share, "Share of countries kept by unique users")
      ->capture_default_str();
  app.add_option("--pre-days", cfg.pre_days, "Days before the anchor in the window")
      ->capture_default_str();
  app.add_option("--post-days", raw.post_days, "Days from the anchor on (default: all data)");
  app.add_option("--cutoff-days", cfg.cutoff_days, "Held-out days for falsification")
      ->capture_default_str();
  app.add_option("--outcome", cfg.outcome, "Outcome for estimate/placebo")->capture_default_str();
  app.add_option("--transform", raw.transform, "Panel transform for build-panel: level|log1p")
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads (default: SYNTHPANEL_THREADS or cores)");

  auto& d = cfg.diffusion;
  app.add_option("--mu-c", d.population.mu_c, "Mean protest cost")->capture_default_str();
  app.add_option("--mu-w", d.population.mu_w, "Mean platform valuation")->capture_default_str();
  app.add_option("--sigma-c", d.population.sigma_c, "SD of protest cost")->capture_default_str();
  app.add_option("--sigma-w", d.population.sigma_w, "SD of platform valuation")
      ->capture_default_str();
  app.add_option("--rho", d.population.rho, "Correlation of cost and valuation")
      ->capture_default_str();
  app.add_option("--response", d.response, "Response form: linear|logistic")->capture_default_str();
  app.add_option("--slope", d.slope, "Linear slope or logistic scale")->capture_default_str();
  app.add_option("--steepness", d.steepness, "Logistic steepness")->capture_default_str();
  app.add_option("--midpoint", d.midpoint, "Logistic midpoint")->capture_default_str();
  app.add_option("--q", d.q, "Price")->capture_default_str();
  app.add_option("--q-prime", d.q_prime, "Higher price for the comparison")->capture_default_str();
  app.add_option("--sweep-min", d.sweep_min, "Price sweep start")->capture_default_str();
  app.add_option("--sweep-max", d.sweep_max, "Price sweep end")->capture_default_str();
  app.add_option("--sweep-steps", d.sweep_steps, "Price sweep points")->capture_default_str();
  app.add_option("--grid", d.grid_n, "Fixed-point grid size")->capture_default_str();
  app.add_option("--agents", d.agents, "Simulated agents")->capture_default_str();
  app.add_option("--seed", d.seed, "Simulation seed")->capture_default_str();
}

void finalize(RunConfig& cfg, const RawOptions& raw) {
  cfg.tweets = raw.tweets;
  cfg.events = raw.events;
  cfg.lexicon_dir = raw.lexicons;
  cfg.output_dir = raw.out;
  cfg.anchor_date = synthpanel::parse_date(raw.anchor);
  cfg.panel_transform = synthpanel::parse_transform(raw.transform);
  if (raw.post_days > 0) cfg.post_days = raw.post_days;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-control panels, placebo inference and diffusion equilibria"};
  app.set_config("--config", "", "Flat key = value settings file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  RawOptions raw;
  add_common_options(app, cfg, raw);

  const std::pair<const char*, const char*> commands[] = {
      {"build-panel", "Write per-outcome country x period panels"},
      {"estimate", "Synthetic control and placebo band for --outcome"},
      {"placebo", "Write the scaled placebo distribution for --outcome"},
      {"falsify", "Averaged effects with the fit restricted to earlier data"},
      {"aggregate", "Unique-user effects at 1, 7, 10 and 28-day periods"},
      {"diffusion", "phi curves, equilibria, price comparison and agent simulation"},
      {"all-figures", "Run every pipeline"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    finalize(cfg, raw);
    const std::string cmd = app.get_subcommands().front()->get_name();
    std::vector<std::filesystem::path> written;
    if (cmd == "build-panel") {
      written = synthpanel::cmd_build_panel(cfg);
    } else if (cmd == "estimate") {
      written = synthpanel::cmd_estimate(cfg);
    } else if (cmd == "placebo") {
      written = synthpanel::cmd_placebo(cfg);
    } else if (cmd == "falsify") {
      written = synthpanel::cmd_falsify(cfg);
    } else if (cmd == "aggregate") {
      written = synthpanel::cmd_aggregate(cfg);
    } else if (cmd == "diffusion") {
      written = synthpanel::cmd_diffusion(cfg);
    } else {
      written = synthpanel::cmd_all_figures(cfg);
    }
    for (const auto& p : written) std::cout << p.generic_string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "synthpanel: " << e.what() << "\n";
    return synthpanel::exit_code_for(e);
  }
  return 0;
}
