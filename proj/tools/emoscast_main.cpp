// emoscast command-line interface.
//
//   emoscast simulate    --config run.json            synthetic data CSVs
//   emoscast fit         --config run.json [...]      rolling fits, params.csv
//   emoscast interpolate --config run.json [...]      + cluster assignments
//   emoscast verify      --config run.json [...]      + scores and histograms
//   emoscast pipeline    --config run.json [...]      full chain
//
// Overrides: --lead-time N restricts to one lead time, --model NAME to
// one model, --seed S replaces the run seed.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "emoscast/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<int> lead_time;
  std::optional<std::string> model;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_overrides) {
  cmd->add_option("--config", args.config_path, "JSON run configuration")
      ->required();
  if (with_overrides) {
    cmd->add_option("--lead-time", args.lead_time,
                    "restrict the run to one lead time");
    cmd->add_option("--model", args.model, "restrict the run to one model");
  }
  cmd->add_option("--seed", args.seed, "override the run seed");
}

emoscast::RunConfig make_config(const CommonArgs& args) {
  emoscast::RunConfig config = emoscast::load_run_config(args.config_path);
  if (args.seed)
    config.seed = *args.seed;
  if (args.lead_time)
    emoscast::restrict_lead_time(config, *args.lead_time);
  if (args.model)
    emoscast::restrict_model(config, *args.model);
  return config;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"truncated-normal EMOS post-processing of wind-speed "
               "ensembles with semi-local cluster interpolation"};
  app.require_subcommand(1);

  CommonArgs simulate_args, fit_args, interp_args, verify_args, pipeline_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "write synthetic data CSVs");
  add_common(simulate, simulate_args, false);
  CLI::App* fit = app.add_subcommand("fit", "rolling EMOS fits");
  add_common(fit, fit_args, true);
  CLI::App* interpolate =
      app.add_subcommand("interpolate", "fits plus cluster assignments");
  add_common(interpolate, interp_args, true);
  CLI::App* verify =
      app.add_subcommand("verify", "score the validation period");
  add_common(verify, verify_args, true);
  CLI::App* pipeline = app.add_subcommand("pipeline", "full experiment");
  add_common(pipeline, pipeline_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) {
      emoscast::run_simulate(make_config(simulate_args));
    } else if (fit->parsed()) {
      emoscast::run_pipeline(make_config(fit_args), emoscast::Stage::Fit);
    } else if (interpolate->parsed()) {
      emoscast::run_pipeline(make_config(interp_args),
                             emoscast::Stage::Interpolate);
    } else if (verify->parsed()) {
      emoscast::run_pipeline(make_config(verify_args),
                             emoscast::Stage::Verify);
    } else if (pipeline->parsed()) {
      emoscast::run_pipeline(make_config(pipeline_args),
                             emoscast::Stage::Verify);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
