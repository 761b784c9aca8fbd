#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "iwr_cli/cli.hpp"

namespace {

iwr::Json base_config(const std::string& path, const std::vector<std::string>& sets) {
  iwr::Json j = iwr::Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw iwr::cli::ConfigError("cannot open config file " + path);
    try {
      j = iwr::Json::parse(in);
    } catch (const iwr::Json::exception& e) {
      throw iwr::cli::ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
  }
  for (const auto& s : sets) iwr::cli::apply_assignment(j, s);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental methods with reshuffling and adaptive steps"};
  app.require_subcommand(1);

  std::string config_path, out_dir, trace_path;
  std::vector<std::string> sets, checks, axes;
  iwr::cli::SweepOptions sweep_options;

  auto* run = app.add_subcommand("run", "Run one configuration and write its trace");
  run->add_option("-c,--config", config_path, "JSON config file");
  run->add_option("-s,--set", sets, "Override a config key, e.g. strategy.alpha=0.1")->take_all();
  run->add_option("-o,--out", out_dir, "Output directory (default: config output_dir)");

  auto* verify = app.add_subcommand("verify", "Check a stored trace against the inequalities and bounds");
  verify->add_option("-t,--trace", trace_path, "Trace file")->required();
  verify->add_option("--checks", checks, "Checks to run, or 'all'")->delimiter(',');
  verify->add_option("-o,--out", out_dir, "Output directory")->default_val("out");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations concurrently");
  sweep->add_option("-c,--config", config_path, "Base JSON config file");
  sweep->add_option("-s,--set", sets, "Override a base config key")->take_all();
  sweep->add_option("-a,--axis", axes, "Axis key=v1,v2,...")->required();
  sweep->add_option("-j,--threads", sweep_options.threads, "Worker threads (0: all cores)");
  sweep->add_option("--slope-min", sweep_options.slope_min, "Lower end of the slope fit range");
  sweep->add_option("--slope-max", sweep_options.slope_max, "Upper end of the slope fit range");
  sweep->add_option("-o,--out", out_dir, "Output directory")->default_val("out");

  auto* report = app.add_subcommand("report", "Summarize a stored trace");
  report->add_option("-t,--trace", trace_path, "Trace file")->required();
  report->add_option("-o,--out", out_dir, "Output directory")->default_val("out");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = iwr::cli::config_from_json(base_config(config_path, sets));
      return iwr::cli::cmd_run(config, out_dir, std::cout).exit_code;
    }
    if (verify->parsed()) return iwr::cli::cmd_verify(trace_path, checks, out_dir, std::cout);
    if (sweep->parsed()) {
      std::vector<iwr::cli::SweepAxis> parsed;
      for (const auto& a : axes) parsed.push_back(iwr::cli::parse_axis(a));
      return iwr::cli::cmd_sweep(base_config(config_path, sets), parsed, sweep_options, out_dir, std::cout);
    }
    if (report->parsed()) return iwr::cli::cmd_report(trace_path, out_dir, std::cout);
  } catch (const iwr::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
