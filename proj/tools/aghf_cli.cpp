// Command-line front end: run, sweep, list-systems, validate.

#include "aghf/aghf.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

int report(const aghf::Error& e) {
  std::cerr << "error[" << aghf::to_string(e.category()) << "]: " << e.what() << '\n';
  return aghf::exit_code(e.category());
}

aghf::RunConfig config_from(const std::string& arg) {
  // a bundled case name is accepted wherever a config path is
  if (!std::filesystem::exists(arg)) {
    for (const auto& n : aghf::case_names())
      if (n == arg) return aghf::load_case(n).config;
  }
  return aghf::load_run_config(arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AGHF motion planner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the planning pipeline for one config");
  run->add_option("config", config_path, "Config file or bundled case name")->required();
  run->add_option("-o,--output", out_dir, "Output directory (overrides the config)");
  run->add_flag("-q,--quiet", quiet, "Do not print the summary");

  std::vector<double> lambdas;
  bool serial = false;
  auto* sw = app.add_subcommand("sweep", "Run one config for several values of lambda");
  sw->add_option("config", config_path, "Config file or bundled case name")->required();
  sw->add_option("--lambdas", lambdas, "Values of lambda")->required()->expected(1, -1);
  sw->add_option("-o,--output", out_dir, "Output directory (overrides the config)");
  sw->add_flag("--serial", serial, "Run the jobs one after another");

  auto* ls = app.add_subcommand("list-systems", "List builtin systems and bundled cases");

  auto* val = app.add_subcommand("validate", "Check a config without running it");
  val->add_option("config", config_path, "Config file or bundled case name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ls) {
      for (const auto& n : aghf::builtin_names()) {
        const auto s = aghf::builtin_system(n);
        std::printf("%-28s n=%d m=%d\n", n.c_str(), s.n, s.m);
      }
      std::printf("\ncases:\n");
      for (const auto& n : aghf::case_names()) std::printf("  %s\n", n.c_str());
      return 0;
    }
    aghf::RunConfig cfg = config_from(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (*val) {
      aghf::resolve(cfg);
      std::printf("%s: ok\n", cfg.name.c_str());
      return 0;
    }
    const std::filesystem::path dir = aghf::output_dir_for(cfg);
    if (*run) {
      const auto outcome = aghf::run_pipeline(cfg);
      aghf::write_artifacts(outcome, dir);
      if (!quiet) {
        std::printf("%s: endpoint_error %.6g  action %.6g -> %.6g  converged %s (%s)  %.2f s\n", cfg.name.c_str(),
                    outcome.plan.endpoint_error, outcome.flow.action_initial, outcome.flow.action_final,
                    outcome.flow.converged ? "yes" : "no", outcome.flow.stop_reason.c_str(), outcome.wall_time);
        std::printf("artifacts in %s\n", dir.string().c_str());
      }
      return 0;
    }
    if (*sw) {
      aghf::resolve(cfg);
      const auto rows = aghf::sweep(cfg, lambdas, !serial);
      aghf::write_sweep_csv(rows, dir / "sweep.csv");
      for (const auto& r : rows) {
        if (r.error.empty())
          std::printf("lambda %-10g endpoint_error %.6g  action %.6g\n", r.lambda, r.endpoint_error, r.action_final);
        else
          std::printf("lambda %-10g failed: %s\n", r.lambda, r.error.c_str());
      }
      std::printf("wrote %s\n", (dir / "sweep.csv").string().c_str());
      return 0;
    }
  } catch (const aghf::Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
