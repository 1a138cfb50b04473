// pxp: variational dynamics driver for the constrained spin-J chain.
//
//   pxp evolve   --config run.cfg [--output traj.csv]
//   pxp leakage  --config run.cfg [--output report.csv]
//   pxp validate --config run.cfg [--output report.txt]
//   pxp sweep    --config run.cfg [--output grid.csv] [--threads N]
//
// Exit codes: 0 success, 1 validation criteria failed, 2 configuration
// error, 3 numeric event (pole / degenerate point / resonance / blow-up).

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pxpdyn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variational dynamics for the constrained spin-J chain"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  int threads_override = 0;

  const std::pair<const char*, const char*> modes[] = {
      {"evolve", "Integrate the variational equations of motion"},
      {"leakage", "Single-point energy / leakage-rate report"},
      {"validate", "Run the built-in validation criteria"},
      {"sweep", "Grid scan over one or two parameters"},
  };
  for (const auto& [name, desc] : modes) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "Run configuration file")->required();
    sub->add_option("--output", output_override, "Output path (default: stdout)");
    if (std::string(name) == "sweep")
      sub->add_option("--threads", threads_override, "Worker threads (default: hardware)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "config error: cannot read '" << config_path << "'\n";
    return 2;
  }
  try {
    pxpdyn::RunConfig cfg = pxpdyn::parse_run_config(in, mode);
    if (!output_override.empty()) cfg.output_path = output_override;
    if (threads_override > 0) cfg.threads = threads_override;
    return pxpdyn::run_config(cfg, std::cerr);
  } catch (const pxpdyn::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pxpdyn::validation_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pxpdyn::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
