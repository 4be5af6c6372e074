#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "pws/commands.hpp"
#include "pws/io.hpp"

namespace {

constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-smooth spline approximation"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  for (const char* name : {"synth", "fit", "blend", "study"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--set", overrides, "Override one key, e.g. de.seed=3 (repeatable)");
    sub->add_option("--out", out_dir, "Output directory")->required();
  }
  app.get_subcommand("synth")->description("Generate samples, truth curves and a JSON sidecar");
  app.get_subcommand("fit")->description("Fit a problem and write the report and artifacts");
  app.get_subcommand("blend")->description("Blend two fitted patches over their overlap");
  app.get_subcommand("study")->description("Mesh refinement study with log-log slopes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  pws::Artifacts artifacts;
  try {
    const pws::RunConfig config = pws::load_run_config(config_path, overrides);
    if (command == "synth") artifacts = pws::cmd_synth(config);
    if (command == "fit") artifacts = pws::cmd_fit(config);
    if (command == "blend") artifacts = pws::cmd_blend(config);
    if (command == "study") artifacts = pws::cmd_study(config);
    pws::write_artifacts(artifacts, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "pws " << command << ": " << e.what() << '\n';
    return kUsageError;
  }

  for (const auto& w : artifacts.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "pws " << command << ": wrote " << artifacts.files.size() << " files to " << out_dir << '\n';
  if (artifacts.exit_code != 0) std::cerr << "pws " << command << ": fit quality threshold exceeded\n";
  return artifacts.exit_code;
}
