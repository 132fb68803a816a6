#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowgraph/config.hpp"
#include "flowgraph/error.hpp"
#include "flowgraph/pipeline.hpp"
#include "flowgraph/report.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kData = 3,
  kFit = 4,
  kIo = 5,
};

int exit_code_for(const flowgraph::Error& e) {
  using flowgraph::ErrorKind;
  switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::argument:
      return kConfig;
    case ErrorKind::schema:
    case ErrorKind::data:
    case ErrorKind::consistency:
      return kData;
    case ErrorKind::fit:
      return kFit;
    case ErrorKind::io:
      return kIo;
  }
  return kOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-graph anomaly detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<unsigned> workers;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "Pipeline config file (JSON)")->required();
    cmd->add_option("--set", overrides, "Override a config key, e.g. features.p=16");
    cmd->add_option("-j,--workers", workers, "Worker threads (0 = all cores)");
  };

  auto* featurize = app.add_subcommand("featurize", "Write edge list, node features and expanded flows");
  add_common(featurize);

  auto* tune = app.add_subcommand("tune", "Grid-search detector parameters on the tuning prefix");
  add_common(tune);

  std::optional<std::string> params_file;
  auto* train = app.add_subcommand("train", "Fit detectors and ensembles on the training block");
  add_common(train);
  train->add_option("-p,--params", params_file, "Parameter file (default: <output>/tune/best_params.json)");

  std::optional<std::string> models_dir;
  auto* predict = app.add_subcommand("predict", "Rolling test and attack breakdown on later records");
  add_common(predict);
  predict->add_option("-m,--models", models_dir, "Model directory (default: <output>/models)");

  std::string report_path;
  auto* report = app.add_subcommand("report", "Render a JSON report as text tables");
  report->add_option("report", report_path, "Report JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (report->parsed()) {
      std::cout << flowgraph::cmd_report(report_path);
      return kOk;
    }
    if (workers) overrides.push_back("workers=" + std::to_string(*workers));
    const auto config = flowgraph::load_config(config_path, overrides);
    std::cerr << "config hash " << flowgraph::config_hash(config) << "\n";
    if (featurize->parsed()) {
      flowgraph::cmd_featurize(config);
    } else if (tune->parsed()) {
      std::cout << flowgraph::render_report(flowgraph::cmd_tune(config));
    } else if (train->parsed()) {
      std::optional<std::filesystem::path> path;
      if (params_file) path = *params_file;
      std::cout << flowgraph::render_report(flowgraph::cmd_train(config, path));
    } else if (predict->parsed()) {
      std::optional<std::filesystem::path> path;
      if (models_dir) path = *models_dir;
      std::cout << flowgraph::render_report(flowgraph::cmd_predict(config, path));
    }
    return kOk;
  } catch (const flowgraph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
