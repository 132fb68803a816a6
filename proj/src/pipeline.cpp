#include "flowgraph/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "flowgraph/error.hpp"
#include "flowgraph/graph_build.hpp"
#include "flowgraph/parallel.hpp"
#include "flowgraph/random.hpp"
#include "flowgraph/text_io.hpp"
#include "flowgraph/report.hpp"
#include "flowgraph/topo_features.hpp"

namespace flowgraph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "flowgraph-models";

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("cannot parse " + path.string() + ": " + e.what());
  }
}

std::string stamped(const std::string& hash, const std::string& body) {
  return "# config_hash=" + hash + "\n" + body;
}

FlowDataset block_of(const FlowDataset& all, const IndexRange& range) {
  return all.slice(range.begin, range.end);
}

void write_report(const fs::path& dir, const std::string& name, const EvalReport& report) {
  json j = report_to_json(report);
  write_json(dir / (name + "_report.json"), j);
  write_file(dir / (name + "_report.txt"), render_report(report));
  write_json(dir / (name + "_timings.json"), timings_to_json(report));
  write_file(dir / (name + "_timings.txt"), render_timings(report));
}

void apply_workers(const PipelineConfig& config) { set_worker_count(config.workers); }

}  // namespace

SplitPlan plan_splits(std::size_t records, const PipelineConfig& config) {
  SplitPlan plan;
  const std::size_t tune_end = std::min(records, prefix_length(records, config.tune_fraction));
  const std::size_t train_len = prefix_length(records, config.train_fraction);
  const std::size_t train_end = std::min(records, tune_end + train_len);
  plan.tune = {"tune", 0, tune_end};
  plan.train = {"train", tune_end, train_end};
  plan.next_block = {"next_block", train_end, std::min(records, train_end + train_len)};
  plan.test = {"test", train_end, records};
  return plan;
}

std::map<Regime, ExpandedDataset> build_regimes(const FlowDataset& block,
                                                const PipelineConfig& config,
                                                std::string_view stage) {
  if (block.size() == 0) {
    throw DataError("the " + std::string(stage) + " block contains no records");
  }
  std::map<Regime, ExpandedDataset> out;
  const bool topology = std::any_of(config.regimes.begin(), config.regimes.end(),
                                    [](Regime r) { return r != Regime::standard; });
  std::optional<TrafficGraph> g;
  std::optional<NodeFeatureMatrix> z;
  if (topology) {
    g = build_graph(block, config.weight_column);
    FeatureOptions options;
    options.catalog = config.catalog;
    options.p = config.p;
    options.walk_length = config.walk_length;
    options.walks_per_node = config.walks_per_node;
    options.seed = derive_seed(config.seed, stream_id(stage));
    z = node_features(*g, options);
  }
  for (Regime r : config.regimes) {
    out.emplace(r, as_regime(block, z ? &*z : nullptr, g ? &*g : nullptr, r,
                             config.node_label_rule));
  }
  return out;
}

std::map<Regime, Standardizer> fit_standardizers(const std::map<Regime, ExpandedDataset>& data) {
  std::map<Regime, Standardizer> out;
  for (const auto& [r, d] : data) out[r] = Standardizer::fit(d.values);
  return out;
}

void apply_standardizers(std::map<Regime, ExpandedDataset>& data,
                         const std::map<Regime, Standardizer>& scalers) {
  for (auto& [r, d] : data) {
    auto it = scalers.find(r);
    if (it == scalers.end()) {
      throw ConsistencyError("no standardizer for regime " + std::string(to_string(r)));
    }
    d.values = it->second.transform(d.values);
  }
}

GridResult run_tune(const PipelineConfig& config, const FlowDataset& all) {
  const auto plan = plan_splits(all.size(), config);
  auto data = build_regimes(block_of(all, plan.tune), config, "tune");
  apply_standardizers(data, fit_standardizers(data));
  GridSpec grid{config.regimes, config.grids, config.ensemble};
  GridResult result = grid_search(data, grid);
  result.report.config_hash = config_hash(config);
  result.report.ranges = {plan.tune};
  return result;
}

TrainedPipeline run_train(const PipelineConfig& config, const FlowDataset& all,
                          const std::map<Regime, std::vector<DetectorParams>>& params) {
  const auto plan = plan_splits(all.size(), config);
  auto data = build_regimes(block_of(all, plan.train), config, "train");
  TrainedPipeline out;
  out.scalers = fit_standardizers(data);
  apply_standardizers(data, out.scalers);
  TrainResult trained = train_and_report(data, params, config.ensemble);
  out.models = std::move(trained.models);
  out.report = std::move(trained.report);
  out.report.config_hash = config_hash(config);
  out.report.ranges = {plan.tune, plan.train};
  if (plan.next_block.end > plan.next_block.begin) {
    auto next = build_regimes(block_of(all, plan.next_block), config, "next_block");
    apply_standardizers(next, out.scalers);
    for (const auto& [r, models] : out.models) {
      auto it = next.find(r);
      if (it == next.end()) continue;
      for (auto& cell : evaluate_models(r, models, it->second)) {
        out.report.next_block.push_back(std::move(cell));
      }
    }
    out.report.ranges.push_back(plan.next_block);
  } else {
    out.report.warnings.push_back("no records follow the training block; next-block BA omitted");
  }
  return out;
}

EvalReport run_predict(const PipelineConfig& config, const FlowDataset& all,
                       const std::map<Regime, RegimeModels>& models,
                       const std::map<Regime, Standardizer>& scalers) {
  const auto plan = plan_splits(all.size(), config);
  EvalReport report;
  report.stage = "predict";
  report.evaluation = "models applied to head fractions of the records after training";
  report.config_hash = config_hash(config);
  report.ranges = {plan.tune, plan.train, plan.test};
  const std::size_t flows = plan.test.end - plan.test.begin;
  if (flows == 0) {
    report.warnings.push_back("no records follow the training block");
    return report;
  }
  auto data = build_regimes(block_of(all, plan.test), config, "test");
  for (auto it = data.begin(); it != data.end();) {
    it = models.count(it->first) ? std::next(it) : data.erase(it);
  }
  apply_standardizers(data, scalers);
  for (const auto& [r, d] : data) report.shapes[r] = {d.values.cols(), d.values.rows(), d.outlier_count()};
  report.rolling = rolling_test(models, data, plan.test.begin, flows, config.test_fractions,
                                report.warnings);
  for (const auto& [r, d] : data) {
    const bool has_categories = std::any_of(d.categories.begin(), d.categories.end(),
                                            [](const auto& c) { return c.has_value(); });
    if (!has_categories || !d.labels) continue;
    for (auto& [name, pred] : predict_all(models.at(r), d.values)) {
      report.breakdowns.push_back(
          {r, name, attack_breakdown(pred, *d.labels, d.categories, d.column_ids)});
    }
  }
  return report;
}

json best_params_to_json(const std::map<Regime, std::vector<DetectorParams>>& best,
                         const std::string& config_hash) {
  json regimes = json::object();
  for (const auto& [r, list] : best) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back(params_to_json(p));
    regimes[std::string(to_string(r))] = arr;
  }
  return {{"format", "flowgraph-params"}, {"config_hash", config_hash}, {"regimes", regimes}};
}

std::map<Regime, std::vector<DetectorParams>> best_params_from_json(const json& j) {
  try {
    std::map<Regime, std::vector<DetectorParams>> out;
    for (const auto& [name, list] : j.at("regimes").items()) {
      auto& params = out[parse_regime(name)];
      for (const auto& p : list) params.push_back(params_from_json(p));
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed parameter file: ") + e.what());
  }
}

void cmd_featurize(const PipelineConfig& config) {
  apply_workers(config);
  const auto ds = load_dataset(config.dataset_path, config.schema);
  const auto hash = config_hash(config);
  const auto g = build_graph(ds, config.weight_column);
  FeatureOptions options;
  options.catalog = config.catalog;
  options.p = config.p;
  options.walk_length = config.walk_length;
  options.walks_per_node = config.walks_per_node;
  options.seed = derive_seed(config.seed, stream_id("featurize"));
  const auto z = node_features(g, options);
  const auto mixed = expand(ds, z, g);

  const fs::path dir = config.output_dir / "featurize";
  std::ostringstream edges, nodes, expanded;
  write_edge_list(edges, g);
  write_node_features(nodes, z, g);
  write_expanded(expanded, mixed, ds);
  write_file(dir / "edges.tsv", stamped(hash, edges.str()));
  write_file(dir / "node_features.csv", stamped(hash, nodes.str()));
  write_file(dir / "expanded.csv", stamped(hash, expanded.str()));
  write_json(dir / "manifest.json", {{"config_hash", hash},
                                     {"records", ds.size()},
                                     {"flow_features", ds.m()},
                                     {"node_features", z.p()},
                                     {"nodes", g.node_count()},
                                     {"edges", g.edge_count()},
                                     {"expanded_rows", mixed.values.rows()},
                                     {"warnings", g.warnings()}});
}

EvalReport cmd_tune(const PipelineConfig& config) {
  apply_workers(config);
  const auto ds = load_dataset(config.dataset_path, config.schema);
  auto result = run_tune(config, ds);
  const fs::path dir = config.output_dir / "tune";
  write_json(dir / "best_params.json", best_params_to_json(result.best, result.report.config_hash));
  write_report(dir, "tune", result.report);
  return result.report;
}

EvalReport cmd_train(const PipelineConfig& config, const std::optional<fs::path>& params_file) {
  apply_workers(config);
  const auto hash = config_hash(config);
  const fs::path params_path = params_file.value_or(config.output_dir / "tune" / "best_params.json");
  const json pj = read_json(params_path);
  if (pj.contains("config_hash") && pj.at("config_hash") != hash) {
    throw ConsistencyError("parameter file " + params_path.string() +
                           " was produced with a different config");
  }
  const auto params = best_params_from_json(pj);
  const auto ds = load_dataset(config.dataset_path, config.schema);
  auto trained = run_train(config, ds, params);

  const fs::path models_dir = config.output_dir / "models";
  json manifest = {{"format", kManifestFormat}, {"config_hash", hash}, {"regimes", json::object()}};
  for (const auto& [r, models] : trained.models) {
    const std::string regime(to_string(r));
    json entry;
    json std_json = trained.scalers.at(r).to_json();
    std_json["config_hash"] = hash;
    write_json(models_dir / regime / "standardizer.json", std_json);
    entry["standardizer"] = regime + "/standardizer.json";
    entry["detectors"] = json::array();
    std::vector<std::string> member_files;
    for (const auto& model : models.detectors) {
      const std::string file = std::string(to_string(model->kind())) + ".json";
      json mj = model->to_json();
      mj["config_hash"] = hash;
      write_file(models_dir / regime / file, mj.dump() + "\n");
      member_files.push_back(file);
      entry["detectors"].push_back(regime + "/" + file);
    }
    for (const auto* em : {models.majority ? &*models.majority : nullptr,
                           models.average ? &*models.average : nullptr}) {
      if (!em) continue;
      const std::string key(to_string(em->rule()));
      json ej = em->to_json(member_files);
      ej["config_hash"] = hash;
      write_json(models_dir / regime / ("ensemble_" + key + ".json"), ej);
      entry["ensembles"][key] = regime + "/ensemble_" + key + ".json";
    }
    manifest["regimes"][regime] = entry;
  }
  write_json(models_dir / "manifest.json", manifest);
  write_report(config.output_dir / "train", "train", trained.report);
  return trained.report;
}

EvalReport cmd_predict(const PipelineConfig& config, const std::optional<fs::path>& models_dir) {
  apply_workers(config);
  const auto hash = config_hash(config);
  const fs::path dir = models_dir.value_or(config.output_dir / "models");
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.value("format", "") != kManifestFormat) {
    throw DataError(dir.string() + " does not hold a model manifest");
  }
  if (manifest.value("config_hash", "") != hash) {
    throw ConsistencyError("models in " + dir.string() + " were trained with config " +
                           manifest.value("config_hash", "?") + ", current config is " + hash);
  }
  std::map<Regime, RegimeModels> models;
  std::map<Regime, Standardizer> scalers;
  try {
    for (const auto& [name, entry] : manifest.at("regimes").items()) {
      const Regime r = parse_regime(name);
      scalers[r] = Standardizer::from_json(read_json(dir / entry.at("standardizer").get<std::string>()));
      auto& m = models[r];
      for (const auto& file : entry.at("detectors")) {
        m.detectors.push_back(load_detector(dir / file.get<std::string>()));
      }
      if (entry.contains("ensembles")) {
        for (const auto& [rule, file] : entry.at("ensembles").items()) {
          const fs::path path = dir / file.get<std::string>();
          auto em = EnsembleModel::from_json(read_json(path), path.parent_path());
          (parse_vote_rule(rule) == VoteRule::majority_vote ? m.majority : m.average) = std::move(em);
        }
      }
    }
  } catch (const json::exception& e) {
    throw DataError("malformed model manifest: " + std::string(e.what()));
  }
  const auto ds = load_dataset(config.dataset_path, config.schema);
  EvalReport report = run_predict(config, ds, models, scalers);
  const fs::path out = config.output_dir / "predict";
  write_json(out / "predict_report.json", report_to_json(report));
  write_file(out / "predict_report.txt", render_report(report));
  std::ostringstream rolling;
  write_rolling_csv(rolling, report);
  write_file(out / "rolling.csv", rolling.str());
  std::ostringstream breakdown;
  breakdown << "regime,detector,category,detected,total\n";
  for (const auto& e : report.breakdowns) {
    for (const auto& [cat, c] : e.counts) {
      breakdown << to_string(e.regime) << ',' << e.detector << ',' << quote_field(cat, ',') << ','
                << c.detected << ',' << c.total << '\n';
    }
  }
  write_file(out / "breakdown.csv", stamped(hash, breakdown.str()));
  return report;
}

std::string cmd_report(const fs::path& report_json) {
  return render_report(report_from_json(read_json(report_json)));
}

}  // namespace flowgraph
