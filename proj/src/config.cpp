#include "flowgraph/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <unistd.h>

#include "flowgraph/error.hpp"
#include "flowgraph/random.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {

using nlohmann::json;

namespace {

class Problems {
 public:
  void check(const std::string& where, const std::function<void()>& body) {
    try {
      body();
    } catch (const json::exception& e) {
      add(where, e.what());
    } catch (const std::exception& e) {
      add(where, e.what());
    }
  }
  void add(const std::string& where, const std::string& what) {
    list_.push_back(where + ": " + what);
  }
  void raise_if_any() const {
    if (list_.empty()) return;
    std::string msg = "invalid config (" + std::to_string(list_.size()) + " problem" +
                      (list_.size() == 1 ? "" : "s") + ")";
    for (const auto& p : list_) msg += "\n  " + p;
    throw ConfigError(msg);
  }

 private:
  std::vector<std::string> list_;
};

void reject_unknown(Problems& problems, const std::string& where, const json& obj,
                    std::initializer_list<const char*> known) {
  if (!obj.is_object()) {
    problems.add(where, "expected an object");
    return;
  }
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) problems.add(where + "." + key, "unknown key");
  }
}

json as_list(const json& v) { return v.is_array() ? v : json::array({v}); }

struct GridAxis {
  const char* key;
  json defaults;
  std::function<void(DetectorParams&, const json&)> apply;
};

std::vector<GridAxis> axes_of(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::ocsvm:
      return {{"nu", json::array({0.01, 0.05, 0.1, 0.2}),
               [](DetectorParams& p, const json& v) { p.nu = v.get<double>(); }},
              {"gamma", json::array({"1/d", 0.1, 1.0}),
               [](DetectorParams& p, const json& v) {
                 if (v.is_string()) {
                   if (v.get<std::string>() != "1/d") {
                     throw ConfigError("gamma must be a number or \"1/d\"");
                   }
                   p.gamma.reset();
                 } else {
                   p.gamma = v.get<double>();
                 }
               }},
              {"tolerance", json::array({1e-4}),
               [](DetectorParams& p, const json& v) { p.tolerance = v.get<double>(); }},
              {"max_iterations", json::array({10'000'000}),
               [](DetectorParams& p, const json& v) {
                 p.max_iterations = v.get<std::size_t>();
               }}};
    case DetectorKind::lof:
      return {{"k", json::array({5, 10, 20, 35}),
               [](DetectorParams& p, const json& v) { p.k = v.get<std::size_t>(); }},
              {"contamination", json::array({0.01, 0.05, 0.1}),
               [](DetectorParams& p, const json& v) { p.contamination = v.get<double>(); }}};
    case DetectorKind::iforest:
      return {{"n_trees", json::array({50, 100, 200}),
               [](DetectorParams& p, const json& v) { p.n_trees = v.get<std::size_t>(); }},
              {"subsample", json::array({64, 256}),
               [](DetectorParams& p, const json& v) { p.subsample = v.get<std::size_t>(); }},
              {"contamination", json::array({0.01, 0.05, 0.1}),
               [](DetectorParams& p, const json& v) { p.contamination = v.get<double>(); }}};
  }
  return {};
}

/// Cartesian product with the first axis varying slowest.
std::vector<DetectorParams> expand_grid(DetectorKind kind, const json& lists) {
  const auto axes = axes_of(kind);
  std::vector<DetectorParams> out;
  DetectorParams base;
  base.kind = kind;
  std::function<void(std::size_t, DetectorParams)> rec = [&](std::size_t a, DetectorParams p) {
    if (a == axes.size()) {
      p.validate();
      out.push_back(p);
      return;
    }
    for (const auto& v : lists.at(axes[a].key)) {
      DetectorParams q = p;
      axes[a].apply(q, v);
      rec(a + 1, q);
    }
  };
  rec(0, base);
  return out;
}

json default_lists(DetectorKind kind) {
  json lists = json::object();
  for (const auto& axis : axes_of(kind)) lists[axis.key] = axis.defaults;
  return lists;
}

constexpr DetectorKind kDetectorOrder[] = {DetectorKind::ocsvm, DetectorKind::lof,
                                           DetectorKind::iforest};

}  // namespace

std::vector<DetectorParams> default_grid(DetectorKind kind) {
  return expand_grid(kind, default_lists(kind));
}

PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  Problems problems;
  json resolved = json::object();
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(problems, "config", j,
                 {"dataset", "graph", "features", "regimes", "splits", "detectors", "ensemble",
                  "seed", "workers", "output_dir"});

  const json dataset = j.value("dataset", json::object());
  reject_unknown(problems, "dataset", dataset, {"path", "schema", "delimiter"});
  problems.check("dataset.path", [&] {
    const auto path = dataset.at("path").get<std::string>();
    c.dataset_path = base_dir / path;
    resolved["dataset"]["path"] = path;
  });
  bool schema_ok = false;
  problems.check("dataset.schema", [&] {
    c.schema = schema_from_json(dataset.at("schema"));
    if (dataset.contains("delimiter")) {
      const auto d = dataset.at("delimiter").get<std::string>();
      if (d.size() != 1) throw ConfigError("delimiter must be a single character");
      c.schema.delimiter = d[0];
    }
    c.schema.validate();
    resolved["dataset"]["schema"] = schema_to_json(c.schema);
    schema_ok = true;
  });

  const json graph = j.value("graph", json::object());
  reject_unknown(problems, "graph", graph, {"weight_column", "node_label_rule"});
  problems.check("graph.weight_column", [&] {
    c.weight_column = graph.value("weight_column", schema_ok ? c.schema.weight_column : "");
    if (schema_ok) {
      try {
        c.schema.feature_index(c.weight_column);
      } catch (const SchemaError&) {
        throw ConfigError("\"" + c.weight_column + "\" is not a feature column");
      }
    }
    resolved["graph"]["weight_column"] = c.weight_column;
  });
  problems.check("graph.node_label_rule", [&] {
    const auto rule = graph.value("node_label_rule", std::string("source"));
    if (rule == "source") {
      c.node_label_rule = NodeLabelRule::source;
    } else if (rule == "source_or_destination") {
      c.node_label_rule = NodeLabelRule::source_or_destination;
    } else {
      throw ConfigError("expected \"source\" or \"source_or_destination\"");
    }
    resolved["graph"]["node_label_rule"] = rule;
  });

  const json features = j.value("features", json::object());
  reject_unknown(problems, "features", features, {"catalog", "p", "walk_length", "walks_per_node"});
  problems.check("features.catalog", [&] {
    c.catalog = parse_catalog(features.value("catalog", std::string("egonet")));
    resolved["features"]["catalog"] = to_string(c.catalog);
  });
  problems.check("features.p", [&] {
    c.p = features.value("p", std::size_t{48});
    if (c.p > kMaxFeatureCount) {
      throw ConfigError("p must be at most " + std::to_string(kMaxFeatureCount));
    }
    resolved["features"]["p"] = c.p;
  });
  problems.check("features.walk_length", [&] {
    c.walk_length = features.value("walk_length", std::size_t{10});
    if (c.walk_length == 0) throw ConfigError("must be positive");
    resolved["features"]["walk_length"] = c.walk_length;
  });
  problems.check("features.walks_per_node", [&] {
    c.walks_per_node = features.value("walks_per_node", std::size_t{8});
    if (c.walks_per_node == 0) throw ConfigError("must be positive");
    resolved["features"]["walks_per_node"] = c.walks_per_node;
  });

  problems.check("regimes", [&] {
    if (j.contains("regimes")) {
      c.regimes.clear();
      for (const auto& r : j.at("regimes")) {
        const Regime regime = parse_regime(r.get<std::string>());
        if (std::find(c.regimes.begin(), c.regimes.end(), regime) != c.regimes.end()) {
          throw ConfigError("duplicate regime " + r.get<std::string>());
        }
        c.regimes.push_back(regime);
      }
    }
    resolved["regimes"] = json::array();
    for (Regime r : c.regimes) resolved["regimes"].push_back(to_string(r));
  });

  const json splits = j.value("splits", json::object());
  reject_unknown(problems, "splits", splits, {"tune", "train", "test"});
  problems.check("splits", [&] {
    c.tune_fraction = splits.value("tune", 0.01);
    c.train_fraction = splits.value("train", 0.1);
    if (splits.contains("test")) c.test_fractions = splits.at("test").get<std::vector<double>>();
    if (!(c.tune_fraction > 0.0) || !(c.train_fraction > 0.0)) {
      throw ConfigError("tune and train fractions must be positive");
    }
    if (!(c.tune_fraction < c.train_fraction)) {
      throw ConfigError("tune fraction must be smaller than the train fraction");
    }
    if (!(c.tune_fraction + c.train_fraction < 1.0)) {
      throw ConfigError("tune and train blocks must leave data for testing");
    }
    if (c.test_fractions.empty()) throw ConfigError("test fraction list is empty");
    for (double f : c.test_fractions) {
      if (!(f > 0.0)) throw ConfigError("test fractions must be positive");
      if (f < c.train_fraction) {
        throw ConfigError("test fraction " + format_double(f) + " is below the train fraction");
      }
    }
    resolved["splits"] = {
        {"tune", c.tune_fraction}, {"train", c.train_fraction}, {"test", c.test_fractions}};
  });

  problems.check("seed", [&] {
    c.seed = j.value("seed", std::uint64_t{0});
    resolved["seed"] = c.seed;
  });
  problems.check("workers", [&] {
    c.workers = j.value("workers", 0u);
    resolved["workers"] = c.workers;
  });
  problems.check("output_dir", [&] {
    const auto out = j.value("output_dir", std::string("output"));
    c.output_dir = base_dir / out;
    resolved["output_dir"] = out;
    std::filesystem::path probe = std::filesystem::absolute(c.output_dir);
    std::error_code ec;
    while (!std::filesystem::exists(probe, ec) && probe.has_parent_path() &&
           probe.parent_path() != probe) {
      probe = probe.parent_path();
    }
    if (!std::filesystem::is_directory(probe, ec)) {
      throw ConfigError(probe.string() + " is not a directory");
    }
    if (::access(probe.c_str(), W_OK) != 0) {
      throw ConfigError(probe.string() + " is not writable");
    }
  });

  const bool explicit_detectors = j.contains("detectors");
  const json detectors = j.value("detectors", json::object());
  reject_unknown(problems, "detectors", detectors, {"ocsvm", "lof", "iforest"});
  resolved["detectors"] = json::object();
  for (DetectorKind kind : kDetectorOrder) {
    const std::string name(to_string(kind));
    if (explicit_detectors && !detectors.contains(name)) continue;
    const json given = detectors.value(name, json::object());
    if (given.is_boolean()) {
      if (!given.get<bool>()) continue;
    }
    problems.check("detectors." + name, [&] {
      json lists = default_lists(kind);
      if (given.is_object()) {
        for (const auto& [key, value] : given.items()) {
          if (!lists.contains(key)) throw ConfigError("unknown hyperparameter \"" + key + "\"");
          lists[key] = as_list(value);
          if (lists[key].empty()) throw ConfigError("empty list for \"" + key + "\"");
        }
      } else if (!given.is_boolean()) {
        throw ConfigError("expected an object or a boolean");
      }
      auto grid = expand_grid(kind, lists);
      const std::uint64_t seed = derive_seed(c.seed, stream_id(name));
      for (auto& p : grid) p.seed = seed;
      c.grids.push_back(std::move(grid));
      resolved["detectors"][name] = lists;
    });
  }

  const json ensemble = j.value("ensemble", json::object());
  reject_unknown(problems, "ensemble", ensemble, {"rules", "tie_break", "contamination"});
  problems.check("ensemble", [&] {
    c.ensemble.contamination = ensemble.value("contamination", 0.1);
    if (!(c.ensemble.contamination >= 0.0 && c.ensemble.contamination < 1.0)) {
      throw ConfigError("contamination must lie in [0, 1)");
    }
    c.ensemble.tie = parse_tie_break(ensemble.value("tie_break", std::string("normal")));
    c.ensemble.majority = c.ensemble.average = true;
    if (ensemble.contains("rules")) {
      c.ensemble.majority = c.ensemble.average = false;
      for (const auto& r : ensemble.at("rules")) {
        const VoteRule rule = parse_vote_rule(r.get<std::string>());
        (rule == VoteRule::majority_vote ? c.ensemble.majority : c.ensemble.average) = true;
      }
    }
    json rules = json::array();
    if (c.ensemble.majority) rules.push_back(to_string(VoteRule::majority_vote));
    if (c.ensemble.average) rules.push_back(to_string(VoteRule::average_score));
    resolved["ensemble"] = {{"rules", rules},
                            {"tie_break", to_string(c.ensemble.tie)},
                            {"contamination", c.ensemble.contamination}};
  });

  problems.raise_if_any();
  c.resolved = std::move(resolved);
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override \"" + assignment + "\" is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key \"" + key + "\" has an empty component");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j, path.parent_path());
}

std::string config_hash(const PipelineConfig& config) {
  json j = config.resolved;
  j.erase("output_dir");
  j.erase("workers");
  if (j.contains("splits")) j["splits"].erase("test");
  return fnv1a_hex(j.dump());
}

}  // namespace flowgraph
