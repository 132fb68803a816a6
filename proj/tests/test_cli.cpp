#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "flowgraph/flow_ingest.hpp"
#include "support/synthetic_traffic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path dir = fs::temp_directory_path() / "flowgraph_test_cli";

  Sandbox() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    flowgraph::testing::TrafficSpec spec;
    spec.flows = 1500;
    std::ofstream(dir / "flows.csv") << flowgraph::testing::to_csv(flowgraph::testing::synthetic_traffic(spec));
    write_config("run.json", base());
  }
  ~Sandbox() { fs::remove_all(dir); }

  static json base() {
    return {{"dataset", {{"path", "flows.csv"}, {"schema", flowgraph::schema_to_json(flowgraph::testing::synthetic_schema(6))}}},
            {"features", {{"p", 8}, {"walks_per_node", 2}}},
            {"splits", {{"tune", 0.05}, {"train", 0.1}}},
            {"detectors", {{"lof", {{"k", 5}, {"contamination", 0.05}}},
                           {"iforest", {{"n_trees", 20}, {"subsample", 64}, {"contamination", 0.05}}}}},
            {"output_dir", "out"}};
  }

  void write_config(const std::string& name, const json& j) const { std::ofstream(dir / name) << j.dump(2); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(FLOWGRAPH_CLI) + " " + args + " > " + (dir / "stdout.txt").string() +
                            " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string cfg(const std::string& name = "run.json") const { return "-c " + (dir / name).string(); }

  std::string output(const char* file) const {
    std::ifstream in(dir / file);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
};

}  // namespace

TEST_CASE("full command sequence succeeds") {
  Sandbox sb;
  CHECK(sb.run("featurize " + sb.cfg()) == 0);
  CHECK(sb.output("stderr.txt").find("config hash") != std::string::npos);
  CHECK(sb.run("tune " + sb.cfg()) == 0);
  CHECK(sb.output("stdout.txt").find("Balanced accuracy") != std::string::npos);
  CHECK(sb.run("train " + sb.cfg() + " -j 1") == 0);
  CHECK(sb.run("predict " + sb.cfg()) == 0);
  CHECK(sb.output("stdout.txt").find("Rolling test") != std::string::npos);
  CHECK(sb.run("report " + (sb.dir / "out/train/train_report.json").string()) == 0);
  CHECK(sb.output("stdout.txt") == sb.output("out/train/train_report.txt"));

  CHECK(sb.run("predict " + sb.cfg() + " --set seed=5") == 3);
  CHECK(sb.output("stderr.txt").find("trained with config") != std::string::npos);
  CHECK(sb.run("train " + sb.cfg() + " --set seed=5") == 3);
}

TEST_CASE("exit codes") {
  Sandbox sb;
  CHECK(sb.run("") == 2);
  CHECK(sb.run("tune") == 2);
  CHECK(sb.run("explode " + sb.cfg()) == 2);
  CHECK(sb.run("tune " + sb.cfg() + " --set features.p=99") == 2);
  CHECK(sb.run("tune -c " + (sb.dir / "absent.json").string()) == 5);
  CHECK(sb.run("train " + sb.cfg() + " -p " + (sb.dir / "absent.json").string()) == 5);

  auto bad_path = Sandbox::base();
  bad_path["dataset"]["path"] = "absent.csv";
  sb.write_config("bad_path.json", bad_path);
  CHECK(sb.run("featurize " + sb.cfg("bad_path.json")) == 5);

  auto bad_schema = Sandbox::base();
  bad_schema["dataset"]["schema"]["source_column"] = "source_ip";
  sb.write_config("bad_schema.json", bad_schema);
  CHECK(sb.run("featurize " + sb.cfg("bad_schema.json")) == 3);

  auto unfittable = Sandbox::base();
  unfittable["detectors"] = {{"lof", {{"k", 100000}}}};
  sb.write_config("unfittable.json", unfittable);
  CHECK(sb.run("tune " + sb.cfg("unfittable.json")) == 4);
}
