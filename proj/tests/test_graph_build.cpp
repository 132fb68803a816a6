#include <doctest.h>

#include <sstream>

#include "flowgraph/error.hpp"
#include "flowgraph/graph_build.hpp"
#include "oracles/graph_oracle.hpp"
#include "support/flows.hpp"
#include "support/synthetic_traffic.hpp"

using namespace flowgraph;
using oracle::RawFlow;

TEST_CASE("repeated flows between an ordered pair are summed") {
  const auto g = build_graph(testing::flows_of({{"a", "b", 2}, {"b", "a", 5}, {"a", "b", 3}}), "w");
  REQUIRE(g.node_count() == 2);
  CHECK(g.edge_count() == 2);
  CHECK(g.weight(g.node_of("a"), g.node_of("b")) == 5.0);
  CHECK(g.weight(g.node_of("b"), g.node_of("a")) == 5.0);
  CHECK(g.out_edges(g.node_of("a")).size() == 1);
  CHECK(g.in_edges(g.node_of("a")).size() == 1);
}

TEST_CASE("node ids follow first appearance and first_seen records the flow") {
  const auto g = build_graph(
      testing::flows_of({{"x", "y", 1}, {"y", "z", 1}, {"w", "x", 1}}), "w");
  CHECK(g.endpoints() == std::vector<std::string>{"x", "y", "z", "w"});
  CHECK(g.first_seen() == std::vector<std::size_t>{0, 0, 1, 2});
  CHECK_FALSE(g.find("nobody").has_value());
  CHECK_THROWS_AS(g.node_of("nobody"), ConsistencyError);
}

TEST_CASE("self-loops are kept as edges") {
  const auto g = build_graph(testing::flows_of({{"a", "a", 4}, {"a", "a", 1}}), "w");
  CHECK(g.node_count() == 1);
  CHECK(g.edge_count() == 1);
  CHECK(g.weight(0, 0) == 5.0);
}

TEST_CASE("zero-weight flows still create the edge") {
  const auto g = build_graph(testing::flows_of({{"a", "b", 0}}), "w");
  CHECK(g.edge_count() == 1);
  CHECK(g.weight(0, 1) == 0.0);
}

TEST_CASE("negative aggregate weights warn, non-finite weights are rejected") {
  GraphBuilder b;
  b.add_flow("a", "b", -3.0);
  const auto g = std::move(b).finish();
  CHECK(g.weight(0, 1) == -3.0);
  CHECK_FALSE(g.warnings().empty());
  GraphBuilder bad;
  CHECK_THROWS_AS(bad.add_flow("a", "b", std::numeric_limits<double>::infinity()), DataError);
}

TEST_CASE("weight column must be a feature") {
  CHECK_THROWS_AS(build_graph(testing::flows_of({{"a", "b", 1}}), "bytes"), SchemaError);
}

TEST_CASE("matches the pair-sum oracle on random flow sets") {
  Rng rng(20261016);
  for (int trial = 0; trial < 200; ++trial) {
    const auto flows = testing::random_flows(rng, 100, 10);
    const auto g = build_graph(testing::flows_of(flows), "w");
    const auto sums = oracle::pair_sums(flows);
    const auto ends = oracle::endpoints(flows);
    REQUIRE(g.node_count() == ends.size());
    REQUIRE(g.edge_count() == sums.size());
    for (const auto& [pair, w] : sums) {
      CHECK(g.weight(g.node_of(pair.first), g.node_of(pair.second)) == w);
    }
    std::size_t out_total = 0, in_total = 0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      out_total += g.out_edges(v).size();
      in_total += g.in_edges(v).size();
    }
    CHECK(out_total == sums.size());
    CHECK(in_total == sums.size());
  }
}

TEST_CASE("node labels mark attack sources") {
  testing::TrafficSpec spec;
  spec.flows = 500;
  const auto ds = testing::synthetic_traffic(spec);
  const auto g = build_graph(ds, "pkts");
  const auto by_source = node_labels(ds, g);
  const auto either = node_labels(ds, g, NodeLabelRule::source_or_destination);
  std::size_t sources = 0, any = 0;
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    sources += by_source[v];
    any += either[v];
    if (by_source[v]) CHECK(either[v]);
  }
  CHECK(sources > 0);
  CHECK(any >= sources);
  CHECK_THROWS_AS(node_labels(testing::flows_of({{"a", "b", 1}}),
                              build_graph(testing::flows_of({{"a", "b", 1}}), "w")),
                  DataError);
}

TEST_CASE("edge list output") {
  const auto g = build_graph(testing::flows_of({{"a", "b", 2.5}, {"a", "c", 1}}), "w");
  std::ostringstream out;
  write_edge_list(out, g);
  CHECK(out.str() == "a\tb\t2.5\na\tc\t1\n");
}
