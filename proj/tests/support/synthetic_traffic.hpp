#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "flowgraph/flow_ingest.hpp"
#include "flowgraph/random.hpp"

namespace flowgraph::testing {

/// Client/server traffic with a planted lateral-movement chain. Every flow,
/// attack or not, draws its statistics from the same distribution, so the
/// attack is only visible through who talks to whom.
struct TrafficSpec {
  std::uint64_t seed = 1;
  std::size_t flows = 4000;
  std::size_t clients = 80;
  std::size_t servers = 12;
  double lateral_share = 0.05;
  std::size_t chain_length = 6;
  std::size_t features = 6;
};

inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586;
  double u1 = uniform_real(rng, 0.0, 1.0);
  while (u1 <= 0.0) u1 = uniform_real(rng, 0.0, 1.0);
  const double u2 = uniform_real(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

inline DatasetSchema synthetic_schema(std::size_t features) {
  DatasetSchema s;
  s.name = "synthetic";
  s.source_column = "src";
  s.destination_column = "dst";
  s.label_column = "label";
  s.attack_category_column = "category";
  s.feature_columns.push_back("pkts");
  for (std::size_t f = 1; f < features; ++f) s.feature_columns.push_back("f" + std::to_string(f));
  s.weight_column = "pkts";
  s.positive_label_values = {"1"};
  s.normal_label_values = {"0"};
  return s;
}

inline std::vector<double> flow_statistics(Rng& rng, std::size_t features) {
  std::vector<double> x(features);
  x[0] = std::floor(std::exp(1.5 + 0.6 * standard_normal(rng))) + 1.0;
  for (std::size_t f = 1; f < features; ++f) {
    x[f] = f % 2 ? std::exp(0.5 * standard_normal(rng)) : standard_normal(rng);
  }
  return x;
}

inline FlowDataset synthetic_traffic(const TrafficSpec& spec) {
  static const std::vector<std::string> kCategories = {"Exploits", "Reconnaissance", "Worms"};
  Rng rng(derive_seed(spec.seed, stream_id("synthetic-traffic")));
  const auto client = [](std::size_t i) { return "10.0.0." + std::to_string(i); };
  const auto server = [](std::size_t i) { return "192.168.1." + std::to_string(i); };

  std::vector<std::size_t> chain;
  for (std::size_t i = 0; i < spec.chain_length; ++i) chain.push_back(i * 7 % spec.clients);

  std::vector<FlowRecord> records;
  records.reserve(spec.flows);
  for (std::size_t t = 0; t < spec.flows; ++t) {
    FlowRecord r;
    r.index = t;
    const bool lateral = uniform_real(rng, 0.0, 1.0) < spec.lateral_share;
    if (lateral) {
      const std::size_t hop = uniform_index(rng, chain.size() - 1);
      r.src = client(chain[hop]);
      r.dst = client(chain[hop + 1]);
      r.label = true;
      r.attack_category = kCategories[uniform_index(rng, kCategories.size())];
    } else {
      r.src = client(uniform_index(rng, spec.clients));
      r.dst = server(uniform_index(rng, spec.servers));
      r.label = false;
    }
    r.features = flow_statistics(rng, spec.features);
    records.push_back(std::move(r));
  }
  return FlowDataset(synthetic_schema(spec.features), std::move(records));
}

inline std::string to_csv(const FlowDataset& ds) {
  std::ostringstream out;
  write_dataset(out, ds);
  return out.str();
}

}  // namespace flowgraph::testing
