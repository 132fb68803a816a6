#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowgraph/detectors.hpp"

namespace flowgraph {

enum class VoteRule { majority_vote, average_score };
enum class TieBreak { normal, anomalous };

std::string_view to_string(VoteRule rule);
VoteRule parse_vote_rule(std::string_view name);
std::string_view to_string(TieBreak tie);
TieBreak parse_tie_break(std::string_view name);

/// Anomalous iff strictly more than half of the members vote anomalous; an
/// exact half resolves to `tie`.
bool majority_verdict(std::size_t anomalous_votes, std::size_t members, TieBreak tie);

struct EnsembleVerdict {
  std::vector<bool> anomalous;
  /// Mean normalized member score (average_score rule only).
  std::vector<double> scores;
};

/// Voting ensemble over fitted detectors sharing one input dimension.
class EnsembleModel {
 public:
  /// Min-max normalization statistics of one member's training scores.
  struct Normalization {
    double min = 0.0;
    double max = 0.0;
    /// Normalized score in [0,1]; constant members map to 0.5.
    double apply(double score) const;
  };

  static EnsembleModel fit(std::vector<std::shared_ptr<const DetectorModel>> members,
                           const Matrix& xtrain, VoteRule rule, double contamination,
                           TieBreak tie = TieBreak::normal);

  EnsembleVerdict predict(const Matrix& x) const;

  VoteRule rule() const noexcept { return rule_; }
  TieBreak tie_break() const noexcept { return tie_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<std::shared_ptr<const DetectorModel>>& members() const noexcept {
    return members_;
  }
  const std::vector<Normalization>& normalization() const noexcept { return norms_; }

  /// Container JSON: rule metadata plus the given member file names.
  nlohmann::json to_json(const std::vector<std::string>& member_files) const;
  /// Members are loaded from paths relative to `base_dir`.
  static EnsembleModel from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

 private:
  std::vector<std::shared_ptr<const DetectorModel>> members_;
  std::vector<Normalization> norms_;
  VoteRule rule_ = VoteRule::majority_vote;
  TieBreak tie_ = TieBreak::normal;
  double contamination_ = 0.1;
  double threshold_ = 0.0;
  std::size_t dimension_ = 0;
};

EnsembleModel fit_ensemble(std::vector<std::shared_ptr<const DetectorModel>> members,
                           const Matrix& xtrain, VoteRule rule, double contamination,
                           TieBreak tie = TieBreak::normal);

}  // namespace flowgraph
