#include "flowgraph/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "flowgraph/error.hpp"

namespace flowgraph {

std::string_view to_string(VoteRule rule) {
  return rule == VoteRule::majority_vote ? "majority_vote" : "average_score";
}

VoteRule parse_vote_rule(std::string_view name) {
  if (name == "majority_vote") return VoteRule::majority_vote;
  if (name == "average_score") return VoteRule::average_score;
  throw ConfigError("unknown ensemble rule '" + std::string(name) + "'");
}

std::string_view to_string(TieBreak tie) { return tie == TieBreak::normal ? "normal" : "anomalous"; }

TieBreak parse_tie_break(std::string_view name) {
  if (name == "normal") return TieBreak::normal;
  if (name == "anomalous") return TieBreak::anomalous;
  throw ConfigError("unknown tie break '" + std::string(name) + "'");
}

bool majority_verdict(std::size_t anomalous_votes, std::size_t members, TieBreak tie) {
  const std::size_t twice = 2 * anomalous_votes;
  if (twice > members) return true;
  if (twice == members && members > 0) return tie == TieBreak::anomalous;
  return false;
}

double EnsembleModel::Normalization::apply(double score) const {
  if (!(max > min)) return 0.5;
  return std::clamp((score - min) / (max - min), 0.0, 1.0);
}

EnsembleModel EnsembleModel::fit(std::vector<std::shared_ptr<const DetectorModel>> members,
                                 const Matrix& xtrain, VoteRule rule, double contamination,
                                 TieBreak tie) {
  if (members.empty()) throw ArgumentError("ensemble needs at least one member");
  if (!(contamination > 0.0 && contamination <= 0.5)) {
    throw ArgumentError("ensemble contamination must be in (0, 0.5]");
  }
  EnsembleModel em;
  em.dimension_ = members.front()->dimension();
  for (const auto& m : members) {
    if (!m) throw ArgumentError("ensemble member is null");
    if (m->dimension() != em.dimension_) {
      throw ArgumentError("ensemble members disagree on input dimension");
    }
  }
  em.members_ = std::move(members);
  em.rule_ = rule;
  em.tie_ = tie;
  em.contamination_ = contamination;

  const std::size_t n = xtrain.cols();
  std::vector<double> averaged(n, 0.0);
  for (const auto& m : em.members_) {
    const auto scores = m->score(xtrain);
    Normalization norm;
    if (!scores.empty()) {
      const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
      norm = {*lo, *hi};
    }
    if (!std::isfinite(norm.min) || !std::isfinite(norm.max)) {
      throw FitError("ensemble: member produced non-finite training scores");
    }
    for (std::size_t t = 0; t < n; ++t) averaged[t] += norm.apply(scores[t]);
    em.norms_.push_back(norm);
  }
  for (double& v : averaged) v /= static_cast<double>(em.members_.size());
  if (rule == VoteRule::average_score && n > 0) {
    em.threshold_ = quantile(averaged, 1.0 - contamination);
  }
  return em;
}

EnsembleVerdict EnsembleModel::predict(const Matrix& x) const {
  const std::size_t n = x.cols();
  EnsembleVerdict out;
  out.anomalous.assign(n, false);
  if (n == 0) return out;
  if (x.rows() != dimension_) {
    throw ArgumentError("ensemble fitted on dimension " + std::to_string(dimension_) + ", got " +
                        std::to_string(x.rows()));
  }

  if (rule_ == VoteRule::majority_vote) {
    std::vector<std::vector<bool>> votes;
    votes.reserve(members_.size());
    for (const auto& m : members_) votes.push_back(m->predict(x));
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t yes = 0;
      for (const auto& v : votes) yes += v[t];
      out.anomalous[t] = majority_verdict(yes, members_.size(), tie_);
    }
    return out;
  }

  out.scores.assign(n, 0.0);
  for (std::size_t k = 0; k < members_.size(); ++k) {
    const auto scores = members_[k]->score(x);
    for (std::size_t t = 0; t < n; ++t) out.scores[t] += norms_[k].apply(scores[t]);
  }
  for (std::size_t t = 0; t < n; ++t) {
    out.scores[t] /= static_cast<double>(members_.size());
    out.anomalous[t] = out.scores[t] > threshold_;
  }
  return out;
}

nlohmann::json EnsembleModel::to_json(const std::vector<std::string>& member_files) const {
  if (member_files.size() != members_.size()) {
    throw ArgumentError("one file name per ensemble member is required");
  }
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& n : norms_) norms.push_back({{"min", n.min}, {"max", n.max}});
  return {{"format", "flowgraph-ensemble"},
          {"format_version", 1},
          {"rule", to_string(rule_)},
          {"tie_break", to_string(tie_)},
          {"contamination", contamination_},
          {"threshold", encode_real(threshold_)},
          {"dimension", dimension_},
          {"members", member_files},
          {"normalization", norms}};
}

EnsembleModel EnsembleModel::from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir) {
  try {
    if (j.value("format", "") != "flowgraph-ensemble") throw DataError("not an ensemble file");
    EnsembleModel em;
    em.rule_ = parse_vote_rule(j.at("rule").get<std::string>());
    em.tie_ = parse_tie_break(j.at("tie_break").get<std::string>());
    em.contamination_ = j.at("contamination").get<double>();
    em.threshold_ = decode_real(j.at("threshold"));
    em.dimension_ = j.at("dimension").get<std::size_t>();
    for (const auto& file : j.at("members")) {
      em.members_.push_back(load_detector(base_dir / file.get<std::string>()));
      if (em.members_.back()->dimension() != em.dimension_) {
        throw DataError("ensemble member dimension mismatch");
      }
    }
    for (const auto& n : j.at("normalization")) {
      em.norms_.push_back({n.at("min").get<double>(), n.at("max").get<double>()});
    }
    if (em.norms_.size() != em.members_.size() || em.members_.empty()) {
      throw DataError("ensemble normalization does not match members");
    }
    return em;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ensemble file: ") + e.what());
  }
}

EnsembleModel fit_ensemble(std::vector<std::shared_ptr<const DetectorModel>> members,
                           const Matrix& xtrain, VoteRule rule, double contamination,
                           TieBreak tie) {
  return EnsembleModel::fit(std::move(members), xtrain, rule, contamination, tie);
}

}  // namespace flowgraph
