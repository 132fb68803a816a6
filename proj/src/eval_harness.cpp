#include "flowgraph/eval_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "flowgraph/error.hpp"
#include "flowgraph/flow_ingest.hpp"
#include "flowgraph/parallel.hpp"

namespace flowgraph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const std::vector<bool>& require_labels(const ExpandedDataset& data) {
  if (!data.labels) {
    throw DataError(std::string("regime ") + std::string(to_string(data.regime)) +
                    " has no labels to evaluate against");
  }
  return *data.labels;
}

std::vector<bool> above(const std::vector<double>& scores, double threshold) {
  std::vector<bool> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold;
  return out;
}

bool better(const BalancedAccuracy& a, const BalancedAccuracy& b) {
  if (std::isnan(a.value)) return false;
  if (std::isnan(b.value)) return true;
  return a.value > b.value;
}

DataShape shape_of(const ExpandedDataset& data) {
  return {data.values.cols(), data.values.rows(), data.outlier_count()};
}

void add_ensembles(RegimeModels& models, const Matrix& x, const EnsembleSettings& settings) {
  if (models.detectors.empty()) return;
  if (settings.majority) {
    models.majority = fit_ensemble(models.detectors, x, VoteRule::majority_vote,
                                   settings.contamination, settings.tie);
  }
  if (settings.average) {
    models.average = fit_ensemble(models.detectors, x, VoteRule::average_score,
                                  settings.contamination, settings.tie);
  }
}

}  // namespace

Confusion confusion(const std::vector<bool>& pred, const std::vector<bool>& truth) {
  if (pred.size() != truth.size()) {
    throw ArgumentError("prediction and label counts differ: " + std::to_string(pred.size()) +
                        " vs " + std::to_string(truth.size()));
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i]) {
      pred[i] ? ++c.tp : ++c.fn;
    } else {
      pred[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

BalancedAccuracy balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& truth) {
  BalancedAccuracy ba;
  ba.counts = confusion(pred, truth);
  const auto& c = ba.counts;
  const std::size_t pos = c.tp + c.fn;
  const std::size_t neg = c.tn + c.fp;
  ba.tpr = pos ? static_cast<double>(c.tp) / static_cast<double>(pos) : kNaN;
  ba.tnr = neg ? static_cast<double>(c.tn) / static_cast<double>(neg) : kNaN;
  if (pos && neg) {
    ba.value = 0.5 * (ba.tpr + ba.tnr);
  } else {
    ba.single_class = true;
    ba.value = pos ? ba.tpr : ba.tnr;
  }
  return ba;
}

bool ranges_disjoint_and_ordered(const std::vector<IndexRange>& ranges) {
  std::size_t frontier = 0;
  for (const auto& r : ranges) {
    if (r.end < r.begin || r.begin < frontier) return false;
    frontier = r.end;
  }
  return true;
}

GridResult grid_search(const std::map<Regime, ExpandedDataset>& tune, const GridSpec& grid) {
  struct Candidate {
    Regime regime;
    std::size_t detector;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  std::vector<Regime> regimes;
  for (Regime r : grid.regimes) {
    auto it = tune.find(r);
    if (it == tune.end()) continue;
    require_labels(it->second);
    regimes.push_back(r);
    for (std::size_t d = 0; d < grid.detectors.size(); ++d) {
      if (grid.detectors[d].empty()) {
        throw ConfigError("empty candidate list for a detector");
      }
      for (std::size_t i = 0; i < grid.detectors[d].size(); ++i) candidates.push_back({r, d, i});
    }
  }

  std::vector<CellResult> cells(candidates.size());
  std::vector<std::shared_ptr<const DetectorModel>> fitted(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    const auto& cand = candidates[c];
    const auto& data = tune.at(cand.regime);
    const auto& params = grid.detectors[cand.detector][cand.index];
    CellResult& cell = cells[c];
    cell.regime = cand.regime;
    cell.detector = std::string(to_string(params.kind));
    cell.params = params;
    const auto start = std::chrono::steady_clock::now();
    try {
      auto model = fit_detector(data.values, params);
      cell.fit_seconds = seconds_since(start);
      cell.ba = balanced_accuracy(above(model->training_scores(), model->threshold()),
                                  *data.labels);
      fitted[c] = std::move(model);
    } catch (const Error& e) {
      cell.fit_seconds = seconds_since(start);
      cell.failed = true;
      cell.error = e.what();
    }
  });

  GridResult result;
  result.report.stage = "tune";
  result.report.evaluation = "fit and scored on the labeled tuning prefix";
  std::vector<std::string> failures;
  std::size_t c = 0;
  for (Regime r : regimes) {
    const auto& data = tune.at(r);
    result.report.shapes[r] = shape_of(data);
    RegimeModels models;
    std::vector<DetectorParams> best_params;
    std::vector<CellResult> best_cells;
    for (std::size_t d = 0; d < grid.detectors.size(); ++d) {
      std::optional<std::size_t> best;
      std::vector<std::string> reasons;
      for (std::size_t i = 0; i < grid.detectors[d].size(); ++i, ++c) {
        result.report.candidates.push_back(cells[c]);
        if (cells[c].failed) {
          reasons.push_back(grid.detectors[d][i].describe() + ": " + cells[c].error);
          continue;
        }
        if (!best || better(cells[c].ba, cells[*best].ba)) best = c;
      }
      if (!best) {
        std::string msg = std::string(to_string(r)) + "/" +
                          std::string(to_string(grid.detectors[d].front().kind)) +
                          ": every candidate failed";
        for (const auto& reason : reasons) msg += "\n  " + reason;
        failures.push_back(msg);
        continue;
      }
      best_params.push_back(*cells[*best].params);
      best_cells.push_back(cells[*best]);
      models.detectors.push_back(fitted[*best]);
    }
    if (!failures.empty()) continue;
    add_ensembles(models, data.values, grid.ensemble);
    for (auto& cell : best_cells) result.report.cells.push_back(std::move(cell));
    const auto& labels = *data.labels;
    CellResult cell;
    cell.regime = r;
    if (models.majority) {
      cell.detector = kEnsembleMajority;
      cell.ba = balanced_accuracy(models.majority->predict(data.values).anomalous, labels);
      result.report.cells.push_back(cell);
    }
    if (models.average) {
      cell.detector = kEnsembleAverage;
      cell.ba = balanced_accuracy(models.average->predict(data.values).anomalous, labels);
      result.report.cells.push_back(cell);
    }
    result.best[r] = std::move(best_params);
    result.models[r] = std::move(models);
  }
  if (!failures.empty()) {
    std::string msg = "grid search failed";
    for (const auto& f : failures) msg += "\n" + f;
    throw FitError(msg);
  }
  return result;
}

TrainResult train_and_report(const std::map<Regime, ExpandedDataset>& train,
                             const std::map<Regime, std::vector<DetectorParams>>& params,
                             const EnsembleSettings& ensemble) {
  struct Job {
    Regime regime;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (const auto& [r, list] : params) {
    if (!train.count(r)) continue;
    for (std::size_t i = 0; i < list.size(); ++i) jobs.push_back({r, i});
  }
  std::vector<CellResult> cells(jobs.size());
  std::vector<std::shared_ptr<const DetectorModel>> fitted(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& data = train.at(jobs[j].regime);
    const auto& p = params.at(jobs[j].regime)[jobs[j].index];
    CellResult& cell = cells[j];
    cell.regime = jobs[j].regime;
    cell.detector = std::string(to_string(p.kind));
    cell.params = p;
    const auto start = std::chrono::steady_clock::now();
    try {
      fitted[j] = fit_detector(data.values, p);
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    cell.fit_seconds = seconds_since(start);
  });

  TrainResult result;
  result.report.stage = "train";
  result.report.evaluation = "fit and scored on the training block";
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (fitted[j]) result.models[jobs[j].regime].detectors.push_back(fitted[j]);
  }
  for (const auto& [r, data] : train) {
    if (!params.count(r)) continue;
    result.report.shapes[r] = shape_of(data);
    auto& models = result.models[r];
    add_ensembles(models, data.values, ensemble);
    const auto& labels = require_labels(data);
    std::vector<CellResult> evaluated = evaluate_models(r, models, data);
    // Failed cells keep their slot in detector order.
    std::size_t e = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].regime != r) continue;
      if (cells[j].failed) {
        result.report.cells.push_back(cells[j]);
        continue;
      }
      CellResult cell = evaluated[e++];
      cell.fit_seconds = cells[j].fit_seconds;
      cell.params = cells[j].params;
      result.report.cells.push_back(cell);
    }
    for (; e < evaluated.size(); ++e) result.report.cells.push_back(evaluated[e]);

    bool has_categories = std::any_of(data.categories.begin(), data.categories.end(),
                                      [](const auto& c) { return c.has_value(); });
    if (has_categories) {
      for (auto& [name, pred] : predict_all(models, data.values)) {
        result.report.breakdowns.push_back(
            {r, name, attack_breakdown(pred, labels, data.categories, data.column_ids)});
      }
    }
  }
  return result;
}

std::vector<std::pair<std::string, std::vector<bool>>> predict_all(const RegimeModels& models,
                                                                   const Matrix& x) {
  std::vector<std::pair<std::string, std::vector<bool>>> out(models.detectors.size());
  parallel_for(models.detectors.size(), [&](std::size_t i) {
    out[i] = {std::string(to_string(models.detectors[i]->kind())),
              models.detectors[i]->predict(x)};
  });
  if (models.majority) out.emplace_back(kEnsembleMajority, models.majority->predict(x).anomalous);
  if (models.average) out.emplace_back(kEnsembleAverage, models.average->predict(x).anomalous);
  return out;
}

std::vector<CellResult> evaluate_models(Regime regime, const RegimeModels& models,
                                        const ExpandedDataset& data) {
  const auto& labels = require_labels(data);
  std::vector<CellResult> cells;
  for (auto& [name, pred] : predict_all(models, data.values)) {
    CellResult cell;
    cell.regime = regime;
    cell.detector = name;
    cell.ba = balanced_accuracy(pred, labels);
    cells.push_back(std::move(cell));
  }
  for (std::size_t i = 0; i < models.detectors.size(); ++i) {
    cells[i].params = models.detectors[i]->params();
  }
  return cells;
}

AttackBreakdown attack_breakdown(const std::vector<bool>& pred, const std::vector<bool>& truth,
                                 const std::vector<std::optional<std::string>>& categories,
                                 const std::vector<std::size_t>& column_ids) {
  if (pred.size() != truth.size() || categories.size() != truth.size()) {
    throw ArgumentError("prediction, label and category counts differ");
  }
  AttackBreakdown out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth[i]) continue;
    if (!categories[i] || categories[i]->empty()) {
      const std::size_t id = i < column_ids.size() ? column_ids[i] : i;
      throw DataError("positive record " + std::to_string(id) + " has no attack category");
    }
    auto& count = out[*categories[i]];
    ++count.total;
    if (pred[i]) ++count.detected;
  }
  return out;
}

std::vector<RollingPoint> rolling_test(const std::map<Regime, RegimeModels>& models,
                                       const std::map<Regime, ExpandedDataset>& test,
                                       std::size_t block_begin, std::size_t block_flows,
                                       const std::vector<double>& fractions,
                                       std::vector<std::string>& warnings) {
  std::vector<std::size_t> limits;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("test fractions must be positive");
    double used = f;
    if (f > 1.0) {
      warnings.push_back("test fraction " + std::to_string(f) +
                         " exceeds the available data; clipped to 1");
      used = 1.0;
    }
    limits.push_back(prefix_length(block_flows, used));
  }

  std::vector<RollingPoint> points;
  for (const auto& [r, data] : test) {
    auto m = models.find(r);
    if (m == models.end()) continue;
    const auto& labels = require_labels(data);
    const auto predictions = predict_all(m->second, data.values);
    const std::size_t first = points.size();
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      std::vector<std::size_t> cols;
      for (std::size_t t = 0; t < data.first_seen.size(); ++t) {
        if (data.first_seen[t] >= block_begin && data.first_seen[t] - block_begin < limits[fi]) {
          cols.push_back(t);
        }
      }
      if (cols.empty()) {
        warnings.push_back(std::string(to_string(r)) + ": test fraction " +
                           std::to_string(fractions[fi]) + " covers no samples");
      }
      for (const auto& [name, pred] : predictions) {
        std::vector<bool> p(cols.size()), y(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i) {
          p[i] = pred[cols[i]];
          y[i] = labels[cols[i]];
        }
        const auto ba = balanced_accuracy(p, y);
        RollingPoint point;
        point.regime = r;
        point.detector = name;
        point.fraction = fractions[fi];
        point.samples = cols.size();
        point.counts = ba.counts;
        point.tpr = ba.tpr;
        point.tnr = ba.tnr;
        points.push_back(point);
      }
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = first; i < points.size(); ++i) {
      lo = std::min(lo, static_cast<double>(points[i].counts.fp));
      hi = std::max(hi, static_cast<double>(points[i].counts.fp));
    }
    for (std::size_t i = first; i < points.size(); ++i) {
      points[i].scaled_fp =
          hi > lo ? (static_cast<double>(points[i].counts.fp) - lo) / (hi - lo) : 0.0;
    }
  }
  return points;
}

}  // namespace flowgraph
