// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef PLGAT_METRICS_HPP_
#define PLGAT_METRICS_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plgat {

struct PredictionRecord {
  std::string sample_id;
  std::string target_id;
  int pose_rank = 0;
  double score = 0.0;
  double label = 0.0;
  std::optional<double> rmsd;
  std::string warnings;

  friend bool operator==(const PredictionRecord &,
                         const PredictionRecord &) = default;
};

// Fields that cannot be computed for the input are left empty and reported
// as "undefined".
struct MetricReport {
  std::size_t count = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> auroc;

  std::optional<double> rmse;
  std::optional<double> mae;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> r2;
};

// Predicted positive iff score >= threshold. Labels must be 0 or 1.
MetricReport classification_metrics(const std::vector<PredictionRecord> &preds,
                                    double threshold = 0.5);
MetricReport regression_metrics(const std::vector<PredictionRecord> &preds);

// Mann-Whitney statistic with half credit for ties. Empty without both
// classes.
std::optional<double> auroc(std::span<const double> scores,
                            std::span<const double> labels);
// 1-based ranks; ties share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);
std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y);

enum class RankOrder { kDescending, kAscending };

struct TopNRow {
  std::size_t n = 0;
  std::size_t hits = 0;
  std::size_t complexes = 0;
  double percent = 0.0;
};

// Records are grouped by sample_id (one group per complex, one record per
// pose). For each N: percentage of complexes whose N best-scored poses
// include a pose with rmsd < rmsd_good. Score ties break by pose_rank.
std::vector<TopNRow> topn_pose_analysis(
    const std::vector<PredictionRecord> &preds, const std::vector<std::size_t> &ns,
    RankOrder order = RankOrder::kDescending, double rmsd_good = 2.0);

// CSV: sample_id,target_id,pose_rank,score,label,rmsd[,warnings]
void write_predictions(std::ostream &out,
                       const std::vector<PredictionRecord> &preds,
                       bool with_warnings);
std::vector<PredictionRecord> read_predictions(std::istream &in);

// Shortest round-trip text for a double.
std::string format_number(double v);
std::string format_optional(const std::optional<double> &v);

// metric,value rows; undefined values print as "undefined".
void write_metric_csv(std::ostream &out, const MetricReport &report,
                      bool classification);
std::string format_metric_report(const MetricReport &report,
                                 bool classification);

}  // namespace plgat

#endif  // PLGAT_METRICS_HPP_
