// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

#include "plgat/error.hpp"

namespace plgat {

namespace {

constexpr std::string_view kPredictionHeader =
    "sample_id,target_id,pose_rank,score,label,rmsd";

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, std::string_view name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, fmt::format("bad {} '{}'", name, field));
  }
  return value;
}

void check_csv_safe(const std::string &s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw DataError(fmt::format("identifier '{}' contains a CSV delimiter", s));
  }
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> auroc(std::span<const double> scores,
                            std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("auroc: scores and labels differ in length");
  }
  std::size_t n_pos = 0;
  double pos_rank_sum = 0.0;
  std::vector<double> ranks = midranks(scores);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == 1.0) {
      ++n_pos;
      pos_rank_sum += ranks[k];
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("spearman: length mismatch");
  std::vector<double> rx = midranks(x);
  std::vector<double> ry = midranks(y);
  return pearson(rx, ry);
}

MetricReport classification_metrics(const std::vector<PredictionRecord> &preds,
                                    double threshold) {
  if (preds.empty()) throw DataError("no predictions to evaluate");
  MetricReport r;
  r.count = preds.size();
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::vector<double> scores;
  std::vector<double> labels;
  for (const PredictionRecord &p : preds) {
    if (p.label != 0.0 && p.label != 1.0) {
      throw DataError(fmt::format("sample '{}' has non-binary label {}",
                                  p.sample_id, p.label));
    }
    if (!std::isfinite(p.score)) {
      throw NumericError(fmt::format("sample '{}' has a non-finite score",
                                     p.sample_id));
    }
    const bool positive = p.label == 1.0;
    const bool called = p.score >= threshold;
    if (positive) {
      ++r.positives;
      if (called) ++tp;
    } else {
      ++r.negatives;
      if (!called) ++tn;
    }
    scores.push_back(p.score);
    labels.push_back(p.label);
  }
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(r.count);
  if (r.positives > 0) {
    r.sensitivity = static_cast<double>(tp) / static_cast<double>(r.positives);
  }
  if (r.negatives > 0) {
    r.specificity = static_cast<double>(tn) / static_cast<double>(r.negatives);
  }
  r.auroc = auroc(scores, labels);
  return r;
}

MetricReport regression_metrics(const std::vector<PredictionRecord> &preds) {
  if (preds.empty()) throw DataError("no predictions to evaluate");
  MetricReport r;
  r.count = preds.size();
  std::vector<double> pred;
  std::vector<double> label;
  double se = 0.0;
  double ae = 0.0;
  for (const PredictionRecord &p : preds) {
    if (!std::isfinite(p.score) || !std::isfinite(p.label)) {
      throw NumericError(fmt::format("sample '{}' has a non-finite value",
                                     p.sample_id));
    }
    const double err = p.score - p.label;
    se += err * err;
    ae += std::abs(err);
    pred.push_back(p.score);
    label.push_back(p.label);
  }
  const double n = static_cast<double>(r.count);
  r.rmse = std::sqrt(se / n);
  r.mae = ae / n;
  r.pearson = pearson(pred, label);
  r.spearman = spearman(pred, label);
  const double ml = mean_of(label);
  double ss_tot = 0.0;
  for (double y : label) ss_tot += (y - ml) * (y - ml);
  if (ss_tot > 0.0) r.r2 = 1.0 - se / ss_tot;
  return r;
}

std::vector<TopNRow> topn_pose_analysis(
    const std::vector<PredictionRecord> &preds,
    const std::vector<std::size_t> &ns, RankOrder order, double rmsd_good) {
  std::map<std::string, std::vector<const PredictionRecord *>> groups;
  for (const PredictionRecord &p : preds) groups[p.sample_id].push_back(&p);
  if (groups.empty()) throw DataError("no predictions for top-N analysis");

  // Rank of the best near-native pose within each complex (1-based).
  std::vector<std::optional<std::size_t>> first_good;
  for (auto &[id, poses] : groups) {
    bool any_rmsd = std::any_of(poses.begin(), poses.end(),
                                [](const auto *p) { return p->rmsd.has_value(); });
    if (!any_rmsd) {
      throw DataError(fmt::format("complex '{}' has no pose with an rmsd", id));
    }
    std::stable_sort(poses.begin(), poses.end(), [&](const auto *a, const auto *b) {
      if (a->score != b->score) {
        return order == RankOrder::kDescending ? a->score > b->score
                                               : a->score < b->score;
      }
      return a->pose_rank < b->pose_rank;
    });
    std::optional<std::size_t> rank;
    for (std::size_t k = 0; k < poses.size(); ++k) {
      if (poses[k]->rmsd && *poses[k]->rmsd < rmsd_good) {
        rank = k + 1;
        break;
      }
    }
    first_good.push_back(rank);
  }

  std::vector<TopNRow> rows;
  for (std::size_t n : ns) {
    if (n == 0) throw UsageError("top-N values must be positive");
    TopNRow row;
    row.n = n;
    row.complexes = first_good.size();
    row.hits = static_cast<std::size_t>(
        std::count_if(first_good.begin(), first_good.end(),
                      [n](const auto &r) { return r && *r <= n; }));
    row.percent = 100.0 * static_cast<double>(row.hits) /
                  static_cast<double>(row.complexes);
    rows.push_back(row);
  }
  return rows;
}

std::string format_number(double v) { return fmt::format("{}", v); }

std::string format_optional(const std::optional<double> &v) {
  return v ? format_number(*v) : std::string("undefined");
}

void write_predictions(std::ostream &out,
                       const std::vector<PredictionRecord> &preds,
                       bool with_warnings) {
  out << kPredictionHeader << (with_warnings ? ",warnings" : "") << '\n';
  for (const PredictionRecord &p : preds) {
    check_csv_safe(p.sample_id);
    check_csv_safe(p.target_id);
    out << p.sample_id << ',' << p.target_id << ',' << p.pose_rank << ','
        << format_number(p.score) << ',' << format_number(p.label) << ','
        << (p.rmsd ? format_number(*p.rmsd) : std::string());
    if (with_warnings) {
      check_csv_safe(p.warnings);
      out << ',' << p.warnings;
    }
    out << '\n';
  }
}

std::vector<PredictionRecord> read_predictions(std::istream &in) {
  std::string line;
  std::size_t line_number = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing prediction header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (!line.starts_with(kPredictionHeader)) {
    throw ParseError(1, fmt::format("expected header '{}'", kPredictionHeader));
  }
  const bool with_warnings = line.size() > kPredictionHeader.size();

  std::vector<PredictionRecord> preds;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != (with_warnings ? 7u : 6u)) {
      throw ParseError(line_number, fmt::format("expected {} fields, got {}",
                                                with_warnings ? 7 : 6, f.size()));
    }
    PredictionRecord p;
    p.sample_id = std::string(f[0]);
    p.target_id = std::string(f[1]);
    p.pose_rank = parse_field<int>(f[2], line_number, "pose_rank");
    p.score = parse_field<double>(f[3], line_number, "score");
    p.label = parse_field<double>(f[4], line_number, "label");
    if (!f[5].empty()) p.rmsd = parse_field<double>(f[5], line_number, "rmsd");
    if (with_warnings) p.warnings = std::string(f[6]);
    preds.push_back(std::move(p));
  }
  return preds;
}

void write_metric_csv(std::ostream &out, const MetricReport &r,
                      bool classification) {
  out << "metric,value\n";
  out << "count," << r.count << '\n';
  if (classification) {
    out << "positives," << r.positives << '\n';
    out << "negatives," << r.negatives << '\n';
    out << "accuracy," << format_optional(r.accuracy) << '\n';
    out << "sensitivity," << format_optional(r.sensitivity) << '\n';
    out << "specificity," << format_optional(r.specificity) << '\n';
    out << "auroc," << format_optional(r.auroc) << '\n';
  } else {
    out << "rmse," << format_optional(r.rmse) << '\n';
    out << "mae," << format_optional(r.mae) << '\n';
    out << "pearson," << format_optional(r.pearson) << '\n';
    out << "spearman," << format_optional(r.spearman) << '\n';
    out << "r2," << format_optional(r.r2) << '\n';
  }
}

std::string format_metric_report(const MetricReport &r, bool classification) {
  auto show = [](const std::optional<double> &v) {
    return v ? fmt::format("{:.4f}", *v) : std::string("undefined");
  };
  if (classification) {
    return fmt::format(
        "n={} (pos={}, neg={})\naccuracy     {}\nsensitivity  {}\n"
        "specificity  {}\nauroc        {}\n",
        r.count, r.positives, r.negatives, show(r.accuracy),
        show(r.sensitivity), show(r.specificity), show(r.auroc));
  }
  return fmt::format(
      "n={}\nrmse      {}\nmae       {}\npearson   {}\nspearman  {}\n"
      "r2        {}\n",
      r.count, show(r.rmse), show(r.mae), show(r.pearson), show(r.spearman),
      show(r.r2));
}

}  // namespace plgat
