// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

// plgat: prepare | train | predict | evaluate | topn

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "plgat/chemio.hpp"
#include "plgat/complexbuild.hpp"
#include "plgat/error.hpp"
#include "plgat/featurize.hpp"
#include "plgat/gat.hpp"
#include "plgat/metrics.hpp"
#include "plgat/train.hpp"

namespace fs = std::filesystem;

namespace plgat {
namespace {

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_output(const fs::path &path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void require_file(const fs::path &path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw DataError(fmt::format("{} '{}' does not exist", what, path.string()));
  }
}

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

void write_config_echo(const fs::path &path, const ConfigEntries &entries) {
  std::ofstream out = open_output(path);
  for (const auto &[key, value] : entries) out << key << '=' << value << '\n';
}

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos
                         ? std::string()
                         : field.substr(first, last - first + 1));
  }
  return fields;
}

double parse_double(const std::string &text, const std::string &where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception &) {
  }
  throw DataError(fmt::format("{}: not a number: '{}'", where, text));
}

// ---------------------------------------------------------------- prepare

struct PrepareOptions {
  std::string protein;
  std::string ligand;
  std::string crystal;
  std::string manifest;
  std::string labels;
  std::string target;
  std::string out;
  std::string skip_log;
  double cutoff_pocket = kDefaultPocketCutoff;
  double cutoff_interaction = kDefaultInteractionCutoff;
  bool balance = false;
  std::optional<double> max_mw;
  std::uint64_t seed = 0;
};

struct ComplexInput {
  fs::path protein;
  fs::path ligand;
  fs::path crystal;  // empty: labels come from the table
};

struct Skip {
  std::string sample_id;
  int pose_rank = 0;
  std::string reason;
  std::string detail;
};

// Rows of "id,kind,value[,pose]". IC50 rows for one key are averaged in log
// space; Ki/Kd become -log10 affinities.
class LabelTable {
 public:
  static LabelTable load(const fs::path &path) {
    LabelTable table;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_number = 0;
    std::map<Key, std::vector<double>> ic50;
    while (std::getline(in, line)) {
      ++line_number;
      if (line.empty() || line[0] == '#') continue;
      const auto fields = split_csv_line(line);
      if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
      if (line_number == 1 && fields[0] == "id") continue;
      const std::string where = fmt::format("{}:{}", path.string(), line_number);
      if (fields.size() < 3 || fields.size() > 4) {
        throw ParseError(line_number,
                         fmt::format("{}: expected id,kind,value[,pose]", path.string()));
      }
      Key key{fields[0], 0};
      if (fields.size() == 4 && !fields[3].empty()) {
        key.second = static_cast<int>(parse_double(fields[3], where));
      }
      const std::string &kind = fields[1];
      const double value = parse_double(fields[2], where);
      if (kind == "ic50") {
        ic50[key].push_back(value);
      } else if (kind == "ki") {
        table.entries_[key] = affinity_label(AffinityMeasure::kKi, value);
      } else if (kind == "kd") {
        table.entries_[key] = affinity_label(AffinityMeasure::kKd, value);
      } else {
        LabelValue label{label_kind_from_name(kind), value};
        if (label.kind == LabelKind::kActivity && value != 0.0 && value != 1.0) {
          throw DataError(fmt::format("{}: activity must be 0 or 1", where));
        }
        table.entries_[key] = label;
      }
    }
    for (const auto &[key, values] : ic50) table.entries_[key] = pic50_label(values);
    return table;
  }

  std::optional<LabelValue> find(const std::string &id, int pose) const {
    if (auto it = entries_.find({id, pose}); it != entries_.end()) return it->second;
    if (auto it = entries_.find({id, 0}); it != entries_.end()) return it->second;
    return std::nullopt;
  }

 private:
  using Key = std::pair<std::string, int>;
  std::map<Key, LabelValue> entries_;
};

std::vector<ComplexInput> collect_inputs(const PrepareOptions &opt) {
  std::vector<ComplexInput> inputs;
  if (!opt.manifest.empty()) {
    if (!opt.protein.empty() || !opt.ligand.empty()) {
      throw UsageError("--manifest excludes --protein/--ligand");
    }
    require_file(opt.manifest, "manifest");
    const fs::path base = fs::path(opt.manifest).parent_path();
    std::istringstream in(read_file(opt.manifest));
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (line.empty() || line[0] == '#') continue;
      const auto fields = split_csv_line(line);
      if (line_number == 1 && !fields.empty() && fields[0] == "protein") continue;
      if (fields.size() < 2 || fields.size() > 3) {
        throw ParseError(line_number, "manifest: expected protein,ligand[,crystal]");
      }
      ComplexInput c{base / fields[0], base / fields[1], {}};
      if (fields.size() == 3 && !fields[2].empty()) c.crystal = base / fields[2];
      inputs.push_back(std::move(c));
    }
  } else {
    if (opt.protein.empty() || opt.ligand.empty()) {
      throw UsageError("prepare needs --manifest or both --protein and --ligand");
    }
    inputs.push_back({opt.protein, opt.ligand, opt.crystal});
  }
  for (const ComplexInput &c : inputs) {
    require_file(c.protein, "protein file");
    require_file(c.ligand, "ligand file");
    if (!c.crystal.empty()) require_file(c.crystal, "crystal ligand file");
  }
  return inputs;
}

int cmd_prepare(const PrepareOptions &opt) {
  if (opt.cutoff_pocket <= 0.0 || opt.cutoff_interaction <= 0.0) {
    throw UsageError("cutoffs must be positive");
  }
  const std::vector<ComplexInput> inputs = collect_inputs(opt);
  std::optional<LabelTable> table;
  if (!opt.labels.empty()) {
    require_file(opt.labels, "label table");
    table = LabelTable::load(opt.labels);
  }

  std::vector<ComplexGraph> records;
  std::vector<Skip> skips;
  for (const ComplexInput &input : inputs) {
    const std::string target =
        opt.target.empty() ? input.protein.stem().string() : opt.target;
    const MolecularStructure protein =
        parse_pdb(read_file(input.protein), target);
    std::vector<MolecularStructure> poses = parse_sdf(read_file(input.ligand), "");
    std::optional<MolecularStructure> crystal;
    if (!input.crystal.empty()) {
      crystal = parse_sdf(read_file(input.crystal), "").at(0);
    } else if (!table) {
      throw UsageError(fmt::format("no --labels table and no crystal pose for {}",
                                   input.ligand.string()));
    }

    std::map<std::string, int> seen;
    for (MolecularStructure &pose : poses) {
      if (pose.source_id.empty()) pose.source_id = input.ligand.stem().string();
      const std::string id = pose.source_id;
      const int rank = ++seen[id];
      auto skip = [&](std::string reason, std::string detail) {
        skips.push_back({id, rank, std::move(reason), std::move(detail)});
      };

      PerceivedLigand ligand = strip_hydrogens(perceive_ligand(pose));
      if (opt.max_mw && molecular_weight(ligand) > *opt.max_mw) {
        skip("over_max_mw", format_number(molecular_weight(ligand)));
        continue;
      }

      LabelValue label;
      std::optional<double> rmsd;
      if (crystal) {
        try {
          rmsd = heavy_atom_rmsd(pose, *crystal);
        } catch (const DataError &e) {
          skip("atom_count_mismatch", e.what());
          continue;
        }
        const std::optional<int> activity = label_pose_by_rmsd(*rmsd);
        if (!activity) {
          skip("rmsd_between_thresholds", format_number(*rmsd));
          continue;
        }
        label = {LabelKind::kActivity, static_cast<double>(*activity)};
      } else {
        const std::optional<LabelValue> found = table->find(id, rank);
        if (!found) {
          skip("missing_label", "no entry in label table");
          continue;
        }
        label = *found;
      }

      MolecularStructure pocket;
      try {
        pocket = infer_protein_bonds(
            crop_pocket(protein, ligand.base, opt.cutoff_pocket));
      } catch (const EmptyPocketError &e) {
        skip("empty_pocket", e.what());
        continue;
      }
      ComplexGraph g = build_complex_graph(pocket, ligand, label,
                                           opt.cutoff_interaction);
      g.sample_id = id;
      g.target_id = target;
      g.pose_rank = rank;
      g.rmsd = rmsd;
      records.push_back(std::move(g));
    }
  }

  auto by_id = [](const auto &a, const auto &b) {
    return std::tie(a.sample_id, a.pose_rank) < std::tie(b.sample_id, b.pose_rank);
  };
  std::stable_sort(records.begin(), records.end(), by_id);

  if (opt.balance) {
    std::vector<int> labels;
    for (const ComplexGraph &g : records) {
      if (g.label.kind != LabelKind::kActivity) {
        throw UsageError("--balance needs activity labels");
      }
      labels.push_back(static_cast<int>(g.label.value));
    }
    const std::vector<std::size_t> keep = balanced_subset(labels, opt.seed);
    std::vector<ComplexGraph> kept;
    std::size_t next = 0;
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (next < keep.size() && keep[next] == k) {
        kept.push_back(std::move(records[k]));
        ++next;
      } else {
        skips.push_back({records[k].sample_id, records[k].pose_rank,
                         "balance_downsampled", "majority class"});
      }
    }
    records = std::move(kept);
  }
  std::stable_sort(skips.begin(), skips.end(), by_id);

  const fs::path out_path = opt.out;
  const fs::path skip_path =
      opt.skip_log.empty() ? fs::path(opt.out + ".skips.csv") : fs::path(opt.skip_log);
  {
    std::ofstream skip_out = open_output(skip_path);
    skip_out << "sample_id,pose_rank,reason,detail\n";
    for (const Skip &s : skips) {
      std::string detail = s.detail;
      std::replace(detail.begin(), detail.end(), ',', ';');
      skip_out << s.sample_id << ',' << s.pose_rank << ',' << s.reason << ','
               << detail << '\n';
    }
  }
  if (records.empty()) {
    throw DataError(fmt::format("no records produced ({} skipped, see {})",
                                skips.size(), skip_path.string()));
  }
  write_dataset(out_path, records);
  write_config_echo(
      fs::path(opt.out + ".config"),
      {{"command", "prepare"},
       {"cutoff_pocket", format_number(opt.cutoff_pocket)},
       {"cutoff_interaction", format_number(opt.cutoff_interaction)},
       {"balance", opt.balance ? "true" : "false"},
       {"max_mw", opt.max_mw ? format_number(*opt.max_mw) : "none"},
       {"seed", std::to_string(opt.seed)},
       {"feature_schema", std::string(feature_schema::kVersion)}});
  std::cout << fmt::format("wrote {} records, skipped {}\n", records.size(),
                           skips.size());
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainOptions {
  std::string data;
  std::string eval;
  std::string out;
  std::string config;
  std::string resume;
  // Flag overrides as key=value, applied after the config file.
  ConfigEntries overrides;
  bool no_shuffle = false;
};

int cmd_train(const TrainOptions &opt) {
  require_file(opt.data, "dataset");
  TrainConfig cfg;
  std::optional<Checkpoint> resume;
  if (!opt.resume.empty()) {
    resume = load_checkpoint(opt.resume);
    cfg = resume->config;
  }
  if (!opt.config.empty()) apply_config_file(opt.config, cfg);
  for (const auto &[key, value] : opt.overrides) cfg.set(key, value);
  if (opt.no_shuffle) cfg.shuffle = false;
  cfg.validate();

  const std::vector<ComplexGraph> data = read_dataset(fs::path(opt.data));
  std::vector<ComplexGraph> eval;
  if (!opt.eval.empty()) {
    require_file(opt.eval, "eval dataset");
    eval = read_dataset(fs::path(opt.eval));
  }

  const fs::path out = opt.out;
  fs::create_directories(out);
  write_config_echo(out / "config.txt", cfg.entries());

  TrainResult result = train_loop(
      data, cfg, eval.empty() ? nullptr : &eval,
      resume ? &resume->state : nullptr, [](const EpochLog &e) {
        std::cerr << fmt::format("epoch {} loss {}\n", e.epoch,
                                 format_number(e.train_loss));
      });

  save_checkpoint(out / "checkpoint", {cfg, result.state, true});
  std::ofstream log = open_output(out / "train_log.csv");
  write_train_log(log, cfg, result.log);
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string head;
};

int cmd_predict(const PredictOptions &opt) {
  require_file(opt.data, "dataset");
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  if (!opt.head.empty()) require_head(ckpt, head_kind_from_name(opt.head));
  const std::vector<ComplexGraph> data = read_dataset(fs::path(opt.data));
  const std::vector<PredictionRecord> preds = predict_all(data, ckpt.state.params);

  std::ofstream out = open_output(opt.out);
  write_predictions(out, preds, true);
  ConfigEntries echo = {{"command", "predict"},
                        {"feature_schema", std::string(feature_schema::kVersion)},
                        {"epochs_completed",
                         std::to_string(ckpt.state.epochs_completed)}};
  for (const auto &kv : ckpt.config.entries()) echo.push_back(kv);
  write_config_echo(fs::path(opt.out + ".config"), echo);
  return 0;
}

std::vector<PredictionRecord> load_predictions(const std::string &path) {
  require_file(path, "prediction file");
  std::istringstream in(read_file(path));
  return read_predictions(in);
}

// --------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string predictions;
  std::string mode = "cls";
  double threshold = 0.5;
  std::string out;
};

int cmd_evaluate(const EvaluateOptions &opt) {
  const HeadKind head = head_kind_from_name(opt.mode);
  const std::vector<PredictionRecord> preds = load_predictions(opt.predictions);
  const bool cls = head == HeadKind::kClassification;
  const MetricReport report =
      cls ? classification_metrics(preds, opt.threshold) : regression_metrics(preds);
  std::cout << format_metric_report(report, cls);
  if (!opt.out.empty()) {
    std::ofstream out = open_output(opt.out);
    write_metric_csv(out, report, cls);
    write_config_echo(fs::path(opt.out + ".config"),
                      {{"command", "evaluate"},
                       {"mode", std::string(head_kind_name(head))},
                       {"threshold", format_number(opt.threshold)}});
  }
  return 0;
}

// ------------------------------------------------------------------- topn

struct TopnOptions {
  std::string predictions;
  std::vector<std::size_t> ns = {1, 2, 3, 4, 5};
  std::string rank_order = "desc";
  double rmsd_good = 2.0;
  std::string out;
};

int cmd_topn(const TopnOptions &opt) {
  const RankOrder order =
      opt.rank_order == "asc" ? RankOrder::kAscending : RankOrder::kDescending;
  const std::vector<TopNRow> rows =
      topn_pose_analysis(load_predictions(opt.predictions), opt.ns, order,
                         opt.rmsd_good);
  std::ostringstream csv;
  csv << "n,hits,complexes,percent\n";
  for (const TopNRow &r : rows) {
    csv << r.n << ',' << r.hits << ',' << r.complexes << ','
        << format_number(r.percent) << '\n';
    std::cout << fmt::format("top-{:<3} {:>4}/{:<4} {:6.2f}%\n", r.n, r.hits,
                             r.complexes, r.percent);
  }
  if (!opt.out.empty()) {
    std::ofstream out = open_output(opt.out);
    out << csv.str();
    write_config_echo(fs::path(opt.out + ".config"),
                      {{"command", "topn"},
                       {"rank_order", opt.rank_order},
                       {"rmsd_good", format_number(opt.rmsd_good)}});
  }
  return 0;
}

int run(int argc, char **argv) {
  CLI::App app{"Protein-ligand gated graph attention toolkit"};
  app.require_subcommand(1);

  PrepareOptions prep;
  CLI::App *prepare = app.add_subcommand("prepare", "Build a JSONL dataset");
  prepare->add_option("--protein", prep.protein, "Protein PDB file");
  prepare->add_option("--ligand", prep.ligand, "Ligand SDF (one or more poses)");
  prepare->add_option("--crystal", prep.crystal, "Reference pose for RMSD labels");
  prepare->add_option("--manifest", prep.manifest,
                      "CSV of protein,ligand[,crystal] rows");
  prepare->add_option("--labels", prep.labels, "CSV of id,kind,value[,pose]");
  prepare->add_option("--target", prep.target, "Target id (default: protein stem)");
  prepare->add_option("--out", prep.out, "Output dataset")->required();
  prepare->add_option("--skip-log", prep.skip_log,
                      "Skip log CSV (default: <out>.skips.csv)");
  prepare->add_option("--cutoff-pocket", prep.cutoff_pocket, "Pocket crop, A");
  prepare->add_option("--cutoff-interaction", prep.cutoff_interaction,
                      "Interaction edge cutoff, A");
  prepare->add_flag("--balance", prep.balance, "Downsample the majority class");
  prepare->add_option("--max-mw", prep.max_mw, "Drop ligands heavier than this");
  prepare->add_option("--seed", prep.seed, "Seed for --balance");

  TrainOptions tr;
  CLI::App *train = app.add_subcommand("train", "Train a model");
  train->add_option("--data", tr.data, "Training dataset")->required();
  train->add_option("--eval", tr.eval, "Evaluation dataset");
  train->add_option("--out", tr.out, "Output directory")->required();
  train->add_option("--config", tr.config, "key=value config file");
  train->add_option("--resume", tr.resume, "Checkpoint directory to resume");
  train->add_flag("--no-shuffle", tr.no_shuffle, "Keep dataset order");
  const std::vector<std::pair<std::string, std::string>> train_flags = {
      {"--lr", "lr"},         {"--epochs", "epochs"},
      {"--batch-size", "batch_size"}, {"--dim", "dim"},
      {"--blocks", "blocks"}, {"--seed", "seed"},
      {"--model", "model"},   {"--head", "head"},
      {"--threshold", "threshold"}};
  std::map<std::string, std::string> train_values;
  for (const auto &[flag, key] : train_flags) {
    train->add_option(flag, train_values[key], "Overrides config '" + key + "'");
  }

  PredictOptions pr;
  CLI::App *predict = app.add_subcommand("predict", "Score a dataset");
  predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint directory")
      ->required();
  predict->add_option("--data", pr.data, "Dataset")->required();
  predict->add_option("--out", pr.out, "Prediction CSV")->required();
  predict->add_option("--head", pr.head, "Expected head (cls|reg)");

  EvaluateOptions ev;
  CLI::App *evaluate = app.add_subcommand("evaluate", "Metrics of a prediction CSV");
  evaluate->add_option("--predictions", ev.predictions, "Prediction CSV")->required();
  evaluate->add_option("--mode,--head", ev.mode, "cls|reg");
  evaluate->add_option("--threshold", ev.threshold, "Classification threshold");
  evaluate->add_option("--out", ev.out, "Metric CSV");

  TopnOptions tn;
  CLI::App *topn = app.add_subcommand("topn", "Top-N pose ranking analysis");
  topn->add_option("--predictions", tn.predictions, "Prediction CSV")->required();
  topn->add_option("--n", tn.ns, "N values")->delimiter(',');
  topn->add_option("--rank-order", tn.rank_order, "desc (probabilities) or asc")
      ->check(CLI::IsMember({"asc", "desc"}));
  topn->add_option("--rmsd-good", tn.rmsd_good, "Near-native RMSD, A");
  topn->add_option("--out", tn.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::kUsage);
  }

  if (*prepare) return cmd_prepare(prep);
  if (*train) {
    for (const auto &[flag, key] : train_flags) {
      if (train->count(flag) > 0) tr.overrides.emplace_back(key, train_values[key]);
    }
    return cmd_train(tr);
  }
  if (*predict) return cmd_predict(pr);
  if (*evaluate) return cmd_evaluate(ev);
  return cmd_topn(tn);
}

}  // namespace
}  // namespace plgat

int main(int argc, char **argv) {
  try {
    return plgat::run(argc, argv);
  } catch (const plgat::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(plgat::ErrorKind::kData);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
