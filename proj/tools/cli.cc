// Copyright 2026 The FairMTL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairmtl/ablation.h"
#include "fairmtl/common.h"
#include "fairmtl/csv.h"
#include "fairmtl/explain.h"
#include "fairmtl/forest.h"
#include "fairmtl/ingest.h"
#include "fairmtl/report.h"
#include "fairmtl/subgroup.h"
#include "fairmtl/synth.h"
#include "fairmtl/training.h"

namespace fairmtl::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string config;
  std::string out;
};

// Root seed: --seed wins over a "seed" key in the config file.
std::uint64_t RootSeed(const Globals& g, const json& config) {
  if (g.seed_opt != nullptr && g.seed_opt->count() > 0) return g.seed;
  return config.value("seed", std::uint64_t{0});
}

json LoadConfig(const Globals& g) {
  if (g.config.empty()) return json::object();
  json j = ReadJsonFile(g.config);
  if (!j.is_object()) throw InputError("config '" + g.config + "' must be a JSON object");
  return j;
}

fs::path RequireOut(const Globals& g) {
  if (g.out.empty()) throw InputError("--out is required");
  fs::create_directories(g.out);
  return g.out;
}

void RequireFile(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw InputError("missing file '" + p.string() + "'");
}

// Encoded cohort if present, else raw cohort.csv + schema.json encoded on
// the fly.
Cohort LoadCohortDir(const fs::path& dir, const SplitRatios& ratios, std::uint64_t seed) {
  if (fs::is_regular_file(dir / "encoded.json")) return ReadEncodedCohort(dir);
  if (fs::is_regular_file(dir / "cohort.csv") && fs::is_regular_file(dir / "schema.json")) {
    return LoadCsv(dir / "cohort.csv", LoadSchema(dir / "schema.json"), {ratios, seed});
  }
  throw InputError("no cohort in '" + dir.string() +
                   "' (expected encoded.json + encoded.csv or cohort.csv + schema.json)");
}

SplitRatios RatiosFrom(const std::vector<double>& v) {
  if (v.size() != 3) throw InputError("--ratios needs three comma-separated values");
  SplitRatios r{v[0], v[1], v[2]};
  r.Validate();
  return r;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// One manifest per artifact directory, a JSON array extended by each run.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    entry_["command"] = std::move(command);
    entry_["arguments"] = std::vector<std::string>(args.begin() + 1, args.end());
    entry_["version"] = kVersion;
    entry_["inputs"] = json::object();
    entry_["outputs"] = json::array();
    entry_["seeds"] = json::object();
  }
  void Config(json c) { entry_["config"] = std::move(c); }
  void Input(const std::string& key, const fs::path& p) { entry_["inputs"][key] = p.string(); }
  void Seed(const std::string& key, std::uint64_t s) { entry_["seeds"][key] = s; }
  void Output(const fs::path& p) { entry_["outputs"].push_back(p.filename().string()); }

  void Append(const fs::path& dir) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
    entry_["wall_clock_seconds"] = dt.count();
    const fs::path path = dir / "manifest.json";
    json all = json::array();
    if (fs::exists(path)) {
      all = ReadJsonFile(path);
      if (!all.is_array()) throw InputError("'" + path.string() + "' is not a manifest array");
    }
    all.push_back(entry_);
    WriteTextFile(path, all.dump(2) + "\n");
  }

 private:
  json entry_;
  std::chrono::steady_clock::time_point start_;
};

void Emit(Manifest& m, const fs::path& path, const std::string& text) {
  WriteTextFile(path, text);
  m.Output(path);
}

// ---- option groups shared by train and ablate ----

struct TrainFlags {
  CLI::Option* k = nullptr;
  int k_value = 2;
  CLI::Option* epochs = nullptr;
  int epochs_value = 0;
  CLI::Option* lr = nullptr;
  double lr_value = 0;
  CLI::Option* batch = nullptr;
  int batch_value = 0;
  CLI::Option* patience = nullptr;
  int patience_value = 0;
  CLI::Option* hidden = nullptr;
  std::vector<int> hidden_value;
  CLI::Option* dropout = nullptr;
  double dropout_value = 0;
  CLI::Option* bottleneck = nullptr;
  int bottleneck_value = 0;
  CLI::Option* ae_epochs = nullptr;
  int ae_epochs_value = 0;
  std::string assignment;
  std::vector<double> ratios = {0.7, 0.15, 0.15};
};

void AddTrainFlags(CLI::App* sub, TrainFlags* f) {
  f->k = sub->add_option("--k", f->k_value, "Number of inferred subgroups");
  f->epochs = sub->add_option("--epochs", f->epochs_value, "Maximum training epochs");
  f->lr = sub->add_option("--lr", f->lr_value, "Initial learning rate");
  f->batch = sub->add_option("--batch-size", f->batch_value, "Mini-batch size");
  f->patience = sub->add_option("--patience", f->patience_value, "Early-stopping patience");
  f->hidden = sub->add_option("--hidden", f->hidden_value, "Encoder widths, comma separated")
                  ->delimiter(',');
  f->dropout = sub->add_option("--dropout", f->dropout_value, "Dropout rate");
  f->bottleneck = sub->add_option("--bottleneck", f->bottleneck_value, "Autoencoder bottleneck");
  f->ae_epochs = sub->add_option("--ae-epochs", f->ae_epochs_value, "Autoencoder epochs");
  sub->add_option("--assignment", f->assignment, "Saved subgroups.json to reuse");
  sub->add_option("--ratios", f->ratios, "train,val,test ratios for raw cohorts")->delimiter(',');
}

TrainingConfig TrainingConfigFor(const json& config, const TrainFlags& f, std::uint64_t seed) {
  TrainingConfig c = TrainingConfigFromJson(config);
  if (f.epochs->count()) c.max_epochs = f.epochs_value;
  if (f.lr->count()) c.learning_rate = f.lr_value;
  if (f.batch->count()) c.batch_size = f.batch_value;
  if (f.patience->count()) c.early_stop_patience = f.patience_value;
  if (f.hidden->count()) c.model.hidden_widths = f.hidden_value;
  if (f.dropout->count()) c.model.dropout_rate = f.dropout_value;
  c.seed = seed;
  c.Validate();
  return c;
}

SubgroupOptions SubgroupOptionsFor(const json& config, const CLI::Option* k_opt, int k,
                                   const CLI::Option* bottleneck_opt, int bottleneck,
                                   const CLI::Option* ae_opt, int ae_epochs, std::uint64_t seed) {
  SubgroupOptions o;
  const json s = config.value("subgroups", json::object());
  try {
    o.k = s.value("k", o.k);
    o.bottleneck = s.value("bottleneck", o.bottleneck);
    o.autoencoder_epochs = s.value("autoencoder_epochs", o.autoencoder_epochs);
    o.kmeans_max_iters = s.value("kmeans_max_iters", o.kmeans_max_iters);
    o.fit_on_train_only = s.value("fit_on_train_only", o.fit_on_train_only);
  } catch (const json::exception& e) {
    throw InputError(std::string("config 'subgroups': ") + e.what());
  }
  if (k_opt != nullptr && k_opt->count()) o.k = k;
  if (bottleneck_opt != nullptr && bottleneck_opt->count()) o.bottleneck = bottleneck;
  if (ae_opt != nullptr && ae_opt->count()) o.autoencoder_epochs = ae_epochs;
  if (o.k < 1) throw InputError("--k must be >= 1");
  if (o.bottleneck < 1) throw InputError("--bottleneck must be >= 1");
  if (o.autoencoder_epochs < 0) throw InputError("--ae-epochs must be >= 0");
  o.seed = seed;
  return o;
}

json ToJson(const SubgroupOptions& o) {
  return {{"k", o.k},
          {"bottleneck", o.bottleneck},
          {"autoencoder_epochs", o.autoencoder_epochs},
          {"kmeans_max_iters", o.kmeans_max_iters},
          {"fit_on_train_only", o.fit_on_train_only}};
}

// Subgroups from a saved file (reassigned if it was fitted on another row
// set) or inferred afresh.
SubgroupModel ResolveSubgroups(const Cohort& cohort, const std::string& assignment,
                               const SubgroupOptions& options, Manifest* m) {
  if (assignment.empty()) return InferSubgroups(cohort, options);
  RequireFile(assignment);
  m->Input("assignment", assignment);
  SubgroupModel s = LoadSubgroupModel(assignment);
  if (s.z.size() != cohort.num_rows()) {
    s.z = Assign(s.assignment, s.embedding, cohort.Sensitive());
  }
  return s;
}

std::string AssignmentCsv(const Cohort& cohort, const std::vector<int>& z) {
  std::ostringstream out;
  WriteCsvRow(out, {"row", "split", "z"});
  for (std::size_t i = 0; i < z.size(); ++i) {
    WriteCsvRow(out, {std::to_string(i), ToString(cohort.split[i]), std::to_string(z[i])});
  }
  return out.str();
}

AblationSwitches AblationFromFlag(const std::string& name) {
  if (name == "none") return {};
  if (name == "no-reweighting") return {false, true, true};
  if (name == "no-shared-layers") return {true, false, true};
  if (name == "no-task-heads") return {true, true, false};
  throw InputError("unknown --ablation '" + name +
                   "' (none, no-reweighting, no-shared-layers, no-task-heads)");
}

ForestConfig ForestConfigFor(const json& config, int trees_flag, std::uint64_t seed) {
  ForestConfig c;
  const json f = config.value("forest", json::object());
  try {
    c.n_trees = f.value("n_trees", c.n_trees);
    c.max_depth = f.value("max_depth", c.max_depth);
    c.max_features_fraction = f.value("max_features_fraction", c.max_features_fraction);
    c.min_samples_leaf = f.value("min_samples_leaf", c.min_samples_leaf);
    c.bootstrap = f.value("bootstrap", c.bootstrap);
  } catch (const json::exception& e) {
    throw InputError(std::string("config 'forest': ") + e.what());
  }
  if (trees_flag > 0) c.n_trees = trees_flag;
  c.seed = seed;
  return c;
}

json ToJson(const ForestConfig& c) {
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"max_features_fraction", c.max_features_fraction},
          {"min_samples_leaf", c.min_samples_leaf},
          {"bootstrap", c.bootstrap}};
}

// A FAIR-MTL checkpoint or a forest, told apart by the "format" key.
using AnyModel = std::variant<Checkpoint, ForestModel>;

AnyModel LoadModel(const fs::path& path) {
  RequireFile(path);
  const json j = ReadJsonFile(path);
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "fairmtl.checkpoint") {
    Checkpoint c = CheckpointFromJson(j);
    const int routed = c.config.ablation.task_heads ? c.subgroups.assignment.k : 1;
    if (routed != c.params.k()) throw InputError("checkpoint K does not match its subgroups");
    return c;
  }
  if (format == "fairmtl.forest") return ForestModelFromJson(j);
  throw InputError("'" + path.string() + "' is neither a checkpoint nor a forest");
}

void CheckWidth(const AnyModel& model, const Cohort& cohort) {
  if (const auto* f = std::get_if<ForestModel>(&model)) {
    if (static_cast<std::size_t>(f->num_features) != cohort.num_features()) {
      throw InputError("cohort has " + std::to_string(cohort.num_features()) +
                       " features but the forest expects " + std::to_string(f->num_features));
    }
    if (f->num_classes != cohort.num_classes()) throw InputError("class count mismatch");
  } else {
    RouteRows(std::get<Checkpoint>(model), cohort);  // throws on mismatch
  }
}

Predictions ModelPredictions(const AnyModel& model, const Cohort& cohort, Split split,
                             const std::vector<std::string>& attributes,
                             const std::string& name) {
  CheckWidth(model, cohort);
  if (const auto* c = std::get_if<Checkpoint>(&model)) {
    return PredictSplit(cohort, c->params, RouteRows(*c, cohort), split, attributes, name);
  }
  const auto& forest = std::get<ForestModel>(model);
  const auto rows = cohort.Indices(split);
  if (rows.empty()) throw InputError("no rows in the " + ToString(split) + " split");
  Predictions p;
  p.model = name;
  p.num_classes = cohort.num_classes();
  p.y = SelectRows(cohort.y, rows);
  p.proba = ForestPredictProba(forest, SelectRows(cohort.x, rows));
  p.pred = ArgmaxRows(p.proba);
  p.attributes = AttributesForRows(cohort, rows, attributes);
  return p;
}

std::string PredictionsCsv(const Predictions& p, const std::vector<std::size_t>& rows) {
  std::ostringstream out;
  std::vector<std::string> header = {"row", "y", "pred"};
  for (int c = 0; c < p.num_classes; ++c) header.push_back("p" + std::to_string(c));
  WriteCsvRow(out, header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> cells = {std::to_string(rows[i]), std::to_string(p.y[i]),
                                      std::to_string(p.pred[i])};
    for (int c = 0; c < p.num_classes; ++c) {
      cells.push_back(FormatDouble(p.proba(static_cast<Eigen::Index>(i), c)));
    }
    WriteCsvRow(out, cells);
  }
  return out.str();
}

std::string Slug(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  return out;
}

// ---- subcommands ----

int CmdSynth(const Globals& g, const std::string& spec_path, const std::vector<std::string>& args,
             std::ostream& out) {
  Manifest m("synth", args);
  const std::string path = !spec_path.empty() ? spec_path : g.config;
  if (path.empty()) throw InputError("synth needs --spec (or --config) with a SynthSpec JSON");
  RequireFile(path);
  m.Input("spec", path);
  SynthSpec spec = SynthSpecFromJson(ReadJsonFile(path));
  if (g.seed_opt->count()) spec.seed = g.seed;
  spec.Validate();
  const fs::path dir = RequireOut(g);
  const SyntheticData data = GenerateSyntheticTable(spec);
  WriteCsvFile(dir / "cohort.csv", CsvTable{data.table.header, data.table.rows});
  m.Output(dir / "cohort.csv");
  SaveSchema(data.table.schema, dir / "schema.json");
  m.Output(dir / "schema.json");
  m.Config(fairmtl::ToJson(spec));
  m.Seed("synth", spec.seed);
  m.Append(dir);
  out << "wrote " << data.table.rows.size() << " rows to " << dir.string() << "\n";
  return kExitOk;
}

int CmdPreprocess(const Globals& g, const std::string& cohort_dir, std::string data,
                  std::string schema, const std::vector<double>& ratios_v,
                  const std::vector<std::string>& args, std::ostream& out) {
  Manifest m("preprocess", args);
  const json config = LoadConfig(g);
  const std::uint64_t seed = RootSeed(g, config);
  if (!cohort_dir.empty()) {
    if (data.empty()) data = (fs::path(cohort_dir) / "cohort.csv").string();
    if (schema.empty()) schema = (fs::path(cohort_dir) / "schema.json").string();
  }
  if (data.empty() || schema.empty()) {
    throw InputError("preprocess needs --cohort DIR or both --data and --schema");
  }
  RequireFile(data);
  RequireFile(schema);
  m.Input("data", data);
  m.Input("schema", schema);
  const SplitRatios ratios = RatiosFrom(ratios_v);
  const Cohort cohort = LoadCsv(data, LoadSchema(schema), {ratios, seed});
  const fs::path dir = RequireOut(g);
  WriteEncodedCohort(cohort, dir);
  m.Output(dir / "encoded.csv");
  m.Output(dir / "encoded.json");
  m.Config({{"ratios", {ratios.train, ratios.val, ratios.test}}});
  m.Seed("split", seed);
  m.Append(dir);
  out << "encoded " << cohort.num_rows() << " rows x " << cohort.num_features()
      << " features (" << cohort.dropped_rows << " dropped)\n";
  return kExitOk;
}

int CmdInferSubgroups(const Globals& g, const std::string& cohort_dir, const TrainFlags& f,
                      const std::vector<std::string>& args, std::ostream& out) {
  Manifest m("infer-subgroups", args);
  const json config = LoadConfig(g);
  const std::uint64_t seed = RootSeed(g, config);
  m.Input("cohort", cohort_dir);
  const Cohort cohort = LoadCohortDir(cohort_dir, RatiosFrom(f.ratios), seed);
  const SubgroupOptions options =
      SubgroupOptionsFor(config, f.k, f.k_value, f.bottleneck, f.bottleneck_value, f.ae_epochs,
                         f.ae_epochs_value, seed);
  const SubgroupModel model = InferSubgroups(cohort, options);
  const fs::path dir = RequireOut(g);
  SaveSubgroupModel(model, dir / "subgroups.json");
  m.Output(dir / "subgroups.json");
  Emit(m, dir / "assignment.csv", AssignmentCsv(cohort, model.z));
  m.Config(ToJson(options));
  m.Seed("subgroups", seed);
  m.Append(dir);
  out << "K = " << model.assignment.k << ", inertia " << FormatDouble(model.assignment.inertia)
      << "\n";
  return kExitOk;
}

int CmdTrain(const Globals& g, const std::string& cohort_dir, const TrainFlags& f,
             const std::string& ablation, const std::string& model_kind, int trees,
             const std::vector<std::string>& args, std::ostream& out) {
  Manifest m("train", args);
  const json config = LoadConfig(g);
  const std::uint64_t seed = RootSeed(g, config);
  m.Input("cohort", cohort_dir);
  if (!g.config.empty()) m.Input("config", g.config);
  const Cohort cohort = LoadCohortDir(cohort_dir, RatiosFrom(f.ratios), seed);
  const fs::path dir = RequireOut(g);

  if (model_kind == "forest") {
    const ForestConfig fc = ForestConfigFor(config, trees, seed);
    const auto rows = cohort.Indices(Split::kTrain);
    const ForestModel forest = FitForest(SelectRows(cohort.x, rows), SelectRows(cohort.y, rows),
                                         cohort.num_classes(), fc);
    SaveForest(forest, dir / "forest.json");
    m.Output(dir / "forest.json");
    m.Config(ToJson(fc));
    m.Seed("forest", seed);
    m.Append(dir);
    out << "forest with " << forest.trees.size() << " trees\n";
    return kExitOk;
  }
  if (model_kind != "fairmtl") throw InputError("unknown --model '" + model_kind + "'");

  TrainingConfig tc = TrainingConfigFor(config, f, seed);
  tc.ablation = AblationFromFlag(ablation);
  const SubgroupOptions so = SubgroupOptionsFor(config, f.k, f.k_value, f.bottleneck,
                                                f.bottleneck_value, f.ae_epochs,
                                                f.ae_epochs_value, seed);
  SubgroupModel subgroups = ResolveSubgroups(cohort, f.assignment, so, &m);
  const TrainResult result = Train(cohort, subgroups.z, subgroups.assignment.k, tc);

  SaveSubgroupModel(subgroups, dir / "subgroups.json");
  m.Output(dir / "subgroups.json");
  Checkpoint ckpt;
  ckpt.params = result.params;
  ckpt.config = tc;
  ckpt.subgroups = subgroups;
  ckpt.subgroups_file = "subgroups.json";
  ckpt.feature_names = cohort.feature_names;
  ckpt.best_epoch = result.log.best_epoch;
  SaveCheckpoint(ckpt, dir / "checkpoint.json");
  m.Output(dir / "checkpoint.json");
  Emit(m, dir / "training_log.jsonl", ToJsonLines(result.log));
  m.Config({{"training", fairmtl::ToJson(tc)}, {"subgroups", ToJson(so)}});
  m.Seed("root", seed);
  m.Seed("model_init", DeriveSeed(seed, SeedStream::kModelInit));
  m.Seed("shuffle", DeriveSeed(seed, SeedStream::kShuffle));
  m.Seed("dropout", DeriveSeed(seed, SeedStream::kDropout));
  m.Append(dir);
  out << "best epoch " << result.log.best_epoch << ", val macro-F1 "
      << FormatDouble(result.log.best_val_macro_f1) << ", K = " << result.params.k() << "\n";
  return kExitOk;
}

int CmdEvaluate(const Globals& g, const std::string& model_path, const std::string& cohort_dir,
                const std::string& attrs, int bootstrap, double level, const std::string& split,
                const std::string& baseline_path, const std::vector<double>& ratios,
                const std::vector<std::string>& args, std::ostream& out) {
  Manifest m("evaluate", args);
  const json config = LoadConfig(g);
  const std::uint64_t seed = RootSeed(g, config);
  if (bootstrap != 0 && bootstrap < 100) throw InputError("--bootstrap must be 0 or >= 100");
  if (!baseline_path.empty() && bootstrap == 0) {
    throw InputError("--baseline needs bootstrap resamples (--bootstrap >= 100)");
  }
  m.Input("checkpoint", model_path);
  m.Input("cohort", cohort_dir);
  const AnyModel model = LoadModel(model_path);
  const Cohort cohort = LoadCohortDir(cohort_dir, RatiosFrom(ratios), seed);
  const Split which = SplitFromString(split);
  const std::vector<std::string> selection = SplitList(attrs);

  const Predictions p = ModelPredictions(model, cohort, which, selection, "model");
  const ReportOptions options{bootstrap, level, seed};
  FairnessReport report = BuildFairnessReport(p, options);
  if (!baseline_path.empty()) {
    m.Input("baseline", baseline_path);
    const Predictions b =
        ModelPredictions(LoadModel(baseline_path), cohort, which, selection, "baseline");
    report.significance = CompareDisparities(b, p, options);
  }

  const fs::path dir = RequireOut(g);
  Emit(m, dir / "report.json", fairmtl::ToJson(report).dump(2) + "\n");
  Emit(m, dir / "report_per_class.csv", PerClassCsv(report));
  Emit(m, dir / "report_groups.csv", GroupCsv(report));
  Emit(m, dir / "report_metrics.csv", MetricsCsv(report));
  Emit(m, dir / "predictions.csv", PredictionsCsv(p, cohort.Indices(which)));
  m.Config({{"split", split}, {"bootstrap", bootstrap}, {"level", level},
            {"attributes", selection}});
  m.Seed("bootstrap", seed);
  m.Append(dir);
  out << "accuracy " << FormatDouble(report.overall.accuracy) << ", macro-F1 "
      << FormatDouble(report.overall.macro_f1) << "\n";
  for (const auto& a : report.attributes) {
    out << a.attribute << ": DP " << FormatDouble(a.dp_mean) << ", EO " << FormatDouble(a.eo_mean)
        << "\n";
  }
  return kExitOk;
}

struct ExplainFlags {
  std::string model;
  std::string cohort;
  std::vector<std::size_t> instances;
  std::string method = "exact";
  int target_class = -1;
  int samples = 2000;
  int background = 50;
  std::string global;
  std::size_t top = 0;
  std::vector<double> ratios = {0.7, 0.15, 0.15};
};

Matrix BackgroundSample(const Cohort& cohort, int size, std::uint64_t seed) {
  std::vector<std::size_t> rows = cohort.Indices(Split::kTrain);
  if (rows.empty()) throw InputError("explain: empty train split for the background sample");
  std::mt19937_64 rng(DeriveSeed(seed, SeedStream::kBackground));
  const std::size_t take = std::min(rows.size(), static_cast<std::size_t>(size));
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
    std::swap(rows[i], rows[pick(rng)]);
  }
  rows.resize(take);
  return SelectRows(cohort.x, rows);
}

int CmdExplain(const Globals& g, const ExplainFlags& f, const std::vector<std::string>& args,
               std::ostream& out) {
  Manifest m("explain", args);
  const json config = LoadConfig(g);
  const std::uint64_t seed = RootSeed(g, config);
  if (f.instances.empty() && f.global.empty()) {
    throw InputError("explain needs --instances and/or --global gini");
  }
  if (f.method != "exact" && f.method != "sampled") {
    throw InputError("unknown --method '" + f.method + "' (exact, sampled)");
  }
  if (!f.global.empty() && f.global != "gini") {
    throw InputError("unknown --global '" + f.global + "' (gini)");
  }
  if (f.background < 1) throw InputError("--background must be >= 1");
  m.Input("model", f.model);
  m.Input("cohort", f.cohort);
  const AnyModel model = LoadModel(f.model);
  const Cohort cohort = LoadCohortDir(f.cohort, RatiosFrom(f.ratios), seed);
  CheckWidth(model, cohort);
  const int d = static_cast<int>(cohort.num_features());
  const int num_classes = cohort.num_classes();
  for (std::size_t id : f.instances) {
    if (id >= cohort.num_rows()) {
      throw InputError("unknown instance id " + std::to_string(id) + " (cohort has " +
                       std::to_string(cohort.num_rows()) + " rows)");
    }
  }
  if (!f.instances.empty() && f.method == "exact" && d > kMaxExactFeatures) {
    throw InputError("exact Shapley supports at most " + std::to_string(kMaxExactFeatures) +
                     " features but the cohort has " + std::to_string(d) +
                     "; rerun with --method sampled");
  }
  if (f.target_class >= num_classes) throw InputError("--class out of range");
  if (!f.global.empty() && !std::holds_alternative<ForestModel>(model)) {
    throw InputError("--global gini needs a forest model (train --model forest)");
  }

  const fs::path dir = RequireOut(g);
  std::vector<int> routing;
  if (const auto* c = std::get_if<Checkpoint>(&model)) routing = RouteRows(*c, cohort);
  auto proba = [&](const Matrix& x, int z) -> Matrix {
    if (const auto* c = std::get_if<Checkpoint>(&model)) {
      return Forward(c->params, x, std::vector<int>(static_cast<std::size_t>(x.rows()), z),
                     ForwardOptions{Mode::kEval, nullptr}, nullptr);
    }
    return ForestPredictProba(std::get<ForestModel>(model), x);
  };

  Vector mean_abs = Vector::Zero(d);
  if (!f.instances.empty()) {
    const Matrix background = BackgroundSample(cohort, f.background, seed);
    m.Seed("background", DeriveSeed(seed, SeedStream::kBackground));
    if (f.method == "sampled") m.Seed("shap", DeriveSeed(seed, SeedStream::kShap));
    for (std::size_t id : f.instances) {
      const RowVector instance = cohort.x.row(static_cast<Eigen::Index>(id));
      // The instance's routed head stays fixed while features are masked.
      const int z = routing.empty() ? 1 : routing[id];
      int c = f.target_class;
      if (c < 0) c = ArgmaxRows(proba(Matrix(instance), z))[0];
      const BatchScorer scorer = [&, z, c](const Matrix& x) -> Vector { return proba(x, z).col(c); };
      const ShapExplanation e =
          f.method == "exact"
              ? ShapleyExact(scorer, instance, background, c, id)
              : ShapleySampled(scorer, instance, background, c, f.samples, seed, id);
      if (f.method == "exact" && e.LocalAccuracyGap() > 1e-6) {
        throw NumericError("explain: local accuracy violated for instance " +
                           std::to_string(id) + " (gap " + FormatDouble(e.LocalAccuracyGap()) +
                           ")");
      }
      json j = fairmtl::ToJson(e, cohort.feature_names);
      j["z"] = z;
      j["background_rows"] = background.rows();
      Emit(m, dir / ("shap_" + std::to_string(id) + ".json"), j.dump(2) + "\n");
      mean_abs += e.attributions.cwiseAbs();
    }
    mean_abs /= static_cast<double>(f.instances.size());
    const std::size_t top = f.top == 0 ? static_cast<std::size_t>(d) : f.top;
    Emit(m, dir / "shap_ranking.csv",
         RankReportCsv(RankReport(mean_abs, cohort.feature_names, top)));
  }
  if (!f.global.empty()) {
    const GiniImportance gi = ComputeGiniImportance(std::get<ForestModel>(model));
    if (!gi.any_split) out << "note: every tree is a single leaf; importances are all zero\n";
    const std::size_t top = f.top == 0 ? static_cast<std::size_t>(d) : f.top;
    Emit(m, dir / "gini.csv", RankReportCsv(RankReport(gi.scores, cohort.feature_names, top)));
  }
  m.Config({{"method", f.method},
            {"class", f.target_class},
            {"n_samples", f.samples},
            {"background", f.background},
            {"global", f.global},
            {"instances", f.instances}});
  m.Append(dir);
  out << "explained " << f.instances.size() << " instance(s)\n";
  return kExitOk;
}

int CmdAblate(const Globals& g, const std::string& cohort_dir, const TrainFlags& f,
              const std::string& attrs, const std::vector<std::string>& args, std::ostream& out) {
  Manifest m("ablate", args);
  const json config = LoadConfig(g);
  const std::uint64_t seed = RootSeed(g, config);
  m.Input("cohort", cohort_dir);
  if (!g.config.empty()) m.Input("config", g.config);
  const Cohort cohort = LoadCohortDir(cohort_dir, RatiosFrom(f.ratios), seed);
  const TrainingConfig tc = TrainingConfigFor(config, f, seed);
  const SubgroupOptions so = SubgroupOptionsFor(config, f.k, f.k_value, f.bottleneck,
                                                f.bottleneck_value, f.ae_epochs,
                                                f.ae_epochs_value, seed);
  const SubgroupModel subgroups = ResolveSubgroups(cohort, f.assignment, so, &m);
  const AblationRun run =
      RunAblation(cohort, subgroups.z, subgroups.assignment.k, tc, SplitList(attrs));

  const fs::path dir = RequireOut(g);
  SaveSubgroupModel(subgroups, dir / "subgroups.json");
  m.Output(dir / "subgroups.json");
  Emit(m, dir / "ablation.csv", AblationCsv(run.table));
  Emit(m, dir / "ablation.json", fairmtl::ToJson(run.table).dump(2) + "\n");
  for (std::size_t v = 0; v < run.table.rows.size(); ++v) {
    Emit(m, dir / ("training_log_" + Slug(run.table.rows[v].variant) + ".jsonl"),
         ToJsonLines(run.models[v].log));
  }
  m.Config({{"training", fairmtl::ToJson(tc)}, {"subgroups", ToJson(so)}});
  m.Seed("root", seed);
  m.Append(dir);
  out << AblationCsv(run.table);
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"FAIR-MTL fairness-aware multitask toolkit", "fairmtl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Root seed for every random component");
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out", g.out, "Output artifact directory");

  std::string spec;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic biased cohort");
  synth->add_option("--spec", spec, "SynthSpec JSON file");

  std::string cohort, data, schema;
  std::vector<double> pre_ratios = {0.7, 0.15, 0.15};
  auto* pre = app.add_subcommand("preprocess", "Encode, standardize and split a raw cohort");
  pre->add_option("--cohort", cohort, "Directory with cohort.csv and schema.json");
  pre->add_option("--data", data, "Raw CSV");
  pre->add_option("--schema", schema, "Schema JSON");
  pre->add_option("--ratios", pre_ratios, "train,val,test")->delimiter(',');

  TrainFlags infer_flags;
  auto* infer = app.add_subcommand("infer-subgroups", "Autoencoder + k-means subgroup inference");
  infer->add_option("--cohort", cohort, "Cohort directory")->required();
  AddTrainFlags(infer, &infer_flags);

  TrainFlags train_flags;
  std::string ablation = "none", model_kind = "fairmtl";
  int trees = 0;
  auto* train = app.add_subcommand("train", "Infer subgroups and train a model");
  train->add_option("--cohort", cohort, "Cohort directory")->required();
  AddTrainFlags(train, &train_flags);
  train->add_option("--ablation", ablation,
                    "none, no-reweighting, no-shared-layers or no-task-heads");
  train->add_option("--model", model_kind, "fairmtl or forest");
  train->add_option("--trees", trees, "Forest size (with --model forest)");

  std::string checkpoint, attrs, split = "test", baseline;
  int bootstrap = 1000;
  double level = 0.95;
  std::vector<double> eval_ratios = {0.7, 0.15, 0.15};
  auto* evaluate = app.add_subcommand("evaluate", "Fairness report on a cohort split");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint or forest JSON")->required();
  evaluate->add_option("--cohort", cohort, "Cohort directory")->required();
  evaluate->add_option("--attributes", attrs, "Sensitive attributes, comma separated");
  evaluate->add_option("--bootstrap", bootstrap, "Bootstrap resamples (0 disables CIs)");
  evaluate->add_option("--level", level, "Confidence level");
  evaluate->add_option("--split", split, "train, val or test");
  evaluate->add_option("--baseline", baseline, "Baseline model for paired t-tests");
  evaluate->add_option("--ratios", eval_ratios, "train,val,test for raw cohorts")->delimiter(',');

  ExplainFlags ef;
  auto* explain = app.add_subcommand("explain", "Shapley attributions and Gini importance");
  explain->add_option("--model,--checkpoint", ef.model, "Checkpoint or forest JSON")->required();
  explain->add_option("--cohort", ef.cohort, "Cohort directory")->required();
  explain->add_option("--instances", ef.instances, "Row ids, comma separated")->delimiter(',');
  explain->add_option("--method", ef.method, "exact or sampled");
  explain->add_option("--class", ef.target_class, "Target class (default: predicted)");
  explain->add_option("--samples", ef.samples, "Permutations for the sampled method");
  explain->add_option("--background", ef.background, "Background rows from the train split");
  explain->add_option("--global", ef.global, "gini");
  explain->add_option("--top", ef.top, "Rows in ranking tables (default: all)");
  explain->add_option("--ratios", ef.ratios, "train,val,test for raw cohorts")->delimiter(',');

  TrainFlags ablate_flags;
  std::string ablate_attrs;
  auto* ablate = app.add_subcommand("ablate", "Train and compare the four ablation variants");
  ablate->add_option("--cohort", cohort, "Cohort directory")->required();
  AddTrainFlags(ablate, &ablate_flags);
  ablate->add_option("--attributes", ablate_attrs, "Sensitive attributes, comma separated");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (synth->parsed()) return CmdSynth(g, spec, args, out);
    if (pre->parsed()) return CmdPreprocess(g, cohort, data, schema, pre_ratios, args, out);
    if (infer->parsed()) return CmdInferSubgroups(g, cohort, infer_flags, args, out);
    if (train->parsed()) {
      return CmdTrain(g, cohort, train_flags, ablation, model_kind, trees, args, out);
    }
    if (evaluate->parsed()) {
      return CmdEvaluate(g, checkpoint, cohort, attrs, bootstrap, level, split, baseline,
                         eval_ratios, args, out);
    }
    if (explain->parsed()) return CmdExplain(g, ef, args, out);
    if (ablate->parsed()) return CmdAblate(g, cohort, ablate_flags, ablate_attrs, args, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInput;
}

}  // namespace fairmtl::cli
