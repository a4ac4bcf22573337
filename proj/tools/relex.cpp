// Copyright 2026 The relex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// relex: train, apply and evaluate the relation classifier, and build the
// downstream artifacts from its predictions.
//
// Settings come from a JSON config file (--config), then RELEX_* environment
// variables for paths, then command-line flags; later sources win.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "relex/relex.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown for bad configurations; carries every problem found.
class ConfigError : public relex::Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : relex::Error(render(problems)), problems_(std::move(problems)) {}

 private:
  static std::string render(const std::vector<std::string>& problems) {
    std::string s = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                    (problems.size() == 1 ? "" : "s") + "):";
    for (const auto& p : problems) s += "\n  " + p;
    return s;
  }
  std::vector<std::string> problems_;
};

struct Paths {
  std::string embeddings, schema, model, train, test, corpus, predictions, log, metrics, report, graph,
      timeline, enriched, bench, dictionary;
};

// Path keys in config/env/flag order. Env var is RELEX_<KEY upper-cased>.
const std::vector<std::pair<std::string, std::string Paths::*>>& path_fields() {
  static const std::vector<std::pair<std::string, std::string Paths::*>> f = {
      {"embeddings", &Paths::embeddings}, {"schema", &Paths::schema},
      {"model", &Paths::model},           {"train", &Paths::train},
      {"test", &Paths::test},             {"corpus", &Paths::corpus},
      {"predictions", &Paths::predictions}, {"log", &Paths::log},
      {"metrics", &Paths::metrics},       {"report", &Paths::report},
      {"graph", &Paths::graph},           {"timeline", &Paths::timeline},
      {"enriched", &Paths::enriched},     {"bench", &Paths::bench},
      {"dictionary", &Paths::dictionary}};
  return f;
}

struct RunConfig {
  Paths paths;
  relex::features::FeatureConfig features;
  bool embed_dim_set = false;
  relex::fcnn::TrainConfig train;
  double holdout_fraction = 0.2;
  int max_distance = 5;
  relex::pipeline::ContextScope context_scope = relex::pipeline::ContextScope::kSentence;
  std::vector<std::string> positive_labels{"1"};
  std::size_t parallelism = 1;
  std::vector<std::string> exclude_labels;
  std::string graph_format = "dot";
  bool merge_body_parts = false;
  std::string date_type = "Date";
  std::string ontology = "ICD-10";
  int top_k = 1;
  std::size_t repetitions = 3;
  std::string record_format = "tsv";
};

// ---------------------------------------------------------------------------
// Config file

class JsonReader {
 public:
  JsonReader(std::vector<std::string>& problems) : problems_(problems) {}

  template <typename T>
  void get(const json& obj, const std::string& section, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      problems_.push_back(section + "." + key + ": wrong type (" + it->type_name() + ")");
    }
  }

  void unknown_keys(const json& obj, const std::string& section, std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* k : known) ok = ok || it.key() == k;
      if (!ok) problems_.push_back((section.empty() ? "" : section + ".") + it.key() + ": unknown setting");
    }
  }

  const json& section(const json& root, const char* name) {
    static const json empty = json::object();
    auto it = root.find(name);
    if (it == root.end()) return empty;
    if (!it->is_object()) {
      problems_.push_back(std::string(name) + ": expected an object");
      return empty;
    }
    return *it;
  }

 private:
  std::vector<std::string>& problems_;
};

void load_config_file(const std::string& path, RunConfig& cfg, std::vector<std::string>& problems) {
  std::ifstream in(path);
  if (!in) {
    problems.push_back("--config: cannot open " + path);
    return;
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    problems.push_back("--config: " + path + ": " + e.what());
    return;
  }
  if (!root.is_object()) {
    problems.push_back("--config: top level must be an object");
    return;
  }
  JsonReader r(problems);
  r.unknown_keys(root, "", {"seed", "parallelism", "paths", "features", "train", "pipeline", "evaluate", "graph",
                            "timeline", "enrich", "benchmark", "predict"});
  std::uint64_t seed = cfg.train.seed;
  r.get(root, "", "seed", seed);
  cfg.train.seed = seed;
  r.get(root, "", "parallelism", cfg.parallelism);

  const auto& paths = r.section(root, "paths");
  for (auto it = paths.begin(); it != paths.end(); ++it) {
    bool known = false;
    for (const auto& [key, member] : path_fields()) {
      if (it.key() != key) continue;
      known = true;
      r.get(paths, "paths", key.c_str(), cfg.paths.*member);
    }
    if (!known) problems.push_back("paths." + it.key() + ": unknown setting");
  }

  const auto& f = r.section(root, "features");
  r.unknown_keys(f, "features", {"embed_dim", "vicinity_window", "max_path_len", "vicinity_mode", "distance_norm"});
  if (f.contains("embed_dim")) cfg.embed_dim_set = true;
  r.get(f, "features", "embed_dim", cfg.features.embed_dim);
  r.get(f, "features", "vicinity_window", cfg.features.vicinity_window);
  r.get(f, "features", "max_path_len", cfg.features.max_path_len);
  r.get(f, "features", "distance_norm", cfg.features.distance_norm);
  std::string mode = relex::features::to_string(cfg.features.vicinity_mode);
  r.get(f, "features", "vicinity_mode", mode);
  try {
    cfg.features.vicinity_mode = relex::features::parse_vicinity_mode(mode);
  } catch (const relex::Error& e) {
    problems.push_back(std::string("features.vicinity_mode: ") + e.what());
  }

  const auto& t = r.section(root, "train");
  r.unknown_keys(t, "train", {"dropout", "batch_size", "learning_rate", "epochs", "lr_decay", "hidden_sizes",
                              "leaky_slope", "holdout_fraction"});
  r.get(t, "train", "dropout", cfg.train.dropout);
  r.get(t, "train", "batch_size", cfg.train.batch_size);
  r.get(t, "train", "learning_rate", cfg.train.learning_rate);
  r.get(t, "train", "epochs", cfg.train.epochs);
  r.get(t, "train", "lr_decay", cfg.train.lr_decay);
  r.get(t, "train", "hidden_sizes", cfg.train.hidden_sizes);
  r.get(t, "train", "leaky_slope", cfg.train.leaky_slope);
  r.get(t, "train", "holdout_fraction", cfg.holdout_fraction);

  const auto& p = r.section(root, "pipeline");
  r.unknown_keys(p, "pipeline", {"max_distance", "context_scope", "positive_labels"});
  r.get(p, "pipeline", "max_distance", cfg.max_distance);
  r.get(p, "pipeline", "positive_labels", cfg.positive_labels);
  std::string scope = relex::pipeline::to_string(cfg.context_scope);
  r.get(p, "pipeline", "context_scope", scope);
  try {
    cfg.context_scope = relex::pipeline::parse_context_scope(scope);
  } catch (const relex::Error& e) {
    problems.push_back(std::string("pipeline.context_scope: ") + e.what());
  }

  const auto& ev = r.section(root, "evaluate");
  r.unknown_keys(ev, "evaluate", {"exclude_labels"});
  r.get(ev, "evaluate", "exclude_labels", cfg.exclude_labels);

  const auto& g = r.section(root, "graph");
  r.unknown_keys(g, "graph", {"format", "merge_body_parts"});
  r.get(g, "graph", "format", cfg.graph_format);
  r.get(g, "graph", "merge_body_parts", cfg.merge_body_parts);

  const auto& tl = r.section(root, "timeline");
  r.unknown_keys(tl, "timeline", {"date_type"});
  r.get(tl, "timeline", "date_type", cfg.date_type);

  const auto& en = r.section(root, "enrich");
  r.unknown_keys(en, "enrich", {"ontology", "top_k"});
  r.get(en, "enrich", "ontology", cfg.ontology);
  r.get(en, "enrich", "top_k", cfg.top_k);

  const auto& b = r.section(root, "benchmark");
  r.unknown_keys(b, "benchmark", {"repetitions"});
  r.get(b, "benchmark", "repetitions", cfg.repetitions);

  const auto& pr = r.section(root, "predict");
  r.unknown_keys(pr, "predict", {"format"});
  r.get(pr, "predict", "format", cfg.record_format);
}

void apply_environment(RunConfig& cfg) {
  for (const auto& [key, member] : path_fields()) {
    std::string var = "RELEX_" + key;
    for (char& c : var) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(var.c_str()); v && *v) cfg.paths.*member = v;
  }
}

// ---------------------------------------------------------------------------
// Flags

struct Flags {
  std::string config;
  std::map<std::string, std::string> paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::optional<int> max_distance;
  std::optional<std::string> context_scope;
  std::optional<std::vector<std::string>> exclude_labels;
  std::optional<std::string> vicinity_mode;
  std::optional<std::string> format;
  std::optional<std::string> output;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> repetitions;
  bool merge_body_parts = false;
};

void apply_flags(const Flags& fl, RunConfig& cfg, std::vector<std::string>& problems) {
  for (const auto& [key, value] : fl.paths)
    for (const auto& [k, member] : path_fields())
      if (k == key) cfg.paths.*member = value;
  if (fl.seed) cfg.train.seed = *fl.seed;
  if (fl.parallelism) cfg.parallelism = *fl.parallelism;
  if (fl.max_distance) cfg.max_distance = *fl.max_distance;
  if (fl.exclude_labels) cfg.exclude_labels = *fl.exclude_labels;
  if (fl.epochs) cfg.train.epochs = *fl.epochs;
  if (fl.repetitions) cfg.repetitions = *fl.repetitions;
  if (fl.merge_body_parts) cfg.merge_body_parts = true;
  if (fl.context_scope) {
    try {
      cfg.context_scope = relex::pipeline::parse_context_scope(*fl.context_scope);
    } catch (const relex::Error& e) {
      problems.push_back(std::string("--context-scope: ") + e.what());
    }
  }
  if (fl.vicinity_mode) {
    try {
      cfg.features.vicinity_mode = relex::features::parse_vicinity_mode(*fl.vicinity_mode);
    } catch (const relex::Error& e) {
      problems.push_back(std::string("--vicinity-mode: ") + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Validation

enum class Command { kTrain, kPredict, kEvaluate, kGraph, kTimeline, kEnrich, kBenchmark, kInspect };

struct Need {
  const char* key;
  std::string Paths::*member;
  bool input;  // must exist
};

std::vector<Need> needs(Command c) {
  switch (c) {
    case Command::kTrain:
      return {{"embeddings", &Paths::embeddings, true}, {"train", &Paths::train, true},
              {"model", &Paths::model, false}};
    case Command::kPredict:
      return {{"embeddings", &Paths::embeddings, true}, {"model", &Paths::model, true},
              {"corpus", &Paths::corpus, true}, {"predictions", &Paths::predictions, false}};
    case Command::kEvaluate:
      return {{"embeddings", &Paths::embeddings, true}, {"model", &Paths::model, true},
              {"test", &Paths::test, true}, {"report", &Paths::report, false}};
    case Command::kGraph:
      return {{"predictions", &Paths::predictions, true}, {"graph", &Paths::graph, false}};
    case Command::kTimeline:
      return {{"predictions", &Paths::predictions, true}, {"timeline", &Paths::timeline, false}};
    case Command::kEnrich:
      return {{"predictions", &Paths::predictions, true}, {"embeddings", &Paths::embeddings, true},
              {"dictionary", &Paths::dictionary, true}, {"enriched", &Paths::enriched, false}};
    case Command::kBenchmark:
      return {{"embeddings", &Paths::embeddings, true}, {"model", &Paths::model, true},
              {"corpus", &Paths::corpus, true}, {"bench", &Paths::bench, false}};
    case Command::kInspect:
      return {{"model", &Paths::model, true}};
  }
  return {};
}

const char* command_name(Command c) {
  switch (c) {
    case Command::kTrain: return "train";
    case Command::kPredict: return "predict";
    case Command::kEvaluate: return "evaluate";
    case Command::kGraph: return "graph";
    case Command::kTimeline: return "timeline";
    case Command::kEnrich: return "enrich";
    case Command::kBenchmark: return "benchmark";
    case Command::kInspect: return "inspect";
  }
  return "?";
}

// The path a command writes its main artifact to; --output overrides it.
std::string* primary_output(Command c, Paths& p) {
  switch (c) {
    case Command::kTrain: return &p.model;
    case Command::kPredict: return &p.predictions;
    case Command::kEvaluate: return &p.report;
    case Command::kGraph: return &p.graph;
    case Command::kTimeline: return &p.timeline;
    case Command::kEnrich: return &p.enriched;
    case Command::kBenchmark: return &p.bench;
    case Command::kInspect: return nullptr;
  }
  return nullptr;
}

void validate(Command c, RunConfig& cfg, const Flags& fl, std::vector<std::string>& problems) {
  if (fl.output) {
    if (std::string* out = primary_output(c, cfg.paths)) *out = *fl.output;
  }
  if (fl.format) {
    if (c == Command::kGraph) cfg.graph_format = *fl.format;
    else if (c == Command::kPredict) cfg.record_format = *fl.format;
    else problems.push_back(std::string("--format: not used by '") + command_name(c) + "'");
  }
  if (c == Command::kTrain) {
    if (cfg.paths.log.empty() && !cfg.paths.model.empty()) cfg.paths.log = cfg.paths.model + ".log";
    if (cfg.paths.metrics.empty() && !cfg.paths.model.empty()) cfg.paths.metrics = cfg.paths.model + ".metrics.json";
  }

  for (const auto& n : needs(c)) {
    const std::string& v = cfg.paths.*(n.member);
    if (v.empty()) {
      problems.push_back(std::string("paths.") + n.key + ": required by '" + command_name(c) + "' but not set");
    } else if (n.input && !fs::is_regular_file(v)) {
      problems.push_back(std::string("paths.") + n.key + ": file not found: " + v);
    }
  }
  if (c == Command::kPredict || c == Command::kBenchmark) {
    if (!cfg.paths.schema.empty() && !fs::is_regular_file(cfg.paths.schema))
      problems.push_back("paths.schema: file not found: " + cfg.paths.schema);
  }
  if (c == Command::kTrain) {
    if (!cfg.paths.schema.empty() && !fs::is_regular_file(cfg.paths.schema))
      problems.push_back("paths.schema: file not found: " + cfg.paths.schema);
    auto check = [&](const char* name, auto&& fn) {
      try {
        fn();
      } catch (const relex::Error& e) {
        problems.push_back(std::string(name) + ": " + e.what());
      }
    };
    check("train", [&] { relex::fcnn::validate(cfg.train); });
    check("features", [&] {
      auto f = cfg.features;
      if (!cfg.embed_dim_set) f.embed_dim = 1;  // taken from the embeddings file
      relex::features::validate(f);
    });
    if (!(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0))
      problems.push_back("train.holdout_fraction: must be in [0, 1)");
  }
  if (c == Command::kPredict || c == Command::kBenchmark || c == Command::kTrain) {
    if (cfg.max_distance < 0) problems.push_back("pipeline.max_distance: must be >= 0");
    if (cfg.parallelism == 0) problems.push_back("parallelism: must be >= 1");
  }
  if (c == Command::kPredict) {
    if (cfg.record_format != "tsv" && cfg.record_format != "jsonl")
      problems.push_back("predict.format: expected tsv or jsonl, got '" + cfg.record_format + "'");
  }
  if (c == Command::kGraph && cfg.graph_format != "dot" && cfg.graph_format != "records")
    problems.push_back("graph.format: expected dot or records, got '" + cfg.graph_format + "'");
  if (c == Command::kEnrich && cfg.top_k <= 0) problems.push_back("enrich.top_k: must be >= 1");
  if (c == Command::kBenchmark && cfg.repetitions == 0) problems.push_back("benchmark.repetitions: must be >= 1");
}

// ---------------------------------------------------------------------------
// Output

// Files are staged next to their destination and renamed into place only
// after every artifact of the command has been produced.
class OutputSet {
 public:
  void add(const std::string& path, std::string content) { files_.emplace_back(path, std::move(content)); }

  void commit() {
    std::vector<std::pair<std::string, std::string>> staged;
    try {
      for (const auto& [path, content] : files_) {
        const fs::path dest(path);
        if (dest.has_parent_path() && !fs::exists(dest.parent_path())) fs::create_directories(dest.parent_path());
        std::string tmp = path + ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw relex::Error("cannot write " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) throw relex::Error("write failed: " + tmp);
        staged.emplace_back(tmp, path);
      }
    } catch (...) {
      for (const auto& [tmp, dest] : staged) std::remove(tmp.c_str());
      throw;
    }
    for (const auto& [tmp, dest] : staged) fs::rename(tmp, dest);
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

relex::pipeline::PipelineConfig pipeline_config(const RunConfig& cfg, const relex::fcnn::FcnnModel& model) {
  relex::pipeline::PipelineConfig pc;
  if (cfg.paths.schema.empty())
    throw relex::Error("paths.schema: required to generate candidate pairs");
  pc.schema = relex::pipeline::read_schema(cfg.paths.schema);
  pc.max_syntactic_distance = cfg.max_distance;
  pc.context_scope = cfg.context_scope;
  pc.feature_config = model.feature_config;
  return pc;
}

void check_model_embeddings(const relex::fcnn::FcnnModel& model, const relex::embed::EmbeddingTable& table) {
  if (model.feature_config.embed_dim != table.dim())
    throw relex::Error(relex::detail::concat("model expects ", model.feature_config.embed_dim,
                                             "-dimensional embeddings, file has ", table.dim()));
}

int cmd_train(RunConfig& cfg) {
  const auto table = relex::embed::load_text_embeddings(cfg.paths.embeddings);
  auto fc = cfg.features;
  if (!cfg.embed_dim_set) fc.embed_dim = table.dim();
  if (fc.embed_dim != table.dim())
    throw ConfigError({relex::detail::concat("features.embed_dim: ", fc.embed_dim,
                                             " does not match the embeddings file (", table.dim(), ")")});
  const auto rows = relex::corpus::read_training_csv(cfg.paths.train);
  if (rows.empty()) throw relex::Error("training CSV has no rows: " + cfg.paths.train);

  std::vector<std::string> labels;
  if (!cfg.paths.schema.empty()) {
    labels = relex::pipeline::read_schema(cfg.paths.schema).labels;
  } else {
    std::set<std::string> seen;
    for (const auto& r : rows) seen.insert(r.label);
    labels.assign(seen.begin(), seen.end());
  }

  // Hold out whole documents, chosen by a seeded shuffle of the sorted ids.
  std::set<std::string> id_set;
  for (const auto& r : rows) id_set.insert(r.doc_id);
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  std::mt19937_64 split_rng(cfg.train.seed);
  std::shuffle(ids.begin(), ids.end(), split_rng);
  const auto held = static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(ids.size()));
  const std::set<std::string> held_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<relex::corpus::RelationExample> train_rows, test_rows;
  for (const auto& r : rows) (held_ids.count(r.doc_id) ? test_rows : train_rows).push_back(r);

  const auto train_set = relex::pipeline::examples_from_csv(train_rows, fc, table);
  const auto test_set = relex::pipeline::examples_from_csv(test_rows, fc, table);

  std::ostringstream log;
  const auto model = relex::fcnn::train(train_set, labels, fc, cfg.train, [&](const relex::fcnn::EpochLog& e) {
    log << "epoch " << e.epoch << " lr " << fmt(e.learning_rate, 8) << " batch_loss " << fmt(e.batch_loss)
        << " loss " << fmt(e.loss) << " accuracy " << fmt(e.accuracy) << '\n';
  });

  json metrics = {{"train_examples", train_set.size()},
                  {"heldout_examples", test_set.size()},
                  {"heldout_documents", held},
                  {"seed", cfg.train.seed}};
  if (test_set.empty()) {
    metrics["note"] = "held-out split is empty; no metrics computed";
  } else {
    const auto report = relex::eval::evaluate(model, test_set, cfg.exclude_labels);
    metrics["heldout"] = relex::eval::metrics_json(report);
    std::cout << relex::eval::render_metrics(report);
  }

  OutputSet out;
  out.add(cfg.paths.model, relex::fcnn::serialize_model(model));
  out.add(cfg.paths.log, log.str());
  out.add(cfg.paths.metrics, metrics.dump(2) + "\n");
  out.commit();
  std::cerr << "wrote " << cfg.paths.model << " (" << train_set.size() << " training examples, "
            << cfg.train.epochs << " epochs)\n";
  return 0;
}

std::vector<relex::pipeline::RelationPrediction> run_pipeline(const RunConfig& cfg,
                                                             const relex::fcnn::FcnnModel& model,
                                                             const relex::embed::EmbeddingTable& table,
                                                             const std::vector<relex::corpus::Document>& docs) {
  const auto pc = pipeline_config(cfg, model);
  const auto per_doc = relex::pipeline::extract_relations_batch(docs, model, pc, table, cfg.parallelism);
  std::vector<relex::pipeline::RelationPrediction> all;
  for (const auto& d : per_doc) all.insert(all.end(), d.begin(), d.end());
  return all;
}

int cmd_predict(RunConfig& cfg) {
  const auto model = relex::fcnn::load_model(cfg.paths.model);
  const auto table = relex::embed::load_text_embeddings(cfg.paths.embeddings);
  check_model_embeddings(model, table);
  const auto docs = relex::corpus::read_conll(cfg.paths.corpus);
  const auto preds = run_pipeline(cfg, model, table, docs);
  std::ostringstream os;
  relex::pipeline::write_predictions(os, preds, relex::pipeline::parse_record_format(cfg.record_format));
  OutputSet out;
  out.add(cfg.paths.predictions, os.str());
  out.commit();
  std::cerr << "wrote " << preds.size() << " predictions for " << docs.size() << " documents to "
            << cfg.paths.predictions << '\n';
  return 0;
}

int cmd_evaluate(RunConfig& cfg) {
  const auto model = relex::fcnn::load_model(cfg.paths.model);
  const auto table = relex::embed::load_text_embeddings(cfg.paths.embeddings);
  check_model_embeddings(model, table);
  const auto rows = relex::corpus::read_training_csv(cfg.paths.test);
  const auto examples = relex::pipeline::examples_from_csv(rows, model.feature_config, table);
  const auto report = relex::eval::evaluate(model, examples, cfg.exclude_labels);
  std::cout << relex::eval::render_metrics(report);
  OutputSet out;
  out.add(cfg.paths.report, relex::eval::metrics_json(report).dump(2) + "\n");
  out.commit();
  return 0;
}

int cmd_graph(RunConfig& cfg) {
  const auto preds = relex::pipeline::read_predictions(cfg.paths.predictions);
  auto graph = relex::downstream::build_graph(preds, cfg.positive_labels);
  if (cfg.merge_body_parts) graph = relex::downstream::merge_body_parts(graph);
  OutputSet out;
  out.add(cfg.paths.graph,
          relex::downstream::render_graph(graph, relex::downstream::parse_graph_format(cfg.graph_format)));
  out.commit();
  std::cerr << "graph: " << graph.nodes.size() << " nodes, " << graph.edges.size() << " edges\n";
  return 0;
}

int cmd_timeline(RunConfig& cfg) {
  const auto preds = relex::pipeline::read_predictions(cfg.paths.predictions);
  const auto t = relex::downstream::build_timeline(preds, cfg.date_type, cfg.positive_labels);
  OutputSet out;
  out.add(cfg.paths.timeline, relex::downstream::render_timeline(t));
  out.commit();
  std::cerr << "timeline: " << t.events.size() << " events, " << t.rejects.size() << " rejected dates\n";
  return 0;
}

int cmd_enrich(RunConfig& cfg) {
  const auto preds = relex::pipeline::read_predictions(cfg.paths.predictions);
  const auto table = relex::embed::load_text_embeddings(cfg.paths.embeddings);
  const auto dict = relex::downstream::read_code_dictionary(cfg.paths.dictionary, cfg.ontology, table);
  if (dict.empty()) throw relex::Error("code dictionary is empty: " + cfg.paths.dictionary);
  std::ostringstream os;
  os << "doc_id\tanchor\tenriched\tbase_code\tbase_score\tenriched_code\tenriched_score\n";
  const auto chunks = relex::downstream::enrich_from_predictions(preds, cfg.positive_labels);
  for (const auto& c : chunks) {
    const auto base = relex::downstream::resolve(c.anchor.text, table, dict, cfg.top_k);
    const auto rich = relex::downstream::resolve(c.text, table, dict, cfg.top_k);
    auto codes = [](const std::vector<relex::downstream::Resolution>& rs) {
      std::string s;
      for (std::size_t i = 0; i < rs.size(); ++i) s += (i ? "," : "") + rs[i].code;
      return s;
    };
    os << c.doc_id << '\t' << c.anchor.text << '\t' << c.text << '\t' << codes(base) << '\t'
       << fmt(base.front().score) << '\t' << codes(rich) << '\t' << fmt(rich.front().score) << '\n';
  }
  OutputSet out;
  out.add(cfg.paths.enriched, os.str());
  out.commit();
  std::cerr << "enriched " << chunks.size() << " chunks\n";
  return 0;
}

int cmd_benchmark(RunConfig& cfg) {
  const auto model = relex::fcnn::load_model(cfg.paths.model);
  const auto table = relex::embed::load_text_embeddings(cfg.paths.embeddings);
  check_model_embeddings(model, table);
  const auto docs = relex::corpus::read_conll(cfg.paths.corpus);
  const auto pc = pipeline_config(cfg, model);
  const auto report = relex::eval::benchmark_throughput(docs, model, pc, table, cfg.repetitions, cfg.parallelism);
  std::cout << relex::eval::render_bench(report);
  OutputSet out;
  out.add(cfg.paths.bench, relex::eval::bench_json(report).dump(2) + "\n");
  out.commit();
  return 0;
}

int cmd_inspect(RunConfig& cfg, const std::optional<std::string>& output) {
  const auto model = relex::fcnn::load_model(cfg.paths.model);
  const std::string text = relex::fcnn::export_model_json(model).dump(2) + "\n";
  if (output) {
    OutputSet out;
    out.add(*output, text);
    out.commit();
  } else {
    std::cout << text;
  }
  return 0;
}

// Writes a small self-consistent demo workspace: corpus, training CSV,
// embeddings, schema, code dictionary and a config tying them together.
int cmd_synth(const std::string& dir, std::size_t documents, std::uint64_t seed) {
  relex::synthetic::SyntheticConfig sc;
  sc.documents = documents;
  sc.seed = seed;
  const auto corpus = relex::synthetic::generate_corpus(sc);

  relex::pipeline::PipelineConfig pc;
  pc.schema = corpus.schema;
  std::vector<relex::corpus::RelationExample> rows;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    auto r = relex::pipeline::csv_rows_from_document(corpus.docs[i], corpus.gold[i], pc);
    rows.insert(rows.end(), r.begin(), r.end());
  }

  std::ostringstream conll, csv, emb, schema, dict;
  relex::corpus::write_conll(conll, corpus.docs);
  relex::corpus::write_training_csv(csv, rows);
  relex::embed::write_text_embeddings(emb, corpus.vectors, sc.embed_dim);
  relex::pipeline::write_schema(schema, corpus.schema);
  const auto& symptoms = relex::synthetic::symptoms();
  const auto& parts = relex::synthetic::body_parts();
  for (std::size_t s = 0; s < symptoms.size(); ++s) {
    dict << "S" << s << '\t' << symptoms[s] << '\n';
    for (std::size_t b = 0; b < parts.size(); ++b)
      dict << "S" << s << "." << b << '\t' << symptoms[s] << ' ' << parts[b] << '\n';
  }

  const json config = {
      {"seed", seed},
      {"paths",
       {{"embeddings", "embeddings.txt"},
        {"schema", "schema.txt"},
        {"train", "train.csv"},
        {"test", "train.csv"},
        {"corpus", "corpus.conll"},
        {"model", "model.bin"},
        {"predictions", "predictions.tsv"},
        {"report", "report.json"},
        {"graph", "graph.dot"},
        {"timeline", "timeline.tsv"},
        {"enriched", "enriched.tsv"},
        {"bench", "bench.json"},
        {"dictionary", "dictionary.tsv"}}},
      {"features", {{"vicinity_window", 5}, {"max_path_len", 3}}},
      {"train", {{"epochs", 20}}},
  };

  const fs::path d(dir);
  OutputSet out;
  out.add((d / "corpus.conll").string(), conll.str());
  out.add((d / "train.csv").string(), csv.str());
  out.add((d / "embeddings.txt").string(), emb.str());
  out.add((d / "schema.txt").string(), schema.str());
  out.add((d / "dictionary.tsv").string(), dict.str());
  out.add((d / "config.json").string(), config.dump(2) + "\n");
  out.commit();
  std::cerr << "wrote " << corpus.docs.size() << " documents, " << rows.size() << " training rows to " << dir
            << '\n';
  return 0;
}

// Config paths are relative to the config file's directory.
void resolve_config_relative(RunConfig& cfg, const std::string& config_path) {
  const fs::path base = fs::path(config_path).parent_path();
  if (base.empty()) return;
  for (const auto& [key, member] : path_fields()) {
    std::string& v = cfg.paths.*member;
    if (!v.empty() && fs::path(v).is_relative()) v = (base / v).string();
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Relation extraction between clinical entity chunks"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags fl;
  app.add_option("--config", fl.config, "JSON config file");
  for (const auto& [key, member] : path_fields()) {
    app.add_option_function<std::string>(
        "--" + key, [&fl, k = key](const std::string& v) { fl.paths[k] = v; }, "Path: " + key);
  }
  app.add_option("--seed", fl.seed, "Random seed");
  app.add_option("--parallelism", fl.parallelism, "Worker threads for document batches");
  app.add_option("--max-distance", fl.max_distance, "Largest syntactic distance kept by pruning");
  app.add_option("--context-scope", fl.context_scope, "sentence or document");
  app.add_option("--exclude-labels", fl.exclude_labels, "Labels left out of macro F1")->delimiter(',');
  app.add_option("--vicinity-mode", fl.vicinity_mode, "flatten or mean");
  app.add_option("--format", fl.format, "graph: dot or records; predict: tsv or jsonl");
  app.add_option("--output,-o", fl.output, "Output path of the command's main artifact");
  app.add_option("--epochs", fl.epochs, "Training epochs");
  app.add_option("--repetitions", fl.repetitions, "Benchmark repetitions");
  app.add_flag("--merge-body-parts", fl.merge_body_parts, "Fold SubPart/Direction nodes into body parts");

  std::map<CLI::App*, Command> commands;
  commands[app.add_subcommand("train", "Train a model from a labelled CSV")] = Command::kTrain;
  commands[app.add_subcommand("predict", "Classify candidate pairs of a CoNLL corpus")] = Command::kPredict;
  commands[app.add_subcommand("evaluate", "Per-class and macro F1 on a labelled CSV")] = Command::kEvaluate;
  commands[app.add_subcommand("graph", "Knowledge graph from predictions")] = Command::kGraph;
  commands[app.add_subcommand("timeline", "Dated events from predictions")] = Command::kTimeline;
  commands[app.add_subcommand("enrich", "Enrich chunks and resolve them to codes")] = Command::kEnrich;
  commands[app.add_subcommand("benchmark", "Throughput of the extraction pipeline")] = Command::kBenchmark;
  commands[app.add_subcommand("inspect", "Dump a model file as JSON")] = Command::kInspect;

  std::string synth_dir;
  std::size_t synth_docs = 200;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "Write a synthetic demo workspace");
  synth->add_option("dir", synth_dir, "Output directory")->required();
  synth->add_option("--documents", synth_docs, "Number of documents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (synth->parsed()) return cmd_synth(synth_dir, synth_docs, fl.seed.value_or(synth_seed));

  Command command = Command::kTrain;
  for (const auto& [sub, c] : commands)
    if (sub->parsed()) command = c;

  RunConfig cfg;
  std::vector<std::string> problems;
  if (!fl.config.empty()) {
    load_config_file(fl.config, cfg, problems);
    resolve_config_relative(cfg, fl.config);
  }
  apply_environment(cfg);
  apply_flags(fl, cfg, problems);
  if (command == Command::kInspect) {
    if (cfg.paths.model.empty()) problems.push_back("paths.model: required by 'inspect' but not set");
    if (!problems.empty()) throw ConfigError(problems);
    return cmd_inspect(cfg, fl.output);
  }
  validate(command, cfg, fl, problems);
  if (!problems.empty()) throw ConfigError(problems);

  switch (command) {
    case Command::kTrain: return cmd_train(cfg);
    case Command::kPredict: return cmd_predict(cfg);
    case Command::kEvaluate: return cmd_evaluate(cfg);
    case Command::kGraph: return cmd_graph(cfg);
    case Command::kTimeline: return cmd_timeline(cfg);
    case Command::kEnrich: return cmd_enrich(cfg);
    case Command::kBenchmark: return cmd_benchmark(cfg);
    case Command::kInspect: break;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const relex::Error& e) {
    std::cerr << "relex: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "relex: internal error: " << e.what() << '\n';
    return 2;
  }
}
