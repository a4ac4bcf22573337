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

// Classification metrics and the throughput benchmark harness.

#ifndef RELEX_EVALBENCH_HPP_
#define RELEX_EVALBENCH_HPP_

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "relex/corpus.hpp"
#include "relex/embeddings.hpp"
#include "relex/error.hpp"
#include "relex/fcnn.hpp"
#include "relex/pipeline.hpp"

namespace relex::eval {

// counts[gold][predicted]
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
      for (auto c : row) n += c;
    return n;
  }
};

inline std::size_t label_index(const std::vector<std::string>& labels, const std::string& l) {
  auto it = std::find(labels.begin(), labels.end(), l);
  if (it == labels.end()) throw Error("unknown label '" + l + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

inline ConfusionMatrix confusion_matrix(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                                        const std::vector<std::string>& labels) {
  if (gold.size() != pred.size()) throw Error("confusion_matrix: gold and predicted lengths differ");
  ConfusionMatrix cm{labels, std::vector<std::vector<std::size_t>>(labels.size(), std::vector<std::size_t>(labels.size(), 0))};
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts[label_index(labels, gold[i])][label_index(labels, pred[i])];
  return cm;
}

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

// Per-class scores. A zero denominator makes the corresponding precision,
// recall or F1 zero.
inline std::vector<ClassMetrics> per_class(const ConfusionMatrix& cm) {
  const std::size_t k = cm.labels.size();
  std::vector<ClassMetrics> out;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = cm.counts[c][c], gold = 0, predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      gold += cm.counts[c][j];
      predicted += cm.counts[j][c];
    }
    ClassMetrics m{cm.labels[c]};
    m.support = gold;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    out.push_back(std::move(m));
  }
  return out;
}

// Unweighted mean of per-class F1 over every label not in `exclude`.
inline double macro_f1(const ConfusionMatrix& cm, const std::vector<std::string>& exclude = {}) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : per_class(cm)) {
    if (std::find(exclude.begin(), exclude.end(), m.label) != exclude.end()) continue;
    sum += m.f1;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

struct MetricsReport {
  std::vector<ClassMetrics> classes;
  std::vector<std::string> excluded;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t examples = 0;
  ConfusionMatrix confusion;
};

inline MetricsReport metrics_report(const ConfusionMatrix& cm, const std::vector<std::string>& exclude = {}) {
  MetricsReport r;
  r.classes = per_class(cm);
  r.excluded = exclude;
  r.macro_f1 = macro_f1(cm, exclude);
  r.examples = cm.total();
  std::size_t correct = 0;
  for (std::size_t c = 0; c < cm.labels.size(); ++c) correct += cm.counts[c][c];
  r.accuracy = r.examples ? static_cast<double>(correct) / static_cast<double>(r.examples) : 0.0;
  r.confusion = cm;
  return r;
}

template <pipeline::RelationClassifier Classifier>
MetricsReport evaluate(const Classifier& model, const std::vector<fcnn::TrainingExample>& test,
                       const std::vector<std::string>& exclude = {}) {
  if (test.empty()) throw Error("empty evaluation set");
  std::vector<std::string> gold, pred;
  for (const auto& ex : test) {
    gold.push_back(ex.label);
    pred.push_back(model.predict(ex.features.values).label);
  }
  return metrics_report(confusion_matrix(gold, pred, model.labels()), exclude);
}

inline std::string render_metrics(const MetricsReport& r) {
  std::size_t width = 5;
  for (const auto& c : r.classes) width = std::max(width, c.label.size());
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(static_cast<int>(width)) << "label" << std::right << std::setw(11) << "precision"
     << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "support" << '\n';
  for (const auto& c : r.classes) {
    const bool ex = std::find(r.excluded.begin(), r.excluded.end(), c.label) != r.excluded.end();
    os << std::left << std::setw(static_cast<int>(width)) << c.label << std::right << std::setw(11) << c.precision
       << std::setw(10) << c.recall << std::setw(10) << c.f1 << std::setw(10) << c.support
       << (ex ? "  (excluded)" : "") << '\n';
  }
  os << '\n' << "macro_f1  " << r.macro_f1 << '\n' << "accuracy  " << r.accuracy << '\n'
     << "examples  " << r.examples << '\n';
  return os.str();
}

inline nlohmann::json metrics_json(const MetricsReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : r.classes)
    classes.push_back(
        {{"label", c.label}, {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  return {{"macro_f1", r.macro_f1},
          {"accuracy", r.accuracy},
          {"examples", r.examples},
          {"excluded_labels", r.excluded},
          {"classes", classes},
          {"confusion", {{"labels", r.confusion.labels}, {"counts", r.confusion.counts}}}};
}

struct BenchReport {
  std::size_t doc_count = 0;
  std::size_t pair_count = 0;  // classified (prune-surviving) pairs per pass
  std::size_t repetitions = 0;
  std::vector<double> seconds;  // per repetition
  double best_seconds = 0.0;
  double docs_per_second = 0.0;
  double pairs_per_second = 0.0;
  std::string note;
};

// Wall-clock time of extract_relations_batch over `docs`, best of
// `repetitions`. Model and embeddings are loaded by the caller and are not
// timed.
template <pipeline::RelationClassifier Classifier>
BenchReport benchmark_throughput(const std::vector<corpus::Document>& docs, const Classifier& model,
                                 const pipeline::PipelineConfig& config, const embed::EmbeddingTable& table,
                                 std::size_t repetitions = 1, std::size_t parallelism = 1) {
  if (docs.empty()) throw Error("benchmark needs at least one document");
  if (repetitions == 0) throw Error("benchmark repetitions must be positive");
  BenchReport r;
  r.doc_count = docs.size();
  r.repetitions = repetitions;
  r.best_seconds = std::numeric_limits<double>::infinity();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    const auto results = pipeline::extract_relations_batch(docs, model, config, table, parallelism);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    std::size_t pairs = 0;
    for (const auto& doc_preds : results) pairs += doc_preds.size();
    r.pair_count = pairs;
    r.seconds.push_back(elapsed.count());
    r.best_seconds = std::min(r.best_seconds, elapsed.count());
  }
  r.docs_per_second = r.best_seconds > 0.0 ? static_cast<double>(r.doc_count) / r.best_seconds : 0.0;
  if (r.pair_count == 0) {
    r.pairs_per_second = 0.0;
    r.note = "no candidate pairs survived; pairs/second undefined, reported as 0";
  } else {
    r.pairs_per_second = r.best_seconds > 0.0 ? static_cast<double>(r.pair_count) / r.best_seconds : 0.0;
  }
  return r;
}

inline std::string render_bench(const BenchReport& r) {
  std::ostringstream os;
  os << "documents         " << r.doc_count << '\n'
     << "classified pairs  " << r.pair_count << '\n'
     << "repetitions       " << r.repetitions << '\n'
     << std::fixed << std::setprecision(6)
     << "best seconds      " << r.best_seconds << "  (best of " << r.repetitions << ")\n"
     << std::setprecision(2)
     << "docs/second       " << r.docs_per_second << '\n'
     << "pairs/second      " << r.pairs_per_second << '\n';
  if (!r.note.empty()) os << "note              " << r.note << '\n';
  return os.str();
}

// Fields under "timing" vary run to run; everything else is deterministic.
inline nlohmann::json bench_json(const BenchReport& r) {
  return {{"doc_count", r.doc_count},
          {"pair_count", r.pair_count},
          {"repetitions", r.repetitions},
          {"note", r.note},
          {"timing",
           {{"seconds", r.seconds},
            {"best_seconds", r.best_seconds},
            {"docs_per_second", r.docs_per_second},
            {"pairs_per_second", r.pairs_per_second}}}};
}

}  // namespace relex::eval

#endif  // RELEX_EVALBENCH_HPP_
