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

// End-to-end relation extraction over documents whose entity chunks are
// already known: schema-driven pair generation, syntactic pruning, feature
// assembly with per-document embedding reuse, and classification.

#ifndef RELEX_PIPELINE_HPP_
#define RELEX_PIPELINE_HPP_

#include <algorithm>
#include <atomic>
#include <charconv>
#include <concepts>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "relex/candidate_pair.hpp"
#include "relex/corpus.hpp"
#include "relex/embeddings.hpp"
#include "relex/error.hpp"
#include "relex/fcnn.hpp"
#include "relex/features.hpp"
#include "relex/syntax.hpp"
#include "relex/training_csv.hpp"

namespace relex::pipeline {

struct RelationSchema {
  std::vector<std::pair<std::string, std::string>> allowed_pairs;  // (entity-1 type, entity-2 type)
  std::vector<std::string> labels{"0", "1"};

  bool allows(const std::string& t1, const std::string& t2) const {
    return std::find(allowed_pairs.begin(), allowed_pairs.end(), std::pair{t1, t2}) != allowed_pairs.end();
  }
  void add(std::string t1, std::string t2) {
    if (allows(t1, t2)) throw Error("duplicate schema pair " + t1 + " -> " + t2);
    allowed_pairs.emplace_back(std::move(t1), std::move(t2));
  }
};

// Schema file: one `Entity1Type -> Entity2Type` per line, plus an optional
// `labels: l0 l1 ...` line. '#' starts a comment.
inline RelationSchema read_schema(std::istream& in) {
  RelationSchema schema;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("labels:", 0) == 0) {
      std::istringstream is(line.substr(7));
      schema.labels.clear();
      for (std::string l; is >> l;) schema.labels.push_back(l);
      if (schema.labels.size() < 2)
        throw ParseError(detail::concat("line ", line_no, ": need at least 2 labels"), line_no);
      continue;
    }
    const auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw ParseError(detail::concat("line ", line_no, ": expected 'Type1 -> Type2'"), line_no);
    auto t1 = trim(line.substr(0, arrow));
    auto t2 = trim(line.substr(arrow + 2));
    if (t1.empty() || t2.empty())
      throw ParseError(detail::concat("line ", line_no, ": empty entity type"), line_no);
    if (schema.allows(t1, t2))
      throw ParseError(detail::concat("line ", line_no, ": duplicate pair ", t1, " -> ", t2), line_no);
    schema.allowed_pairs.emplace_back(std::move(t1), std::move(t2));
  }
  return schema;
}

inline RelationSchema read_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_schema(in);
}

inline void write_schema(std::ostream& out, const RelationSchema& schema) {
  for (const auto& [a, b] : schema.allowed_pairs) out << a << " -> " << b << '\n';
  out << "labels:";
  for (const auto& l : schema.labels) out << ' ' << l;
  out << '\n';
}

enum class ContextScope { kSentence, kDocument };

inline ContextScope parse_context_scope(const std::string& s) {
  if (s == "sentence") return ContextScope::kSentence;
  if (s == "document") return ContextScope::kDocument;
  throw Error("unknown context scope '" + s + "' (expected sentence or document)");
}

inline std::string to_string(ContextScope s) { return s == ContextScope::kDocument ? "document" : "sentence"; }

struct PipelineConfig {
  RelationSchema schema;
  int max_syntactic_distance = 5;
  ContextScope context_scope = ContextScope::kSentence;
  // When set, must equal the classifier's own feature config.
  std::optional<features::FeatureConfig> feature_config;
  // Look token vectors up once per document (true) or per pair (false).
  bool share_document_embeddings = true;
};

struct RelationPrediction {
  CandidatePair pair;
  std::string label;
  double confidence = 0.0;
  std::vector<double> probabilities;
};

// Anything that maps a feature vector to a labelled probability vector can
// stand in for the FCNN.
template <typename C>
concept RelationClassifier = requires(const C& c, std::span<const double> x) {
  { c.predict(x) } -> std::same_as<fcnn::Prediction>;
  { c.labels() } -> std::convertible_to<const std::vector<std::string>&>;
  { c.features() } -> std::convertible_to<const features::FeatureConfig&>;
};

static_assert(RelationClassifier<fcnn::FcnnModel>);

// All schema-allowed ordered chunk pairs, sorted by (sentence, chunk1
// start, chunk2 start). Sentence scope drops cross-sentence pairs.
inline std::vector<CandidatePair> generate_pairs(const corpus::Document& doc, const RelationSchema& schema,
                                                 ContextScope scope) {
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < doc.chunks.size(); ++i) {
    for (std::size_t j = 0; j < doc.chunks.size(); ++j) {
      if (i == j) continue;
      const auto& a = doc.chunks[i];
      const auto& b = doc.chunks[j];
      const bool same = a.sentence_index == b.sentence_index;
      if (scope == ContextScope::kSentence && !same) continue;
      if (!schema.allows(a.entity_type, b.entity_type)) continue;
      out.push_back({a, b, i, j, doc.id, same});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
    return std::tuple(x.chunk1.sentence_index, x.chunk1.tokens.begin, x.chunk2.tokens.begin) <
           std::tuple(y.chunk1.sentence_index, y.chunk1.tokens.begin, y.chunk2.tokens.begin);
  });
  return out;
}

// Pairs that survive generation and pruning; the classification units.
inline std::vector<CandidatePair> candidate_pairs(const corpus::Document& doc, const PipelineConfig& config,
                                                  const std::vector<syntax::DependencyTree>& trees) {
  return syntax::prune_pairs(generate_pairs(doc, config.schema, config.context_scope), doc, trees,
                             config.max_syntactic_distance);
}

template <RelationClassifier Classifier>
void check_compatible(const Classifier& model, const PipelineConfig& config) {
  if (config.feature_config && *config.feature_config != model.features())
    throw Error("pipeline feature config does not match the model's");
  if (!config.schema.labels.empty() && config.schema.labels != model.labels())
    throw Error("schema labels do not match the model's class labels");
}

template <RelationClassifier Classifier>
std::vector<RelationPrediction> extract_relations(const corpus::Document& doc, const Classifier& model,
                                                  const PipelineConfig& config,
                                                  const embed::EmbeddingTable& table) {
  check_compatible(model, config);
  std::vector<RelationPrediction> out;
  if (doc.chunks.empty()) return out;
  const auto trees = syntax::sentence_trees(doc);
  const auto pairs = candidate_pairs(doc, config, trees);
  if (pairs.empty()) return out;

  const auto& fc = model.features();
  std::optional<features::DocumentEmbeddings> shared;
  if (config.share_document_embeddings) shared.emplace(table, doc);
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const auto fv = shared ? features::build_features(pair, doc, trees, *shared, fc)
                           : features::build_features(pair, doc, trees, table, fc);
    auto pred = model.predict(fv.values);
    out.push_back({pair, pred.label, pred.confidence(), std::move(pred.probabilities)});
  }
  return out;
}

// Thrown by extract_relations_batch; lists every failing document.
class BatchError : public Error {
 public:
  BatchError(const std::string& what, std::vector<std::pair<std::string, std::string>> failures)
      : Error(what), failures_(std::move(failures)) {}
  const std::vector<std::pair<std::string, std::string>>& failures() const { return failures_; }

 private:
  std::vector<std::pair<std::string, std::string>> failures_;
};

// Runs extract_relations on every document with up to `parallelism`
// worker threads. Results are in input order and independent of the
// thread count.
template <RelationClassifier Classifier>
std::vector<std::vector<RelationPrediction>> extract_relations_batch(const std::vector<corpus::Document>& docs,
                                                                     const Classifier& model,
                                                                     const PipelineConfig& config,
                                                                     const embed::EmbeddingTable& table,
                                                                     std::size_t parallelism = 1) {
  std::vector<std::vector<RelationPrediction>> results(docs.size());
  std::vector<std::optional<std::string>> errors(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < docs.size();) {
      try {
        results[i] = extract_relations(docs[i], model, config, table);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, docs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<std::pair<std::string, std::string>> failures;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (errors[i]) failures.emplace_back(docs[i].id, *errors[i]);
  if (!failures.empty()) {
    std::ostringstream msg;
    msg << failures.size() << " document(s) failed:";
    for (const auto& [id, what] : failures) msg << "\n  " << id << ": " << what;
    throw BatchError(msg.str(), std::move(failures));
  }
  return results;
}

// Gold annotation of one document: chunk index pairs and their labels.
struct GoldRelation {
  std::size_t chunk1_index = 0;
  std::size_t chunk2_index = 0;
  std::string label = "1";
};

// Training examples for every prune-surviving candidate pair of `doc`.
// Pairs without a gold relation get `negative_label`.
inline std::vector<fcnn::TrainingExample> training_examples(const corpus::Document& doc,
                                                            const std::vector<GoldRelation>& gold,
                                                            const PipelineConfig& config,
                                                            const features::FeatureConfig& feature_config,
                                                            const embed::EmbeddingTable& table,
                                                            const std::string& negative_label = "0") {
  std::map<std::pair<std::size_t, std::size_t>, std::string> labels;
  for (const auto& g : gold) labels[{g.chunk1_index, g.chunk2_index}] = g.label;
  std::vector<fcnn::TrainingExample> out;
  if (doc.chunks.empty()) return out;
  const auto trees = syntax::sentence_trees(doc);
  const features::DocumentEmbeddings cache(table, doc);
  for (const auto& pair : candidate_pairs(doc, config, trees)) {
    auto it = labels.find({pair.chunk1_index, pair.chunk2_index});
    out.push_back({features::build_features(pair, doc, trees, cache, feature_config),
                   it == labels.end() ? negative_label : it->second,
                   {doc.id, pair.chunk1_index, pair.chunk2_index}});
  }
  return out;
}

// Single-sentence document and candidate pair described by one training
// CSV row. The row's sentence is one sentence regardless of inner
// punctuation; chunk token ranges are the tokens overlapping each offset
// span.
inline std::pair<corpus::Document, CandidatePair> document_from_example(const corpus::RelationExample& ex) {
  corpus::Document doc = corpus::make_document(ex.doc_id, ex.sentence);
  for (auto& t : doc.tokens) t.sentence_index = 0;
  doc.sentences.clear();
  if (!doc.tokens.empty()) doc.sentences.push_back({0, {0, doc.tokens.size()}});

  auto chunk_for = [&](std::size_t b, std::size_t e, const std::string& type) {
    corpus::TokenRange r{doc.tokens.size(), 0};
    for (const auto& t : doc.tokens) {
      if (t.char_end > b && t.char_begin < e) {
        r.begin = std::min(r.begin, t.index);
        r.end = std::max(r.end, t.index + 1);
      }
    }
    if (r.empty()) throw Error(detail::concat("row for ", ex.doc_id, ": span [", b, ", ", e, ") covers no token"));
    return corpus::make_chunk(doc.tokens, r, type);
  };
  doc.chunks.push_back(chunk_for(ex.e1_begin, ex.e1_end, ex.e1_type));
  doc.chunks.push_back(chunk_for(ex.e2_begin, ex.e2_end, ex.e2_type));
  CandidatePair pair{doc.chunks[0], doc.chunks[1], 0, 1, doc.id, true};
  return {std::move(doc), std::move(pair)};
}

inline std::vector<fcnn::TrainingExample> examples_from_csv(const std::vector<corpus::RelationExample>& rows,
                                                            const features::FeatureConfig& feature_config,
                                                            const embed::EmbeddingTable& table) {
  std::vector<fcnn::TrainingExample> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    auto [doc, pair] = document_from_example(row);
    const auto trees = syntax::sentence_trees(doc);
    out.push_back({features::build_features(pair, doc, trees, table, feature_config), row.label,
                   {row.doc_id, 0, 1}});
  }
  return out;
}

// CSV rows for every prune-surviving same-sentence candidate pair of `doc`,
// labelled from `gold` (others get `negative_label`).
inline std::vector<corpus::RelationExample> csv_rows_from_document(const corpus::Document& doc,
                                                                   const std::vector<GoldRelation>& gold,
                                                                   const PipelineConfig& config,
                                                                   const std::string& negative_label = "0") {
  std::map<std::pair<std::size_t, std::size_t>, std::string> labels;
  for (const auto& g : gold) labels[{g.chunk1_index, g.chunk2_index}] = g.label;
  std::vector<corpus::RelationExample> out;
  if (doc.chunks.empty()) return out;
  const auto trees = syntax::sentence_trees(doc);
  for (const auto& pair : candidate_pairs(doc, config, trees)) {
    if (!pair.same_sentence) continue;
    const auto& s = doc.sentences[pair.chunk1.sentence_index];
    const std::size_t base = doc.tokens[s.tokens.begin].char_begin;
    const std::size_t end = doc.tokens[s.tokens.end - 1].char_end;
    corpus::RelationExample row;
    row.doc_id = doc.id;
    row.sentence = doc.text.substr(base, end - base);
    row.e1_begin = pair.chunk1.char_begin - base;
    row.e1_end = pair.chunk1.char_end - base;
    row.e1_type = pair.chunk1.entity_type;
    row.chunk1 = row.sentence.substr(row.e1_begin, row.e1_end - row.e1_begin);
    row.e2_begin = pair.chunk2.char_begin - base;
    row.e2_end = pair.chunk2.char_end - base;
    row.e2_type = pair.chunk2.entity_type;
    row.chunk2 = row.sentence.substr(row.e2_begin, row.e2_end - row.e2_begin);
    auto it = labels.find({pair.chunk1_index, pair.chunk2_index});
    row.label = it == labels.end() ? negative_label : it->second;
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction records.
//
// TSV: a header line, then one line per prediction with the columns of
// kPredictionColumns. Probabilities are comma-joined in class order. JSONL:
// one object per line with the same fields.

enum class RecordFormat { kTsv, kJsonl };

inline RecordFormat parse_record_format(const std::string& s) {
  if (s == "tsv") return RecordFormat::kTsv;
  if (s == "jsonl") return RecordFormat::kJsonl;
  throw Error("unknown prediction format '" + s + "' (expected tsv or jsonl)");
}

inline constexpr const char* kPredictionColumns[] = {
    "doc_id",         "c1_text",      "c1_type",      "c1_sentence",   "c1_token_begin", "c1_token_end",
    "c1_char_begin",  "c1_char_end",  "c2_text",      "c2_type",       "c2_sentence",    "c2_token_begin",
    "c2_token_end",   "c2_char_begin", "c2_char_end", "label",         "confidence",     "probabilities"};

namespace detail_records {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_chunk_tsv(std::ostream& out, const corpus::EntityChunk& c) {
  out << '\t' << c.text << '\t' << c.entity_type << '\t' << c.sentence_index << '\t' << c.tokens.begin << '\t'
      << c.tokens.end << '\t' << c.char_begin << '\t' << c.char_end;
}

inline std::size_t to_size(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ParseError(detail::concat("line ", line, ": invalid integer '", s, "'"), line);
  return v;
}

inline double to_double(const std::string& s, std::size_t line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ParseError(detail::concat("line ", line, ": invalid number '", s, "'"), line);
  return v;
}

}  // namespace detail_records

inline void write_predictions_tsv(std::ostream& out, const std::vector<RelationPrediction>& preds) {
  for (std::size_t i = 0; i < std::size(kPredictionColumns); ++i) out << (i ? "\t" : "") << kPredictionColumns[i];
  out << '\n';
  for (const auto& p : preds) {
    out << p.pair.doc_id;
    detail_records::write_chunk_tsv(out, p.pair.chunk1);
    detail_records::write_chunk_tsv(out, p.pair.chunk2);
    out << '\t' << p.label << '\t' << detail_records::format_double(p.confidence) << '\t';
    for (std::size_t k = 0; k < p.probabilities.size(); ++k)
      out << (k ? "," : "") << detail_records::format_double(p.probabilities[k]);
    out << '\n';
  }
}

inline nlohmann::json chunk_json(const corpus::EntityChunk& c) {
  return {{"text", c.text},
          {"type", c.entity_type},
          {"sentence", c.sentence_index},
          {"token_begin", c.tokens.begin},
          {"token_end", c.tokens.end},
          {"char_begin", c.char_begin},
          {"char_end", c.char_end}};
}

inline void write_predictions_jsonl(std::ostream& out, const std::vector<RelationPrediction>& preds) {
  for (const auto& p : preds) {
    nlohmann::json j = {{"doc_id", p.pair.doc_id},
                        {"chunk1", chunk_json(p.pair.chunk1)},
                        {"chunk2", chunk_json(p.pair.chunk2)},
                        {"label", p.label},
                        {"confidence", p.confidence},
                        {"probabilities", p.probabilities}};
    out << j.dump() << '\n';
  }
}

inline void write_predictions(std::ostream& out, const std::vector<RelationPrediction>& preds, RecordFormat f) {
  if (f == RecordFormat::kJsonl)
    write_predictions_jsonl(out, preds);
  else
    write_predictions_tsv(out, preds);
}

inline std::vector<RelationPrediction> read_predictions_tsv(std::istream& in) {
  std::vector<RelationPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == sep) {
        f.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    }
    return f;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.rfind("doc_id\t", 0) != 0) throw ParseError("line 1: missing prediction header", 1);
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != std::size(kPredictionColumns))
      throw ParseError(detail::concat("line ", line_no, ": expected ", std::size(kPredictionColumns),
                                      " columns, found ", f.size()), line_no);
    auto chunk = [&](std::size_t at) {
      corpus::EntityChunk c;
      c.text = f[at];
      c.entity_type = f[at + 1];
      c.sentence_index = detail_records::to_size(f[at + 2], line_no);
      c.tokens = {detail_records::to_size(f[at + 3], line_no), detail_records::to_size(f[at + 4], line_no)};
      c.char_begin = detail_records::to_size(f[at + 5], line_no);
      c.char_end = detail_records::to_size(f[at + 6], line_no);
      return c;
    };
    RelationPrediction p;
    p.pair.doc_id = f[0];
    p.pair.chunk1 = chunk(1);
    p.pair.chunk2 = chunk(8);
    p.pair.same_sentence = p.pair.chunk1.sentence_index == p.pair.chunk2.sentence_index;
    p.label = f[15];
    p.confidence = detail_records::to_double(f[16], line_no);
    if (!f[17].empty())
      for (const auto& v : split(f[17], ',')) p.probabilities.push_back(detail_records::to_double(v, line_no));
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<RelationPrediction> read_predictions_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_predictions_tsv(in);
}

inline std::vector<RelationPrediction> read_predictions_jsonl(std::istream& in) {
  std::vector<RelationPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  auto chunk = [](const nlohmann::json& j) {
    corpus::EntityChunk c;
    c.text = j.at("text").get<std::string>();
    c.entity_type = j.at("type").get<std::string>();
    c.sentence_index = j.at("sentence").get<std::size_t>();
    c.tokens = {j.at("token_begin").get<std::size_t>(), j.at("token_end").get<std::size_t>()};
    c.char_begin = j.at("char_begin").get<std::size_t>();
    c.char_end = j.at("char_end").get<std::size_t>();
    return c;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RelationPrediction p;
      p.pair.doc_id = j.at("doc_id").get<std::string>();
      p.pair.chunk1 = chunk(j.at("chunk1"));
      p.pair.chunk2 = chunk(j.at("chunk2"));
      p.pair.same_sentence = p.pair.chunk1.sentence_index == p.pair.chunk2.sentence_index;
      p.label = j.at("label").get<std::string>();
      p.confidence = j.at("confidence").get<double>();
      p.probabilities = j.at("probabilities").get<std::vector<double>>();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(detail::concat("line ", line_no, ": ", e.what()), line_no);
    }
  }
  return out;
}

// Reads either record format, telling them apart by the first byte.
inline std::vector<RelationPrediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  if (in.peek() == '{') return read_predictions_jsonl(in);
  if (in.peek() == std::ifstream::traits_type::eof()) throw ParseError("empty predictions file " + path);
  return read_predictions_tsv(in);
}

}  // namespace relex::pipeline

#endif  // RELEX_PIPELINE_HPP_
