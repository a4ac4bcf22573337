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

// Chunk enrichment from positive relations and a cosine nearest-neighbour
// code resolver over description embeddings.

#ifndef RELEX_RESOLVER_HPP_
#define RELEX_RESOLVER_HPP_

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "relex/corpus.hpp"
#include "relex/embeddings.hpp"
#include "relex/error.hpp"
#include "relex/graph.hpp"
#include "relex/pipeline.hpp"

namespace relex::downstream {

// Mean of the token vectors of `text` (tokenized like documents).
inline embed::Vector embed_text(const embed::EmbeddingTable& table, std::string_view text) {
  embed::Vector out(table.dim(), 0.0);
  const auto [tokens, sentences] = corpus::tokenize(text);
  if (tokens.empty()) return out;
  for (const auto& t : tokens) {
    auto v = table.lookup(t.text);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  for (double& x : out) x /= static_cast<double>(tokens.size());
  return out;
}

struct CodeEntry {
  std::string code;
  std::string description;
  embed::Vector vector;
};

class CodeDictionary {
 public:
  explicit CodeDictionary(std::string ontology = {}) : ontology_(std::move(ontology)) {}

  const std::string& ontology() const { return ontology_; }
  const std::vector<CodeEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  void add(std::string code, std::string description, const embed::EmbeddingTable& table) {
    for (const auto& e : entries_)
      if (e.code == code) throw Error("duplicate code '" + code + "' in " + ontology_);
    auto v = embed_text(table, description);
    entries_.push_back({std::move(code), std::move(description), std::move(v)});
  }

 private:
  std::string ontology_;
  std::vector<CodeEntry> entries_;
};

// `code<TAB>description` per line; blank lines and '#' lines skipped.
inline CodeDictionary read_code_dictionary(std::istream& in, std::string ontology,
                                           const embed::EmbeddingTable& table) {
  CodeDictionary dict(std::move(ontology));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError(detail::concat("line ", line_no, ": expected code<TAB>description"), line_no);
    try {
      dict.add(line.substr(0, tab), line.substr(tab + 1), table);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(detail::concat("line ", line_no, ": ", e.what()), line_no);
    }
  }
  return dict;
}

inline CodeDictionary read_code_dictionary(const std::string& path, std::string ontology,
                                           const embed::EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_code_dictionary(in, std::move(ontology), table);
}

struct Resolution {
  std::string code;
  std::string description;
  double score = 0.0;
};

// Top-k entries by cosine between the query's mean embedding and each
// description embedding; ties broken by code, ascending.
inline std::vector<Resolution> resolve(std::string_view query, const embed::EmbeddingTable& table,
                                       const CodeDictionary& dictionary, int k) {
  if (k <= 0) throw Error("resolve: k must be positive");
  if (dictionary.empty()) throw Error("resolve: empty code dictionary");
  const auto q = embed_text(table, query);
  std::vector<Resolution> all;
  all.reserve(dictionary.size());
  for (const auto& e : dictionary.entries())
    all.push_back({e.code, e.description, embed::cosine_similarity(q, e.vector)});
  std::sort(all.begin(), all.end(), [](const Resolution& a, const Resolution& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.code < b.code;
  });
  all.resize(std::min(all.size(), static_cast<std::size_t>(k)));
  return all;
}

enum class EnrichOrder {
  kDocumentOrder,  // anchor, then related chunks by position
  kGivenOrder,     // anchor, then related chunks as passed
};

// Anchor text followed by the related chunk texts, single-spaced. Texts
// equal (case-insensitively) to one already emitted are skipped.
inline std::string enrich_chunk(const corpus::EntityChunk& anchor, std::vector<corpus::EntityChunk> related,
                                EnrichOrder order = EnrichOrder::kDocumentOrder) {
  if (order == EnrichOrder::kDocumentOrder)
    std::stable_sort(related.begin(), related.end(), [](const auto& a, const auto& b) {
      return std::tie(a.char_begin, a.tokens.begin) < std::tie(b.char_begin, b.tokens.begin);
    });
  std::string out = anchor.text;
  std::set<std::string> seen{corpus::to_lower(anchor.text)};
  for (const auto& r : related) {
    if (!seen.insert(corpus::to_lower(r.text)).second) continue;
    out += ' ';
    out += r.text;
  }
  return out;
}

struct EnrichedChunk {
  std::string doc_id;
  corpus::EntityChunk anchor;
  std::vector<corpus::EntityChunk> related;
  std::string text;
};

// Enriches every entity-2 chunk of a positive prediction with the entity-1
// chunks positively related to it. Output is in (doc, position) order.
inline std::vector<EnrichedChunk> enrich_from_predictions(const std::vector<pipeline::RelationPrediction>& predictions,
                                                          const std::vector<std::string>& positive_labels = {"1"},
                                                          EnrichOrder order = EnrichOrder::kDocumentOrder) {
  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  std::map<Key, EnrichedChunk> groups;
  for (const auto& p : predictions) {
    if (!is_positive(p.label, positive_labels)) continue;
    const auto& a = p.pair.chunk2;
    auto [it, inserted] = groups.try_emplace(Key{p.pair.doc_id, a.char_begin, a.char_end});
    if (inserted) {
      it->second.doc_id = p.pair.doc_id;
      it->second.anchor = a;
    }
    it->second.related.push_back(p.pair.chunk1);
  }
  std::vector<EnrichedChunk> out;
  for (auto& [k, g] : groups) {
    g.text = enrich_chunk(g.anchor, g.related, order);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace relex::downstream

#endif  // RELEX_RESOLVER_HPP_
