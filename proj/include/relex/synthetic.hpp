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

// Seeded generator of clinical-style documents with planted relations.
//
// Each sentence holds one BodyPart chunk and a few Symptom chunks. A related
// pair is written "<BodyPart> involving <Symptom>" or "<Symptom> involving
// <BodyPart>", so its head tokens are two edges apart with the marker on
// the path; unrelated Symptoms sit further away, or two edges away behind
// a filler word instead of the marker. Trees are right-branching chains.

#ifndef RELEX_SYNTHETIC_HPP_
#define RELEX_SYNTHETIC_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "relex/corpus.hpp"
#include "relex/embeddings.hpp"
#include "relex/pipeline.hpp"
#include "relex/syntax.hpp"

namespace relex::synthetic {

inline constexpr const char* kMarker = "involving";

inline const std::vector<std::string>& body_parts() {
  static const std::vector<std::string> v = {"chest", "abdomen", "liver", "knee", "lung", "shoulder",
                                             "back",  "neck",    "wrist", "hip",  "kidney", "ankle"};
  return v;
}

inline const std::vector<std::string>& symptoms() {
  static const std::vector<std::string> v = {"pain", "swelling", "lesion", "tenderness", "rash",
                                             "mass", "stiffness", "numbness", "bruising", "cyst"};
  return v;
}

inline const std::vector<std::string>& modifiers() {
  static const std::vector<std::string> v = {"sharp", "mild", "severe", "chronic", "acute"};
  return v;
}

inline const std::vector<std::string>& fillers() {
  static const std::vector<std::string> v = {
      "the",     "patient", "reports", "noted",  "was",     "seen",    "today",   "after",  "exam",
      "history", "denies",  "further", "review", "shows",   "recent",  "visit",   "follow", "up",
      "stable",  "also",    "per",     "notes",  "clinic",  "imaging", "ordered", "plan",   "discussed"};
  return v;
}

struct SyntheticConfig {
  std::size_t documents = 1000;
  std::size_t min_sentences = 1;
  std::size_t max_sentences = 3;
  std::size_t embed_dim = 8;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::vector<corpus::Document> docs;
  std::vector<std::vector<pipeline::GoldRelation>> gold;  // parallel to docs
  std::vector<std::pair<std::string, embed::Vector>> vectors;
  embed::EmbeddingTable table;
  pipeline::RelationSchema schema;
};

inline pipeline::RelationSchema default_schema() {
  pipeline::RelationSchema s;
  s.add("BodyPart", "Symptom");
  return s;
}

// Gaussian vectors for every vocabulary word, in a fixed order.
inline std::vector<std::pair<std::string, embed::Vector>> vocabulary_vectors(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::pair<std::string, embed::Vector>> out;
  auto add = [&](const std::string& w) {
    embed::Vector v(dim);
    for (double& x : v) x = normal(rng);
    out.emplace_back(w, std::move(v));
  };
  for (const auto* list : {&body_parts(), &symptoms(), &modifiers(), &fillers()})
    for (const auto& w : *list) add(w);
  add(kMarker);
  add(".");
  return out;
}

namespace detail_synth {

struct Piece {
  std::vector<std::string> tokens;
  std::string type;  // empty for plain words
};

class SentenceBuilder {
 public:
  explicit SentenceBuilder(std::mt19937_64& rng) : rng_(rng) {}

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  const std::string& any(const std::vector<std::string>& v) { return v[pick(v.size())]; }

  void fillers(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) pieces.push_back({{any(relex::synthetic::fillers())}, {}});
  }
  void word(std::string w) { pieces.push_back({{std::move(w)}, {}}); }
  // Returns the index of the new entity among this sentence's entities.
  std::size_t entity(std::vector<std::string> tokens, std::string type) {
    pieces.push_back({std::move(tokens), std::move(type)});
    return entities_++;
  }
  std::size_t symptom(bool allow_modifier) {
    std::vector<std::string> t;
    // A modifier comes after the noun so the noun stays the chunk head.
    t.push_back(any(symptoms()));
    if (allow_modifier && coin(0.3)) t.push_back(any(modifiers()));
    return entity(std::move(t), "Symptom");
  }

  std::vector<Piece> pieces;

 private:
  std::mt19937_64& rng_;
  std::size_t entities_ = 0;
};

}  // namespace detail_synth

// Appends one generated sentence to `doc`, recording gold relations.
inline void append_sentence(corpus::Document& doc, std::vector<pipeline::GoldRelation>& gold, std::mt19937_64& rng) {
  detail_synth::SentenceBuilder b(rng);
  std::vector<std::pair<std::size_t, std::size_t>> related;  // (body part, symptom) entity ordinals

  b.fillers(b.pick(3));
  if (b.coin(0.5)) {
    b.symptom(true);
    b.fillers(2 + b.pick(3));
  }
  const bool left_pos = b.coin(0.5);
  std::size_t left_pos_idx = 0;
  if (left_pos) {
    left_pos_idx = b.symptom(false);
    b.word(kMarker);
  }
  const std::size_t bp = b.entity({b.any(body_parts())}, "BodyPart");
  if (left_pos) related.emplace_back(bp, left_pos_idx);
  // Right side: a related symptom behind the marker, an unrelated one behind
  // a filler, or nothing.
  switch (b.pick(3)) {
    case 0: {
      b.word(kMarker);
      related.emplace_back(bp, b.symptom(true));
      break;
    }
    case 1:
      b.fillers(1);
      b.symptom(true);
      break;
    default:
      break;
  }
  if (b.coin(0.5)) {
    b.fillers(2 + b.pick(3));
    b.symptom(true);
  }
  b.fillers(b.pick(3));
  b.word(".");

  // Materialize tokens and chunks.
  const std::size_t sentence = doc.sentences.size();
  const std::size_t first_token = doc.tokens.size();
  const std::size_t first_chunk = doc.chunks.size();
  for (const auto& piece : b.pieces) {
    const std::size_t begin = doc.tokens.size();
    for (const auto& t : piece.tokens) {
      const std::size_t cb = doc.text.empty() ? 0 : doc.text.size() + 1;
      if (!doc.text.empty()) doc.text += ' ';
      doc.text += t;
      doc.tokens.push_back({t, doc.tokens.size(), sentence, cb, cb + t.size()});
    }
    if (!piece.type.empty()) doc.chunks.push_back(corpus::make_chunk(doc.tokens, {begin, doc.tokens.size()}, piece.type));
  }
  doc.sentences.push_back({sentence, {first_token, doc.tokens.size()}});
  doc.trees.resize(doc.sentences.size());
  doc.trees.back() = syntax::chain_fallback_tree(doc.tokens.size() - first_token);
  for (auto [e1, e2] : related) gold.push_back({first_chunk + e1, first_chunk + e2, "1"});
}

inline SyntheticCorpus generate_corpus(const SyntheticConfig& config) {
  SyntheticCorpus c;
  c.vectors = vocabulary_vectors(config.embed_dim, config.seed);
  c.table = embed::EmbeddingTable(config.embed_dim);
  for (const auto& [w, v] : c.vectors) c.table.add(w, v);
  c.schema = default_schema();

  std::mt19937_64 rng(config.seed);
  for (std::size_t d = 0; d < config.documents; ++d) {
    corpus::Document doc;
    doc.id = "note" + std::to_string(d);
    std::vector<pipeline::GoldRelation> gold;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(config.min_sentences, config.max_sentences)(rng);
    for (std::size_t s = 0; s < n; ++s) append_sentence(doc, gold, rng);
    c.docs.push_back(std::move(doc));
    c.gold.push_back(std::move(gold));
  }
  return c;
}

// Documents whose single sentence holds `entities` chunks, each BodyPart or
// Symptom at random, separated by 0-1 filler words.
inline std::vector<corpus::Document> generate_dense_documents(std::size_t count, std::size_t entities,
                                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<corpus::Document> docs;
  for (std::size_t d = 0; d < count; ++d) {
    detail_synth::SentenceBuilder b(rng);
    for (std::size_t e = 0; e < entities; ++e) {
      if (b.coin(0.5)) b.entity({b.any(body_parts())}, "BodyPart");
      else b.symptom(false);
      b.fillers(b.pick(2));
    }
    b.word(".");
    corpus::Document doc;
    doc.id = "dense" + std::to_string(d);
    for (const auto& piece : b.pieces) {
      const std::size_t begin = doc.tokens.size();
      for (const auto& t : piece.tokens) {
        const std::size_t cb = doc.text.empty() ? 0 : doc.text.size() + 1;
        if (!doc.text.empty()) doc.text += ' ';
        doc.text += t;
        doc.tokens.push_back({t, doc.tokens.size(), 0, cb, cb + t.size()});
      }
      if (!piece.type.empty()) doc.chunks.push_back(corpus::make_chunk(doc.tokens, {begin, doc.tokens.size()}, piece.type));
    }
    doc.sentences.push_back({0, {0, doc.tokens.size()}});
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace relex::synthetic

#endif  // RELEX_SYNTHETIC_HPP_
