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

// Feature assembly for one candidate pair. Segments, in this fixed order:
//
//   similarity   1            cosine of the two mean-pooled span vectors
//   distance     1            syntactic distance / distance_norm, <= 100
//   dep_path     P*d          interior tokens of the head-to-head path
//   span1        d            mean embedding of entity 1
//   span2        d            mean embedding of entity 2
//   vicinity1    2*W*d | 2*d  context window around entity 1
//   vicinity2    2*W*d | 2*d  context window around entity 2
//
// with d = embed_dim, P = max_path_len, W = vicinity_window. Path slots
// beyond the path length are zero. In `mean` mode each side of a window is
// averaged into one vector.

#ifndef RELEX_FEATURES_HPP_
#define RELEX_FEATURES_HPP_

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "relex/candidate_pair.hpp"
#include "relex/corpus.hpp"
#include "relex/embeddings.hpp"
#include "relex/error.hpp"
#include "relex/syntax.hpp"

namespace relex::features {

// Bumped whenever segment order or content changes; stored in model files.
inline constexpr int kLayoutVersion = 1;

inline constexpr double kMaxDistanceFeature = 100.0;

enum class VicinityMode { kFlatten, kMean };

inline std::string to_string(VicinityMode m) { return m == VicinityMode::kMean ? "mean" : "flatten"; }

inline VicinityMode parse_vicinity_mode(const std::string& s) {
  if (s == "flatten") return VicinityMode::kFlatten;
  if (s == "mean") return VicinityMode::kMean;
  throw Error("unknown vicinity mode '" + s + "' (expected flatten or mean)");
}

struct FeatureConfig {
  std::size_t embed_dim = 100;
  std::size_t vicinity_window = 50;  // per side
  std::size_t max_path_len = 5;
  VicinityMode vicinity_mode = VicinityMode::kFlatten;
  double distance_norm = 10.0;

  bool operator==(const FeatureConfig&) const = default;
};

inline void validate(const FeatureConfig& c) {
  if (c.embed_dim == 0) throw Error("feature config: embed_dim must be positive");
  if (c.vicinity_window == 0) throw Error("feature config: vicinity_window must be positive");
  if (c.max_path_len == 0) throw Error("feature config: max_path_len must be positive");
  if (!(c.distance_norm > 0.0)) throw Error("feature config: distance_norm must be positive");
}

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<Segment> layout;

  std::span<const double> segment(std::string_view name) const {
    for (const auto& s : layout)
      if (s.name == name) return std::span<const double>(values).subspan(s.offset, s.length);
    throw Error(detail::concat("no feature segment named '", name, "'"));
  }
};

inline std::size_t vicinity_block(const FeatureConfig& c) {
  return c.vicinity_mode == VicinityMode::kFlatten ? 2 * c.vicinity_window * c.embed_dim
                                                   : 2 * c.embed_dim;
}

inline std::vector<Segment> describe_layout(const FeatureConfig& c) {
  const std::size_t d = c.embed_dim;
  const std::pair<const char*, std::size_t> parts[] = {
      {"similarity", 1},       {"distance", 1},         {"dep_path", c.max_path_len * d},
      {"span1", d},            {"span2", d},            {"vicinity1", vicinity_block(c)},
      {"vicinity2", vicinity_block(c)},
  };
  std::vector<Segment> out;
  std::size_t offset = 0;
  for (const auto& [name, len] : parts) {
    out.push_back({name, offset, len});
    offset += len;
  }
  return out;
}

inline std::size_t feature_length(const FeatureConfig& c) {
  const std::size_t per_side = c.vicinity_mode == VicinityMode::kFlatten ? 4 * c.vicinity_window : 4;
  return 2 + (c.max_path_len + 2 + per_side) * c.embed_dim;
}

// Token vectors of one document, looked up once and shared by every pair
// built from it.
class DocumentEmbeddings {
 public:
  DocumentEmbeddings(const embed::EmbeddingTable& table, const corpus::Document& doc)
      : dim_(table.dim()), data_((doc.tokens.size() + 1) * table.dim(), 0.0) {
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      auto v = table.lookup(doc.tokens[i].text);
      std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t token_count() const { return data_.size() / dim_ - 1; }

  // Vector of token i, or zero for i outside the document (i < 0 included).
  std::span<const double> token(std::ptrdiff_t i) const {
    const std::size_t row = i < 0 || static_cast<std::size_t>(i) >= token_count() ? 0 : static_cast<std::size_t>(i) + 1;
    return {data_.data() + row * dim_, dim_};
  }

 private:
  std::size_t dim_;
  std::vector<double> data_;  // row 0 is zero
};

namespace detail_features {

inline void check_dims(const FeatureConfig& config, std::size_t table_dim) {
  validate(config);
  if (config.embed_dim != table_dim)
    throw Error(detail::concat("feature config embed_dim ", config.embed_dim,
                               " does not match embedding table dim ", table_dim));
}

// Document token indices of the interior nodes of the head-to-head path.
inline std::vector<std::size_t> interior_path_tokens(const corpus::Document& doc,
                                                     const std::vector<syntax::DependencyTree>& trees,
                                                     const pipeline::CandidatePair& pair,
                                                     std::size_t max_len) {
  std::vector<std::size_t> out;
  if (pair.chunk1.sentence_index != pair.chunk2.sentence_index) return out;
  const std::size_t s = pair.chunk1.sentence_index;
  const auto& tree = trees.at(s);
  const std::size_t base = doc.sentences.at(s).tokens.begin;
  const int h1 = syntax::head_token(pair.chunk1, tree, base);
  const int h2 = syntax::head_token(pair.chunk2, tree, base);
  const auto path = syntax::dependency_path(tree, h1, h2);
  for (std::size_t k = 1; k + 1 < path.nodes.size() && out.size() < max_len; ++k)
    out.push_back(base + static_cast<std::size_t>(path.nodes[k]));
  return out;
}

inline double distance_feature(const corpus::Document& doc, const std::vector<syntax::DependencyTree>& trees,
                               const pipeline::CandidatePair& pair, const FeatureConfig& config) {
  const int d = syntax::syntactic_distance(doc, trees, pair.chunk1, pair.chunk2);
  return std::min(static_cast<double>(d) / config.distance_norm, kMaxDistanceFeature);
}

inline void put(std::vector<double>& out, std::size_t offset, std::span<const double> v) {
  std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
}

}  // namespace detail_features

// Reference assembly: looks every token up in the table through the
// embeddings module, pair by pair.
inline FeatureVector build_features(const pipeline::CandidatePair& pair, const corpus::Document& doc,
                                    const std::vector<syntax::DependencyTree>& trees,
                                    const embed::EmbeddingTable& table, const FeatureConfig& config) {
  detail_features::check_dims(config, table.dim());
  const std::size_t d = config.embed_dim;
  FeatureVector fv{std::vector<double>(feature_length(config), 0.0), describe_layout(config)};
  auto& out = fv.values;

  const auto span1 = embed::span_embedding(table, doc, pair.chunk1);
  const auto span2 = embed::span_embedding(table, doc, pair.chunk2);
  out[0] = embed::cosine_similarity(span1, span2);
  out[1] = detail_features::distance_feature(doc, trees, pair, config);

  const auto path = detail_features::interior_path_tokens(doc, trees, pair, config.max_path_len);
  for (std::size_t k = 0; k < path.size(); ++k)
    detail_features::put(out, fv.layout[2].offset + k * d, table.lookup(doc.tokens[path[k]].text));
  detail_features::put(out, fv.layout[3].offset, span1);
  detail_features::put(out, fv.layout[4].offset, span2);

  const corpus::EntityChunk* chunks[] = {&pair.chunk1, &pair.chunk2};
  for (int e = 0; e < 2; ++e) {
    const std::size_t base = fv.layout[5 + e].offset;
    const auto window = embed::vicinity_embeddings(table, doc, *chunks[e], config.vicinity_window);
    if (config.vicinity_mode == VicinityMode::kFlatten) {
      for (std::size_t k = 0; k < window.size(); ++k) detail_features::put(out, base + k * d, window[k]);
    } else {
      const std::size_t w = config.vicinity_window;
      for (std::size_t k = 0; k < window.size(); ++k) {
        const std::size_t side = k < w ? 0 : d;
        for (std::size_t j = 0; j < d; ++j) out[base + side + j] += window[k][j] / static_cast<double>(w);
      }
    }
  }
  return fv;
}

// Same result as the reference assembly, reading token vectors from a
// per-document cache.
inline FeatureVector build_features(const pipeline::CandidatePair& pair, const corpus::Document& doc,
                                    const std::vector<syntax::DependencyTree>& trees,
                                    const DocumentEmbeddings& cache, const FeatureConfig& config) {
  detail_features::check_dims(config, cache.dim());
  const std::size_t d = config.embed_dim;
  FeatureVector fv{std::vector<double>(feature_length(config), 0.0), describe_layout(config)};
  auto& out = fv.values;

  auto mean_span = [&](const corpus::EntityChunk& c, std::size_t offset) {
    for (std::size_t i = c.tokens.begin; i < c.tokens.end; ++i) {
      auto v = cache.token(static_cast<std::ptrdiff_t>(i));
      for (std::size_t j = 0; j < d; ++j) out[offset + j] += v[j];
    }
    for (std::size_t j = 0; j < d; ++j) out[offset + j] /= static_cast<double>(c.tokens.size());
  };
  mean_span(pair.chunk1, fv.layout[3].offset);
  mean_span(pair.chunk2, fv.layout[4].offset);
  out[0] = embed::cosine_similarity(std::span<const double>(out).subspan(fv.layout[3].offset, d),
                                    std::span<const double>(out).subspan(fv.layout[4].offset, d));
  out[1] = detail_features::distance_feature(doc, trees, pair, config);

  const auto path = detail_features::interior_path_tokens(doc, trees, pair, config.max_path_len);
  for (std::size_t k = 0; k < path.size(); ++k)
    detail_features::put(out, fv.layout[2].offset + k * d, cache.token(static_cast<std::ptrdiff_t>(path[k])));

  const corpus::EntityChunk* chunks[] = {&pair.chunk1, &pair.chunk2};
  const auto w = static_cast<std::ptrdiff_t>(config.vicinity_window);
  for (int e = 0; e < 2; ++e) {
    const std::size_t base = fv.layout[5 + e].offset;
    const auto begin = static_cast<std::ptrdiff_t>(chunks[e]->tokens.begin);
    const auto end = static_cast<std::ptrdiff_t>(chunks[e]->tokens.end);
    for (std::ptrdiff_t k = 0; k < 2 * w; ++k) {
      const std::ptrdiff_t pos = k < w ? begin - w + k : end + (k - w);
      auto v = cache.token(pos);
      if (config.vicinity_mode == VicinityMode::kFlatten) {
        detail_features::put(out, base + static_cast<std::size_t>(k) * d, v);
      } else {
        const std::size_t side = k < w ? 0 : d;
        for (std::size_t j = 0; j < d; ++j) out[base + side + j] += v[j] / static_cast<double>(w);
      }
    }
  }
  return fv;
}

}  // namespace relex::features

#endif  // RELEX_FEATURES_HPP_
