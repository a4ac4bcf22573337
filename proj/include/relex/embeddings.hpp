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

// Static word-embedding table with case-folded lookup, span pooling and
// context-window extraction.

#ifndef RELEX_EMBEDDINGS_HPP_
#define RELEX_EMBEDDINGS_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relex/corpus.hpp"
#include "relex/error.hpp"

namespace relex::embed {

using Vector = std::vector<double>;

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 1) : dim_(dim), data_(dim, 0.0) {
    if (dim == 0) throw Error("embedding dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  // Adds `word` (lowercased). Returns false, leaving the table unchanged, if
  // the folded word is already present.
  bool add(std::string_view word, std::span<const double> values) {
    if (values.size() != dim_)
      throw Error(detail::concat("vector for '", word, "' has ", values.size(),
                                 " components, table dim is ", dim_));
    for (double v : values)
      if (!std::isfinite(v)) throw Error(detail::concat("non-finite component for '", word, "'"));
    auto [it, inserted] = index_.emplace(corpus::to_lower(word), index_.size() + 1);
    if (!inserted) return false;
    data_.insert(data_.end(), values.begin(), values.end());
    return true;
  }

  bool contains(std::string_view word) const { return index_.count(corpus::to_lower(word)) > 0; }

  // Stored vector for the lowercased token; the zero vector when unknown.
  std::span<const double> lookup(std::string_view token) const {
    auto it = index_.find(corpus::to_lower(token));
    const std::size_t row = it == index_.end() ? 0 : it->second;
    return {data_.data() + row * dim_, dim_};
  }

  std::span<const double> zero() const { return {data_.data(), dim_}; }

 private:
  std::size_t dim_;
  // Row 0 is the shared zero vector used for out-of-vocabulary tokens.
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

namespace detail_embed {

inline bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_size(std::string_view s, std::size_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail_embed

// word2vec text format: `word v1 ... vd` per line, with an optional leading
// `count dim` header line.
inline EmbeddingTable load_text_embeddings(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::vector<std::pair<std::string, Vector>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream is(line);
    std::vector<std::string> fields;
    for (std::string f; is >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;

    std::size_t hc = 0, hd = 0;
    if (line_no == 1 && fields.size() == 2 && detail_embed::parse_size(fields[0], hc) &&
        detail_embed::parse_size(fields[1], hd)) {
      if (hd == 0) throw ParseError("line 1: header dimension must be positive", 1);
      dim = hd;
      continue;
    }
    if (fields.size() < 2)
      throw ParseError(detail::concat("missing vector components line ", line_no), line_no);
    const std::size_t row_dim = fields.size() - 1;
    if (dim == 0) dim = row_dim;
    if (row_dim != dim) throw ParseError(detail::concat("dimension mismatch line ", line_no), line_no);
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!detail_embed::parse_double(fields[k + 1], v[k]) || !std::isfinite(v[k]))
        throw ParseError(detail::concat("invalid number '", fields[k + 1], "' line ", line_no), line_no);
    }
    rows.emplace_back(std::move(fields[0]), std::move(v));
  }
  if (dim == 0) throw ParseError("embedding file has no vectors");
  EmbeddingTable table(dim);
  for (auto& [word, v] : rows) table.add(word, v);
  return table;
}

inline EmbeddingTable load_text_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_text_embeddings(in);
}

inline void write_text_embeddings(std::ostream& out, const std::vector<std::pair<std::string, Vector>>& rows,
                                  std::size_t dim) {
  out << rows.size() << ' ' << dim << '\n';
  out.precision(17);
  for (const auto& [word, v] : rows) {
    out << word;
    for (double x : v) out << ' ' << x;
    out << '\n';
  }
}

inline Vector lookup(const EmbeddingTable& table, std::string_view token) {
  auto s = table.lookup(token);
  return {s.begin(), s.end()};
}

// Arithmetic mean of the chunk's token vectors.
inline Vector span_embedding(const EmbeddingTable& table, const corpus::Document& doc,
                             const corpus::EntityChunk& chunk) {
  Vector out(table.dim(), 0.0);
  if (chunk.tokens.empty()) return out;
  for (std::size_t i = chunk.tokens.begin; i < chunk.tokens.end; ++i) {
    auto v = table.lookup(doc.tokens.at(i).text);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  const double n = static_cast<double>(chunk.tokens.size());
  for (double& x : out) x /= n;
  return out;
}

// 2*window vectors: the `window` tokens before the chunk ordered so the
// nearest comes last, then the `window` tokens after it, nearest first.
// Positions beyond the document are zero vectors.
inline std::vector<Vector> vicinity_embeddings(const EmbeddingTable& table, const corpus::Document& doc,
                                               const corpus::EntityChunk& chunk, std::size_t window) {
  std::vector<Vector> out;
  out.reserve(2 * window);
  const auto zero = table.zero();
  for (std::size_t k = window; k >= 1; --k) {
    auto v = chunk.tokens.begin >= k ? table.lookup(doc.tokens[chunk.tokens.begin - k].text) : zero;
    out.emplace_back(v.begin(), v.end());
  }
  for (std::size_t k = 0; k < window; ++k) {
    const std::size_t pos = chunk.tokens.end + k;
    auto v = pos < doc.tokens.size() ? table.lookup(doc.tokens[pos].text) : zero;
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

// Cosine similarity; 0 when either vector has zero norm.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(detail::concat("cosine_similarity: dimension mismatch ", u.size(), " vs ", v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    nu += u[k] * u[k];
    nv += v[k] * v[k];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace relex::embed

#endif  // RELEX_EMBEDDINGS_HPP_
