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

// Document model shared by every stage: tokens, sentences, typed entity
// chunks and (optionally) one dependency tree per sentence.

#ifndef RELEX_CORPUS_HPP_
#define RELEX_CORPUS_HPP_

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relex/dependency_tree.hpp"
#include "relex/error.hpp"

namespace relex::corpus {

// Half-open index range [begin, end).
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool operator==(const TokenRange&) const = default;
};

struct Token {
  std::string text;
  std::size_t index = 0;  // position in the document token list
  std::size_t sentence_index = 0;
  std::size_t char_begin = 0;
  std::size_t char_end = 0;  // exclusive byte offset into Document::text

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::size_t index = 0;
  TokenRange tokens;

  bool operator==(const Sentence&) const = default;
};

struct EntityChunk {
  std::string entity_type;
  TokenRange tokens;  // document-level token indices
  std::string text;
  std::size_t sentence_index = 0;
  std::size_t char_begin = 0;  // byte span in Document::text
  std::size_t char_end = 0;

  bool operator==(const EntityChunk&) const = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<Sentence> sentences;
  std::vector<EntityChunk> chunks;
  // Either empty (no parses supplied) or one slot per sentence.
  std::vector<std::optional<syntax::DependencyTree>> trees;

  const syntax::DependencyTree* tree(std::size_t sentence) const {
    if (sentence >= trees.size() || !trees[sentence]) return nullptr;
    return &*trees[sentence];
  }
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '(': case ')': case '[': case ']':
      return true;
    default:
      return false;
  }
}

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Whitespace tokenizer that also splits off .,;:!?()[] as single-character
// tokens. A sentence ends after a . ! or ? token that is followed by
// whitespace (or the end of the text). Offsets are byte offsets.
inline std::pair<std::vector<Token>, std::vector<Sentence>> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::vector<Sentence> sentences;
  std::size_t sentence_start = 0;

  auto close_sentence = [&] {
    if (tokens.size() > sentence_start) {
      sentences.push_back({sentences.size(), {sentence_start, tokens.size()}});
      sentence_start = tokens.size();
    }
  };
  auto emit = [&](std::size_t b, std::size_t e) {
    tokens.push_back({std::string(text.substr(b, e - b)), tokens.size(), sentences.size(), b, e});
  };

  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (is_split_punct(text[i])) {
      emit(i, i + 1);
      const char c = text[i];
      ++i;
      if ((c == '.' || c == '!' || c == '?') && (i == text.size() || is_space(text[i])))
        close_sentence();
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]) && !is_split_punct(text[j])) ++j;
    emit(i, j);
    i = j;
  }
  close_sentence();
  return {std::move(tokens), std::move(sentences)};
}

// Tokenized document with no chunks.
inline Document make_document(std::string id, std::string text) {
  Document doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  auto [tokens, sentences] = tokenize(doc.text);
  doc.tokens = std::move(tokens);
  doc.sentences = std::move(sentences);
  return doc;
}

inline std::string join_tokens(const std::vector<Token>& tokens, TokenRange range) {
  std::string out;
  for (std::size_t i = range.begin; i < range.end; ++i) {
    if (i > range.begin) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

inline EntityChunk make_chunk(const std::vector<Token>& tokens, TokenRange range,
                              std::string entity_type) {
  if (range.empty() || range.end > tokens.size())
    throw Error(detail::concat("invalid chunk range [", range.begin, ", ", range.end, ")"));
  const std::size_t sentence = tokens[range.begin].sentence_index;
  for (std::size_t i = range.begin; i < range.end; ++i)
    if (tokens[i].sentence_index != sentence) throw Error("chunk crosses a sentence boundary");
  return {std::move(entity_type), range, join_tokens(tokens, range), sentence,
          tokens[range.begin].char_begin, tokens[range.end - 1].char_end};
}

namespace detail_bio {

struct ParsedTag {
  char prefix;  // 'O', 'B' or 'I'
  std::string_view type;
};

inline ParsedTag parse_tag(std::string_view tag) {
  if (tag == "O") return {'O', {}};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return {tag[0], tag.substr(2)};
  throw Error(detail::concat("invalid BIO tag '", tag, "'"));
}

}  // namespace detail_bio

// Groups BIO-tagged tokens into chunks. An I-X that does not continue a
// chunk of type X in the same sentence opens a new chunk, exactly as B-X.
inline std::vector<EntityChunk> chunks_from_bio(const std::vector<Token>& tokens,
                                                const std::vector<std::string>& tags) {
  if (tokens.size() != tags.size()) throw Error("tag/token length mismatch");
  std::vector<EntityChunk> chunks;
  std::optional<std::size_t> open_begin;
  std::string open_type;

  auto flush = [&](std::size_t end) {
    if (open_begin) chunks.push_back(make_chunk(tokens, {*open_begin, end}, open_type));
    open_begin.reset();
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto tag = detail_bio::parse_tag(tags[i]);
    const bool continues = tag.prefix == 'I' && open_begin && open_type == tag.type &&
                           tokens[i - 1].sentence_index == tokens[i].sentence_index;
    if (continues) continue;
    flush(i);
    if (tag.prefix != 'O') {
      open_begin = i;
      open_type = std::string(tag.type);
    }
  }
  flush(tags.size());
  return chunks;
}

// Inverse of chunks_from_bio for disjoint chunks.
inline std::vector<std::string> bio_from_chunks(std::size_t token_count,
                                                const std::vector<EntityChunk>& chunks) {
  std::vector<std::string> tags(token_count, "O");
  for (const auto& c : chunks) {
    if (c.tokens.empty() || c.tokens.end > token_count) throw Error("chunk outside token range");
    for (std::size_t i = c.tokens.begin; i < c.tokens.end; ++i) {
      if (tags[i] != "O") throw Error("overlapping chunks");
      tags[i] = (i == c.tokens.begin ? "B-" : "I-") + c.entity_type;
    }
  }
  return tags;
}

// Index of the chunk covering token `token`, if any.
inline std::optional<std::size_t> chunk_at(const Document& doc, std::size_t token) {
  for (std::size_t i = 0; i < doc.chunks.size(); ++i)
    if (doc.chunks[i].tokens.contains(token)) return i;
  return std::nullopt;
}

}  // namespace relex::corpus

#endif  // RELEX_CORPUS_HPP_
