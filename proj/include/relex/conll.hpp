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

// CoNLL-style NER reader/writer.
//
// One token per line, whitespace-separated columns:
//
//   TOKEN  BIO-TAG  [DEPREL  HEAD]
//
// HEAD is the 1-based index of the head token within the sentence, 0 for the
// root (stored as -1 internally); DEPREL may be "_". A blank line ends a
// sentence and a line whose first column is -DOCSTART- starts a new
// document (an optional second column other than -X- names it). Document
// text is the tokens joined by single spaces.

#ifndef RELEX_CONLL_HPP_
#define RELEX_CONLL_HPP_

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "relex/corpus.hpp"
#include "relex/error.hpp"

namespace relex::corpus {

namespace detail_conll {

struct PendingLine {
  std::string token;
  std::string tag;
  std::string deprel;
  int head = 0;  // as written in the file
  bool has_head = false;
  std::size_t line = 0;
};

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string field;
  while (is >> field) out.push_back(field);
  return out;
}

class Builder {
 public:
  explicit Builder(std::vector<Document>& out) : out_(out) {}

  void start_document(std::string id) {
    finish_document();
    id_ = std::move(id);
  }

  void add(PendingLine line) { sentence_.push_back(std::move(line)); }

  void end_sentence() {
    if (sentence_.empty()) return;
    const std::size_t s = sentences_.size();
    const std::size_t first = tokens_.size();
    const bool any_head = sentence_.front().has_head;
    syntax::DependencyTree tree;
    for (auto& l : sentence_) {
      if (l.has_head != any_head)
        throw ParseError(detail::concat("line ", l.line, ": head column present on some tokens of the sentence but not others"), l.line);
      std::size_t begin = text_.empty() ? 0 : text_.size() + 1;
      if (!text_.empty()) text_ += ' ';
      text_ += l.token;
      tokens_.push_back({l.token, tokens_.size(), s, begin, begin + l.token.size()});
      tags_.push_back(l.tag);
      tag_lines_.push_back(l.line);
      if (any_head) {
        tree.heads.push_back(l.head - 1);
        tree.labels.push_back(l.deprel);
      }
    }
    sentences_.push_back({s, {first, tokens_.size()}});
    if (any_head) {
      if (auto problem = syntax::tree_problem(tree); !problem.empty())
        throw ParseError(detail::concat("line ", sentence_.back().line, ": invalid dependency tree: ", problem),
                         sentence_.back().line);
      trees_.resize(s);
      trees_.push_back(std::move(tree));
      has_trees_ = true;
    }
    sentence_.clear();
  }

  void finish_document() {
    end_sentence();
    if (tokens_.empty()) {
      reset();
      return;
    }
    Document doc;
    doc.id = id_.empty() ? detail::concat("doc", out_.size()) : id_;
    doc.text = std::move(text_);
    doc.tokens = std::move(tokens_);
    doc.sentences = std::move(sentences_);
    try {
      doc.chunks = chunks_from_bio(doc.tokens, tags_);
    } catch (const Error& e) {
      // Pin the failure to the offending line when it is a tag problem.
      for (std::size_t i = 0; i < tags_.size(); ++i) {
        try {
          detail_bio::parse_tag(tags_[i]);
        } catch (const Error&) {
          throw ParseError(detail::concat("line ", tag_lines_[i], ": ", e.what()), tag_lines_[i]);
        }
      }
      throw;
    }
    if (has_trees_) {
      trees_.resize(doc.sentences.size());
      doc.trees = std::move(trees_);
    }
    out_.push_back(std::move(doc));
    reset();
  }

 private:
  void reset() {
    id_.clear();
    text_.clear();
    tokens_.clear();
    sentences_.clear();
    tags_.clear();
    tag_lines_.clear();
    trees_.clear();
    has_trees_ = false;
  }

  std::vector<Document>& out_;
  std::string id_;
  std::string text_;
  std::vector<Token> tokens_;
  std::vector<Sentence> sentences_;
  std::vector<std::string> tags_;
  std::vector<std::size_t> tag_lines_;
  std::vector<std::optional<syntax::DependencyTree>> trees_;
  bool has_trees_ = false;
  std::vector<PendingLine> sentence_;
};

}  // namespace detail_conll

inline std::vector<Document> read_conll(std::istream& in) {
  std::vector<Document> docs;
  detail_conll::Builder builder(docs);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = detail_conll::split_ws(line);
    if (cols.empty()) {
      builder.end_sentence();
      continue;
    }
    if (cols[0] == "-DOCSTART-") {
      builder.start_document(cols.size() > 1 && cols[1] != "-X-" ? cols[1] : std::string());
      continue;
    }
    if (cols.size() == 1)
      throw ParseError(detail::concat("line ", line_no, ": missing tag column"), line_no);
    if (cols.size() == 3 || cols.size() > 4)
      throw ParseError(detail::concat("line ", line_no, ": expected 2 or 4 columns, found ", cols.size()), line_no);
    detail_conll::PendingLine pending{cols[0], cols[1], {}, 0, false, line_no};
    if (cols.size() == 4) {
      pending.deprel = cols[2];
      const auto& h = cols[3];
      auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), pending.head);
      if (ec != std::errc() || ptr != h.data() + h.size() || pending.head < 0)
        throw ParseError(detail::concat("line ", line_no, ": invalid head index '", h, "'"), line_no);
      pending.has_head = true;
    }
    builder.add(std::move(pending));
  }
  builder.finish_document();
  return docs;
}

inline std::vector<Document> read_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_conll(in);
}

// Writes documents in the format read_conll accepts. Trees, when present,
// are written as the DEPREL/HEAD columns.
inline void write_conll(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& doc : docs) {
    out << "-DOCSTART- " << doc.id << "\n\n";
    const auto tags = bio_from_chunks(doc.tokens.size(), doc.chunks);
    for (const auto& s : doc.sentences) {
      const syntax::DependencyTree* tree = doc.tree(s.index);
      for (std::size_t i = s.tokens.begin; i < s.tokens.end; ++i) {
        out << doc.tokens[i].text << ' ' << tags[i];
        if (tree) {
          const std::size_t local = i - s.tokens.begin;
          const std::string& label = local < tree->labels.size() && !tree->labels[local].empty()
                                         ? tree->labels[local]
                                         : std::string("_");
          out << ' ' << label << ' ' << tree->heads[local] + 1;
        }
        out << '\n';
      }
      out << '\n';
    }
  }
}

inline void write_conll(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_conll(out, docs);
  if (!out) throw Error("write failed: " + path);
}

}  // namespace relex::corpus

#endif  // RELEX_CONLL_HPP_
