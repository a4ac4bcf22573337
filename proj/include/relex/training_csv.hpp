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

#ifndef RELEX_TRAINING_CSV_HPP_
#define RELEX_TRAINING_CSV_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relex/error.hpp"

namespace relex::corpus {

// One labelled entity pair in its sentence context. Offsets are byte
// positions into `sentence`, begin inclusive, end exclusive.
struct RelationExample {
  std::string doc_id;
  std::string sentence;
  std::size_t e1_begin = 0;
  std::size_t e1_end = 0;
  std::string e1_type;
  std::string chunk1;
  std::size_t e2_begin = 0;
  std::size_t e2_end = 0;
  std::string e2_type;
  std::string chunk2;
  std::string label;

  bool operator==(const RelationExample&) const = default;
};

inline constexpr std::array<std::string_view, 11> kTrainingCsvHeader = {
    "doc_id", "sentence", "e1_begin", "e1_end", "e1_type", "chunk1",
    "e2_begin", "e2_end", "e2_type", "chunk2", "label"};

namespace csv {

// Reads one RFC 4180 record. Returns nullopt at end of input. Quoted fields
// may contain commas, doubled quotes and newlines.
inline std::optional<std::vector<std::string>> read_record(std::istream& in, std::size_t& line) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool was_quoted = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (ch == '\n') {
      ++line;
      if (!field.empty() && field.back() == '\r' && !was_quoted) field.pop_back();
      fields.push_back(std::move(field));
      return fields;
    } else if (ch == '\r' && was_quoted) {
      // tolerated before the line break after a quoted field
    } else {
      field += ch;
    }
  }
  if (in_quotes) throw ParseError(detail::concat("line ", line + 1, ": unterminated quoted field"), line + 1);
  if (!any) return std::nullopt;
  ++line;
  fields.push_back(std::move(field));
  return fields;
}

inline std::string quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace csv

namespace detail_csv {

inline std::size_t parse_offset(const std::string& s, std::size_t row) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(detail::concat("invalid offset '", s, "' row ", row));
  return v;
}

inline void check_span(const std::string& sentence, std::size_t b, std::size_t e,
                       const std::string& chunk, std::size_t row) {
  if (b >= e || e > sentence.size())
    throw ParseError(detail::concat("offsets out of range row ", row));
  if (sentence.compare(b, e - b, chunk) != 0 || chunk.size() != e - b)
    throw ParseError(detail::concat("chunk text mismatch row ", row));
}

}  // namespace detail_csv

inline std::vector<RelationExample> read_training_csv(std::istream& in) {
  std::size_t line = 0;
  auto header = csv::read_record(in, line);
  if (!header) throw ParseError("missing header row");
  if (header->size() != kTrainingCsvHeader.size() ||
      !std::equal(header->begin(), header->end(), kTrainingCsvHeader.begin()))
    throw ParseError("unexpected training CSV header", 1);

  std::vector<RelationExample> out;
  std::size_t row = 0;
  while (auto rec = csv::read_record(in, line)) {
    if (rec->size() == 1 && rec->front().empty()) continue;  // blank line
    ++row;
    if (rec->size() != kTrainingCsvHeader.size())
      throw ParseError(detail::concat("expected 11 columns, found ", rec->size(), " row ", row), line);
    auto& f = *rec;
    RelationExample ex;
    ex.doc_id = std::move(f[0]);
    ex.sentence = std::move(f[1]);
    ex.e1_begin = detail_csv::parse_offset(f[2], row);
    ex.e1_end = detail_csv::parse_offset(f[3], row);
    ex.e1_type = std::move(f[4]);
    ex.chunk1 = std::move(f[5]);
    ex.e2_begin = detail_csv::parse_offset(f[6], row);
    ex.e2_end = detail_csv::parse_offset(f[7], row);
    ex.e2_type = std::move(f[8]);
    ex.chunk2 = std::move(f[9]);
    ex.label = std::move(f[10]);
    detail_csv::check_span(ex.sentence, ex.e1_begin, ex.e1_end, ex.chunk1, row);
    detail_csv::check_span(ex.sentence, ex.e2_begin, ex.e2_end, ex.chunk2, row);
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<RelationExample> read_training_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_training_csv(in);
}

inline void write_training_csv(std::ostream& out, const std::vector<RelationExample>& examples) {
  for (std::size_t i = 0; i < kTrainingCsvHeader.size(); ++i)
    out << (i ? "," : "") << kTrainingCsvHeader[i];
  out << '\n';
  for (const auto& ex : examples) {
    out << csv::quote(ex.doc_id) << ',' << csv::quote(ex.sentence) << ',' << ex.e1_begin << ','
        << ex.e1_end << ',' << csv::quote(ex.e1_type) << ',' << csv::quote(ex.chunk1) << ','
        << ex.e2_begin << ',' << ex.e2_end << ',' << csv::quote(ex.e2_type) << ','
        << csv::quote(ex.chunk2) << ',' << csv::quote(ex.label) << '\n';
  }
}

inline void write_training_csv(const std::string& path, const std::vector<RelationExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_training_csv(out, examples);
  if (!out) throw Error("write failed: " + path);
}

}  // namespace relex::corpus

#endif  // RELEX_TRAINING_CSV_HPP_
