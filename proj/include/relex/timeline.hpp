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

// Patient timelines: events anchored on (entity, date) relations, with the
// entity's other positive relations attached.

#ifndef RELEX_TIMELINE_HPP_
#define RELEX_TIMELINE_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "relex/corpus.hpp"
#include "relex/graph.hpp"
#include "relex/pipeline.hpp"

namespace relex::downstream {

struct Date {
  int year = 0;
  unsigned month = 0;
  unsigned day = 0;

  auto operator<=>(const Date&) const = default;

  std::string iso() const {
    std::ostringstream os;
    os << std::setfill('0') << std::setw(4) << year << '-' << std::setw(2) << month << '-' << std::setw(2) << day;
    return os.str();
  }
};

namespace detail_date {

inline std::optional<int> number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<Date> make(int y, int m, int d) {
  if (y < 1 || y > 9999 || m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

inline std::optional<int> month_from_name(std::string name) {
  name = corpus::to_lower(name);
  if (!name.empty() && name.back() == '.') name.pop_back();
  static constexpr std::array<std::string_view, 12> full = {"january", "february", "march",     "april",
                                                            "may",     "june",     "july",      "august",
                                                            "september", "october", "november", "december"};
  for (int m = 0; m < 12; ++m) {
    const auto f = full[static_cast<std::size_t>(m)];
    if (name == f || (name.size() >= 3 && f.substr(0, name.size()) == name)) return m + 1;
  }
  return std::nullopt;
}

}  // namespace detail_date

// Accepts 2020-01-02, 01/02/2020 (always month first) and Jan 2, 2020 /
// January 2 2020. Spaces around the comma are tolerated since tokenized
// chunk text separates it.
inline std::optional<Date> parse_date(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c == ',') c = ' ';
    if (corpus::is_space(c) && (s.empty() || s.back() == ' ')) continue;
    s += corpus::is_space(c) ? ' ' : c;
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  if (s.empty()) return std::nullopt;

  auto split = [](std::string_view v, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= v.size(); ++i)
      if (i == v.size() || v[i] == sep) {
        parts.push_back(v.substr(start, i - start));
        start = i + 1;
      }
    return parts;
  };

  if (s.find(' ') == std::string::npos) {
    if (auto p = split(s, '-'); p.size() == 3 && p[0].size() == 4) {
      auto y = detail_date::number(p[0]), m = detail_date::number(p[1]), d = detail_date::number(p[2]);
      if (y && m && d && p[1].size() == 2 && p[2].size() == 2) return detail_date::make(*y, *m, *d);
      return std::nullopt;
    }
    if (auto p = split(s, '/'); p.size() == 3 && p[2].size() == 4 && p[0].size() <= 2 && p[1].size() <= 2) {
      auto m = detail_date::number(p[0]), d = detail_date::number(p[1]), y = detail_date::number(p[2]);
      if (y && m && d) return detail_date::make(*y, *m, *d);
    }
    return std::nullopt;
  }

  const auto words = split(s, ' ');
  if (words.size() != 3 || words[2].size() != 4) return std::nullopt;
  auto m = detail_date::month_from_name(std::string(words[0]));
  auto d = detail_date::number(words[1]);
  auto y = detail_date::number(words[2]);
  if (!m || !d || !y) return std::nullopt;
  return detail_date::make(*y, *m, *d);
}

struct TimelineEvent {
  Date date;
  std::string date_text;
  std::string doc_id;
  corpus::EntityChunk anchor;
  std::vector<corpus::EntityChunk> attachments;  // document order
};

struct RejectedDate {
  std::string doc_id;
  std::string date_text;
  corpus::EntityChunk anchor;
};

struct Timeline {
  std::vector<TimelineEvent> events;  // non-decreasing by date
  std::vector<RejectedDate> rejects;
  std::vector<std::pair<std::string, corpus::EntityChunk>> undated;  // (doc id, anchor)
};

// Builds one event per positive (anchor, date) prediction, in either role
// order. Anchors are chunks of any type seen paired with a date chunk;
// those with no positive date relation are listed as undated.
inline Timeline build_timeline(const std::vector<pipeline::RelationPrediction>& predictions,
                               const std::string& date_type = "Date",
                               const std::vector<std::string>& positive_labels = {"1"}) {
  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  auto key = [](const std::string& doc, const corpus::EntityChunk& c) { return Key{doc, c.char_begin, c.char_end}; };

  std::map<Key, corpus::EntityChunk> anchors;
  std::map<Key, std::vector<corpus::EntityChunk>> dates_of;
  std::map<Key, std::map<Key, corpus::EntityChunk>> related;
  std::set<Key> dated;
  std::vector<Key> anchor_order;

  for (const auto& p : predictions) {
    const auto& a = p.pair.chunk1;
    const auto& b = p.pair.chunk2;
    const bool pos = is_positive(p.label, positive_labels);
    const bool a_date = a.entity_type == date_type;
    const bool b_date = b.entity_type == date_type;
    if (a_date != b_date) {
      const auto& anchor = a_date ? b : a;
      const auto& date = a_date ? a : b;
      const Key k = key(p.pair.doc_id, anchor);
      if (anchors.emplace(k, anchor).second) anchor_order.push_back(k);
      if (pos) dates_of[k].push_back(date);
    } else if (pos && !a_date) {
      related[key(p.pair.doc_id, a)].emplace(key(p.pair.doc_id, b), b);
      related[key(p.pair.doc_id, b)].emplace(key(p.pair.doc_id, a), a);
    }
  }

  Timeline t;
  for (const auto& k : anchor_order) {
    const auto& anchor = anchors.at(k);
    const auto& doc_id = std::get<0>(k);
    auto d = dates_of.find(k);
    if (d == dates_of.end()) {
      t.undated.emplace_back(doc_id, anchor);
      continue;
    }
    std::vector<corpus::EntityChunk> attachments;
    if (auto r = related.find(k); r != related.end())
      for (const auto& [rk, chunk] : r->second) attachments.push_back(chunk);  // map order = document order
    for (const auto& date_chunk : d->second) {
      if (auto parsed = parse_date(date_chunk.text))
        t.events.push_back({*parsed, date_chunk.text, doc_id, anchor, attachments});
      else
        t.rejects.push_back({doc_id, date_chunk.text, anchor});
    }
  }
  std::stable_sort(t.events.begin(), t.events.end(), [](const TimelineEvent& x, const TimelineEvent& y) {
    return std::tie(x.date, x.doc_id, x.anchor.char_begin) < std::tie(y.date, y.doc_id, y.anchor.char_begin);
  });
  return t;
}

// Tab-separated: date, doc id, anchor type, anchor text, attachments
// ("; "-joined). Rejected and undated anchors follow as commented lines.
inline std::string render_timeline(const Timeline& t) {
  std::ostringstream os;
  os << "date\tdoc_id\tanchor_type\tanchor\tattachments\n";
  for (const auto& e : t.events) {
    os << e.date.iso() << '\t' << e.doc_id << '\t' << e.anchor.entity_type << '\t' << e.anchor.text << '\t';
    for (std::size_t i = 0; i < e.attachments.size(); ++i) os << (i ? "; " : "") << e.attachments[i].text;
    os << '\n';
  }
  for (const auto& r : t.rejects)
    os << "# rejected-date\t" << r.doc_id << '\t' << r.anchor.text << '\t' << r.date_text << '\n';
  for (const auto& [doc, a] : t.undated) os << "# undated\t" << doc << '\t' << a.text << '\n';
  return os.str();
}

}  // namespace relex::downstream

#endif  // RELEX_TIMELINE_HPP_
