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

// Knowledge graphs built from positive relation predictions, with
// body-part composition and DOT / line-record export.

#ifndef RELEX_GRAPH_HPP_
#define RELEX_GRAPH_HPP_

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "relex/error.hpp"
#include "relex/pipeline.hpp"

namespace relex::downstream {

struct GraphNode {
  std::size_t id = 0;
  std::string text;
  std::string entity_type;
  std::string doc_id;
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
  std::optional<std::string> code;
  std::vector<std::string> components;  // texts merged into this node, in order

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string label;
  double confidence = 0.0;

  bool operator==(const GraphEdge&) const = default;
};

struct KnowledgeGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode* node(std::size_t id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
};

inline bool is_positive(const std::string& label, const std::vector<std::string>& positive_labels) {
  return std::find(positive_labels.begin(), positive_labels.end(), label) != positive_labels.end();
}

// One node per distinct (document, offsets) chunk instance taking part in a
// positive prediction, one edge per positive prediction. Node ids follow
// first appearance.
inline KnowledgeGraph build_graph(const std::vector<pipeline::RelationPrediction>& predictions,
                                  const std::vector<std::string>& positive_labels = {"1"}) {
  KnowledgeGraph g;
  std::map<std::tuple<std::string, std::size_t, std::size_t>, std::size_t> ids;
  auto node_for = [&](const std::string& doc, const corpus::EntityChunk& c) {
    auto key = std::tuple(doc, c.char_begin, c.char_end);
    auto [it, inserted] = ids.emplace(key, g.nodes.size());
    if (inserted) g.nodes.push_back({it->second, c.text, c.entity_type, doc, c.char_begin, c.char_end, {}, {}});
    return it->second;
  };
  for (const auto& p : predictions) {
    if (!is_positive(p.label, positive_labels)) continue;
    const auto a = node_for(p.pair.doc_id, p.pair.chunk1);
    const auto b = node_for(p.pair.doc_id, p.pair.chunk2);
    g.edges.push_back({a, b, p.label, p.confidence});
  }
  return g;
}

struct BodyPartTypes {
  std::string body_part = "BodyPart";
  std::string sub_part = "SubPart";
  std::string direction = "Direction";
};

// Folds SubPart and Direction nodes linked to a BodyPart into that node,
// whose text becomes "<direction> <body part> <sub part>" (missing parts
// skipped; several modifiers of one kind in document order). A modifier
// linked to several body parts is copied into each. Edges between a body
// part and its own modifiers disappear into the composite; other edges of
// absorbed nodes are re-pointed to every composite that absorbed them.
inline KnowledgeGraph merge_body_parts(const KnowledgeGraph& graph, const BodyPartTypes& types = {}) {
  std::map<std::size_t, const GraphNode*> by_id;
  for (const auto& n : graph.nodes) by_id[n.id] = &n;
  auto type_of = [&](std::size_t id) -> const std::string& { return by_id.at(id)->entity_type; };
  auto is_modifier = [&](std::size_t id) {
    return type_of(id) == types.sub_part || type_of(id) == types.direction;
  };

  std::map<std::size_t, std::set<std::size_t>> modifiers_of;  // body part -> modifiers
  std::map<std::size_t, std::set<std::size_t>> owners_of;     // modifier -> body parts
  for (const auto& e : graph.edges) {
    for (auto [bp, mod] : {std::pair{e.source, e.target}, std::pair{e.target, e.source}}) {
      if (type_of(bp) == types.body_part && is_modifier(mod)) {
        modifiers_of[bp].insert(mod);
        owners_of[mod].insert(bp);
      }
    }
  }

  KnowledgeGraph out;
  for (const auto& n : graph.nodes) {
    if (owners_of.count(n.id)) continue;
    GraphNode copy = n;
    if (auto it = modifiers_of.find(n.id); it != modifiers_of.end()) {
      std::vector<const GraphNode*> dirs, subs;
      for (auto m : it->second) (type_of(m) == types.direction ? dirs : subs).push_back(by_id.at(m));
      auto by_position = [](const GraphNode* a, const GraphNode* b) {
        return std::tie(a->char_begin, a->id) < std::tie(b->char_begin, b->id);
      };
      std::sort(dirs.begin(), dirs.end(), by_position);
      std::sort(subs.begin(), subs.end(), by_position);
      copy.components.clear();
      for (auto* d : dirs) copy.components.push_back(d->text);
      copy.components.push_back(n.text);
      for (auto* s : subs) copy.components.push_back(s->text);
      copy.text.clear();
      for (const auto& part : copy.components) copy.text += (copy.text.empty() ? "" : " ") + part;
    }
    out.nodes.push_back(std::move(copy));
  }

  auto targets = [&](std::size_t id) {
    if (auto it = owners_of.find(id); it != owners_of.end()) return std::vector<std::size_t>(it->second.begin(), it->second.end());
    return std::vector<std::size_t>{id};
  };
  for (const auto& e : graph.edges) {
    const bool internal = (modifiers_of.count(e.source) && modifiers_of[e.source].count(e.target)) ||
                          (modifiers_of.count(e.target) && modifiers_of[e.target].count(e.source));
    if (internal) continue;
    for (auto s : targets(e.source))
      for (auto t : targets(e.target))
        if (s != t) out.edges.push_back({s, t, e.label, e.confidence});
  }
  return out;
}

enum class GraphFormat { kDot, kRecords };

inline GraphFormat parse_graph_format(const std::string& s) {
  if (s == "dot") return GraphFormat::kDot;
  if (s == "records") return GraphFormat::kRecords;
  throw Error("unknown graph format '" + s + "' (expected dot or records)");
}

namespace detail_graph {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace detail_graph

// Deterministic rendering: nodes by id, edges by (source, target, label).
inline std::string render_graph(const KnowledgeGraph& graph, GraphFormat format) {
  auto nodes = graph.nodes;
  std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  auto edges = graph.edges;
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.source, a.target, a.label, a.confidence) < std::tie(b.source, b.target, b.label, b.confidence);
  });

  std::ostringstream os;
  if (format == GraphFormat::kDot) {
    os << "digraph relations {\n";
    for (const auto& n : nodes) {
      std::string label = detail_graph::dot_escape(n.text) + "\\n" + detail_graph::dot_escape(n.entity_type);
      if (n.code) label += "\\n" + detail_graph::dot_escape(*n.code);
      os << "  n" << n.id << " [label=\"" << label << "\", doc=\""
         << detail_graph::dot_escape(n.doc_id) << "\", span=\"" << n.char_begin << "-" << n.char_end << "\"];\n";
    }
    for (const auto& e : edges)
      os << "  n" << e.source << " -> n" << e.target << " [label=\"" << detail_graph::dot_escape(e.label)
         << "\", confidence=\"" << detail_graph::fmt(e.confidence) << "\"];\n";
    os << "}\n";
  } else {
    for (const auto& n : nodes)
      os << "node\t" << n.id << '\t' << n.doc_id << '\t' << n.entity_type << '\t' << n.char_begin << '\t'
         << n.char_end << '\t' << n.text << '\t' << n.code.value_or("") << '\n';
    for (const auto& e : edges)
      os << "edge\t" << e.source << '\t' << e.target << '\t' << e.label << '\t' << detail_graph::fmt(e.confidence)
         << '\n';
  }
  return os.str();
}

inline void export_graph(const KnowledgeGraph& graph, GraphFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << render_graph(graph, format);
  if (!out) throw Error("write failed: " + path);
}

}  // namespace relex::downstream

#endif  // RELEX_GRAPH_HPP_
