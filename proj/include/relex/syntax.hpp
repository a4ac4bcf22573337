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

// Syntactic distance between entity chunks and head-to-head dependency
// paths. Chunks carry document-level token indices; trees are
// sentence-local, so most functions take the sentence's first token index.

#ifndef RELEX_SYNTAX_HPP_
#define RELEX_SYNTAX_HPP_

#include <algorithm>
#include <vector>

#include "relex/candidate_pair.hpp"
#include "relex/corpus.hpp"
#include "relex/dependency_tree.hpp"
#include "relex/error.hpp"

namespace relex::syntax {

// Distance assigned to chunk pairs in different sentences.
inline constexpr int kCrossSentenceDistance = 1000;

struct DepPath {
  std::vector<int> nodes;  // sentence-local token indices, source first
  int length() const { return static_cast<int>(nodes.size()) - 1; }
};

// Right-branching chain used when no parse is available: token 0 is the
// root and every other token attaches to its left neighbour.
inline DependencyTree chain_fallback_tree(std::size_t sentence_len) {
  if (sentence_len == 0) throw Error("chain_fallback_tree: empty sentence");
  DependencyTree tree;
  tree.heads.resize(sentence_len);
  for (std::size_t i = 0; i < sentence_len; ++i) tree.heads[i] = static_cast<int>(i) - 1;
  return tree;
}

// One tree per sentence: the supplied parse, or the chain fallback.
inline std::vector<DependencyTree> sentence_trees(const corpus::Document& doc) {
  std::vector<DependencyTree> out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) {
    if (const DependencyTree* t = doc.tree(s.index)) {
      if (t->size() != s.tokens.size())
        throw Error(detail::concat("document ", doc.id, ": tree for sentence ", s.index,
                                   " has ", t->size(), " nodes, sentence has ", s.tokens.size()));
      out.push_back(*t);
    } else {
      out.push_back(chain_fallback_tree(s.tokens.size()));
    }
  }
  return out;
}

inline int root_of(const DependencyTree& tree) {
  auto it = std::find(tree.heads.begin(), tree.heads.end(), -1);
  if (it == tree.heads.end()) throw Error("invalid dependency tree: no root");
  return static_cast<int>(it - tree.heads.begin());
}

// Sentence-local index of the chunk's syntactic head: the last chunk token
// whose head lies outside the chunk, or the root when the chunk covers the
// whole sentence.
inline int head_token(const corpus::EntityChunk& chunk, const DependencyTree& tree,
                      std::size_t sentence_begin) {
  const int lo = static_cast<int>(chunk.tokens.begin - sentence_begin);
  const int hi = static_cast<int>(chunk.tokens.end - sentence_begin);
  if (lo < 0 || hi > static_cast<int>(tree.size()) || lo >= hi)
    throw Error("head_token: chunk outside the tree's sentence");
  int found = -1;
  for (int i = lo; i < hi; ++i) {
    const int h = tree.heads[i];
    if (h < lo || h >= hi) found = i;
  }
  return found >= 0 ? found : root_of(tree);
}

namespace detail_syntax {

inline std::vector<int> depths(const DependencyTree& tree) {
  const int n = static_cast<int>(tree.size());
  std::vector<int> depth(n, -1);
  for (int i = 0; i < n; ++i) {
    // Climb until a node of known depth, then fill in on the way back.
    std::vector<int> stack;
    int cur = i;
    while (cur != -1 && depth[cur] < 0) {
      stack.push_back(cur);
      cur = tree.heads[cur];
    }
    int d = cur == -1 ? -1 : depth[cur];
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) depth[*it] = ++d;
  }
  return depth;
}

inline void check_index(const DependencyTree& tree, int i) {
  if (i < 0 || i >= static_cast<int>(tree.size()))
    throw Error(detail::concat("token index ", i, " outside tree of size ", tree.size()));
}

}  // namespace detail_syntax

// Unique tree path from token i to token j (both sentence-local).
inline DepPath dependency_path(const DependencyTree& tree, int i, int j) {
  detail_syntax::check_index(tree, i);
  detail_syntax::check_index(tree, j);
  const auto depth = detail_syntax::depths(tree);
  std::vector<int> up_from_i{i};
  std::vector<int> up_from_j{j};
  int a = i;
  int b = j;
  while (depth[a] > depth[b]) up_from_i.push_back(a = tree.heads[a]);
  while (depth[b] > depth[a]) up_from_j.push_back(b = tree.heads[b]);
  while (a != b) {
    up_from_i.push_back(a = tree.heads[a]);
    up_from_j.push_back(b = tree.heads[b]);
  }
  // Both lists now end at the common ancestor; splice without duplicating it.
  DepPath path;
  path.nodes = std::move(up_from_i);
  path.nodes.insert(path.nodes.end(), up_from_j.rbegin() + 1, up_from_j.rend());
  return path;
}

// Edge count between the head tokens of two chunks of the same sentence.
inline int syntactic_distance(const DependencyTree& tree, const corpus::EntityChunk& a,
                              const corpus::EntityChunk& b, std::size_t sentence_begin) {
  validate_tree(tree);
  const int ha = head_token(a, tree, sentence_begin);
  const int hb = head_token(b, tree, sentence_begin);
  return dependency_path(tree, ha, hb).length();
}

// Document-level variant: kCrossSentenceDistance for chunks in different
// sentences. `trees` holds one tree per sentence (see sentence_trees).
inline int syntactic_distance(const corpus::Document& doc, const std::vector<DependencyTree>& trees,
                              const corpus::EntityChunk& a, const corpus::EntityChunk& b) {
  if (a.sentence_index != b.sentence_index) return kCrossSentenceDistance;
  if (a.sentence_index >= trees.size() || a.sentence_index >= doc.sentences.size())
    throw Error("syntactic_distance: sentence index out of range");
  return syntactic_distance(trees[a.sentence_index], a, b,
                            doc.sentences[a.sentence_index].tokens.begin);
}

// Keeps, in order, the pairs whose syntactic distance is at most max_dist.
inline std::vector<pipeline::CandidatePair> prune_pairs(const std::vector<pipeline::CandidatePair>& pairs,
                                                        const corpus::Document& doc,
                                                        const std::vector<DependencyTree>& trees,
                                                        int max_dist) {
  if (max_dist < 0) throw Error("prune_pairs: max_dist must be >= 0");
  std::vector<pipeline::CandidatePair> kept;
  for (const auto& p : pairs)
    if (syntactic_distance(doc, trees, p.chunk1, p.chunk2) <= max_dist) kept.push_back(p);
  return kept;
}

}  // namespace relex::syntax

#endif  // RELEX_SYNTAX_HPP_
