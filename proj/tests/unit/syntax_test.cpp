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

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "relex/syntax.hpp"
#include "support/oracles.hpp"

namespace relex::syntax {
namespace {

using corpus::Document;
using corpus::EntityChunk;

// Single-sentence document of n tokens "t0 .. t{n-1}" with the given tree.
Document sentence_doc(std::size_t n, std::optional<DependencyTree> tree = std::nullopt) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += (i ? " t" : "t") + std::to_string(i);
  Document doc = corpus::make_document("d", text);
  if (tree) doc.trees = {*tree};
  return doc;
}

EntityChunk chunk(const Document& doc, std::size_t b, std::size_t e) {
  return corpus::make_chunk(doc.tokens, {b, e}, "X");
}

TEST(ChainFallback, Shapes) {
  EXPECT_EQ(chain_fallback_tree(1).heads, (std::vector<int>{-1}));
  EXPECT_EQ(chain_fallback_tree(3).heads, (std::vector<int>{-1, 0, 1}));
  EXPECT_THROW(chain_fallback_tree(0), Error);
}

TEST(HeadToken, SingleToken) {
  const Document doc = sentence_doc(3);
  EXPECT_EQ(head_token(chunk(doc, 2, 3), chain_fallback_tree(3), 0), 2);
}

TEST(HeadToken, ChainChunkPicksTokenWithOutsideHead) {
  const Document doc = sentence_doc(3);
  EXPECT_EQ(head_token(chunk(doc, 1, 3), chain_fallback_tree(3), 0), 1);
}

TEST(HeadToken, WholeSentenceIsRoot) {
  const Document doc = sentence_doc(3);
  const DependencyTree t{{1, -1, 1}, {}};
  EXPECT_EQ(head_token(chunk(doc, 0, 3), t, 0), 1);
}

TEST(SyntacticDistance, SameChunkIsZero) {
  const Document doc = sentence_doc(4);
  const auto a = chunk(doc, 1, 2);
  EXPECT_EQ(syntactic_distance(chain_fallback_tree(4), a, a, 0), 0);
}

TEST(SyntacticDistance, ChainEnds) {
  const Document doc = sentence_doc(4);
  const auto tree = chain_fallback_tree(4);
  EXPECT_EQ(syntactic_distance(tree, chunk(doc, 0, 1), chunk(doc, 3, 4), 0), 3);
  EXPECT_EQ(testing::bfs_distance(tree, 0, 3), 3);
}

TEST(SyntacticDistance, CrossSentenceSentinel) {
  Document doc = corpus::make_document("d", "a b. c d");
  const auto trees = sentence_trees(doc);
  EXPECT_EQ(syntactic_distance(doc, trees, chunk(doc, 0, 1), chunk(doc, 3, 4)), kCrossSentenceDistance);
}

TEST(SyntacticDistance, InvalidTreeThrows) {
  const Document doc = sentence_doc(3);
  const DependencyTree cyclic{{1, 2, 0}, {}};
  EXPECT_THROW(syntactic_distance(cyclic, chunk(doc, 0, 1), chunk(doc, 2, 3), 0), Error);
  const DependencyTree two_roots{{-1, -1, 0}, {}};
  EXPECT_THROW(syntactic_distance(two_roots, chunk(doc, 0, 1), chunk(doc, 2, 3), 0), Error);
}

TEST(SyntacticDistance, UsesSentenceOffset) {
  Document doc = corpus::make_document("d", "x y . a b c");
  const auto trees = sentence_trees(doc);
  ASSERT_EQ(trees.size(), 2u);
  EXPECT_EQ(syntactic_distance(doc, trees, chunk(doc, 3, 4), chunk(doc, 5, 6)), 2);
}

TEST(DependencyPath, Trivial) {
  const auto p = dependency_path(chain_fallback_tree(3), 1, 1);
  EXPECT_EQ(p.nodes, (std::vector<int>{1}));
  EXPECT_EQ(p.length(), 0);
}

TEST(DependencyPath, Chain) {
  EXPECT_EQ(dependency_path(chain_fallback_tree(3), 0, 2).nodes, (std::vector<int>{0, 1, 2}));
}

TEST(DependencyPath, ReversedArguments) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 15);
    const auto tree = testing::random_tree(n, rng);
    const int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
    auto fwd = dependency_path(tree, i, j).nodes;
    const auto back = dependency_path(tree, j, i).nodes;
    std::reverse(fwd.begin(), fwd.end());
    EXPECT_EQ(fwd, back);
  }
}

TEST(DependencyPath, InvalidIndex) { EXPECT_THROW(dependency_path(chain_fallback_tree(3), 0, 3), Error); }

TEST(DependencyPath, ConsecutiveNodesAreAdjacent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const auto tree = testing::random_tree(n, rng);
    const int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
    const auto p = dependency_path(tree, i, j);
    EXPECT_EQ(p.length(), testing::bfs_distance(tree, i, j));
    for (std::size_t k = 1; k < p.nodes.size(); ++k) {
      const int a = p.nodes[k - 1], b = p.nodes[k];
      EXPECT_TRUE(tree.heads[a] == b || tree.heads[b] == a);
    }
  }
}

TEST(SyntacticDistance, MatchesBfsOnRandomTrees) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const auto tree = testing::random_tree(n, rng);
    const Document doc = sentence_doc(static_cast<std::size_t>(n), tree);
    auto random_chunk = [&] {
      const std::size_t b = rng() % n;
      const std::size_t e = b + 1 + rng() % std::min<std::size_t>(3, n - b);
      return chunk(doc, b, e);
    };
    const auto a = random_chunk(), b = random_chunk();
    const int d = syntactic_distance(tree, a, b, 0);
    EXPECT_EQ(d, testing::bfs_distance(tree, head_token(a, tree, 0), head_token(b, tree, 0)));
    EXPECT_EQ(d, syntactic_distance(tree, b, a, 0));
  }
}

std::vector<pipeline::CandidatePair> pairs_for(const Document& doc,
                                               const std::vector<std::pair<std::size_t, std::size_t>>& idx) {
  std::vector<pipeline::CandidatePair> out;
  for (auto [i, j] : idx) out.push_back({doc.chunks[i], doc.chunks[j], i, j, doc.id, true});
  return out;
}

TEST(PrunePairs, KeepsPairsWithinThreshold) {
  // Chain over 6 tokens: chunk0 at 0, chunk1 at 1, chunk2 at 4, chunk3 at 2.
  Document doc = sentence_doc(6);
  doc.chunks = {chunk(doc, 0, 1), chunk(doc, 1, 2), chunk(doc, 4, 5), chunk(doc, 2, 3)};
  const auto trees = sentence_trees(doc);
  const auto pairs = pairs_for(doc, {{0, 1}, {0, 2}, {0, 3}});
  std::vector<int> oracle;
  for (const auto& p : pairs)
    oracle.push_back(testing::bfs_distance(trees[0], static_cast<int>(p.chunk1.tokens.begin),
                                           static_cast<int>(p.chunk2.tokens.begin)));
  EXPECT_EQ(oracle, (std::vector<int>{1, 4, 2}));
  const auto kept = prune_pairs(pairs, doc, trees, 2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].chunk2_index, 1u);
  EXPECT_EQ(kept[1].chunk2_index, 3u);
}

TEST(PrunePairs, SentinelKeepsEverything) {
  Document doc = corpus::make_document("d", "a b c. d e");
  doc.chunks = {chunk(doc, 0, 1), chunk(doc, 2, 3), chunk(doc, 4, 5)};
  const auto trees = sentence_trees(doc);
  const auto pairs = pairs_for(doc, {{0, 1}, {0, 2}, {1, 2}});
  EXPECT_EQ(prune_pairs(pairs, doc, trees, kCrossSentenceDistance).size(), 3u);
  EXPECT_EQ(prune_pairs(pairs, doc, trees, kCrossSentenceDistance - 1).size(), 1u);
}

TEST(PrunePairs, ZeroKeepsSharedHeads) {
  Document doc = sentence_doc(4);
  doc.chunks = {chunk(doc, 0, 2), chunk(doc, 0, 1), chunk(doc, 3, 4)};
  const auto trees = sentence_trees(doc);
  const auto kept = prune_pairs(pairs_for(doc, {{0, 1}, {0, 2}}), doc, trees, 0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].chunk2_index, 1u);
}

TEST(PrunePairs, OutputIsExactPartition) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 15);
    Document doc = sentence_doc(static_cast<std::size_t>(n), testing::random_tree(n, rng));
    for (int i = 0; i < n; ++i) doc.chunks.push_back(chunk(doc, i, i + 1));
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) idx.emplace_back(i, j);
    const auto pairs = pairs_for(doc, idx);
    const auto trees = sentence_trees(doc);
    const int max_dist = static_cast<int>(rng() % 5);
    const auto kept = prune_pairs(pairs, doc, trees, max_dist);
    std::size_t expected = 0;
    for (const auto& p : pairs)
      if (testing::bfs_distance(trees[0], static_cast<int>(p.chunk1.tokens.begin),
                                static_cast<int>(p.chunk2.tokens.begin)) <= max_dist)
        ++expected;
    EXPECT_EQ(kept.size(), expected);
  }
}

TEST(SentenceTrees, RejectsSizeMismatch) {
  Document doc = sentence_doc(3, chain_fallback_tree(2));
  EXPECT_THROW(sentence_trees(doc), Error);
}

}  // namespace
}  // namespace relex::syntax
