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

#ifndef RELEX_DEPENDENCY_TREE_HPP_
#define RELEX_DEPENDENCY_TREE_HPP_

#include <string>
#include <vector>

#include "relex/error.hpp"

namespace relex::syntax {

// Per-sentence dependency structure. heads[i] is the sentence-local index of
// token i's head, or -1 for the root.
struct DependencyTree {
  std::vector<int> heads;
  std::vector<std::string> labels;  // empty or one per token

  std::size_t size() const { return heads.size(); }
  bool operator==(const DependencyTree&) const = default;
};

// Empty string when the tree is well formed, otherwise a description of the
// first violation found.
inline std::string tree_problem(const DependencyTree& tree) {
  const int n = static_cast<int>(tree.heads.size());
  if (n == 0) return "empty tree";
  if (!tree.labels.empty() && tree.labels.size() != tree.heads.size())
    return "label count does not match token count";
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = tree.heads[i];
    if (h == -1) {
      ++roots;
    } else if (h < 0 || h >= n) {
      return detail::concat("head of token ", i, " out of range: ", h);
    } else if (h == i) {
      return detail::concat("token ", i, " is its own head");
    }
  }
  if (roots != 1) return detail::concat("expected exactly one root, found ", roots);
  // Walking up from any node must hit the root within n steps.
  for (int i = 0; i < n; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != -1) {
      cur = tree.heads[cur];
      if (++steps > n) return detail::concat("cycle through token ", i);
    }
  }
  return {};
}

inline void validate_tree(const DependencyTree& tree) {
  if (auto problem = tree_problem(tree); !problem.empty())
    throw Error("invalid dependency tree: " + problem);
}

}  // namespace relex::syntax

#endif  // RELEX_DEPENDENCY_TREE_HPP_
