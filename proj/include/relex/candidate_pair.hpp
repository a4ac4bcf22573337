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

#ifndef RELEX_CANDIDATE_PAIR_HPP_
#define RELEX_CANDIDATE_PAIR_HPP_

#include <string>

#include "relex/corpus.hpp"

namespace relex::pipeline {

// Ordered entity pair: chunk1 plays the entity-1 role of the schema.
struct CandidatePair {
  corpus::EntityChunk chunk1;
  corpus::EntityChunk chunk2;
  std::size_t chunk1_index = 0;  // into Document::chunks
  std::size_t chunk2_index = 0;
  std::string doc_id;
  bool same_sentence = true;

  bool operator==(const CandidatePair&) const = default;
};

}  // namespace relex::pipeline

#endif  // RELEX_CANDIDATE_PAIR_HPP_
