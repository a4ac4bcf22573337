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

#ifndef RELEX_RELEX_HPP_
#define RELEX_RELEX_HPP_

#include "relex/candidate_pair.hpp"
#include "relex/conll.hpp"
#include "relex/corpus.hpp"
#include "relex/dependency_tree.hpp"
#include "relex/embeddings.hpp"
#include "relex/error.hpp"
#include "relex/evalbench.hpp"
#include "relex/fcnn.hpp"
#include "relex/fcnn_io.hpp"
#include "relex/features.hpp"
#include "relex/graph.hpp"
#include "relex/pipeline.hpp"
#include "relex/resolver.hpp"
#include "relex/syntax.hpp"
#include "relex/synthetic.hpp"
#include "relex/timeline.hpp"
#include "relex/training_csv.hpp"

#endif  // RELEX_RELEX_HPP_
