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

// Small trained model over the synthetic corpus, shared by several tests.

#ifndef RELEX_TESTS_SUPPORT_FIXTURES_HPP_
#define RELEX_TESTS_SUPPORT_FIXTURES_HPP_

#include "relex/fcnn.hpp"
#include "relex/pipeline.hpp"
#include "relex/synthetic.hpp"

namespace relex::testing {

struct ToySetup {
  synthetic::SyntheticCorpus corpus;
  features::FeatureConfig features;
  pipeline::PipelineConfig pipeline;
  fcnn::FcnnModel model;
};

inline const ToySetup& toy_setup() {
  static const ToySetup setup = [] {
    ToySetup s;
    synthetic::SyntheticConfig sc;
    sc.documents = 80;
    s.corpus = synthetic::generate_corpus(sc);
    s.features.embed_dim = sc.embed_dim;
    s.features.vicinity_window = 3;
    s.features.max_path_len = 2;
    s.pipeline.schema = s.corpus.schema;
    std::vector<fcnn::TrainingExample> examples;
    for (std::size_t i = 0; i < s.corpus.docs.size(); ++i) {
      auto ex = pipeline::training_examples(s.corpus.docs[i], s.corpus.gold[i], s.pipeline, s.features,
                                            s.corpus.table);
      examples.insert(examples.end(), ex.begin(), ex.end());
    }
    fcnn::TrainConfig tc;
    tc.hidden_sizes = {16, 16};
    tc.epochs = 30;
    tc.learning_rate = 0.003;
    tc.batch_size = 16;
    s.model = fcnn::train(examples, s.pipeline.schema.labels, s.features, tc);
    return s;
  }();
  return setup;
}

}  // namespace relex::testing

#endif  // RELEX_TESTS_SUPPORT_FIXTURES_HPP_
