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
#include <sstream>
#include <string>
#include <vector>

#include "relex/conll.hpp"
#include "relex/corpus.hpp"
#include "relex/training_csv.hpp"

namespace relex::corpus {
namespace {

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<Token> plain_tokens(std::size_t n) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back({"w" + std::to_string(i), i, 0, i * 3, i * 3 + 2});
  return tokens;
}

TEST(Tokenize, SplitsTrailingPeriod) {
  auto [tokens, sentences] = tokenize("CT scan of chest.");
  EXPECT_EQ(texts(tokens), (std::vector<std::string>{"CT", "scan", "of", "chest", "."}));
  ASSERT_EQ(sentences.size(), 1u);
  EXPECT_EQ(sentences[0].tokens, (TokenRange{0, 5}));
}

TEST(Tokenize, EmptyText) {
  auto [tokens, sentences] = tokenize("");
  EXPECT_TRUE(tokens.empty());
  EXPECT_TRUE(sentences.empty());
}

TEST(Tokenize, TwoSentences) {
  auto [tokens, sentences] = tokenize("A. B");
  ASSERT_EQ(sentences.size(), 2u);
  EXPECT_EQ(sentences[0].tokens, (TokenRange{0, 2}));
  EXPECT_EQ(sentences[1].tokens, (TokenRange{2, 3}));
  EXPECT_EQ(tokens[2].sentence_index, 1u);
}

TEST(Tokenize, OffsetsIndexIntoText) {
  const std::string text = "pain (severe), left knee.";
  auto [tokens, sentences] = tokenize(text);
  for (const auto& t : tokens) EXPECT_EQ(text.substr(t.char_begin, t.char_end - t.char_begin), t.text);
  EXPECT_EQ(texts(tokens), (std::vector<std::string>{"pain", "(", "severe", ")", ",", "left", "knee", "."}));
}

TEST(Tokenize, DecimalPointDoesNotEndSentence) {
  auto [tokens, sentences] = tokenize("dose 2.5 mg");
  EXPECT_EQ(sentences.size(), 1u);
}

TEST(ChunksFromBio, MultiTokenChunk) {
  Document doc = make_document("d", "aspirin tablets daily");
  const auto chunks = chunks_from_bio(doc.tokens, {"B-Drug", "I-Drug", "O"});
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].entity_type, "Drug");
  EXPECT_EQ(chunks[0].text, "aspirin tablets");
  EXPECT_EQ(chunks[0].tokens, (TokenRange{0, 2}));
  EXPECT_EQ(chunks[0].char_begin, 0u);
  EXPECT_EQ(chunks[0].char_end, 15u);
}

TEST(ChunksFromBio, AllOutside) { EXPECT_TRUE(chunks_from_bio(plain_tokens(2), {"O", "O"}).empty()); }

TEST(ChunksFromBio, LeadingInsideIsPromoted) {
  const auto chunks = chunks_from_bio(plain_tokens(3), {"I-Test", "O", "B-Test"});
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].tokens, (TokenRange{0, 1}));
  EXPECT_EQ(chunks[1].tokens, (TokenRange{2, 3}));
}

TEST(ChunksFromBio, LengthMismatch) {
  try {
    chunks_from_bio(plain_tokens(2), {"O"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "tag/token length mismatch");
  }
}

TEST(ChunksFromBio, RejectsMalformedTag) { EXPECT_THROW(chunks_from_bio(plain_tokens(1), {"X-Foo"}), Error); }

TEST(ChunksFromBio, ChunkBreaksAtSentenceBoundary) {
  Document doc = make_document("d", "left knee. knee pain");
  const auto chunks = chunks_from_bio(doc.tokens, {"B-BodyPart", "I-BodyPart", "O", "I-BodyPart", "O"});
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[1].sentence_index, 1u);
}

// Oracle for the lenient rule, written against the tag strings alone: a
// chunk starts at every B-X, and at every I-X whose predecessor is not
// B-X or I-X.
std::vector<std::tuple<std::size_t, std::size_t, std::string>> lenient_oracle(const std::vector<std::string>& tags) {
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == "O") continue;
    const std::string type = tags[i].substr(2);
    const bool starts = tags[i][0] == 'B' || i == 0 || tags[i - 1] == "O" || tags[i - 1].substr(2) != type;
    if (starts) out.emplace_back(i, i + 1, type);
    else std::get<1>(out.back()) = i + 1;
  }
  return out;
}

TEST(ChunksFromBio, EnumerateAllThreeTokenSequences) {
  const std::vector<std::string> alphabet = {"O", "B-A", "I-A", "B-B", "I-B"};
  const auto tokens = plain_tokens(3);
  std::size_t cases = 0;
  for (const auto& a : alphabet)
    for (const auto& b : alphabet)
      for (const auto& c : alphabet) {
        const std::vector<std::string> tags = {a, b, c};
        const auto chunks = chunks_from_bio(tokens, tags);
        const auto expected = lenient_oracle(tags);
        ASSERT_EQ(chunks.size(), expected.size()) << a << ' ' << b << ' ' << c;
        for (std::size_t k = 0; k < chunks.size(); ++k) {
          EXPECT_EQ(chunks[k].tokens.begin, std::get<0>(expected[k]));
          EXPECT_EQ(chunks[k].tokens.end, std::get<1>(expected[k]));
          EXPECT_EQ(chunks[k].entity_type, std::get<2>(expected[k]));
        }
        ++cases;
      }
  EXPECT_EQ(cases, 125u);
}

TEST(ChunksFromBio, OutputSortedAndDisjoint) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> alphabet = {"O", "B-A", "I-A", "B-B", "I-B", "B-C"};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < n; ++i) tags.push_back(alphabet[rng() % alphabet.size()]);
    const auto chunks = chunks_from_bio(plain_tokens(n), tags);
    for (std::size_t k = 1; k < chunks.size(); ++k) EXPECT_LE(chunks[k - 1].tokens.end, chunks[k].tokens.begin);
  }
}

TEST(BioFromChunks, RoundTrip) {
  const auto tokens = plain_tokens(6);
  const std::vector<std::string> tags = {"B-A", "I-A", "O", "B-B", "B-B", "I-B"};
  EXPECT_EQ(bio_from_chunks(6, chunks_from_bio(tokens, tags)), tags);
}

TEST(MakeChunk, RejectsCrossSentence) {
  Document doc = make_document("d", "a. b");
  EXPECT_THROW(make_chunk(doc.tokens, {1, 3}, "X"), Error);
  EXPECT_THROW(make_chunk(doc.tokens, {1, 1}, "X"), Error);
}

TEST(ReadConll, TwoLines) {
  std::istringstream in("chest B-BodyPart\npain B-Symptom\n");
  const auto docs = read_conll(in);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].text, "chest pain");
  ASSERT_EQ(docs[0].chunks.size(), 2u);
  EXPECT_EQ(docs[0].chunks[0].entity_type, "BodyPart");
  EXPECT_EQ(docs[0].chunks[1].entity_type, "Symptom");
  EXPECT_TRUE(docs[0].trees.empty());
}

TEST(ReadConll, DocstartSeparatesDocuments) {
  std::istringstream in("-DOCSTART- a\nchest B-BodyPart\n\n-DOCSTART- -X-\npain B-Symptom\n");
  const auto docs = read_conll(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[1].id, "doc1");
}

TEST(ReadConll, OneColumnNamesLine) {
  std::istringstream in("chest B-BodyPart\npain\n");
  try {
    read_conll(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ReadConll, HeadColumnBuildsTree) {
  std::istringstream in("left B-Direction amod 2\nknee I-Direction nsubj 3\nhurts O root 0\n\nok O root 0\n");
  const auto docs = read_conll(in);
  ASSERT_EQ(docs.size(), 1u);
  ASSERT_EQ(docs[0].sentences.size(), 2u);
  ASSERT_NE(docs[0].tree(0), nullptr);
  EXPECT_EQ(docs[0].tree(0)->heads, (std::vector<int>{1, 2, -1}));
  EXPECT_EQ(docs[0].tree(1)->heads, (std::vector<int>{-1}));
}

TEST(ReadConll, RejectsCyclicTree) {
  std::istringstream in("a O x 2\nb O x 1\n");
  EXPECT_THROW(read_conll(in), ParseError);
}

TEST(ReadConll, RejectsBadTagWithLine) {
  std::istringstream in("a O\nb Z-Foo\n");
  try {
    read_conll(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(WriteConll, RoundTrip) {
  std::istringstream in("-DOCSTART- n1\nleft B-Direction amod 2\nknee B-BodyPart root 0\n\npain B-Symptom root 0\n");
  const auto docs = read_conll(in);
  std::ostringstream out;
  write_conll(out, docs);
  std::istringstream again(out.str());
  const auto docs2 = read_conll(again);
  ASSERT_EQ(docs2.size(), 1u);
  EXPECT_EQ(docs2[0].text, docs[0].text);
  EXPECT_EQ(docs2[0].chunks, docs[0].chunks);
  EXPECT_EQ(docs2[0].trees, docs[0].trees);
}

const std::string kHeader = "doc_id,sentence,e1_begin,e1_end,e1_type,chunk1,e2_begin,e2_end,e2_type,chunk2,label\n";

TEST(TrainingCsv, ReadsOneRow) {
  std::istringstream in(kHeader + "d1,pain in chest,0,4,Symptom,pain,8,13,BodyPart,chest,is_related\n");
  const auto rows = read_training_csv(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].chunk1, "pain");
  EXPECT_EQ(rows[0].e2_begin, 8u);
  EXPECT_EQ(rows[0].label, "is_related");
}

TEST(TrainingCsv, ChunkTextMismatch) {
  std::istringstream in(kHeader + "d1,pain in chest,0,4,Symptom,ache,8,13,BodyPart,chest,1\n");
  try {
    read_training_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "chunk text mismatch row 1");
  }
}

TEST(TrainingCsv, NonIntegerOffset) {
  std::istringstream in(kHeader + "d1,pain in chest,zero,4,Symptom,pain,8,13,BodyPart,chest,1\n");
  try {
    read_training_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(TrainingCsv, HeaderOnly) {
  std::istringstream in(kHeader);
  EXPECT_TRUE(read_training_csv(in).empty());
}

TEST(TrainingCsv, ZeroExamplesWritesHeaderOnly) {
  std::ostringstream out;
  write_training_csv(out, {});
  EXPECT_EQ(out.str(), kHeader);
}

RelationExample sample(std::string sentence, std::string c1, std::string c2) {
  RelationExample ex;
  ex.doc_id = "doc, 7";
  ex.sentence = sentence;
  ex.e1_begin = sentence.find(c1);
  ex.e1_end = ex.e1_begin + c1.size();
  ex.e1_type = "Symptom";
  ex.chunk1 = c1;
  ex.e2_begin = sentence.rfind(c2);
  ex.e2_end = ex.e2_begin + c2.size();
  ex.e2_type = "BodyPart";
  ex.chunk2 = c2;
  ex.label = "1";
  return ex;
}

TEST(TrainingCsv, RoundTripWithQuoting) {
  const std::vector<RelationExample> rows = {
      sample("pain in chest", "pain", "chest"),
      sample("pain, \"sharp\", in\nlower back", "\"sharp\"", "back"),
  };
  std::ostringstream out;
  write_training_csv(out, rows);
  EXPECT_NE(out.str().find("\"pain, \"\"sharp\"\""), std::string::npos);
  std::istringstream in(out.str());
  EXPECT_EQ(read_training_csv(in), rows);
}

TEST(TrainingCsv, RejectsWrongHeader) {
  std::istringstream in("a,b,c\n");
  EXPECT_THROW(read_training_csv(in), ParseError);
}

}  // namespace
}  // namespace relex::corpus
