#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "lpbias/backend.hpp"
#include "lpbias/error.hpp"
#include "lpbias/mock_backend.hpp"
#include "lpbias/static_vectors.hpp"
#include "lpbias/text.hpp"
#include "support.hpp"

using namespace lpbias;
using testing_support::dist;

namespace {

MockConfig programmer_mock() {
  MockConfig c;
  c.predictions["[MASK] is a programmer"][0] = dist({{"he", 0.2}, {"she", 0.05}}, {"it", "they"});
  c.predictions["[MASK] is a [MASK]"][0] = dist({{"he", 0.1}, {"she", 0.1}}, {"it", "they"});
  c.predictions["[MASK] is a [MASK]"][3] = dist({}, {"programmer", "nurse"});
  c.embeddings["[MASK] is a programmer"][3] = {1.0, 2.0, 3.0};
  c.embeddings["he is a programmer"][3] = {1.5, 2.0, 3.0};
  c.token_vectors["is"] = {0.0, 0.0, 1.0};
  return c;
}

MaskedQuery q(std::vector<std::string> toks, std::vector<MaskSlot> slots) {
  return MaskedQuery::make(std::move(toks), std::move(slots), "t", "[MASK]");
}

}  // namespace

TEST(MaskedQuery, RejectsSlotWithoutMask) {
  EXPECT_THROW(q({"he", "is"}, {{0, SlotRole::target}}), ValidationError);
}

TEST(MaskedQuery, RejectsDuplicateRoles) {
  EXPECT_THROW(q({"[MASK]", "[MASK]"}, {{0, SlotRole::target}, {1, SlotRole::target}}),
               ValidationError);
}

TEST(MaskedQuery, RejectsOutOfRangeSlot) {
  EXPECT_THROW(q({"[MASK]"}, {{3, SlotRole::target}}), ValidationError);
}

TEST(MaskedQuery, SlotLookupByRole) {
  auto m = q({"[MASK]", "is", "a", "[MASK]"}, {{0, SlotRole::target}, {3, SlotRole::attribute}});
  EXPECT_EQ(m.slot_position(SlotRole::attribute), 3u);
  EXPECT_EQ(m.text(), "[MASK] is a [MASK]");
  auto t = q({"[MASK]", "is"}, {{0, SlotRole::target}});
  EXPECT_THROW(t.slot_position(SlotRole::attribute), ValidationError);
}

TEST(MockBackend, PredictReturnsTableRow) {
  MockBackend b(programmer_mock());
  auto m = q({"[MASK]", "is", "a", "programmer"}, {{0, SlotRole::target}});
  auto d = predict_mask(b, m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.at(0).probability("he"), 0.2);
  EXPECT_DOUBLE_EQ(d.at(0).probability("she"), 0.05);
  EXPECT_DOUBLE_EQ(d.at(0).probability("it"), 0.375);
}

TEST(MockBackend, ZeroSlotsGiveEmptyMap) {
  MockBackend b(programmer_mock());
  EXPECT_TRUE(predict_mask(b, q({"he", "is", "a", "programmer"}, {})).empty());
}

TEST(MockBackend, TokenProbability) {
  MockBackend b(programmer_mock());
  auto m = q({"[MASK]", "is", "a", "programmer"}, {{0, SlotRole::target}});
  EXPECT_DOUBLE_EQ(token_probability(b, m, SlotRole::target, "he"), 0.2);
  EXPECT_EQ(token_probability(b, m, SlotRole::target, "he"),
            token_probability(b, m, SlotRole::target, "he"));
  EXPECT_THROW(token_probability(b, m, SlotRole::attribute, "he"), ValidationError);
}

TEST(MockBackend, OovCandidateNamesToken) {
  MockBackend b(programmer_mock());
  auto m = q({"[MASK]", "is", "a", "programmer"}, {{0, SlotRole::target}});
  try {
    token_probability(b, m, SlotRole::target, "xylophone");
    FAIL();
  } catch (const OovError& e) {
    EXPECT_EQ(e.token(), "xylophone");
  }
}

TEST(MockBackend, OovQueryTokenRejected) {
  MockBackend b(programmer_mock());
  EXPECT_THROW(predict_mask(b, q({"[MASK]", "is", "a", "zebra"}, {{0, SlotRole::target}})), OovError);
}

TEST(MockBackend, InvalidDistributionRejectedAtLoad) {
  MockConfig c;
  c.predictions["[MASK] runs"][0] = {{"he", 0.7}, {"she", 0.7}};
  EXPECT_THROW(MockBackend{c}, ValidationError);
  c.predictions["[MASK] runs"][0] = {{"he", -0.1}, {"she", 1.1}};
  EXPECT_THROW(MockBackend{c}, ValidationError);
}

TEST(MockBackend, ContextualEmbeddingLookupAndContextSensitivity) {
  MockBackend b(programmer_mock());
  auto masked = q({"[MASK]", "is", "a", "programmer"}, {{0, SlotRole::target}});
  auto filled = q({"he", "is", "a", "programmer"}, {});
  auto v1 = b.contextual_embedding(masked, 3);
  auto v2 = b.contextual_embedding(filled, 3);
  EXPECT_EQ(v1.values, (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_NE(v1.values, v2.values);
  EXPECT_EQ(v1.values.size(), b.descriptor().embedding_dimension);
  EXPECT_EQ(b.contextual_embedding(filled, 1).values, (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(MockBackend, DescriptorAndKind) {
  MockBackend b(programmer_mock());
  EXPECT_EQ(b.descriptor().kind, BackendKind::mock);
  EXPECT_GT(b.descriptor().vocabulary_size, 0u);
  EXPECT_EQ(b.descriptor().embedding_dimension, 3u);
}

TEST(MockBackend, WordpiecesSplitWithOffsets) {
  MockConfig c = programmer_mock();
  c.wordpieces["firefighter"] = {"fire", "##fighter"};
  MockBackend b(c);
  auto spans = b.tokenize_with_offsets("A Firefighter.");
  ASSERT_EQ(spans.size(), 4u);
  EXPECT_EQ(spans[1].token, "fire");
  EXPECT_EQ(spans[1].begin, 2u);
  EXPECT_EQ(spans[1].end, 6u);
  EXPECT_EQ(spans[2].token, "##fighter");
  EXPECT_EQ(spans[2].end, 13u);
  EXPECT_EQ(spans[3].token, ".");
}

TEST(MockBackend, RoundTripRandomTables) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    MockConfig c;
    std::vector<std::string> toks{"a", "b", "c", "d"};
    for (int s = 0; s < 4; ++s) {
      std::string key = "[MASK] w" + std::to_string(s);
      c.predictions[key][0] = testing_support::random_dist(toks, gen);
    }
    MockBackend b(c);
    auto again = MockBackend(parse_mock_config(serialize_mock_config(c)));
    for (const auto& [key, slots] : c.predictions) {
      auto m = q(text::split(key, ' '), {{0, SlotRole::target}});
      auto d1 = predict_mask(b, m).at(0);
      auto d2 = predict_mask(again, m).at(0);
      for (const auto& [tok, p] : slots.at(0)) {
        EXPECT_EQ(d1.probability(tok), p);
        EXPECT_EQ(d2.probability(tok), p);
      }
    }
  }
}

TEST(MockBackend, ParseErrorCarriesLine) {
  try {
    parse_mock_config("{\n \"predictions\": {\n  \"x\": [\n}", "broken.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(StaticVectors, LoadVerbatimAndDescriptor) {
  auto dir = testing_support::temp_dir("vec");
  auto path = (dir / "v.txt").string();
  std::ofstream(path) << "3 5\nalpha 1 2 3 4 5\nbeta 0.5 0 0 0 -1\ngamma 0 0 0 0 2\n";
  auto b = StaticVectorBackend::load(path);
  EXPECT_EQ(b.descriptor().vocabulary_size, 3u);
  EXPECT_EQ(b.descriptor().embedding_dimension, 5u);
  EXPECT_EQ(b.descriptor().kind, BackendKind::static_vectors);
  EXPECT_EQ(b.static_vector("beta").values, (std::vector<double>{0.5, 0, 0, 0, -1}));
  EXPECT_THROW(b.static_vector("delta"), OovError);
  auto m = q({"[MASK]", "alpha"}, {{0, SlotRole::target}});
  EXPECT_THROW(b.contextual_embedding(m, 1), UnsupportedOperationError);
  EXPECT_THROW(predict_mask(b, m), UnsupportedOperationError);
}

TEST(StaticVectors, RaggedLineIsParseError) {
  auto dir = testing_support::temp_dir("vec");
  auto path = (dir / "v.txt").string();
  std::ofstream(path) << "alpha 1 2 3\nbeta 1 2\n";
  try {
    StaticVectorBackend::load(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(StaticVectors, KeepFilter) {
  auto dir = testing_support::temp_dir("vec");
  auto path = (dir / "v.txt").string();
  std::ofstream(path) << "alpha 1 2\nbeta 3 4\n";
  auto b = StaticVectorBackend::load(path, std::set<std::string>{"beta"});
  EXPECT_FALSE(b.in_vocabulary("alpha"));
  EXPECT_TRUE(b.in_vocabulary("beta"));
}

TEST(MakeBackend, Specs) {
  EXPECT_THROW(make_backend("nonsense"), ValidationError);
  EXPECT_THROW(make_backend("tpu:whatever"), ValidationError);
  EXPECT_THROW(make_backend("mock:/no/such/file.json"), ValidationError);
  auto b = make_backend("vectors:" + testing_support::fixture("toy_vectors.txt"));
  EXPECT_EQ(b->descriptor().embedding_dimension, 2u);
}

TEST(Text, BasicTokenizeKeepsSpecials) {
  auto t = text::basic_tokenize("[MASK] is a nurse's [UNK].");
  std::vector<std::string> toks;
  for (auto& s : t) toks.push_back(s.token);
  EXPECT_EQ(toks, (std::vector<std::string>{"[MASK]", "is", "a", "nurse", "'", "s", "[UNK]", "."}));
}

TEST(Text, Utf8Offsets) {
  std::string s = "José met Ana";
  EXPECT_EQ(text::utf8_byte_offset(s, 5), 6u);
  EXPECT_EQ(text::utf8_byte_offset(s, 100), std::string::npos);
}
