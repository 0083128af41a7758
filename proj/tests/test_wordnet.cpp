#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wnduma/wordnet.hpp"

using namespace wnduma;
using namespace wnduma::wordnet;

namespace {

const std::filesystem::path kMini = std::filesystem::path(WNDUMA_TEST_DATA) / "mini_wordnet";

const WordNet& mini() {
    static const WordNet wn = WordNet::load(kMini);
    return wn;
}

std::string real_dir() { return WNDUMA_WORDNET_DIR; }

const WordNet& real() {
    static const WordNet wn = WordNet::load(real_dir());
    return wn;
}

#define REQUIRE_REAL_WORDNET()                                                          \
    if (real_dir().empty() || !std::filesystem::exists(std::filesystem::path(real_dir()) / "index.noun")) \
    GTEST_SKIP() << "WordNet 3.0 not configured (WNDUMA_WORDNET_DIR)"

std::vector<std::string> toks(const std::string& s) { return data::tokenize(s); }

}  // namespace

TEST(IndexParser, GrammarExampleLine) {
    const auto entries = parse_index_text("abc n 2 1 @ 2 0 00000001 00000002\n", "t");
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].lemma, "abc");
    EXPECT_EQ(entries[0].pos, PosTag::noun);
    EXPECT_EQ(entries[0].synset_offsets, (std::vector<std::uint64_t>{1, 2}));
}

TEST(IndexParser, HeaderLinesSkipped) {
    const auto entries = parse_index_text("  1 license text\n  2 more\nabc v 1 0 1 0 00000042\n", "t");
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].pos, PosTag::verb);
}

TEST(IndexParser, MalformedLineReportsLineNumber) {
    try {
        parse_index_text("  1 header\nabc n 1 0 1 0 00000001\nabc n x\n", "index.noun");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.path(), "index.noun");
    }
}

TEST(IndexParser, OffsetCountMismatchIsStructural) {
    EXPECT_THROW(parse_index_text("abc n 3 0 3 0 00000001 00000002\n", "t"), StructuralError);
}

TEST(DataParser, GlossSplitIntoDefinitionAndExamples) {
    const auto map = parse_data_text(
        "00000000 03 n 01 bank 0 000 | sloping land (beside water); \"they pulled the canoe up on the bank\"  \n", "t");
    const auto& e = map.at(0);
    EXPECT_EQ(e.gloss, "sloping land (beside water)");
    ASSERT_EQ(e.examples.size(), 1u);
    EXPECT_EQ(e.examples[0], "they pulled the canoe up on the bank");
    EXPECT_EQ(e.words, std::vector<std::string>{"bank"});
}

TEST(DataParser, NoQuoteMeansNoExamples) {
    const auto map = parse_data_text("00000010 03 n 01 bank 0 000 | a long ridge or pile\n", "t");
    EXPECT_TRUE(map.at(10).examples.empty());
    EXPECT_EQ(map.at(10).offset, 10u);
}

TEST(DataParser, AdjectiveMarkersAndSatellites) {
    const auto map = parse_data_text("00000005 00 s 02 Big(a) 0 large 0 000 | above average in size\n", "t");
    EXPECT_EQ(map.at(5).pos, PosTag::adjective);
    EXPECT_EQ(map.at(5).words, (std::vector<std::string>{"big", "large"}));
}

TEST(DataParser, MissingBarAndDuplicates) {
    try {
        parse_data_text("00000001 03 n 01 x 0 000 | ok\n00000002 03 n 01 y 0 000 no bar\n", "data.noun");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_data_text("00000001 03 n 01 x 0 000 | a\n00000001 03 n 01 y 0 000 | b\n", "t"), StructuralError);
}

TEST(DataParser, OffsetsMatchByteOffsetsInFixture) {
    const std::string text = test::read_file(kMini / "data.noun");
    for (const auto& [offset, entry] : mini().data(PosTag::noun)) {
        EXPECT_EQ(text.substr(offset, 8), std::string(8 - std::to_string(offset).size(), '0') + std::to_string(offset));
        EXPECT_EQ(entry.offset, offset);
    }
}

TEST(ExceptionParser, Basic) {
    const auto m = parse_exception_text("geese goose\nbeing be\n\n", "t");
    EXPECT_EQ(m.at("geese"), std::vector<std::string>{"goose"});
    EXPECT_THROW(parse_exception_text("lonely\n", "t"), ParseError);
}

TEST(Morphy, SuffixRulesAndExceptions) {
    const WordNet& wn = mini();
    EXPECT_EQ(wn.base_forms("banks", PosTag::noun), std::vector<std::string>{"bank"});
    EXPECT_EQ(wn.base_forms("glasses", PosTag::noun), std::vector<std::string>{"glass"});
    EXPECT_EQ(wn.base_forms("boxes", PosTag::noun), std::vector<std::string>{"box"});
    EXPECT_EQ(wn.base_forms("churches", PosTag::noun), std::vector<std::string>{"church"});
    EXPECT_EQ(wn.base_forms("cities", PosTag::noun), std::vector<std::string>{"city"});
    EXPECT_EQ(wn.base_forms("geese", PosTag::noun), std::vector<std::string>{"goose"});
    EXPECT_EQ(wn.base_forms("running", PosTag::verb), std::vector<std::string>{"run"});
    EXPECT_EQ(wn.base_forms("went", PosTag::verb), std::vector<std::string>{"go"});
    EXPECT_EQ(wn.base_forms("walked", PosTag::verb), std::vector<std::string>{"walk"});
    EXPECT_EQ(wn.base_forms("collapsed", PosTag::verb), std::vector<std::string>{"collapse"});
    EXPECT_EQ(wn.base_forms("bigger", PosTag::adjective), std::vector<std::string>{"big"});
    EXPECT_EQ(wn.base_forms("larger", PosTag::adjective), std::vector<std::string>{"large"});
    EXPECT_EQ(wn.base_forms("quickest", PosTag::adjective), std::vector<std::string>{"quick"});
    EXPECT_EQ(wn.base_forms("quickly", PosTag::adverb), std::vector<std::string>{"quickly"});
    EXPECT_TRUE(wn.base_forms("zzzz", PosTag::noun).empty());
}

TEST(Morphy, MultiWordLemma) {
    EXPECT_EQ(normalize_lemma("Ice Cream"), "ice_cream");
    EXPECT_EQ(mini().senses("ice cream", PosTag::noun).size(), 1u);
}

TEST(Lookup, SenseOrderAndDeterminism) {
    const auto& g = mini().senses("bank", PosTag::noun);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_EQ(g[0], "sloping land (especially the slope beside a body of water)");
    EXPECT_EQ(g[1], "a financial institution that accepts deposits");
    EXPECT_EQ(WordNet::load(kMini).lookup(), mini().lookup());
}

TEST(Lookup, MissingFileIsParseErrorWithPath) {
    test::TempDir dir("wn_missing");
    try {
        WordNet::load(dir.path());
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("index.noun"), std::string::npos) << e.what();
    }
}

TEST(Lookup, CorruptedDataFileNamesLocation) {
    test::TempDir dir("wn_corrupt");
    for (const auto& f : std::filesystem::directory_iterator(kMini)) std::filesystem::copy(f.path(), dir / f.path().filename().string());
    std::string text = test::read_file(dir / "data.verb");
    const auto third_line = text.find('\n', text.find('\n', text.find('\n') + 1) + 1) + 1;
    text.replace(text.find('|', third_line), 1, " ");
    test::write_file(dir / "data.verb", text);
    try {
        WordNet::load(dir.path());
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(e.path().find("data.verb"), std::string::npos);
    }
}

TEST(InferPos, RuleCascade) {
    const WordNet& wn = mini();
    const auto a = toks("the sudden collapse of the bank");
    EXPECT_EQ(infer_pos(a, 2, wn), PosTag::noun);  // no cue before "collapse": 1 noun vs 1 verb sense, noun wins
    EXPECT_EQ(infer_pos(a, 5, wn), PosTag::noun);  // rule 1
    const auto b = toks("they had to bank the money");
    EXPECT_EQ(infer_pos(b, 3, wn), PosTag::verb);  // rule 2
    const auto c = toks("he ran quickly home");
    EXPECT_EQ(infer_pos(c, 2, wn), PosTag::adverb);  // rule 3
    const auto d = toks("bank");
    EXPECT_EQ(infer_pos(d, 0, wn), PosTag::noun);  // rule 4: 3 noun vs 1 verb sense
    const auto e = toks("run");
    EXPECT_EQ(infer_pos(e, 0, wn), PosTag::verb);  // rule 4: 2 verb vs 1 noun sense
    const auto f = toks("collapse");
    EXPECT_EQ(infer_pos(f, 0, wn), PosTag::noun);  // tie 1:1 -> noun first
    const auto g = toks("xyzzy");
    EXPECT_EQ(infer_pos(g, 0, wn), PosTag::noun);  // total: no senses anywhere
    EXPECT_THROW(infer_pos(g, 3, wn), IndexError);
}

TEST(InferPos, TotalOnRandomTokens) {
    std::mt19937_64 rng(4);
    const std::vector<std::string> pool = {"the", "to", "bank", "quickly", "run", "a", "was", "zz", "early", ","};
    for (int t = 0; t < 500; ++t) {
        std::vector<std::string> option(1 + rng() % 6);
        for (auto& w : option) w = pool[rng() % pool.size()];
        const PosTag p = infer_pos(option, rng() % option.size(), mini());
        EXPECT_TRUE(std::find(std::begin(kAllPos), std::end(kAllPos), p) != std::end(kAllPos));
    }
}

TEST(Definitions, BuildText) {
    const WordNet& wn = mini();
    EXPECT_EQ(build_definition_text("xyzzy", PosTag::noun, wn), "");
    EXPECT_EQ(build_definition_text("bank", PosTag::noun, wn, 1),
              "sloping land (especially the slope beside a body of water)");
    EXPECT_EQ(build_definition_text("bank", PosTag::noun, wn, 2),
              "sloping land (especially the slope beside a body of water); "
              "a financial institution that accepts deposits");
    EXPECT_EQ(build_definition_text("bank", PosTag::noun, wn, 3, 4), "sloping land (especially");
    EXPECT_THROW(build_definition_text("bank", PosTag::noun, wn, 0), ParameterError);
}

TEST(Definitions, EnrichInstance) {
    data::Instance inst;
    inst.id = "x";
    inst.passage = "p";
    inst.question = "They walked along the @placeholder at dawn .";
    inst.candidates = {"bank", "xyzzy", "ice cream", "banks", "quickly"};
    enrich_instance(inst, mini());
    ASSERT_EQ(inst.definitions.size(), 5u);
    EXPECT_EQ(inst.pos[0], "noun");
    EXPECT_EQ(inst.definitions[0].rfind("sloping land", 0), 0u);
    EXPECT_EQ(inst.definitions[1], "");
    EXPECT_EQ(inst.pos[1], "noun");
    EXPECT_EQ(inst.definitions[2], "frozen dessert containing cream and sugar and flavoring");
    EXPECT_EQ(inst.definitions[3], inst.definitions[0]);
    // rule 1 fires before rule 3, so "quickly" is looked up as a noun and has no senses
    EXPECT_EQ(inst.pos[4], "noun");
    EXPECT_EQ(inst.definitions[4], "");
}

TEST(RoundTrip, FixtureIndexResolves) {
    const WordNet& wn = mini();
    for (const auto& e : wn.index())
        for (auto off : e.synset_offsets) {
            const auto& s = wn.data(e.pos).at(off);
            EXPECT_NE(std::find(s.words.begin(), s.words.end(), e.lemma), s.words.end()) << e.lemma;
        }
}

// ---- Full WordNet 3.0 distribution -----------------------------------------

TEST(RealWordNet, BankEntries) {
    REQUIRE_REAL_WORDNET();
    const WordNet& wn = real();
    const auto& g = wn.senses("bank", PosTag::noun);
    ASSERT_EQ(g.size(), 10u);
    EXPECT_EQ(wn.senses("bank", PosTag::verb).size(), 8u);
    EXPECT_EQ(g[0], "sloping land (especially the slope beside a body of water)");
    const auto& s = wn.data(PosTag::noun).at(9213565);
    ASSERT_FALSE(s.examples.empty());
    EXPECT_EQ(s.examples[0], "they pulled the canoe up on the bank");
    EXPECT_EQ(build_definition_text("bank", PosTag::noun, wn, 2), g[0] + "; " + g[1]);
}

TEST(RealWordNet, MorphyAndPos) {
    REQUIRE_REAL_WORDNET();
    const WordNet& wn = real();
    // "banks" is itself an indexed noun (the surname), so it follows the suffix result.
    EXPECT_EQ(wn.base_forms("banks", PosTag::noun), (std::vector<std::string>{"bank", "banks"}));
    const auto running = wn.base_forms("running", PosTag::verb);
    ASSERT_FALSE(running.empty());
    EXPECT_EQ(running.front(), "run");
    EXPECT_EQ(wn.base_forms("quickly", PosTag::adverb), std::vector<std::string>{"quickly"});
    EXPECT_EQ(infer_pos(toks("bank"), 0, wn), PosTag::noun);
    EXPECT_EQ(infer_pos(toks("he moved quickly"), 2, wn), PosTag::adverb);
}

TEST(RealWordNet, RandomIndexEntriesRoundTrip) {
    REQUIRE_REAL_WORDNET();
    const WordNet& wn = real();
    std::mt19937_64 rng(17);
    for (int t = 0; t < 100; ++t) {
        const auto& e = wn.index()[rng() % wn.index().size()];
        for (auto off : e.synset_offsets) {
            const auto& words = wn.data(e.pos).at(off).words;
            EXPECT_NE(std::find(words.begin(), words.end(), e.lemma), words.end()) << e.lemma;
        }
    }
}
