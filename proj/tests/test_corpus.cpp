#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "bsg/corpus.hpp"
#include "bsg/random.hpp"

using namespace bsg;

namespace {

Vocabulary small_vocab(double t = 1.0, double neg_exp = 1.0) {
    std::istringstream in("a b a c a b\nd a\n");
    VocabParams p;
    p.subsample_t = t;
    p.neg_exponent = neg_exp;
    return build_vocabulary(count_tokens(in), p);
}

} // namespace

TEST(Corpus, TokenizeSplitsOnWhitespaceAndLowercasesAscii) {
    EXPECT_EQ(tokenize("  The\tCat  SAT\n"), (std::vector<std::string>{"the", "cat", "sat"}));
    EXPECT_EQ(tokenize("The Cat", false), (std::vector<std::string>{"The", "Cat"}));
    // multi-byte sequences pass through untouched
    EXPECT_EQ(tokenize("Ünï"), (std::vector<std::string>{"Ünï"}));
    EXPECT_TRUE(tokenize("   ").empty());
}

TEST(Corpus, Utf8Validation) {
    EXPECT_FALSE(find_invalid_utf8("plain ascii"));
    EXPECT_FALSE(find_invalid_utf8("caf\xc3\xa9"));
    EXPECT_EQ(find_invalid_utf8("ab\xff"), 2u);
    EXPECT_EQ(find_invalid_utf8("x\xc0\xaf"), 1u);  // overlong
    EXPECT_EQ(find_invalid_utf8("\xed\xa0\x80"), 0u);  // surrogate
    EXPECT_EQ(find_invalid_utf8("ok\xe2\x82"), 2u);  // truncated
}

TEST(Corpus, InvalidUtf8ReportsByteOffset) {
    std::istringstream in("abc\nde\xff");
    try {
        count_tokens(in);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("byte offset 6"), std::string::npos) << e.what();
    }
}

TEST(Corpus, VocabularyOrderedByCountWithFirstSeenTies) {
    const auto v = small_vocab();
    EXPECT_EQ(v.words(), (std::vector<std::string>{"a", "b", "c", "d"}));
    EXPECT_EQ(v.counts(), (std::vector<std::uint64_t>{4, 2, 1, 1}));
    EXPECT_EQ(v.total_count(), 8u);
    EXPECT_DOUBLE_EQ(v.unigram_prob(0), 0.5);
    EXPECT_EQ(v.id_of("c"), 2u);
    EXPECT_FALSE(v.lookup("zzz"));
    EXPECT_THROW(v.id_of("zzz"), DataError);
}

TEST(Corpus, VocabularyCapsAndMinCount) {
    std::istringstream in("a b a c a b\nd a\n");
    VocabParams p;
    p.max_size = 2;
    auto v = build_vocabulary(count_tokens(in), p);
    EXPECT_EQ(v.size(), 2u);
    std::istringstream in2("a b a c a b\nd a\n");
    p.max_size = 100;
    p.min_count = 2;
    v = build_vocabulary(count_tokens(in2), p);
    EXPECT_EQ(v.words(), (std::vector<std::string>{"a", "b"}));
    p.min_count = 100;
    std::istringstream in3("a b");
    EXPECT_THROW(build_vocabulary(count_tokens(in3), p), DataError);
    std::istringstream empty("");
    EXPECT_THROW(build_vocabulary(count_tokens(empty), VocabParams{}), DataError);
}

TEST(Corpus, ShardedCountsMergeToSequentialCounts) {
    const std::vector<std::string> toks{"x", "y", "x", "z", "y", "x", "w"};
    VocabCounter whole, left, right;
    for (const auto& t : toks) whole.add(t);
    for (std::size_t i = 0; i < 3; ++i) left.add(toks[i]);
    for (std::size_t i = 3; i < toks.size(); ++i) right.add(toks[i]);
    left.merge(right);
    EXPECT_EQ(left.words(), whole.words());
    EXPECT_EQ(left.counts(), whole.counts());
    EXPECT_EQ(left.total(), whole.total());
}

TEST(Corpus, SubsamplingKeepProbability) {
    // f(a) = 0.5: keep = sqrt(t/f)
    const auto v = small_vocab(0.125);
    EXPECT_NEAR(v.keep_prob(0), 0.5, 1e-12);
    EXPECT_NEAR(v.keep_prob(2), 1.0, 1e-12);  // f = 0.125 <= t
    const auto keep_all = small_vocab(1.0);
    for (WordId w = 0; w < keep_all.size(); ++w) EXPECT_EQ(keep_all.keep_prob(w), 1.0);
}

TEST(Corpus, SubsampleStreamRateMatchesKeepProbability) {
    const auto v = small_vocab(0.125);
    std::vector<WordId> stream(20000, 0);
    Rng rng(5);
    const auto kept = subsample_stream(stream, v, rng);
    EXPECT_NEAR(static_cast<double>(kept.size()) / 20000.0, 0.5, 0.02);
}

TEST(Corpus, NegativeSamplingFollowsPoweredUnigram) {
    const auto v = small_vocab(1.0, 1.0);
    Rng rng(9);
    std::vector<double> freq(v.size(), 0.0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) freq[v.sample_negative(rng)] += 1.0 / n;
    for (WordId w = 0; w < v.size(); ++w) EXPECT_NEAR(freq[w], v.unigram_prob(w), 0.01);

    // exponent 0 is uniform
    const auto flat = small_vocab(1.0, 0.0);
    std::vector<double> f0(flat.size(), 0.0);
    for (int i = 0; i < n; ++i) f0[flat.sample_negative(rng)] += 1.0 / n;
    for (double f : f0) EXPECT_NEAR(f, 0.25, 0.01);
}

TEST(Corpus, VocabularyRoundTripAndValidation) {
    const auto v = small_vocab(0.01, 0.75);
    std::stringstream buf;
    save_vocabulary(v, buf);
    EXPECT_EQ(buf.str(), "a\t4\nb\t2\nc\t1\nd\t1\n");
    const auto back = load_vocabulary(buf, 0.01, 0.75);
    EXPECT_EQ(back, v);

    std::istringstream bad("a\t1\nb\t2\n");
    EXPECT_THROW(load_vocabulary(bad, 1e-4, 1.0), DataError);
    std::istringstream bad2("a 1\n");
    EXPECT_THROW(load_vocabulary(bad2, 1e-4, 1.0), DataError);
    std::istringstream bad3("a\t1x\n");
    EXPECT_THROW(load_vocabulary(bad3, 1e-4, 1.0), DataError);
    EXPECT_THROW(Vocabulary({"a", "a"}, {1, 1}, 1e-4, 1.0), DataError);
    EXPECT_THROW(Vocabulary({"a"}, {1}, 0.0, 1.0), UsageError);
}

TEST(Corpus, ReadCorpusDropsOovTokens) {
    const auto v = small_vocab();
    std::istringstream in("a zz b\n\nc D\n");
    const auto c = read_corpus(in, v);
    ASSERT_EQ(c.docs.size(), 3u);
    EXPECT_EQ(c.docs[0], (std::vector<WordId>{0, 1}));
    EXPECT_TRUE(c.docs[1].empty());
    EXPECT_EQ(c.docs[2], (std::vector<WordId>{2, 3}));
    EXPECT_EQ(c.tokens(), 4u);
}

TEST(Corpus, WindowExtraction) {
    const std::vector<WordId> toks{10, 11, 12, 13};
    const auto ws = extract_windows(toks, 1);
    ASSERT_EQ(ws.size(), 4u);
    EXPECT_EQ(ws[0].center, 10u);
    EXPECT_EQ(ws[0].contexts, (std::vector<WordId>{11}));
    EXPECT_EQ(ws[1].contexts, (std::vector<WordId>{10, 12}));
    EXPECT_EQ(ws[3].contexts, (std::vector<WordId>{12}));

    const auto wide = extract_windows(toks, 5);
    EXPECT_EQ(wide[2].contexts, (std::vector<WordId>{10, 11, 13}));

    // a single token has no context and yields no window
    const std::vector<WordId> one{7};
    EXPECT_TRUE(extract_windows(one, 5).empty());
    EXPECT_THROW(extract_windows(toks, 0), UsageError);
}

TEST(Corpus, RngStreamsAreReproducible) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
    Rng c(1);
    double s = 0.0, s2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = c.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.02);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}
