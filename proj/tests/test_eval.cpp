#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bsg/datasets.hpp"
#include "bsg/eval.hpp"
#include "bsg/inspect.hpp"

using namespace bsg;

namespace {

Vocabulary vocab_of(std::vector<std::string> words) {
    std::vector<std::uint64_t> counts;
    for (std::size_t i = 0; i < words.size(); ++i) counts.push_back(100 - i);
    return Vocabulary(std::move(words), std::move(counts), 1e-4, 1.0);
}

// 1-D spherical table with the given means and log-variances.
DensityTable table_1d(const std::vector<double>& means, const std::vector<double>& lvs) {
    DensityTable t;
    t.mean = Matrix<double>(means.size(), 1);
    t.log_var = Matrix<double>(means.size(), 1);
    for (std::size_t i = 0; i < means.size(); ++i) {
        t.mean(i, 0) = means[i];
        t.log_var(i, 0) = lvs[i];
    }
    t.has_variance = true;
    return t;
}

DensityTable point_table(const std::vector<std::vector<double>>& rows) {
    DensityTable t;
    t.mean = Matrix<double>(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) t.mean(i, j) = rows[i][j];
    return t;
}

} // namespace

TEST(Correlation, HandComputed) {
    const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
    EXPECT_NEAR(spearman(a, b), 0.8, 1e-12);
    const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
    EXPECT_NEAR(pearson(x, y), 0.981981, 1e-6);
    const std::vector<double> rev{4, 3, 2, 1};
    EXPECT_NEAR(spearman(a, rev), -1.0, 1e-12);
}

TEST(Correlation, TiesGetAverageRanks) {
    const std::vector<double> x{10, 20, 20, 30};
    EXPECT_EQ(detail::average_ranks(x), (std::vector<double>{1, 2.5, 2.5, 4}));
    const std::vector<double> y{1, 2, 3, 4};
    EXPECT_NEAR(spearman(x, y), pearson(std::vector<double>{1, 2.5, 2.5, 4}, y), 1e-15);
}

TEST(Correlation, UndefinedCases) {
    const std::vector<double> c{1, 1, 1}, v{1, 2, 3}, shorter{1, 2};
    EXPECT_THROW(spearman(c, v), DataError);
    EXPECT_THROW(pearson(v, shorter), DataError);
    EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), DataError);
}

TEST(Similarity, SkipsOovAndCorrelates) {
    const auto vocab = vocab_of({"a", "b", "c", "d"});
    const auto t = point_table({{1, 0}, {1, 0.1}, {0, 1}, {-1, 0}});
    const std::vector<SimilarityPair> pairs{{"a", "b", 9.0}, {"a", "c", 5.0}, {"a", "d", 1.0}, {"a", "zz", 3.0}};
    const auto r = eval_similarity(t, vocab, pairs);
    EXPECT_EQ(r.used, 3u);
    EXPECT_EQ(r.oov, 1u);
    EXPECT_NEAR(r.rho, 1.0, 1e-12);
}

TEST(Entailment, BestF1Threshold) {
    const std::vector<double> s{0.1, 0.2, 0.4, 0.5, 0.6};
    const std::vector<bool> l{false, false, true, true, false};
    const auto r = best_f1_threshold(s, l);
    EXPECT_NEAR(r.f1, 0.8, 1e-12);
    EXPECT_NEAR(r.threshold, 0.3, 1e-12);
}

TEST(Entailment, BestF1TiesPickLowestThresholdAndNeedPositives) {
    const std::vector<double> s{0.0, 1.0};
    const std::vector<bool> l{true, true};
    const auto r = best_f1_threshold(s, l);
    EXPECT_NEAR(r.f1, 1.0, 1e-12);
    EXPECT_EQ(r.threshold, -std::numeric_limits<double>::infinity());
    EXPECT_THROW(best_f1_threshold(s, std::vector<bool>{false, false}), DataError);
    EXPECT_THROW(best_f1_threshold(s, std::vector<bool>{true}), DataError);
}

TEST(Entailment, ScoresAndHistogram) {
    const auto vocab = vocab_of({"animal", "dog", "cat"});
    // broad "animal", narrow "dog" / "cat"
    const auto t = table_1d({0.0, 0.1, -0.1}, {1.0, -1.0, -1.0});
    const std::vector<EntailmentPair> pairs{{"dog", "animal", true}, {"animal", "dog", false}, {"cat", "animal", true},
                                            {"dog", "unicorn", true}};
    const auto r = eval_entailment(t, vocab, pairs, EntailMeasure::neg_kl);
    EXPECT_EQ(r.used, 3u);
    EXPECT_EQ(r.oov, 1u);
    EXPECT_NEAR(r.f1, 1.0, 1e-12);
    EXPECT_NEAR(r.scores[0], -kl_divergence(t.density(1), t.density(0)), 1e-15);

    std::ostringstream out;
    write_score_histogram(r, 2, out);
    const auto csv = out.str();
    EXPECT_EQ(csv.rfind("bin_lo,bin_hi,positive,negative\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Entailment, PointEmbeddingsNeedCosine) {
    const auto vocab = vocab_of({"a", "b"});
    const auto t = point_table({{1, 0}, {0, 1}});
    const std::vector<EntailmentPair> pairs{{"a", "b", true}};
    EXPECT_THROW(eval_entailment(t, vocab, pairs, EntailMeasure::neg_kl), UsageError);
    EXPECT_NO_THROW(eval_entailment(t, vocab, pairs, EntailMeasure::cosine));
}

TEST(Directionality, KlAsymmetryPredictsDirection) {
    const auto vocab = vocab_of({"animal", "dog", "cat"});
    const auto t = table_1d({0.0, 0.1, -0.1}, {1.0, -1.0, -1.0});
    const std::vector<EntailmentPair> pairs{{"dog", "animal", true}, {"cat", "animal", true}, {"animal", "dog", false},
                                            {"x", "animal", true}};
    const auto r = eval_directionality(t, vocab, pairs);
    EXPECT_EQ(r.used, 2u);
    EXPECT_EQ(r.skipped, 2u);
    EXPECT_NEAR(r.accuracy, 1.0, 1e-12);
    // KL[dog||animal] < KL[animal||dog]
    EXPECT_TRUE(predict_forward_kl(t, 1, 0));
    EXPECT_FALSE(predict_forward_kl(t, 0, 1));
}

TEST(Directionality, FrequencyBaseline) {
    // counts decrease with id: animal is most frequent
    const auto vocab = vocab_of({"animal", "dog", "cat"});
    const std::vector<EntailmentPair> pairs{{"dog", "animal", true}, {"animal", "cat", true}};
    const auto r = frequency_direction_baseline(vocab, pairs);
    EXPECT_EQ(r.used, 2u);
    EXPECT_NEAR(r.accuracy, 0.5, 1e-12);
}

TEST(Lexsub, GapHandComputed) {
    const std::vector<double> ranked{2, 0, 1}, all{2, 1};
    EXPECT_NEAR(gap(ranked, all), 0.857142857, 1e-9);
    const std::vector<double> ideal{2, 1, 0};
    EXPECT_NEAR(gap(ideal, all), 1.0, 1e-15);
    // a gold word missing from the ranking lowers the score
    const std::vector<double> missing{2, 0}, with_extra{2, 1, 3};
    EXPECT_LT(gap(missing, with_extra), gap(missing, all));
    EXPECT_THROW(gap(ranked, std::vector<double>{0, 0}), DataError);
}

TEST(Lexsub, KlRankingHandComputed) {
    // zero encoder: q = N(0, 1); prior(s1) = N(0.5, 1), prior(s2) = N(2, 1)
    const auto vocab = vocab_of({"t", "ctx", "s1", "s2"});
    TrainConfig cfg;
    cfg.dim = 1;
    cfg.hidden = 1;
    auto m = BsgModel<double>::zeros(4, cfg);
    m.prior_mean(2, 0) = 0.5;
    m.prior_mean(3, 0) = 2.0;
    LexsubInstance inst{"t", 1, {"ctx", "t", "oov"}, {"s2", "nope", "s1"}, {{"s1", 3.0}, {"s2", 1.0}}};
    const auto ranked = lexsub_rank(m, vocab, inst, 5);
    ASSERT_EQ(ranked.size(), 3u);
    EXPECT_EQ(ranked[0].word, "s1");
    EXPECT_NEAR(ranked[0].score, 0.125, 1e-12);
    EXPECT_EQ(ranked[1].word, "s2");
    EXPECT_NEAR(ranked[1].score, 2.0, 1e-12);
    EXPECT_EQ(ranked[2].word, "nope");
    EXPECT_FALSE(ranked[2].in_vocab);
    EXPECT_NEAR(instance_gap(ranked, inst), 1.0, 1e-15);
}

TEST(Lexsub, AddAndMultBaselines) {
    const auto vocab = vocab_of({"t", "c", "s"});
    const auto table = point_table({{1, 0}, {-1, 0}, {0, 1}});
    LexsubInstance inst{"t", 0, {"t", "c"}, {"s"}, {{"s", 1.0}}};
    EXPECT_NEAR(add_mult_baseline(table, vocab, inst, 5, SubstMode::add)[0].score, 0.0, 1e-15);
    EXPECT_NEAR(add_mult_baseline(table, vocab, inst, 5, SubstMode::mult)[0].score, 0.5, 1e-15);
    EXPECT_THROW(parse_subst_mode("geo"), UsageError);
}

TEST(Lexsub, EvalSkipsUnusableInstances) {
    const auto vocab = vocab_of({"t", "c", "s"});
    const auto table = point_table({{1, 0}, {-1, 0}, {0, 1}});
    const std::vector<LexsubInstance> insts{
        {"t", 0, {"t", "c"}, {"s"}, {{"s", 1.0}}},
        {"zz", 0, {"zz", "c"}, {"s"}, {{"s", 1.0}}},  // OOV target
        {"t", 0, {"t", "c"}, {"q"}, {{"q", 1.0}}},    // no known candidate
    };
    const auto r = eval_lexsub(std::span<const LexsubInstance>(insts),
                               [&](const LexsubInstance& i) { return add_mult_baseline(table, vocab, i, 5, SubstMode::add); });
    EXPECT_EQ(r.used, 1u);
    EXPECT_EQ(r.skipped, 2u);
    EXPECT_NEAR(r.mean_gap, 1.0, 1e-15);
}

TEST(Lexsub, InstanceValidation) {
    LexsubInstance bad{"t", 3, {"a"}, {"s"}, {{"s", 1.0}}};
    EXPECT_THROW(bad.validate(), DataError);
    LexsubInstance mism{"t", 0, {"a"}, {"s"}, {{"s", 1.0}}};
    EXPECT_THROW(mism.validate(), DataError);
    LexsubInstance nogold{"t", 0, {"t"}, {"s"}, {{"s", 0.0}}};
    EXPECT_THROW(nogold.validate(), DataError);
}

TEST(Logdet, ReportAndCsv) {
    const auto vocab = vocab_of({"a", "b", "c"});
    const auto t = table_1d({0, 0, 0}, {2.0, 1.0, 0.0});
    const auto rep = logdet_frequency_report(t, vocab);
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_DOUBLE_EQ(rep.rows[0].log_count, std::log(100.0));
    ASSERT_TRUE(rep.pearson_r);
    EXPECT_GT(*rep.pearson_r, 0.99);
    std::ostringstream out;
    write_logdet_csv(rep, out);
    EXPECT_EQ(out.str().rfind("word,log_count,log_det_cov\n", 0), 0u);
    EXPECT_NE(out.str().find("# pearson_r,"), std::string::npos);

    const auto flat = table_1d({0, 0, 0}, {1.0, 1.0, 1.0});
    const auto undefined = logdet_frequency_report(flat, vocab);
    EXPECT_FALSE(undefined.pearson_r);
    std::ostringstream out2;
    write_logdet_csv(undefined, out2);
    EXPECT_NE(out2.str().find("# pearson_r,undefined"), std::string::npos);
}

TEST(Datasets, ReadersParseAndReportLines) {
    std::istringstream sim("# comment\nTiger\tcat\t7.35\n\nbook paper\n");
    EXPECT_THROW(read_similarity(sim), DataError);
    std::istringstream sim_ok("# comment\nTiger\tcat\t7.35\r\n\nbook\tpaper\t7.46\n");
    const auto s = read_similarity(sim_ok);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].word1, "tiger");
    EXPECT_DOUBLE_EQ(s[1].gold, 7.46);

    std::istringstream ent("dog\tanimal\t1\nanimal\tdog\t0\n");
    const auto e = read_entailment(ent);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_TRUE(e[0].label);
    std::istringstream ent_bad("dog\tanimal\t1\ndog\tcat\t2\n");
    try {
        read_entailment(ent_bad);
        FAIL();
    } catch (const DataError& err) {
        EXPECT_NE(std::string(err.what()).find(":2"), std::string::npos) << err.what();
    }

    std::istringstream lex(
        R"({"target":"bright","target_index":1,"context_tokens":["a","bright","child"],"candidates":["smart","shiny"],"gold_weights":{"smart":3,"shiny":1}})"
        "\n");
    const auto l = read_lexsub(lex);
    ASSERT_EQ(l.size(), 1u);
    EXPECT_EQ(l[0].candidates.size(), 2u);
    EXPECT_DOUBLE_EQ(l[0].gold_weights.at("smart"), 3.0);
    std::istringstream lex_bad("{\"target\": 1}\n");
    EXPECT_THROW(read_lexsub(lex_bad), DataError);
}

TEST(Inspect, NearestNeighbours) {
    const auto vocab = vocab_of({"a", "b", "c", "d"});
    const auto t = point_table({{1, 0}, {1, 0.1}, {0, 1}, {1, 0.1}});
    const auto n = nearest(t, vocab, "a", 2, NearMeasure::cosine_mean);
    ASSERT_EQ(n.size(), 2u);
    EXPECT_EQ(n[0].word, "b");  // tie with d broken by id
    EXPECT_EQ(n[1].word, "d");
    EXPECT_THROW(nearest(t, vocab, "zz", 2, NearMeasure::cosine_mean), DataError);
    EXPECT_THROW(nearest(t, vocab, "a", 2, NearMeasure::neg_kl), UsageError);
    EXPECT_EQ(nearest(t, vocab, "a", 10, NearMeasure::cosine_mean).size(), 3u);
}
