#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bsg/baselines.hpp"
#include "bsg/bsg.hpp"
#include "bsg/gradcheck.hpp"
#include "support.hpp"

using namespace bsg;

TEST(SkipGram, LossWithZeroVectorsIsTwoLog2) {
    SgModel<double> m{Matrix<double>(3, 2), Matrix<double>(3, 2)};
    const std::vector<WordId> pos{1}, neg{2};
    EXPECT_NEAR(sg_window_loss(m, 0, pos, neg), 1.386294, 1e-6);
}

TEST(SkipGram, LossHandComputed) {
    SgModel<double> m{Matrix<double>(3, 1), Matrix<double>(3, 1)};
    m.input(0, 0) = 1.0;
    m.output(1, 0) = 2.0;
    m.output(2, 0) = -1.0;
    const std::vector<WordId> pos{1}, neg{2};
    // -log s(2) - log s(1)
    EXPECT_NEAR(sg_window_loss(m, 0, pos, neg), std::log1p(std::exp(-2.0)) + std::log1p(std::exp(-1.0)), 1e-12);
}

TEST(SkipGram, StableLogSigmoid) {
    EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-9);
    EXPECT_NEAR(log_sigmoid(800.0), 0.0, 1e-12);
    EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
}

TEST(SkipGram, GradientsMatchFiniteDifferences) {
    Rng rng(41);
    for (int i = 0; i < 30; ++i) EXPECT_LT(gradcheck::check_sg(gradcheck::random_sg_case(rng)).max_rel_error, 1e-4);
}

TEST(W2g, ExpectedLikelihoodEnergy) {
    const auto a = Gaussian::spherical({0.0}, std::log(0.5));
    EXPECT_NEAR(w2g_energy(a, a, Energy::expected_likelihood), -0.918939, 1e-6);
    const auto b = Gaussian::spherical({1.0}, std::log(0.5));
    EXPECT_NEAR(w2g_energy(a, b, Energy::expected_likelihood), -1.418939, 1e-6);
}

TEST(W2g, NegatedKlEnergyScoresContextFromWord) {
    const auto w = Gaussian::spherical({0.0}, std::log(4.0));
    const auto c = Gaussian::spherical({0.0}, 0.0);
    EXPECT_NEAR(w2g_energy(w, c, Energy::negated_kl), -kl_divergence(c, w), 1e-15);
    EXPECT_NEAR(w2g_energy(w, c, Energy::negated_kl), -0.318147, 1e-6);
}

TEST(W2g, HingeLossHandComputed) {
    W2gModel<double> m;
    m.mean = Matrix<double>(3, 1);
    m.log_var = Matrix<double>(3, 1, std::log(0.5));
    m.mean(2, 0) = 1.0;
    const std::vector<WordId> pos{1}, neg{2};
    // margin - E(w, c) + E(w, n) = 1 - (-0.918939) + (-1.418939)
    EXPECT_NEAR(w2g_window_loss(m, 0, pos, neg, 1.0), 0.5, 1e-9);
    EXPECT_NEAR(w2g_window_loss(m, 0, pos, neg, 0.25), 0.0, 1e-12);
}

TEST(W2g, GradientsMatchFiniteDifferences) {
    Rng rng(43);
    for (int i = 0; i < 30; ++i) EXPECT_LT(gradcheck::check_w2g(gradcheck::random_w2g_case(rng)).max_rel_error, 1e-4);
}

TEST(W2g, ClippingIsIdempotentAndWithinBounds) {
    TrainConfig cfg;
    cfg.dim = 3;
    cfg.cov = CovKind::diagonal;
    Rng rng(1);
    auto m = W2gModel<float>::init(4, cfg, rng);
    m.mean(0, 0) = 100.0f;
    m.mean(0, 1) = -50.0f;
    m.log_var(1, 0) = -30.0f;
    m.log_var(2, 2) = 30.0f;
    EXPECT_FALSE(within_clip_bounds(m));
    const auto once = clip_params(m);
    EXPECT_TRUE(within_clip_bounds(once));
    EXPECT_NEAR(std::hypot(once.mean(0, 0), once.mean(0, 1), once.mean(0, 2)), cfg.clip_mean_norm, 1e-3);
    EXPECT_NEAR(std::exp(once.log_var(1, 0)), cfg.var_lo, 1e-6);
    EXPECT_NEAR(std::exp(once.log_var(2, 2)), cfg.var_hi, 1e-4);
    EXPECT_TRUE(clip_params(once) == once);
    // rows already inside the bounds are untouched
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(once.mean(3, i), m.mean(3, i));
}

TEST(Baselines, TrainOnSharedStream) {
    const auto d = fixture::make_synth(oracle::polysemy_spec(2, 2, 20000, 5));
    auto cfg = fixture::desk_config(3);
    cfg.epochs = 3;

    TrainStats s_sg, s_w2g, s_w2g_diag, s_bsg;
    train_sg<float>(d.corpus, d.vocab, cfg, fixture::stats_hook(s_sg));
    const auto w2g = train_w2g<float>(d.corpus, d.vocab, cfg, fixture::stats_hook(s_w2g));
    EXPECT_TRUE(within_clip_bounds(w2g));
    cfg.cov = CovKind::diagonal;
    const auto w2g_diag = train_w2g<float>(d.corpus, d.vocab, cfg, fixture::stats_hook(s_w2g_diag));
    EXPECT_TRUE(within_clip_bounds(w2g_diag));
    cfg.cov = CovKind::spherical;
    train_bsg<float>(d.corpus, d.vocab, cfg, fixture::stats_hook(s_bsg));

    for (const auto* s : {&s_sg, &s_w2g, &s_w2g_diag, &s_bsg}) {
        for (double l : s->batch_loss) ASSERT_TRUE(std::isfinite(l));
        EXPECT_LT(s->epoch_mean_loss.back(), s->epoch_mean_loss.front());
        EXPECT_EQ(s->stream_fingerprint, s_bsg.stream_fingerprint);
        EXPECT_EQ(s->examples_seen, s_bsg.examples_seen);
    }
}

TEST(Baselines, DefaultLearningRates) {
    EXPECT_DOUBLE_EQ(default_learning_rate(ModelKind::bsg, CovKind::spherical), 0.00055);
    EXPECT_DOUBLE_EQ(default_learning_rate(ModelKind::w2g, CovKind::spherical), 0.0065);
    EXPECT_DOUBLE_EQ(default_learning_rate(ModelKind::w2g, CovKind::diagonal), 0.0015);
    EXPECT_DOUBLE_EQ(default_learning_rate(ModelKind::sg, CovKind::spherical), 0.0015);
}
