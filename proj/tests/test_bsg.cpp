#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bsg/bsg.hpp"
#include "bsg/gradcheck.hpp"
#include "bsg/oracles.hpp"
#include "support.hpp"

using namespace bsg;

namespace {

TrainConfig one_dim() {
    TrainConfig c;
    c.dim = 1;
    c.hidden = 1;
    return c;
}

// Zero encoder => posterior N(0, 1). Word 2 gets context density N(1, 1).
BsgModel<double> unit_model(std::size_t vocab = 3) {
    auto m = BsgModel<double>::zeros(vocab, one_dim());
    m.ctx_mean(2, 0) = 1.0;
    return m;
}

} // namespace

TEST(Bsg, WindowLossHingeHandComputed) {
    const auto m = unit_model();
    auto cfg = one_dim();
    const std::vector<WordId> pos{1}, neg{2};
    // KL[q||c1] = 0, KL[q||c2] = 0.5, KL[q||prior] = 0
    cfg.margin = 1.0;
    EXPECT_NEAR(window_loss(m, 0, pos, neg, cfg), 0.5, 1e-12);
    cfg.margin = 0.25;
    EXPECT_NEAR(window_loss(m, 0, pos, neg, cfg), 0.0, 1e-12);
    // swapped roles: 0.5 - 0 + 1
    cfg.margin = 1.0;
    EXPECT_NEAR(window_loss(m, 0, neg, pos, cfg), 1.5, 1e-12);
}

TEST(Bsg, WindowLossSoftAndPrior) {
    auto m = unit_model();
    m.prior_mean(0, 0) = 2.0;  // KL[N(0,1)||N(2,1)] = 2
    auto cfg = one_dim();
    cfg.objective = Objective::soft;
    const std::vector<WordId> pos{1}, neg{2};
    EXPECT_NEAR(window_loss(m, 0, pos, neg, cfg), -0.5 + 2.0, 1e-12);
}

TEST(Bsg, PairingSchemes) {
    const auto m = unit_model(4);
    auto cfg = one_dim();
    cfg.objective = Objective::soft;
    const std::vector<WordId> pos{1, 3}, neg{2, 2};
    // matched: (1,2) + (3,2) = -1; all pairs: 4 * -0.5 = -2
    cfg.pairing = Pairing::matched;
    EXPECT_NEAR(window_loss(m, 0, pos, neg, cfg), -1.0, 1e-12);
    cfg.pairing = Pairing::all_pairs;
    EXPECT_NEAR(window_loss(m, 0, pos, neg, cfg), -2.0, 1e-12);
}

TEST(Bsg, WindowValidation) {
    const auto m = unit_model();
    const auto cfg = one_dim();
    const std::vector<WordId> none, pos{1}, neg{2}, bad{7};
    EXPECT_THROW(window_loss(m, 0, none, neg, cfg), DataError);
    EXPECT_THROW(window_loss(m, 0, pos, bad, cfg), DataError);
    EXPECT_THROW(window_loss(m, 9, pos, neg, cfg), DataError);
}

TEST(Bsg, TiedTables) {
    auto cfg = one_dim();
    cfg.tie_prior_context = true;
    cfg.tie_encoder_embeddings = true;
    Rng rng(2);
    const auto m = BsgModel<double>::init(5, cfg, rng);
    EXPECT_TRUE(m.ctx_mean.empty());
    EXPECT_TRUE(m.enc.R.empty());
    EXPECT_EQ(&m.embeddings(), &m.prior_mean);
    EXPECT_EQ(m.context(3).mean.data(), m.prior(3).mean.data());
}

TEST(Bsg, GradientsMatchFiniteDifferences) {
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
        const auto c = gradcheck::random_bsg_case(rng);
        const auto r = gradcheck::check_bsg(c);
        EXPECT_LT(r.max_rel_error, 1e-4) << "case " << i << " objective " << to_string(c.cfg.objective) << " cov "
                                         << to_string(c.cfg.cov);
    }
}

TEST(Bsg, ReparameterizeHandComputed) {
    const auto g = Gaussian::spherical({1.0}, std::log(4.0));
    const std::vector<double> eps{0.5};
    EXPECT_NEAR(reparameterize(g, eps)[0], 2.0, 1e-12);
}

TEST(Bsg, ElboUniformCase) {
    // all densities N(0,1), q = prior: ELBO = 2 log(1/4)
    const auto m = BsgModel<double>::zeros(4, one_dim());
    const std::vector<double> unigram(4, 0.25);
    const std::vector<WordId> ctx{1, 2};
    Rng rng(1);
    const auto e = elbo_estimate(m, unigram, 0, ctx, 50, rng);
    EXPECT_NEAR(e.value, -2.772589, 1e-6);
    EXPECT_NEAR(e.std_error, 0.0, 1e-12);
    EXPECT_NEAR(oracle::marginal_loglik_oracle(m, unigram, 0, ctx), -2.772589, 1e-6);
}

TEST(Bsg, ElboBelowMarginalLikelihood) {
    TrainConfig cfg = one_dim();
    cfg.hidden = 3;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(seed);
        auto m = BsgModel<double>::init(8, cfg, rng);
        for (auto& v : m.ctx_mean.flat()) v = rng.normal();
        for (auto& v : m.prior_lv.flat()) v = rng.uniform(-1, 1);
        std::vector<double> unigram(8, 1.0 / 8);
        const std::vector<WordId> ctx{1, 4, 6};
        const auto e = elbo_estimate(m, unigram, 2, ctx, 20000, rng);
        const double logp = oracle::marginal_loglik_oracle(m, unigram, 2, ctx);
        EXPECT_LE(e.value, logp + 5 * e.std_error) << "seed " << seed;
    }
}

TEST(Bsg, ElboRefusesLargeVocabulary) {
    const auto m = BsgModel<double>::zeros(kElboMaxVocab + 1, one_dim());
    const std::vector<double> unigram(kElboMaxVocab + 1, 1.0 / (kElboMaxVocab + 1));
    const std::vector<WordId> ctx{1};
    Rng rng(1);
    EXPECT_THROW(elbo_estimate(m, unigram, 0, ctx, 1, rng), UsageError);
}

TEST(Bsg, SparseAdamOnlyTouchesRowsWithGradient) {
    auto cfg = one_dim();
    Rng rng(3);
    auto m = BsgModel<double>::init(6, cfg, rng);
    const auto before = m;
    BsgGradients g(m);
    g.prior_mean.row(2)[0] = 1.0;
    BsgOptimizer opt;
    opt.adam = adam_config(cfg);
    opt.apply(m, g, 1);
    for (WordId w = 0; w < 6; ++w) {
        if (w == 2) {
            // first Adam step moves by ~lr against the gradient sign
            EXPECT_NEAR(m.prior_mean(w, 0), before.prior_mean(w, 0) - cfg.learning_rate, 1e-6);
        } else {
            EXPECT_EQ(m.prior_mean(w, 0), before.prior_mean(w, 0));
        }
    }
    EXPECT_EQ(m.ctx_mean, before.ctx_mean);
}

TEST(Bsg, TrainingReducesLossAndIsThreadIndependent) {
    const auto d = fixture::make_synth(oracle::polysemy_spec(2, 2, 20000, 3));
    auto cfg = fixture::desk_config(7);
    cfg.epochs = 3;
    TrainStats s4;
    const auto m4 = train_bsg<float>(d.corpus, d.vocab, cfg, fixture::stats_hook(s4));
    ASSERT_EQ(s4.epoch_mean_loss.size(), 3u);
    for (double l : s4.batch_loss) ASSERT_TRUE(std::isfinite(l));
    EXPECT_LT(s4.epoch_mean_loss.back(), s4.epoch_mean_loss.front());

    cfg.threads = 1;
    TrainStats s1;
    const auto m1 = train_bsg<float>(d.corpus, d.vocab, cfg, fixture::stats_hook(s1));
    EXPECT_TRUE(m1 == m4);
    EXPECT_EQ(s1.stream_fingerprint, s4.stream_fingerprint);

    cfg.seed = 8;
    const auto other = train_bsg<float>(d.corpus, d.vocab, cfg);
    EXPECT_FALSE(other == m4);
}

TEST(Bsg, ConfigValidation) {
    TrainConfig c;
    c.window = 0;
    EXPECT_THROW(c.validate(), UsageError);
    c = TrainConfig{};
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), UsageError);
    c = TrainConfig{};
    c.margin = -1.0;
    EXPECT_THROW(c.validate(), UsageError);
    EXPECT_THROW(parse_objective("ranking"), UsageError);
    EXPECT_THROW(parse_pairing("some"), UsageError);
}
