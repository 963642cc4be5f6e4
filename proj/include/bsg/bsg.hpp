#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bsg/adam.hpp"
#include "bsg/config.hpp"
#include "bsg/corpus.hpp"
#include "bsg/encoder.hpp"
#include "bsg/gauss.hpp"
#include "bsg/matrix.hpp"
#include "bsg/random.hpp"
#include "bsg/training.hpp"

namespace bsg {

// Word-specific priors N(mu_w, S_w), context densities N(mu_c, S_c) and the
// encoder. With tie_prior_context the context densities are the priors; with
// tie_embeddings the encoder reads the prior means instead of its own R.
template <typename Real>
struct BsgModel {
    CovKind cov = CovKind::spherical;
    std::size_t dim = 0;
    bool tie_prior_context = false;
    bool tie_embeddings = false;
    Matrix<Real> prior_mean, prior_lv;
    Matrix<Real> ctx_mean, ctx_lv;
    EncoderParams<Real> enc;

    std::size_t vocab_size() const { return prior_mean.rows(); }
    std::size_t lv_width() const { return log_var_width(cov, dim); }

    GaussView<Real> prior(WordId w) const { return {prior_mean.row(w), prior_lv.row(w)}; }
    GaussView<Real> context(WordId c) const {
        return tie_prior_context ? prior(c) : GaussView<Real>{ctx_mean.row(c), ctx_lv.row(c)};
    }
    Gaussian prior_gaussian(WordId w) const {
        auto v = prior(w);
        return Gaussian({v.mean.begin(), v.mean.end()}, {v.log_var.begin(), v.log_var.end()}, cov);
    }
    const Matrix<Real>& embeddings() const { return tie_embeddings ? prior_mean : enc.R; }

    static BsgModel zeros(std::size_t vocab, const TrainConfig& cfg) {
        BsgModel m;
        m.cov = cfg.cov;
        m.dim = cfg.dim;
        m.tie_prior_context = cfg.tie_prior_context;
        m.tie_embeddings = cfg.tie_encoder_embeddings;
        const std::size_t k = log_var_width(cfg.cov, cfg.dim);
        m.prior_mean = Matrix<Real>(vocab, cfg.dim);
        m.prior_lv = Matrix<Real>(vocab, k);
        if (!m.tie_prior_context) {
            m.ctx_mean = Matrix<Real>(vocab, cfg.dim);
            m.ctx_lv = Matrix<Real>(vocab, k);
        }
        m.enc = EncoderParams<Real>::zeros(vocab, cfg.dim, cfg.hidden, cfg.cov, !m.tie_embeddings);
        return m;
    }

    // Means uniform in +-0.5/dim, unit variances, encoder per EncoderParams::init.
    static BsgModel init(std::size_t vocab, const TrainConfig& cfg, Rng& rng) {
        BsgModel m = zeros(vocab, cfg);
        const double r = 0.5 / static_cast<double>(cfg.dim);
        for (auto& v : m.prior_mean.flat()) v = static_cast<Real>(rng.uniform(-r, r));
        for (auto& v : m.ctx_mean.flat()) v = static_cast<Real>(rng.uniform(-r, r));
        m.enc = EncoderParams<Real>::init(vocab, cfg.dim, cfg.hidden, cfg.cov, rng, !m.tie_embeddings);
        return m;
    }

    template <typename Other>
    BsgModel<Other> cast() const {
        BsgModel<Other> o;
        o.cov = cov;
        o.dim = dim;
        o.tie_prior_context = tie_prior_context;
        o.tie_embeddings = tie_embeddings;
        o.prior_mean = prior_mean.template cast<Other>();
        o.prior_lv = prior_lv.template cast<Other>();
        o.ctx_mean = ctx_mean.template cast<Other>();
        o.ctx_lv = ctx_lv.template cast<Other>();
        o.enc.cov = enc.cov;
        o.enc.dim = enc.dim;
        o.enc.hidden = enc.hidden;
        o.enc.R = enc.R.template cast<Other>();
        o.enc.M = enc.M.template cast<Other>();
        o.enc.U = enc.U.template cast<Other>();
        o.enc.W = enc.W.template cast<Other>();
        o.enc.b1.assign(enc.b1.begin(), enc.b1.end());
        o.enc.b2.assign(enc.b2.begin(), enc.b2.end());
        return o;
    }

    friend bool operator==(const BsgModel&, const BsgModel&) = default;
};

// Gradients over the physical parameter tables. Tied tables route into the
// table they alias (context -> prior, encoder R -> prior mean).
struct BsgGradients {
    SparseRows prior_mean, prior_lv, ctx_mean, ctx_lv;
    EncoderGradients enc;

    BsgGradients() = default;
    template <typename Real>
    explicit BsgGradients(const BsgModel<Real>& m)
        : prior_mean(m.dim), prior_lv(m.lv_width()), ctx_mean(m.dim), ctx_lv(m.lv_width()), enc(m.enc) {}

    void add(const BsgGradients& o) {
        prior_mean.add(o.prior_mean);
        prior_lv.add(o.prior_lv);
        ctx_mean.add(o.ctx_mean);
        ctx_lv.add(o.ctx_lv);
        enc.add(o.enc);
    }
};

// Posterior for one occurrence, reading whichever embedding table the encoder uses.
template <typename Real>
Gaussian infer_posterior(const BsgModel<Real>& m, WordId center, std::span<const WordId> contexts) {
    return encoder_forward(m.enc, m.embeddings(), center, contexts).posterior;
}

// z = mean + exp(log_var / 2) * eps
inline std::vector<double> reparameterize(const Gaussian& g, std::span<const double> eps) {
    if (eps.size() != g.dim()) throw DataError("dimension mismatch in reparameterize");
    std::vector<double> z(g.dim());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = g.mean[i] + std::exp(0.5 * g.log_var[g.log_var.size() == 1 ? 0 : i]) * eps[i];
    return z;
}

namespace detail {

inline void check_window(std::span<const WordId> positives, std::span<const WordId> negatives, std::size_t vocab) {
    if (positives.empty()) throw DataError("window has no positive context words");
    if (negatives.empty() || negatives.size() % positives.size() != 0)
        throw DataError("negatives must be a non-empty multiple of positives (got " + std::to_string(negatives.size()) +
                        " for " + std::to_string(positives.size()) + ")");
    for (auto id : positives)
        if (id >= vocab) throw DataError("context id out of range");
    for (auto id : negatives)
        if (id >= vocab) throw DataError("negative id out of range");
}

// Calls fn(j, k) for every (positive, negative) pair of the objective.
// Matched pairing couples negative k with positive k mod |positives|.
template <typename Fn>
void for_each_pair(std::size_t n_pos, std::size_t n_neg, Pairing pairing, Fn&& fn) {
    if (pairing == Pairing::matched) {
        for (std::size_t k = 0; k < n_neg; ++k) fn(k % n_pos, k);
    } else {
        for (std::size_t j = 0; j < n_pos; ++j)
            for (std::size_t k = 0; k < n_neg; ++k) fn(j, k);
    }
}

struct WindowTerms {
    EncoderTrace trace;
    std::vector<double> kl_pos, kl_neg;
    double kl_prior = 0.0;
};

template <typename Real>
WindowTerms window_terms(const BsgModel<Real>& m, WordId center, std::span<const WordId> positives,
                         std::span<const WordId> negatives) {
    check_window(positives, negatives, m.vocab_size());
    if (center >= m.vocab_size()) throw DataError("center id out of range");
    WindowTerms t;
    t.trace = encoder_forward(m.enc, m.embeddings(), center, positives);
    const auto q = t.trace.posterior.view();
    t.kl_pos.reserve(positives.size());
    for (auto c : positives) t.kl_pos.push_back(kl_divergence(q, m.context(c)));
    t.kl_neg.reserve(negatives.size());
    for (auto c : negatives) t.kl_neg.push_back(kl_divergence(q, m.context(c)));
    t.kl_prior = kl_divergence(q, m.prior(center));
    return t;
}

} // namespace detail

// Training objective for one window (to be minimised):
//   hinge: sum_(j,k) max(0, KL[q||c_j] - KL[q||n_k] + m) + KL[q||prior_w]
//   soft:  sum_(j,k) (KL[q||c_j] - KL[q||n_k]) + KL[q||prior_w]
// q is the encoder posterior given the positive contexts only. No sampling.
template <typename Real>
double window_loss(const BsgModel<Real>& m, WordId center, std::span<const WordId> positives,
                   std::span<const WordId> negatives, const TrainConfig& cfg) {
    const auto t = detail::window_terms(m, center, positives, negatives);
    double loss = 0.0;
    detail::for_each_pair(positives.size(), negatives.size(), cfg.pairing, [&](std::size_t j, std::size_t k) {
        const double diff = t.kl_pos[j] - t.kl_neg[k];
        loss += cfg.objective == Objective::hinge ? std::max(0.0, diff + cfg.margin) : diff;
    });
    return loss + t.kl_prior;
}

// Adds the exact gradient of window_loss into `g` and returns the loss.
// A hinge argument of exactly zero counts as inactive.
template <typename Real>
double accumulate_window_gradients(const BsgModel<Real>& m, WordId center, std::span<const WordId> positives,
                                   std::span<const WordId> negatives, const TrainConfig& cfg, BsgGradients& g) {
    const auto t = detail::window_terms(m, center, positives, negatives);
    std::vector<double> coef_pos(positives.size(), 0.0), coef_neg(negatives.size(), 0.0);
    double loss = 0.0;
    detail::for_each_pair(positives.size(), negatives.size(), cfg.pairing, [&](std::size_t j, std::size_t k) {
        const double diff = t.kl_pos[j] - t.kl_neg[k];
        if (cfg.objective == Objective::hinge) {
            const double arg = diff + cfg.margin;
            if (arg > 0.0) {
                loss += arg;
                coef_pos[j] += 1.0;
                coef_neg[k] -= 1.0;
            }
        } else {
            loss += diff;
            coef_pos[j] += 1.0;
            coef_neg[k] -= 1.0;
        }
    });
    loss += t.kl_prior;

    const auto q = t.trace.posterior.view();
    std::vector<double> g_mu(m.dim, 0.0), g_lv(m.lv_width(), 0.0);
    SparseRows& cm = m.tie_prior_context ? g.prior_mean : g.ctx_mean;
    SparseRows& cl = m.tie_prior_context ? g.prior_lv : g.ctx_lv;
    auto context_term = [&](WordId c, double coef) {
        if (coef == 0.0) return;
        auto gm = cm.row(c);
        auto gl = cl.row(c);
        kl_divergence_backward(q, m.context(c), coef, g_mu, g_lv, gm, gl);
    };
    for (std::size_t j = 0; j < positives.size(); ++j) context_term(positives[j], coef_pos[j]);
    for (std::size_t k = 0; k < negatives.size(); ++k) context_term(negatives[k], coef_neg[k]);
    {
        auto gm = g.prior_mean.row(center);
        auto gl = g.prior_lv.row(center);
        kl_divergence_backward(q, m.prior(center), 1.0, g_mu, g_lv, gm, gl);
    }
    SparseRows& embed_grads = m.tie_embeddings ? g.prior_mean : g.enc.R;
    encoder_backward_into(m.enc, m.embeddings(), t.trace, center, positives, g_mu, g_lv, g.enc, embed_grads);
    return loss;
}

template <typename Real>
BsgGradients window_loss_gradients(const BsgModel<Real>& m, WordId center, std::span<const WordId> positives,
                                   std::span<const WordId> negatives, const TrainConfig& cfg) {
    BsgGradients g(m);
    accumulate_window_gradients(m, center, positives, negatives, cfg, g);
    return g;
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline constexpr std::size_t kElboMaxVocab = 10000;

// Monte-Carlo estimate of the evidence lower bound
//   sum_j E_q[log p(c_j|z)] - KL[q || prior_w],
// with p(c|z) proportional to N(z; mu_c, S_c) p(c) normalised over the whole
// vocabulary. `unigram` supplies p(c).
template <typename Real>
MonteCarloEstimate elbo_estimate(const BsgModel<Real>& m, std::span<const double> unigram, WordId center,
                                 std::span<const WordId> contexts, std::size_t n_samples, Rng& rng) {
    const std::size_t V = m.vocab_size();
    if (V > kElboMaxVocab)
        throw UsageError("vocabulary of " + std::to_string(V) + " words is too large for the exact ELBO; use the training loss");
    if (n_samples < 1) throw UsageError("n_samples must be >= 1");
    if (unigram.size() != V) throw DataError("unigram table size does not match the model vocabulary");
    for (auto c : contexts)
        if (c >= V) throw DataError("context id out of range");

    const Gaussian q = encoder_forward(m.enc, m.embeddings(), center, contexts).posterior;
    const double kl = kl_divergence(q.view(), m.prior(center));
    std::vector<double> log_p(V);
    for (std::size_t c = 0; c < V; ++c) log_p[c] = std::log(unigram[c]);

    std::vector<double> eps(m.dim), scores(V);
    // Welford running mean / squared deviations
    double mean = 0.0, m2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (auto& e : eps) e = rng.normal();
        const auto z = reparameterize(q, eps);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < V; ++c) {
            scores[c] = log_density(m.context(static_cast<WordId>(c)), std::span<const double>(z)) + log_p[c];
            mx = std::max(mx, scores[c]);
        }
        double acc = 0.0;
        for (std::size_t c = 0; c < V; ++c) acc += std::exp(scores[c] - mx);
        const double log_z = mx + std::log(acc);
        double rec = 0.0;
        for (auto c : contexts) rec += scores[c] - log_z;
        const double v = rec - kl;
        const double delta = v - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (v - mean);
    }
    const double n = static_cast<double>(n_samples);
    const double var = n > 1 ? m2 / (n - 1) : 0.0;
    return {mean, std::sqrt(var / n)};
}

template <typename Real>
std::string parameter_norms(const BsgModel<Real>& m) {
    auto norm = [](const auto& mat) {
        double acc = 0.0;
        for (auto v : mat.flat()) acc += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(acc);
    };
    std::ostringstream os;
    os << "prior_mean=" << norm(m.prior_mean) << " prior_lv=" << norm(m.prior_lv) << " ctx_mean=" << norm(m.ctx_mean)
       << " ctx_lv=" << norm(m.ctx_lv) << " R=" << norm(m.enc.R) << " M=" << norm(m.enc.M) << " U=" << norm(m.enc.U)
       << " W=" << norm(m.enc.W);
    return os.str();
}

// Adam state for every physical table of a BsgModel.
struct BsgOptimizer {
    AdamConfig adam;
    AdamMoments prior_mean, prior_lv, ctx_mean, ctx_lv, R, M, U, W, b1, b2;

    template <typename Real>
    void apply(BsgModel<Real>& m, const BsgGradients& g, std::size_t step) {
        adam_rows(m.prior_mean, g.prior_mean, prior_mean, adam, step);
        adam_rows(m.prior_lv, g.prior_lv, prior_lv, adam, step);
        if (!m.tie_prior_context) {
            adam_rows(m.ctx_mean, g.ctx_mean, ctx_mean, adam, step);
            adam_rows(m.ctx_lv, g.ctx_lv, ctx_lv, adam, step);
        }
        if (!m.tie_embeddings) adam_rows(m.enc.R, g.enc.R, R, adam, step);
        adam_dense(m.enc.M.flat(), g.enc.M.flat(), M, adam, step);
        adam_dense(m.enc.U.flat(), g.enc.U.flat(), U, adam, step);
        adam_dense(m.enc.W.flat(), g.enc.W.flat(), W, adam, step);
        adam_dense(std::span<Real>(m.enc.b1), std::span<const double>(g.enc.b1), b1, adam, step);
        adam_dense(std::span<Real>(m.enc.b2), std::span<const double>(g.enc.b2), b2, adam, step);
    }
};

inline AdamConfig adam_config(const TrainConfig& cfg) {
    return {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
}

// Mini-batch Adam on window_loss over the shared training stream.
template <typename Real = float>
BsgModel<Real> train_bsg(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
    cfg.validate();
    Rng init_rng(derive_seed(cfg.seed, 0));
    auto model = BsgModel<Real>::init(vocab.size(), cfg, init_rng);
    BsgOptimizer opt;
    opt.adam = adam_config(cfg);
    run_training(
        corpus, vocab, cfg, model, hooks, [&] { return BsgGradients(model); },
        [&](const BsgModel<Real>& m, const Example& ex, BsgGradients& g) {
            return accumulate_window_gradients(m, ex.center, ex.positives, ex.negatives, cfg, g);
        },
        [](BsgGradients& a, const BsgGradients& b) { a.add(b); },
        [&](BsgModel<Real>& m, const BsgGradients& g, std::size_t step) { opt.apply(m, g, step); },
        [](const BsgModel<Real>& m) { return parameter_norms(m); });
    return model;
}

template <typename Real = float>
BsgModel<Real> train_bsg(const std::string& corpus_path, const Vocabulary& vocab, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}, bool lowercase = true) {
    return train_bsg<Real>(read_corpus(corpus_path, vocab, lowercase), vocab, cfg, hooks);
}

} // namespace bsg
