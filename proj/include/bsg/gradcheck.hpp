#pragma once

// Analytic-vs-finite-difference gradient comparison on small random models.
// Cases whose parameters sit within kKinkMargin of a hinge or ReLU kink are
// redrawn: the loss is not differentiable there and central differences
// straddle the kink.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "bsg/baselines.hpp"
#include "bsg/bsg.hpp"
#include "bsg/oracles.hpp"

namespace bsg::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kKinkMargin = 1e-3;
// Denominator floor: entries whose true gradient is ~0 are held to an absolute
// error of kFloor * tolerance, above the ~1e-9 round-off of a central
// difference at kStep on losses of magnitude ~100.
inline constexpr double kFloor = 1e-4;

struct Result {
    double max_rel_error = 0.0;
    std::size_t params = 0;
};

inline double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

namespace detail {

using Blocks = std::vector<std::span<double>>;

inline std::vector<double> dense(const SparseRows& g, std::size_t rows) {
    std::vector<double> out(rows * g.cols(), 0.0);
    for (WordId id : g.sorted_ids()) {
        auto r = g.find(id);
        std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(id * g.cols()));
    }
    return out;
}

inline std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

inline std::vector<double> flatten(const Blocks& b) {
    std::vector<double> x;
    for (auto s : b) x.insert(x.end(), s.begin(), s.end());
    return x;
}

inline void unflatten(const Blocks& b, std::span<const double> x) {
    std::size_t k = 0;
    for (auto s : b)
        for (auto& v : s) v = x[k++];
}

inline Blocks enc_blocks(EncoderParams<double>& e) {
    Blocks b;
    if (!e.R.empty()) b.push_back(e.R.flat());
    b.insert(b.end(), {e.M.flat(), e.U.flat(), std::span<double>(e.b1), e.W.flat(), std::span<double>(e.b2)});
    return b;
}

inline std::vector<std::vector<double>> enc_grad_blocks(const EncoderParams<double>& e, const EncoderGradients& g) {
    std::vector<std::vector<double>> b;
    if (!e.R.empty()) b.push_back(dense(g.R, e.R.rows()));
    b.insert(b.end(), {copy(g.M.flat()), copy(g.U.flat()), g.b1, copy(g.W.flat()), g.b2});
    return b;
}

// Compares `analytic` against central differences of `loss` over `blocks_of(model)`.
template <typename Model, typename Loss, typename BlocksOf>
Result compare(const Model& model, Loss loss, BlocksOf blocks_of, const std::vector<std::vector<double>>& analytic) {
    Model work = model;
    const auto x0 = flatten(blocks_of(work));
    std::vector<double> a;
    for (const auto& blk : analytic) a.insert(a.end(), blk.begin(), blk.end());
    if (a.size() != x0.size()) throw DataError("gradient layout does not match the parameter layout");
    auto f = [&](std::span<const double> x) {
        Model c = model;
        unflatten(blocks_of(c), x);
        return loss(c);
    };
    const auto n = oracle::finite_diff_grad(f, x0, kStep);
    Result r;
    r.params = x0.size();
    for (std::size_t i = 0; i < n.size(); ++i) r.max_rel_error = std::max(r.max_rel_error, rel_error(a[i], n[i]));
    return r;
}

inline void jitter(std::span<double> s, Rng& rng, double scale) {
    for (auto& v : s) v = scale * rng.normal();
}

inline std::vector<WordId> draw_ids(std::size_t n, std::size_t vocab, Rng& rng) {
    std::vector<WordId> out(n);
    for (auto& w : out) w = static_cast<WordId>(rng.below(vocab));
    return out;
}

inline bool near_relu_kink(const EncoderTrace& t) {
    for (double v : t.pre.flat())
        if (std::abs(v) < kKinkMargin) return true;
    return false;
}

} // namespace detail

// ---- BSG window loss --------------------------------------------------------

struct BsgCase {
    BsgModel<double> model;
    TrainConfig cfg;
    WordId center = 0;
    std::vector<WordId> positives, negatives;
};

inline BsgCase random_bsg_case(Rng& rng, std::size_t vocab = 20, std::size_t dim = 4, std::size_t hidden = 5) {
    for (;;) {
        BsgCase c;
        c.cfg.dim = dim;
        c.cfg.hidden = hidden;
        c.cfg.cov = rng.uniform() < 0.5 ? CovKind::spherical : CovKind::diagonal;
        c.cfg.objective = rng.uniform() < 0.7 ? Objective::hinge : Objective::soft;
        c.cfg.pairing = rng.uniform() < 0.5 ? Pairing::matched : Pairing::all_pairs;
        c.cfg.tie_prior_context = rng.uniform() < 0.3;
        c.cfg.tie_encoder_embeddings = rng.uniform() < 0.3;
        c.cfg.negatives_per_positive = 1 + rng.below(2);
        c.cfg.margin = rng.uniform(0.1, 3.0);
        c.model = BsgModel<double>::zeros(vocab, c.cfg);
        auto& m = c.model;
        for (auto* t : {&m.prior_mean, &m.ctx_mean, &m.enc.R}) detail::jitter(t->flat(), rng, 1.0);
        for (auto* t : {&m.prior_lv, &m.ctx_lv}) detail::jitter(t->flat(), rng, 0.5);
        for (auto* t : {&m.enc.M, &m.enc.U, &m.enc.W}) detail::jitter(t->flat(), rng, 0.5);
        detail::jitter(m.enc.b1, rng, 0.3);
        detail::jitter(m.enc.b2, rng, 0.3);
        c.center = static_cast<WordId>(rng.below(vocab));
        c.positives = detail::draw_ids(1 + rng.below(4), vocab, rng);
        c.negatives = detail::draw_ids(c.positives.size() * c.cfg.negatives_per_positive, vocab, rng);

        const auto t = bsg::detail::window_terms(m, c.center, c.positives, c.negatives);
        if (detail::near_relu_kink(t.trace)) continue;
        bool kink = false;
        if (c.cfg.objective == Objective::hinge)
            bsg::detail::for_each_pair(c.positives.size(), c.negatives.size(), c.cfg.pairing,
                                       [&](std::size_t j, std::size_t k) {
                                           if (std::abs(t.kl_pos[j] - t.kl_neg[k] + c.cfg.margin) < kKinkMargin)
                                               kink = true;
                                       });
        if (!kink) return c;
    }
}

inline detail::Blocks bsg_blocks(BsgModel<double>& m) {
    detail::Blocks b{m.prior_mean.flat(), m.prior_lv.flat()};
    if (!m.tie_prior_context) b.insert(b.end(), {m.ctx_mean.flat(), m.ctx_lv.flat()});
    auto e = detail::enc_blocks(m.enc);
    b.insert(b.end(), e.begin(), e.end());
    return b;
}

inline Result check_bsg(const BsgCase& c) {
    const auto& m = c.model;
    const auto g = window_loss_gradients(m, c.center, std::span<const WordId>(c.positives),
                                         std::span<const WordId>(c.negatives), c.cfg);
    std::vector<std::vector<double>> a{detail::dense(g.prior_mean, m.vocab_size()), detail::dense(g.prior_lv, m.vocab_size())};
    if (!m.tie_prior_context)
        a.insert(a.end(), {detail::dense(g.ctx_mean, m.vocab_size()), detail::dense(g.ctx_lv, m.vocab_size())});
    auto e = detail::enc_grad_blocks(m.enc, g.enc);
    a.insert(a.end(), e.begin(), e.end());
    return detail::compare(
        m,
        [&](const BsgModel<double>& x) {
            return window_loss(x, c.center, std::span<const WordId>(c.positives), std::span<const WordId>(c.negatives),
                               c.cfg);
        },
        bsg_blocks, a);
}

// ---- encoder alone ----------------------------------------------------------

// The encoder is probed through L = a . mu + b . log_var with random a, b.
struct EncoderCase {
    EncoderParams<double> params;
    WordId center = 0;
    std::vector<WordId> contexts;
    std::vector<double> a, b;
};

inline EncoderCase random_encoder_case(Rng& rng, std::size_t vocab = 20, std::size_t dim = 4, std::size_t hidden = 5) {
    for (;;) {
        EncoderCase c;
        const CovKind cov = rng.uniform() < 0.5 ? CovKind::spherical : CovKind::diagonal;
        c.params = EncoderParams<double>::zeros(vocab, dim, hidden, cov);
        detail::jitter(c.params.R.flat(), rng, 1.0);
        for (auto* t : {&c.params.M, &c.params.U, &c.params.W}) detail::jitter(t->flat(), rng, 0.5);
        detail::jitter(c.params.b1, rng, 0.3);
        detail::jitter(c.params.b2, rng, 0.3);
        c.center = static_cast<WordId>(rng.below(vocab));
        c.contexts = detail::draw_ids(1 + rng.below(5), vocab, rng);
        c.a.resize(dim);
        c.b.resize(c.params.lv_width());
        detail::jitter(c.a, rng, 1.0);
        detail::jitter(c.b, rng, 1.0);
        if (!detail::near_relu_kink(encoder_forward(c.params, c.params.R, c.center, c.contexts))) return c;
    }
}

inline Result check_encoder(const EncoderCase& c) {
    const auto g = encoder_backward(c.center, std::span<const WordId>(c.contexts), c.params, c.a, c.b);
    return detail::compare(
        c.params,
        [&](const EncoderParams<double>& p) {
            const auto q = infer_posterior(c.center, std::span<const WordId>(c.contexts), p);
            double s = 0.0;
            for (std::size_t i = 0; i < q.mean.size(); ++i) s += c.a[i] * q.mean[i];
            for (std::size_t i = 0; i < q.log_var.size(); ++i) s += c.b[i] * q.log_var[i];
            return s;
        },
        detail::enc_blocks, detail::enc_grad_blocks(c.params, g));
}

// ---- SG -----------------------------------------------------------------------

struct SgCase {
    SgModel<double> model;
    WordId center = 0;
    std::vector<WordId> positives, negatives;
};

inline SgCase random_sg_case(Rng& rng, std::size_t vocab = 20, std::size_t dim = 4) {
    SgCase c;
    c.model = {Matrix<double>(vocab, dim), Matrix<double>(vocab, dim)};
    detail::jitter(c.model.input.flat(), rng, 0.7);
    detail::jitter(c.model.output.flat(), rng, 0.7);
    c.center = static_cast<WordId>(rng.below(vocab));
    c.positives = detail::draw_ids(1 + rng.below(4), vocab, rng);
    c.negatives = detail::draw_ids(c.positives.size() * (1 + rng.below(2)), vocab, rng);
    return c;
}

inline Result check_sg(const SgCase& c) {
    SgGradients g(c.model.dim());
    sg_window_loss(c.model, c.center, std::span<const WordId>(c.positives), std::span<const WordId>(c.negatives), &g);
    const std::size_t V = c.model.vocab_size();
    return detail::compare(
        c.model,
        [&](const SgModel<double>& m) {
            return sg_window_loss(m, c.center, std::span<const WordId>(c.positives), std::span<const WordId>(c.negatives));
        },
        [](SgModel<double>& m) { return detail::Blocks{m.input.flat(), m.output.flat()}; },
        {detail::dense(g.input, V), detail::dense(g.output, V)});
}

// ---- W2G ----------------------------------------------------------------------

struct W2gCase {
    W2gModel<double> model;
    double margin = 1.0;
    WordId center = 0;
    std::vector<WordId> positives, negatives;
};

inline W2gCase random_w2g_case(Rng& rng, std::size_t vocab = 20, std::size_t dim = 4) {
    for (;;) {
        W2gCase c;
        TrainConfig cfg;
        cfg.dim = dim;
        cfg.cov = rng.uniform() < 0.5 ? CovKind::spherical : CovKind::diagonal;
        cfg.energy = rng.uniform() < 0.5 ? Energy::expected_likelihood : Energy::negated_kl;
        c.model = W2gModel<double>::init(vocab, cfg, rng);
        detail::jitter(c.model.mean.flat(), rng, 1.0);
        detail::jitter(c.model.log_var.flat(), rng, 0.5);
        c.margin = rng.uniform(0.5, 4.0);
        c.center = static_cast<WordId>(rng.below(vocab));
        c.positives = detail::draw_ids(1 + rng.below(4), vocab, rng);
        c.negatives = detail::draw_ids(c.positives.size() * (1 + rng.below(2)), vocab, rng);
        bool kink = false;
        const auto w = c.model.density(c.center);
        for (std::size_t k = 0; k < c.negatives.size(); ++k) {
            const double arg = c.margin - w2g_energy(w, c.model.density(c.positives[k % c.positives.size()]), cfg.energy) +
                               w2g_energy(w, c.model.density(c.negatives[k]), cfg.energy);
            if (std::abs(arg) < kKinkMargin) kink = true;
        }
        if (!kink) return c;
    }
}

inline Result check_w2g(const W2gCase& c) {
    W2gGradients g(c.model.dim(), c.model.log_var.cols());
    w2g_window_loss(c.model, c.center, std::span<const WordId>(c.positives), std::span<const WordId>(c.negatives),
                    c.margin, &g);
    const std::size_t V = c.model.vocab_size();
    return detail::compare(
        c.model,
        [&](const W2gModel<double>& m) {
            return w2g_window_loss(m, c.center, std::span<const WordId>(c.positives),
                                   std::span<const WordId>(c.negatives), c.margin);
        },
        [](W2gModel<double>& m) { return detail::Blocks{m.mean.flat(), m.log_var.flat()}; },
        {detail::dense(g.mean, V), detail::dense(g.log_var, V)});
}

} // namespace bsg::gradcheck
