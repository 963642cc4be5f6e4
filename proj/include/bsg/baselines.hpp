#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bsg/adam.hpp"
#include "bsg/bsg.hpp"
#include "bsg/config.hpp"
#include "bsg/gauss.hpp"
#include "bsg/matrix.hpp"
#include "bsg/training.hpp"

namespace bsg {

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling

template <typename Real>
struct SgModel {
    Matrix<Real> input;   // v_w
    Matrix<Real> output;  // u_c

    std::size_t vocab_size() const { return input.rows(); }
    std::size_t dim() const { return input.cols(); }

    // word2vec-style init: input uniform in +-0.5/dim, output zero.
    static SgModel init(std::size_t vocab, std::size_t dim, Rng& rng) {
        SgModel m{Matrix<Real>(vocab, dim), Matrix<Real>(vocab, dim)};
        const double r = 0.5 / static_cast<double>(dim);
        for (auto& v : m.input.flat()) v = static_cast<Real>(rng.uniform(-r, r));
        return m;
    }

    friend bool operator==(const SgModel&, const SgModel&) = default;
};

struct SgGradients {
    SparseRows input, output;

    SgGradients() = default;
    explicit SgGradients(std::size_t dim) : input(dim), output(dim) {}
    void add(const SgGradients& o) {
        input.add(o.input);
        output.add(o.output);
    }
};

inline double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

namespace detail {
template <typename Real>
double dot(std::span<const Real> a, std::span<const Real> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}
} // namespace detail

// -sum_j [log s(u_cj . v_w) + log s(-u_nj . v_w)]; adds its gradient into `g` when given.
template <typename Real>
double sg_window_loss(const SgModel<Real>& m, WordId center, std::span<const WordId> positives,
                      std::span<const WordId> negatives, SgGradients* g = nullptr) {
    detail::check_window(positives, negatives, m.vocab_size());
    if (center >= m.vocab_size()) throw DataError("center id out of range");
    const auto v = m.input.row(center);
    const std::size_t d = m.dim();
    double loss = 0.0;
    std::vector<double> g_v(d, 0.0);
    auto term = [&](WordId c, double label) {
        const auto u = m.output.row(c);
        const double s = detail::dot<Real>(u, v);
        loss -= log_sigmoid(label * s);
        if (!g) return;
        // d/ds of -log s(label*s) = -label * (1 - s(label*s))
        const double coef = -label * (1.0 - sigmoid(label * s));
        auto gu = g->output.row(c);
        for (std::size_t i = 0; i < d; ++i) {
            gu[i] += coef * static_cast<double>(v[i]);
            g_v[i] += coef * static_cast<double>(u[i]);
        }
    };
    for (auto c : positives) term(c, 1.0);
    for (auto c : negatives) term(c, -1.0);
    if (g) {
        auto gv = g->input.row(center);
        for (std::size_t i = 0; i < d; ++i) gv[i] += g_v[i];
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Gaussian embeddings (single density table, max-margin ranking)

struct ClipBounds {
    double max_mean_norm = 20.0;
    double var_lo = 1e-3;
    double var_hi = 10.0;

    friend bool operator==(const ClipBounds&, const ClipBounds&) = default;
};

template <typename Real>
struct W2gModel {
    CovKind cov = CovKind::spherical;
    Energy energy = Energy::expected_likelihood;
    ClipBounds clip;
    Matrix<Real> mean;
    Matrix<Real> log_var;

    std::size_t vocab_size() const { return mean.rows(); }
    std::size_t dim() const { return mean.cols(); }
    GaussView<Real> density(WordId w) const { return {mean.row(w), log_var.row(w)}; }

    static W2gModel init(std::size_t vocab, const TrainConfig& cfg, Rng& rng) {
        W2gModel m;
        m.cov = cfg.cov;
        m.energy = cfg.energy;
        m.clip = {cfg.clip_mean_norm, cfg.var_lo, cfg.var_hi};
        m.mean = Matrix<Real>(vocab, cfg.dim);
        m.log_var = Matrix<Real>(vocab, log_var_width(cfg.cov, cfg.dim));
        const double r = 0.5 / static_cast<double>(cfg.dim);
        for (auto& v : m.mean.flat()) v = static_cast<Real>(rng.uniform(-r, r));
        return m;
    }

    friend bool operator==(const W2gModel&, const W2gModel&) = default;
};

struct W2gGradients {
    SparseRows mean, log_var;

    W2gGradients() = default;
    W2gGradients(std::size_t dim, std::size_t lv_width) : mean(dim), log_var(lv_width) {}
    void add(const W2gGradients& o) {
        mean.add(o.mean);
        log_var.add(o.log_var);
    }
};

// expected_likelihood: log N(mu_a; mu_b, S_a + S_b)
// negated_kl:          -KL[b || a]   (context b scored from word a)
template <typename A, typename B>
double w2g_energy(const GaussView<A>& a, const GaussView<B>& b, Energy kind) {
    if (a.dim() != b.dim()) throw DataError("dimension mismatch in w2g_energy");
    if (kind == Energy::negated_kl) return -kl_divergence(b, a);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double s = std::exp(a.lv(i)) + std::exp(b.lv(i));
        const double diff = a.mu(i) - b.mu(i);
        acc += kLog2Pi + std::log(s) + diff * diff / s;
    }
    return -0.5 * acc;
}

inline double w2g_energy(const Gaussian& a, const Gaussian& b, Energy kind) { return w2g_energy(a.view(), b.view(), kind); }

// Adds scale * dE(a, b) into the gradient buffers.
template <typename A, typename B>
void w2g_energy_backward(const GaussView<A>& a, const GaussView<B>& b, Energy kind, double scale,
                         std::span<double> g_mean_a, std::span<double> g_lv_a, std::span<double> g_mean_b,
                         std::span<double> g_lv_b) {
    if (kind == Energy::negated_kl) {
        kl_divergence_backward(b, a, -scale, g_mean_b, g_lv_b, g_mean_a, g_lv_a);
        return;
    }
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double va = std::exp(a.lv(i)), vb = std::exp(b.lv(i));
        const double s = va + vb;
        const double diff = a.mu(i) - b.mu(i);
        const double g_s = -0.5 * (1.0 / s - diff * diff / (s * s));
        g_mean_a[i] -= scale * diff / s;
        g_mean_b[i] += scale * diff / s;
        g_lv_a[g_lv_a.size() == 1 ? 0 : i] += scale * g_s * va;
        g_lv_b[g_lv_b.size() == 1 ? 0 : i] += scale * g_s * vb;
    }
}

// sum_j max(0, margin - E(w, c_j) + E(w, n_j)); adds its gradient into `g` when given.
template <typename Real>
double w2g_window_loss(const W2gModel<Real>& m, WordId center, std::span<const WordId> positives,
                       std::span<const WordId> negatives, double margin, W2gGradients* g = nullptr) {
    detail::check_window(positives, negatives, m.vocab_size());
    if (center >= m.vocab_size()) throw DataError("center id out of range");
    const auto w = m.density(center);
    double loss = 0.0;
    std::vector<double> gm_w(m.dim(), 0.0), gl_w(m.log_var.cols(), 0.0);
    for (std::size_t k = 0; k < negatives.size(); ++k) {
        const WordId c = positives[k % positives.size()];
        const WordId n = negatives[k];
        const double arg = margin - w2g_energy(w, m.density(c), m.energy) + w2g_energy(w, m.density(n), m.energy);
        if (arg <= 0.0) continue;
        loss += arg;
        if (!g) continue;
        {
            auto gm = g->mean.row(c);
            auto gl = g->log_var.row(c);
            w2g_energy_backward(w, m.density(c), m.energy, -1.0, gm_w, gl_w, gm, gl);
        }
        {
            auto gm = g->mean.row(n);
            auto gl = g->log_var.row(n);
            w2g_energy_backward(w, m.density(n), m.energy, 1.0, gm_w, gl_w, gm, gl);
        }
    }
    if (g) {
        auto gm = g->mean.row(center);
        auto gl = g->log_var.row(center);
        for (std::size_t i = 0; i < gm.size(); ++i) gm[i] += gm_w[i];
        for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += gl_w[i];
    }
    return loss;
}

namespace detail {
template <typename Real>
void clip_row(std::span<Real> mean, std::span<Real> lv, const ClipBounds& b) {
    auto norm = [&] {
        double acc = 0.0;
        for (auto v : mean) acc += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(acc);
    };
    double n = norm();
    if (n > b.max_mean_norm) {
        const double f = b.max_mean_norm / n;
        for (auto& v : mean) v = static_cast<Real>(static_cast<double>(v) * f);
        // rounding can leave the norm a hair above the bound
        while ((n = norm()) > b.max_mean_norm)
            for (auto& v : mean) v = static_cast<Real>(static_cast<double>(v) * (1.0 - 4.0 * std::numeric_limits<Real>::epsilon()));
    }
    const double lo = std::log(b.var_lo), hi = std::log(b.var_hi);
    for (auto& v : lv) {
        if (static_cast<double>(v) < lo) v = static_cast<Real>(lo);
        if (static_cast<double>(v) > hi) v = static_cast<Real>(hi);
        // keep exp(lv) inside [var_lo, var_hi] after rounding to Real
        while (std::exp(static_cast<double>(v)) < b.var_lo) v = std::nextafter(v, std::numeric_limits<Real>::infinity());
        while (std::exp(static_cast<double>(v)) > b.var_hi) v = std::nextafter(v, -std::numeric_limits<Real>::infinity());
    }
}
} // namespace detail

// Rescales means to norm <= max_mean_norm and clamps variances into
// [var_lo, var_hi]. Idempotent.
template <typename Real>
W2gModel<Real> clip_params(W2gModel<Real> m) {
    for (std::size_t w = 0; w < m.vocab_size(); ++w) detail::clip_row<Real>(m.mean.row(w), m.log_var.row(w), m.clip);
    return m;
}

template <typename Real>
bool within_clip_bounds(const W2gModel<Real>& m) {
    for (std::size_t w = 0; w < m.vocab_size(); ++w) {
        double acc = 0.0;
        for (auto v : m.mean.row(w)) acc += static_cast<double>(v) * static_cast<double>(v);
        if (std::sqrt(acc) > m.clip.max_mean_norm) return false;
        for (auto v : m.log_var.row(w)) {
            const double var = std::exp(static_cast<double>(v));
            if (var < m.clip.var_lo || var > m.clip.var_hi) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Training

template <typename Real = float>
SgModel<Real> train_sg(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg,
                       const TrainHooks& hooks = {}) {
    cfg.validate();
    Rng init_rng(derive_seed(cfg.seed, 0));
    auto model = SgModel<Real>::init(vocab.size(), cfg.dim, init_rng);
    const AdamConfig adam = adam_config(cfg);
    AdamMoments st_in, st_out;
    run_training(
        corpus, vocab, cfg, model, hooks, [&] { return SgGradients(cfg.dim); },
        [](const SgModel<Real>& m, const Example& ex, SgGradients& g) {
            return sg_window_loss(m, ex.center, ex.positives, ex.negatives, &g);
        },
        [](SgGradients& a, const SgGradients& b) { a.add(b); },
        [&](SgModel<Real>& m, const SgGradients& g, std::size_t step) {
            adam_rows(m.input, g.input, st_in, adam, step);
            adam_rows(m.output, g.output, st_out, adam, step);
        },
        [](const SgModel<Real>& m) {
            double a = 0.0, b = 0.0;
            for (auto v : m.input.flat()) a += static_cast<double>(v) * v;
            for (auto v : m.output.flat()) b += static_cast<double>(v) * v;
            std::ostringstream os;
            os << "input=" << std::sqrt(a) << " output=" << std::sqrt(b);
            return os.str();
        });
    return model;
}

// Clip bounds are enforced on every touched row after each update.
template <typename Real = float>
W2gModel<Real> train_w2g(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
    cfg.validate();
    Rng init_rng(derive_seed(cfg.seed, 0));
    auto model = W2gModel<Real>::init(vocab.size(), cfg, init_rng);
    model = clip_params(std::move(model));
    const AdamConfig adam = adam_config(cfg);
    AdamMoments st_mean, st_lv;
    const std::size_t lvw = log_var_width(cfg.cov, cfg.dim);
    run_training(
        corpus, vocab, cfg, model, hooks, [&] { return W2gGradients(cfg.dim, lvw); },
        [&](const W2gModel<Real>& m, const Example& ex, W2gGradients& g) {
            return w2g_window_loss(m, ex.center, ex.positives, ex.negatives, cfg.margin, &g);
        },
        [](W2gGradients& a, const W2gGradients& b) { a.add(b); },
        [&](W2gModel<Real>& m, const W2gGradients& g, std::size_t step) {
            adam_rows(m.mean, g.mean, st_mean, adam, step);
            adam_rows(m.log_var, g.log_var, st_lv, adam, step);
            auto ids = g.mean.sorted_ids();
            for (auto id : g.log_var.sorted_ids()) ids.push_back(id);
            for (auto id : ids) detail::clip_row<Real>(m.mean.row(id), m.log_var.row(id), m.clip);
        },
        [](const W2gModel<Real>& m) {
            double a = 0.0, b = 0.0;
            for (auto v : m.mean.flat()) a += static_cast<double>(v) * v;
            for (auto v : m.log_var.flat()) b += static_cast<double>(v) * v;
            std::ostringstream os;
            os << "mean=" << std::sqrt(a) << " log_var=" << std::sqrt(b);
            return os.str();
        });
    return model;
}

} // namespace bsg
