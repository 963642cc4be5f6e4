#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bsg/error.hpp"
#include "bsg/gauss.hpp"
#include "bsg/matrix.hpp"
#include "bsg/random.hpp"

namespace bsg {

// Inference network: h = sum_j relu(M [R_cj; R_w]), mu = U h + b1,
// log var = W h + b2. W/b2 have one row for spherical output, dim rows otherwise.
template <typename Real>
struct EncoderParams {
    CovKind cov = CovKind::spherical;
    std::size_t dim = 0;
    std::size_t hidden = 0;
    Matrix<Real> R;  // vocab x dim; empty when the embeddings are shared with another table
    Matrix<Real> M;  // hidden x 2*dim, left half multiplies R_c, right half R_w
    Matrix<Real> U;  // dim x hidden
    std::vector<Real> b1;
    Matrix<Real> W;  // (1 or dim) x hidden
    std::vector<Real> b2;

    std::size_t lv_width() const { return log_var_width(cov, dim); }

    static EncoderParams zeros(std::size_t vocab, std::size_t dim, std::size_t hidden, CovKind cov,
                               bool own_embeddings = true) {
        if (dim < 1 || hidden < 1) throw UsageError("encoder dimensions must be >= 1");
        EncoderParams p;
        p.cov = cov;
        p.dim = dim;
        p.hidden = hidden;
        if (own_embeddings) p.R = Matrix<Real>(vocab, dim);
        p.M = Matrix<Real>(hidden, 2 * dim);
        p.U = Matrix<Real>(dim, hidden);
        p.b1.assign(dim, Real(0));
        p.W = Matrix<Real>(log_var_width(cov, dim), hidden);
        p.b2.assign(log_var_width(cov, dim), Real(0));
        return p;
    }

    // Glorot-uniform weights, zero biases, R uniform in +-0.5/dim.
    static EncoderParams init(std::size_t vocab, std::size_t dim, std::size_t hidden, CovKind cov, Rng& rng,
                              bool own_embeddings = true) {
        auto p = zeros(vocab, dim, hidden, cov, own_embeddings);
        auto glorot = [&](Matrix<Real>& m) {
            const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
            for (auto& v : m.flat()) v = static_cast<Real>(rng.uniform(-a, a));
        };
        glorot(p.M);
        glorot(p.U);
        glorot(p.W);
        const double r = 0.5 / static_cast<double>(dim);
        for (auto& v : p.R.flat()) v = static_cast<Real>(rng.uniform(-r, r));
        return p;
    }

    friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

struct EncoderGradients {
    Matrix<double> M, U, W;
    std::vector<double> b1, b2;
    SparseRows R;

    EncoderGradients() = default;
    template <typename Real>
    explicit EncoderGradients(const EncoderParams<Real>& p)
        : M(p.M.rows(), p.M.cols()), U(p.U.rows(), p.U.cols()), W(p.W.rows(), p.W.cols()),
          b1(p.b1.size(), 0.0), b2(p.b2.size(), 0.0), R(p.dim) {}

    void add(const EncoderGradients& o) {
        auto axpy = [](std::span<double> d, std::span<const double> s) {
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
        };
        axpy(M.flat(), o.M.flat());
        axpy(U.flat(), o.U.flat());
        axpy(W.flat(), o.W.flat());
        axpy(b1, o.b1);
        axpy(b2, o.b2);
        R.add(o.R);
    }
};

// Everything the backward pass needs from the forward pass.
struct EncoderTrace {
    Gaussian posterior;
    std::vector<double> h;
    Matrix<double> pre;  // contexts x hidden pre-activations
};

namespace detail {
template <typename Real>
void check_ids(std::span<const WordId> ids, std::size_t vocab) {
    for (WordId id : ids)
        if (id >= vocab) throw DataError("word id " + std::to_string(id) + " out of range");
}
} // namespace detail

// Forward pass with an explicit embedding table (the encoder's own R or a tied table).
template <typename Real>
EncoderTrace encoder_forward(const EncoderParams<Real>& p, const Matrix<Real>& embed, WordId center,
                             std::span<const WordId> contexts) {
    if (contexts.empty()) throw DataError("posterior undefined without context");
    if (embed.cols() != p.dim) throw DataError("encoder embedding width mismatch");
    detail::check_ids<Real>(contexts, embed.rows());
    if (center >= embed.rows()) throw DataError("center id out of range");

    const std::size_t d = p.dim, dh = p.hidden;
    std::vector<double> center_part(dh, 0.0);
    const auto rw = embed.row(center);
    for (std::size_t r = 0; r < dh; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += static_cast<double>(p.M(r, d + i)) * rw[i];
        center_part[r] = acc;
    }

    EncoderTrace t;
    t.h.assign(dh, 0.0);
    t.pre = Matrix<double>(contexts.size(), dh);
    for (std::size_t j = 0; j < contexts.size(); ++j) {
        const auto rc = embed.row(contexts[j]);
        for (std::size_t r = 0; r < dh; ++r) {
            double acc = center_part[r];
            for (std::size_t i = 0; i < d; ++i) acc += static_cast<double>(p.M(r, i)) * rc[i];
            t.pre(j, r) = acc;
            if (acc > 0.0) t.h[r] += acc;
        }
    }

    std::vector<double> mu(d), lv(p.lv_width());
    for (std::size_t i = 0; i < d; ++i) {
        double acc = p.b1[i];
        for (std::size_t r = 0; r < dh; ++r) acc += static_cast<double>(p.U(i, r)) * t.h[r];
        mu[i] = acc;
    }
    for (std::size_t i = 0; i < lv.size(); ++i) {
        double acc = p.b2[i];
        for (std::size_t r = 0; r < dh; ++r) acc += static_cast<double>(p.W(i, r)) * t.h[r];
        lv[i] = acc;
    }
    t.posterior = Gaussian(std::move(mu), std::move(lv), p.cov);
    return t;
}

template <typename Real>
Gaussian infer_posterior(WordId center, std::span<const WordId> contexts, const EncoderParams<Real>& p) {
    return encoder_forward(p, p.R, center, contexts).posterior;
}

// Adds the gradient of a scalar loss, given dL/dmu and dL/dlogvar of the
// posterior, into `grads` (dense weights) and `embed_grads` (embedding rows).
template <typename Real>
void encoder_backward_into(const EncoderParams<Real>& p, const Matrix<Real>& embed, const EncoderTrace& t,
                           WordId center, std::span<const WordId> contexts, std::span<const double> g_mu,
                           std::span<const double> g_lv, EncoderGradients& grads, SparseRows& embed_grads) {
    const std::size_t d = p.dim, dh = p.hidden;
    if (g_mu.size() != d || g_lv.size() != p.lv_width()) throw DataError("upstream gradient shape mismatch");
    if (t.pre.rows() != contexts.size()) throw DataError("encoder trace does not match contexts");

    std::vector<double> g_h(dh, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        if (g_mu[i] == 0.0) continue;
        grads.b1[i] += g_mu[i];
        for (std::size_t r = 0; r < dh; ++r) {
            grads.U(i, r) += g_mu[i] * t.h[r];
            g_h[r] += static_cast<double>(p.U(i, r)) * g_mu[i];
        }
    }
    for (std::size_t i = 0; i < g_lv.size(); ++i) {
        if (g_lv[i] == 0.0) continue;
        grads.b2[i] += g_lv[i];
        for (std::size_t r = 0; r < dh; ++r) {
            grads.W(i, r) += g_lv[i] * t.h[r];
            g_h[r] += static_cast<double>(p.W(i, r)) * g_lv[i];
        }
    }

    const auto rw = embed.row(center);
    std::vector<double> g_pre(dh);
    std::vector<double> g_rw(d, 0.0);
    bool any = false;
    for (std::size_t j = 0; j < contexts.size(); ++j) {
        bool live = false;
        for (std::size_t r = 0; r < dh; ++r) {
            g_pre[r] = t.pre(j, r) > 0.0 ? g_h[r] : 0.0;
            live = live || g_pre[r] != 0.0;
        }
        if (!live) continue;
        any = true;
        const auto rc = embed.row(contexts[j]);
        auto g_rc = embed_grads.row(contexts[j]);
        for (std::size_t r = 0; r < dh; ++r) {
            const double g = g_pre[r];
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < d; ++i) {
                grads.M(r, i) += g * rc[i];
                grads.M(r, d + i) += g * rw[i];
                g_rc[i] += static_cast<double>(p.M(r, i)) * g;
                g_rw[i] += static_cast<double>(p.M(r, d + i)) * g;
            }
        }
    }
    if (any) {
        auto dst = embed_grads.row(center);
        for (std::size_t i = 0; i < d; ++i) dst[i] += g_rw[i];
    }
}

template <typename Real>
EncoderGradients encoder_backward(WordId center, std::span<const WordId> contexts, const EncoderParams<Real>& p,
                                  std::span<const double> g_mu, std::span<const double> g_lv) {
    const auto trace = encoder_forward(p, p.R, center, contexts);
    EncoderGradients grads(p);
    encoder_backward_into(p, p.R, trace, center, contexts, g_mu, g_lv, grads, grads.R);
    return grads;
}

} // namespace bsg
