#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bsg/error.hpp"

namespace bsg {

enum class CovKind { spherical, diagonal };

inline const char* to_string(CovKind k) { return k == CovKind::spherical ? "spherical" : "diagonal"; }

inline CovKind parse_cov_kind(const std::string& s) {
    if (s == "spherical") return CovKind::spherical;
    if (s == "diagonal") return CovKind::diagonal;
    throw UsageError("unknown covariance kind '" + s + "'");
}

// Number of log-variance parameters per density.
inline std::size_t log_var_width(CovKind k, std::size_t dim) { return k == CovKind::spherical ? 1 : dim; }

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Non-owning view of a diagonal Gaussian. A spherical density carries a single
// log-variance that is broadcast over every coordinate.
template <typename Real>
struct GaussView {
    std::span<const Real> mean;
    std::span<const Real> log_var;

    std::size_t dim() const noexcept { return mean.size(); }
    double lv(std::size_t i) const { return static_cast<double>(log_var.size() == 1 ? log_var[0] : log_var[i]); }
    double mu(std::size_t i) const { return static_cast<double>(mean[i]); }
};

// Owning diagonal/spherical Gaussian, parameterised by log-variance.
struct Gaussian {
    std::vector<double> mean;
    std::vector<double> log_var;  // size 1 (spherical) or dim (diagonal)
    CovKind cov_kind = CovKind::diagonal;

    Gaussian() = default;
    Gaussian(std::vector<double> m, std::vector<double> lv, CovKind kind)
        : mean(std::move(m)), log_var(std::move(lv)), cov_kind(kind) {
        validate();
    }

    static Gaussian spherical(std::vector<double> m, double lv) {
        return Gaussian(std::move(m), {lv}, CovKind::spherical);
    }
    static Gaussian diagonal(std::vector<double> m, std::vector<double> lv) {
        return Gaussian(std::move(m), std::move(lv), CovKind::diagonal);
    }

    std::size_t dim() const noexcept { return mean.size(); }
    GaussView<double> view() const { return {mean, log_var}; }
    double variance(std::size_t i) const { return std::exp(log_var.size() == 1 ? log_var[0] : log_var[i]); }

    // Same density with one log-variance entry per coordinate.
    Gaussian as_diagonal() const {
        std::vector<double> lv(dim());
        for (std::size_t i = 0; i < dim(); ++i) lv[i] = log_var.size() == 1 ? log_var[0] : log_var[i];
        return diagonal(mean, std::move(lv));
    }

    void validate() const {
        if (mean.empty()) throw DataError("gaussian has zero dimension");
        const std::size_t want = log_var_width(cov_kind, mean.size());
        if (log_var.size() != want) throw DataError("gaussian log-variance has wrong arity");
        for (double v : log_var) {
            const double var = std::exp(v);
            if (!std::isfinite(v) || !(var > 0.0) || !std::isfinite(var))
                throw NumericalError("gaussian variance not strictly positive and finite");
        }
        for (double m : mean)
            if (!std::isfinite(m)) throw NumericalError("gaussian mean not finite");
    }
};

namespace detail {
template <typename A, typename B>
void check_dims(const GaussView<A>& p, const GaussView<B>& q, const char* what) {
    if (p.dim() != q.dim()) throw DataError(std::string("dimension mismatch in ") + what);
}
} // namespace detail

// D_KL[p || q] for diagonal Gaussians.
template <typename A, typename B>
double kl_divergence(const GaussView<A>& p, const GaussView<B>& q) {
    detail::check_dims(p, q, "kl_divergence");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double lp = p.lv(i);
        const double lq = q.lv(i);
        const double diff = q.mu(i) - p.mu(i);
        acc += std::exp(lp - lq) + diff * diff * std::exp(-lq) - 1.0 + lq - lp;
    }
    return 0.5 * acc;
}

inline double kl_divergence(const Gaussian& p, const Gaussian& q) { return kl_divergence(p.view(), q.view()); }

// Adds scale * dKL[p||q]/d(params) into the given buffers. Log-variance
// buffers of width 1 receive the sum over coordinates (spherical case); an
// empty span skips that parameter.
template <typename A, typename B>
void kl_divergence_backward(const GaussView<A>& p, const GaussView<B>& q, double scale, std::span<double> g_mean_p,
                            std::span<double> g_lv_p, std::span<double> g_mean_q, std::span<double> g_lv_q) {
    detail::check_dims(p, q, "kl_divergence_backward");
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double lp = p.lv(i);
        const double lq = q.lv(i);
        const double diff = q.mu(i) - p.mu(i);
        const double inv_q = std::exp(-lq);
        const double ratio = std::exp(lp - lq);
        if (!g_mean_p.empty()) g_mean_p[i] -= scale * diff * inv_q;
        if (!g_mean_q.empty()) g_mean_q[i] += scale * diff * inv_q;
        if (!g_lv_p.empty()) g_lv_p[g_lv_p.size() == 1 ? 0 : i] += scale * 0.5 * (ratio - 1.0);
        if (!g_lv_q.empty()) g_lv_q[g_lv_q.size() == 1 ? 0 : i] += scale * 0.5 * (1.0 - ratio - diff * diff * inv_q);
    }
}

template <typename A, typename Z>
double log_density(const GaussView<A>& g, std::span<const Z> z) {
    if (z.size() != g.dim()) throw DataError("dimension mismatch in log_density");
    double acc = 0.0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const double lv = g.lv(i);
        const double diff = static_cast<double>(z[i]) - g.mu(i);
        acc += kLog2Pi + lv + diff * diff * std::exp(-lv);
    }
    return -0.5 * acc;
}

inline double log_density(const Gaussian& g, std::span<const double> z) { return log_density(g.view(), z); }

template <typename A, typename B>
double cosine(std::span<const A> u, std::span<const B> v) {
    if (u.size() != v.size()) throw DataError("dimension mismatch in cosine");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i], b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) throw DataError("undefined cosine: zero vector");
    const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(c, -1.0, 1.0);
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    return cosine(std::span<const double>(u), std::span<const double>(v));
}

// Sum of per-coordinate log-variances.
template <typename A>
double log_det_cov(const GaussView<A>& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.dim(); ++i) acc += g.lv(i);
    return acc;
}

inline double log_det_cov(const Gaussian& g) { return log_det_cov(g.view()); }

} // namespace bsg
