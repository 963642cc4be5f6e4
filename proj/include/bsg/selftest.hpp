#pragma once

// Oracle suites shared by `bsg selftest` and the acceptance binary.

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "bsg/eval.hpp"
#include "bsg/gradcheck.hpp"
#include "bsg/oracles.hpp"

namespace bsg::selftest {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline Gaussian random_gaussian(std::size_t dim, CovKind cov, Rng& rng) {
    std::vector<double> mean(dim), lv(log_var_width(cov, dim));
    for (auto& v : mean) v = rng.uniform(-2.0, 2.0);
    for (auto& v : lv) v = rng.uniform(-1.5, 1.5);
    return cov == CovKind::spherical ? Gaussian::spherical(mean, lv[0]) : Gaussian::diagonal(mean, lv);
}

} // namespace detail

// Closed-form KL against 64-node Gauss-Hermite quadrature on random 1-D/2-D pairs.
inline CheckResult check_kl_quadrature(std::size_t n_pairs = 1000, std::uint64_t seed = 11, double tol = 1e-6) {
    detail::Timer timer;
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const std::size_t dim = 1 + rng.below(2);
        const CovKind cov = rng.uniform() < 0.5 ? CovKind::spherical : CovKind::diagonal;
        const auto p = detail::random_gaussian(dim, cov, rng);
        const auto q = detail::random_gaussian(dim, cov, rng);
        worst = std::max(worst, std::abs(kl_divergence(p, q) - oracle::kl_quadrature_oracle(p, q, 64)));
    }
    CheckResult r{"kl_vs_quadrature", worst <= tol,
                  std::to_string(n_pairs) + " pairs, max |closed - quadrature| = " + detail::fmt("%.3g", worst)};
    r.seconds = timer.seconds();
    return r;
}

// 100 random cases per family, |V| = 20, d = 4, all in double.
inline CheckResult check_gradients(std::size_t n_cases = 100, std::uint64_t seed = 12, double tol = 1e-4) {
    detail::Timer timer;
    Rng rng(seed);
    double bsg = 0.0, enc = 0.0, sg = 0.0, w2g = 0.0;
    for (std::size_t i = 0; i < n_cases; ++i) {
        bsg = std::max(bsg, gradcheck::check_bsg(gradcheck::random_bsg_case(rng)).max_rel_error);
        enc = std::max(enc, gradcheck::check_encoder(gradcheck::random_encoder_case(rng)).max_rel_error);
        sg = std::max(sg, gradcheck::check_sg(gradcheck::random_sg_case(rng)).max_rel_error);
        w2g = std::max(w2g, gradcheck::check_w2g(gradcheck::random_w2g_case(rng)).max_rel_error);
    }
    const double worst = std::max({bsg, enc, sg, w2g});
    CheckResult r{"gradient_checks", worst <= tol,
                  std::to_string(n_cases) + " cases/family, max rel err bsg=" + detail::fmt("%.2g", bsg) +
                      " encoder=" + detail::fmt("%.2g", enc) + " sg=" + detail::fmt("%.2g", sg) +
                      " w2g=" + detail::fmt("%.2g", w2g)};
    r.seconds = timer.seconds();
    return r;
}

struct ElboCase {
    BsgModel<double> model;
    std::vector<double> unigram;
    WordId center = 0;
    std::vector<WordId> contexts;
};

// Tiny random BSG model with a 1-D latent space.
inline ElboCase random_elbo_case(Rng& rng, std::size_t max_vocab = 50) {
    ElboCase c;
    const std::size_t V = 5 + rng.below(max_vocab - 4);
    TrainConfig cfg;
    cfg.dim = 1;
    cfg.hidden = 3;
    c.model = BsgModel<double>::zeros(V, cfg);
    auto& m = c.model;
    for (auto* t : {&m.prior_mean, &m.ctx_mean, &m.enc.R}) gradcheck::detail::jitter(t->flat(), rng, 1.0);
    for (auto* t : {&m.prior_lv, &m.ctx_lv}) gradcheck::detail::jitter(t->flat(), rng, 0.5);
    for (auto* t : {&m.enc.M, &m.enc.U, &m.enc.W}) gradcheck::detail::jitter(t->flat(), rng, 0.7);
    c.unigram.resize(V);
    double s = 0.0;
    for (auto& p : c.unigram) s += (p = rng.uniform(0.1, 1.0));
    for (auto& p : c.unigram) p /= s;
    c.center = static_cast<WordId>(rng.below(V));
    c.contexts = gradcheck::detail::draw_ids(1 + rng.below(4), V, rng);
    return c;
}

inline CheckResult check_elbo_bound(std::size_t n_models = 20, std::size_t n_samples = 100000,
                                    std::uint64_t seed = 13) {
    detail::Timer timer;
    Rng rng(seed);
    std::size_t ok = 0;
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_models; ++i) {
        const auto c = random_elbo_case(rng);
        const auto est = elbo_estimate(c.model, c.unigram, c.center, c.contexts, n_samples, rng);
        const double bound = oracle::marginal_loglik_oracle(c.model, c.unigram, c.center, c.contexts, 64);
        // in units of the Monte-Carlo standard error
        const double z = (est.value - bound) / std::max(est.std_error, 1e-300);
        worst_gap = std::max(worst_gap, z);
        if (est.value <= bound + 3.0 * est.std_error) ++ok;
    }
    CheckResult r{"elbo_bound", ok == n_models,
                  std::to_string(ok) + "/" + std::to_string(n_models) + " models with ELBO <= log p + 3 SE (max z = " +
                      detail::fmt("%.2f", worst_gap) + ")"};
    r.seconds = timer.seconds();
    return r;
}

// ---- metric oracles -------------------------------------------------------------

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

// GAP straight from its definition, in exact arithmetic.
inline double gap_exact(const std::vector<int>& ranked, const std::vector<int>& gold) {
    std::vector<int> ideal;
    for (int g : gold)
        if (g > 0) ideal.push_back(g);
    std::sort(ideal.rbegin(), ideal.rend());
    Rational num = 0, den = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i] <= 0) continue;
        Rational prefix = 0;
        for (std::size_t k = 0; k <= i; ++k) prefix += ranked[k];
        num += prefix / Rational(static_cast<long>(i + 1));
    }
    for (std::size_t j = 0; j < ideal.size(); ++j) {
        Rational prefix = 0;
        for (std::size_t k = 0; k <= j; ++k) prefix += ideal[k];
        den += prefix / Rational(static_cast<long>(j + 1));
    }
    return static_cast<double>(Rational(num / den));
}

// GAP straight from its definition in double arithmetic: every prefix sum is
// recomputed from scratch. With integer weights the prefix sums are exact, so
// the result must agree with gap() bit for bit.
inline double gap_brute(const std::vector<int>& ranked, const std::vector<int>& gold) {
    std::vector<int> ideal;
    for (int g : gold)
        if (g > 0) ideal.push_back(g);
    std::sort(ideal.rbegin(), ideal.rend());
    auto avg_prec = [](const std::vector<int>& xs) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] <= 0) continue;
            double prefix = 0.0;
            for (std::size_t k = 0; k <= i; ++k) prefix += xs[k];
            acc += prefix / static_cast<double>(i + 1);
        }
        return acc;
    };
    return avg_prec(ranked) / avg_prec(ideal);
}

// Pearson by raw sums in long double.
inline double pearson_sums(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

// Average ranks by counting, O(n^2).
inline std::vector<double> ranks_by_counting(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double below = 0, equal = 0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (x[j] < x[i]) ++below;
            if (x[j] == x[i]) ++equal;
        }
        r[i] = below + (equal + 1.0) / 2.0;
    }
    return r;
}

inline double f1_at(const std::vector<double>& s, const std::vector<bool>& l, double thr) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool pred = s[i] >= thr;
        if (pred && l[i]) ++tp;
        if (pred && !l[i]) ++fp;
        if (!pred && l[i]) ++fn;
    }
    return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

} // namespace detail

// GAP bitwise vs brute force and within 4 ulp of the exact rational value; Spearman/Pearson vs counting/sum implementations;
// best-F1 threshold vs random probes.
inline CheckResult check_metrics(std::size_t n_instances = 1000, std::uint64_t seed = 14) {
    detail::Timer timer;
    Rng rng(seed);
    std::size_t gap_bad = 0, corr_bad = 0, f1_bad = 0;
    double corr_worst = 0.0, gap_worst = 0.0;
    for (std::size_t t = 0; t < n_instances; ++t) {
        // GAP: integer gold weights 0..5 as in lexical substitution data
        const std::size_t n = 1 + rng.below(20);
        std::vector<int> gold(n);
        for (auto& g : gold) g = static_cast<int>(rng.below(6));
        gold[rng.below(n)] = 1 + static_cast<int>(rng.below(5));
        std::vector<int> ranked = gold;
        rng.shuffle(ranked.begin(), ranked.end());
        if (rng.uniform() < 0.3) ranked.resize(1 + rng.below(n));  // gold words the system never ranked
        std::vector<double> rd(ranked.begin(), ranked.end()), gd(gold.begin(), gold.end());
        const double got = gap(rd, gd), want = detail::gap_exact(ranked, gold);
        gap_worst = std::max(gap_worst, std::abs(got - want));
        if (got != detail::gap_brute(ranked, gold)) ++gap_bad;
        if (std::abs(got - want) > 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, want)) ++gap_bad;

        // correlations on series with ties
        const std::size_t m = 3 + rng.below(30);
        std::vector<double> x(m), y(m);
        for (std::size_t i = 0; i < m; ++i) {
            x[i] = static_cast<double>(rng.below(10));
            y[i] = rng.uniform() < 0.5 ? x[i] + rng.normal() : static_cast<double>(rng.below(7));
        }
        x[0] = 0.0;
        x[1] = 9.5;  // never constant
        y[0] = -1.0;
        y[1] = 20.0;
        const double sp = spearman(x, y), sp_ref = detail::pearson_sums(detail::ranks_by_counting(x), detail::ranks_by_counting(y));
        const double pe = pearson(x, y), pe_ref = detail::pearson_sums(x, y);
        corr_worst = std::max({corr_worst, std::abs(sp - sp_ref), std::abs(pe - pe_ref)});
        if (std::abs(sp - sp_ref) > 1e-12 || std::abs(pe - pe_ref) > 1e-12) ++corr_bad;

        // best threshold vs 100 random ones
        std::vector<double> s(m);
        std::vector<bool> l(m);
        for (std::size_t i = 0; i < m; ++i) {
            s[i] = std::round(rng.normal() * 4.0) / 4.0;
            l[i] = rng.uniform() < 0.5;
        }
        l[0] = true;
        const auto best = best_f1_threshold(s, l);
        if (std::abs(detail::f1_at(s, l, best.threshold) - best.f1) > 1e-12) ++f1_bad;
        for (int probe = 0; probe < 100; ++probe)
            if (detail::f1_at(s, l, rng.uniform(-12.0, 12.0)) > best.f1 + 1e-12) {
                ++f1_bad;
                break;
            }
    }
    CheckResult r{"metric_oracles", gap_bad == 0 && corr_bad == 0 && f1_bad == 0,
                  std::to_string(n_instances) + " instances: gap mismatches " + std::to_string(gap_bad) +
                      " (max diff " + detail::fmt("%.2g", gap_worst) + "), correlation mismatches " +
                      std::to_string(corr_bad) + " (max diff " + detail::fmt("%.2g", corr_worst) +
                      "), threshold failures " + std::to_string(f1_bad)};
    r.seconds = timer.seconds();
    return r;
}

inline std::vector<CheckResult> run_all(bool quick) {
    if (quick) return {check_kl_quadrature(200), check_gradients(20), check_elbo_bound(5, 20000), check_metrics(200)};
    return {check_kl_quadrature(), check_gradients(), check_elbo_bound(), check_metrics()};
}

} // namespace bsg::selftest
