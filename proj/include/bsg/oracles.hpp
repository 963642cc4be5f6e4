#pragma once

// Brute-force reference computations and synthetic data. Nothing here calls
// the closed-form density code it is used to check.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bsg/bsg.hpp"
#include "bsg/error.hpp"
#include "bsg/gauss.hpp"
#include "bsg/random.hpp"

namespace bsg::oracle {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // for the weight function exp(-x^2)
};

// Gauss-Hermite nodes by Newton iteration on the orthonormal recurrence.
inline QuadratureRule gauss_hermite(std::size_t n) {
    if (n < 1) throw UsageError("quadrature needs at least one node");
    constexpr double kPim4 = 0.7511255444649425;  // pi^(-1/4)
    constexpr int kMaxIt = 100;
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    auto& x = rule.nodes;
    auto& w = rule.weights;
    const double dn = static_cast<double>(n);
    double z = 0.0;
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * dn + 1.0) - 1.85575 * std::pow(2.0 * dn + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(dn, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[i - 2];
        double pp = 0.0;
        for (int it = 0; it < kMaxIt; ++it) {
            double p1 = kPim4, p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double dj = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / (dj + 1.0)) * p2 - std::sqrt(dj / (dj + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * dn) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
    }
    return rule;
}

namespace detail {

inline double log_normal_1d(double z, double mean, double log_var) {
    const double d = z - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi) + log_var + d * d / std::exp(log_var));
}

inline double lv_at(const std::vector<double>& lv, std::size_t i) { return lv.size() == 1 ? lv[0] : lv[i]; }

// Tensor-product nodes under N(mean, diag(exp(lv))) with log-weights summing to 0.
struct GaussianGrid {
    std::vector<std::vector<double>> points;
    std::vector<double> log_weights;
};

inline GaussianGrid grid_under(const std::vector<double>& mean, const std::vector<double>& lv, std::size_t nodes) {
    const std::size_t d = mean.size();
    if (d < 1 || d > 2) throw UsageError("quadrature oracle supports dimension 1 or 2 only");
    const auto rule = gauss_hermite(nodes);
    const double log_sqrt_pi = 0.5 * std::log(std::numbers::pi);
    GaussianGrid g;
    auto coord = [&](std::size_t axis, std::size_t i) {
        return mean[axis] + std::sqrt(2.0) * std::exp(0.5 * lv_at(lv, axis)) * rule.nodes[i];
    };
    if (d == 1) {
        for (std::size_t i = 0; i < nodes; ++i) {
            g.points.push_back({coord(0, i)});
            g.log_weights.push_back(std::log(rule.weights[i]) - log_sqrt_pi);
        }
    } else {
        for (std::size_t i = 0; i < nodes; ++i)
            for (std::size_t j = 0; j < nodes; ++j) {
                g.points.push_back({coord(0, i), coord(1, j)});
                g.log_weights.push_back(std::log(rule.weights[i]) + std::log(rule.weights[j]) - 2.0 * log_sqrt_pi);
            }
    }
    return g;
}

inline double log_normal(const std::vector<double>& z, const std::vector<double>& mean, const std::vector<double>& lv) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) acc += log_normal_1d(z[i], mean[i], lv_at(lv, i));
    return acc;
}

} // namespace detail

// Gauss-Hermite estimate of int p log(p/q) under p's measure.
inline double kl_quadrature_oracle(const Gaussian& p, const Gaussian& q, std::size_t nodes = 64) {
    if (p.dim() != q.dim()) throw DataError("dimension mismatch in kl_quadrature_oracle");
    if (p.dim() > 2) throw UsageError("kl_quadrature_oracle supports dimension <= 2");
    if (nodes < 16) throw UsageError("kl_quadrature_oracle needs >= 16 nodes");
    const auto grid = detail::grid_under(p.mean, p.log_var, nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const auto& z = grid.points[i];
        acc += std::exp(grid.log_weights[i]) *
               (detail::log_normal(z, p.mean, p.log_var) - detail::log_normal(z, q.mean, q.log_var));
    }
    return acc;
}

// int exp(f(z)) N(z; mean, diag(exp(lv))) dz, in log space.
inline double log_expectation(const std::vector<double>& mean, const std::vector<double>& lv, std::size_t nodes,
                              const std::function<double(const std::vector<double>&)>& log_f) {
    const auto grid = detail::grid_under(mean, lv, nodes);
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(grid.points.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        terms[i] = grid.log_weights[i] + log_f(grid.points[i]);
        mx = std::max(mx, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
}

inline constexpr std::size_t kOracleMaxVocab = 200;

// log int prod_j p(c_j|z) p(z|w) dz with the softmax-over-Gaussians decoder
// p(c|z) = N(z; mu_c, S_c) p(c) / sum_k N(z; mu_k, S_k) p(k).
inline double marginal_loglik_oracle(const BsgModel<double>& m, std::span<const double> unigram, WordId center,
                                     std::span<const WordId> contexts, std::size_t nodes = 64) {
    const std::size_t V = m.vocab_size();
    if (m.dim > 2) throw UsageError("marginal_loglik_oracle supports latent dimension <= 2");
    if (V > kOracleMaxVocab) throw UsageError("marginal_loglik_oracle supports |V| <= 200");
    if (unigram.size() != V) throw DataError("unigram table size does not match the model vocabulary");
    auto row = [](const Matrix<double>& t, std::size_t r) {
        auto s = t.row(r);
        return std::vector<double>(s.begin(), s.end());
    };
    const auto& cm = m.tie_prior_context ? m.prior_mean : m.ctx_mean;
    const auto& cl = m.tie_prior_context ? m.prior_lv : m.ctx_lv;
    std::vector<std::vector<double>> means(V), lvs(V);
    for (std::size_t c = 0; c < V; ++c) {
        means[c] = row(cm, c);
        lvs[c] = row(cl, c);
    }
    auto log_lik = [&](const std::vector<double>& z) {
        std::vector<double> s(V);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < V; ++c) {
            s[c] = detail::log_normal(z, means[c], lvs[c]) + std::log(unigram[c]);
            mx = std::max(mx, s[c]);
        }
        double acc = 0.0;
        for (double v : s) acc += std::exp(v - mx);
        const double log_z = mx + std::log(acc);
        double out = 0.0;
        for (auto c : contexts) out += s[c] - log_z;
        return out;
    };
    return log_expectation(row(m.prior_mean, center), row(m.prior_lv, center), nodes, log_lik);
}

// Central differences, one coordinate at a time.
inline std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h = 1e-5) {
    if (!(h > 0.0)) throw UsageError("finite-difference step must be positive");
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

// A word whose occurrences are surrounded by indicator words of one of its
// sense groups, chosen by `weights`.
struct SenseWord {
    std::string word;
    std::vector<std::size_t> groups;
    std::vector<double> weights;
};

struct SynthSpec {
    std::size_t n_groups = 2;
    std::size_t indicators_per_group = 10;
    std::vector<SenseWord> targets;
    std::size_t n_docs = 1000;
    std::size_t tokens_per_doc = 11;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_groups < 1 || indicators_per_group < 1) throw UsageError("synthetic corpus needs groups and indicators");
        if (tokens_per_doc < 2) throw UsageError("tokens_per_doc must be >= 2");
        if (targets.empty()) throw UsageError("synthetic corpus needs target words");
        for (const auto& t : targets) {
            if (t.groups.empty() || t.groups.size() != t.weights.size())
                throw UsageError("target '" + t.word + "' needs one weight per group");
            double s = 0.0;
            for (std::size_t i = 0; i < t.groups.size(); ++i) {
                if (t.groups[i] >= n_groups) throw UsageError("target '" + t.word + "' references a missing group");
                if (!(t.weights[i] >= 0.0)) throw UsageError("negative mixing weight");
                s += t.weights[i];
            }
            if (std::abs(s - 1.0) > 1e-9) throw UsageError("mixing weights of '" + t.word + "' do not sum to 1");
        }
    }
};

inline std::string indicator_word(std::size_t group, std::size_t i) {
    return "g" + std::to_string(group) + "_" + std::to_string(i);
}

struct SenseTag {
    std::size_t doc = 0;
    std::size_t position = 0;         // within the document
    std::size_t global_position = 0;  // token offset in the whole corpus
    std::string word;
    std::size_t group = 0;
};

struct SynthCorpus {
    std::vector<std::vector<std::string>> docs;
    std::vector<SenseTag> tags;

    std::size_t tokens() const {
        std::size_t n = 0;
        for (const auto& d : docs) n += d.size();
        return n;
    }

    void write_text(std::ostream& out) const {
        for (const auto& d : docs) {
            for (std::size_t i = 0; i < d.size(); ++i) out << (i ? " " : "") << d[i];
            out << '\n';
        }
    }

    // TSV position<TAB>word<TAB>true_group, position = global token offset.
    void write_tags(std::ostream& out) const {
        out << "position\tword\ttrue_group\n";
        for (const auto& t : tags) out << t.global_position << '\t' << t.word << '\t' << t.group << '\n';
    }
};

// Each document holds one target occurrence in the middle, surrounded by
// indicator words drawn uniformly from the chosen sense group.
inline SynthCorpus synth_corpus(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SynthCorpus out;
    out.docs.reserve(spec.n_docs);
    std::size_t offset = 0;
    const std::size_t mid = spec.tokens_per_doc / 2;
    for (std::size_t d = 0; d < spec.n_docs; ++d) {
        const auto& target = spec.targets[rng.below(spec.targets.size())];
        double u = rng.uniform();
        std::size_t pick = target.groups.size() - 1;
        for (std::size_t i = 0; i < target.groups.size(); ++i) {
            if (u < target.weights[i]) {
                pick = i;
                break;
            }
            u -= target.weights[i];
        }
        const std::size_t group = target.groups[pick];
        std::vector<std::string> doc(spec.tokens_per_doc);
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (i == mid) {
                doc[i] = target.word;
            } else {
                doc[i] = indicator_word(group, rng.below(spec.indicators_per_group));
            }
        }
        out.tags.push_back({d, mid, offset + mid, target.word, group});
        offset += doc.size();
        out.docs.push_back(std::move(doc));
    }
    return out;
}

// n_words polysemous words, each with n_senses private sense groups, equal weights.
inline SynthSpec polysemy_spec(std::size_t n_words, std::size_t n_senses, std::size_t total_tokens,
                               std::uint64_t seed, std::size_t tokens_per_doc = 11, std::size_t indicators = 10) {
    SynthSpec s;
    s.n_groups = n_words * n_senses;
    s.indicators_per_group = indicators;
    for (std::size_t w = 0; w < n_words; ++w) {
        SenseWord t{"poly" + std::to_string(w), {}, {}};
        for (std::size_t k = 0; k < n_senses; ++k) {
            t.groups.push_back(w * n_senses + k);
            t.weights.push_back(1.0 / static_cast<double>(n_senses));
        }
        s.targets.push_back(std::move(t));
    }
    s.tokens_per_doc = tokens_per_doc;
    s.n_docs = std::max<std::size_t>(1, total_tokens / tokens_per_doc);
    s.seed = seed;
    return s;
}

// Hyponym `hypo{h}_{k}` owns group h*n_hypo+k; hypernym `hyper{h}` draws its
// contexts from the union of its hyponyms' groups.
inline SynthSpec hypernymy_spec(std::size_t n_hyper, std::size_t n_hypo, std::size_t total_tokens, std::uint64_t seed,
                                std::size_t tokens_per_doc = 11, std::size_t indicators = 10) {
    SynthSpec s;
    s.n_groups = n_hyper * n_hypo;
    s.indicators_per_group = indicators;
    for (std::size_t h = 0; h < n_hyper; ++h) {
        SenseWord hyper{"hyper" + std::to_string(h), {}, {}};
        for (std::size_t k = 0; k < n_hypo; ++k) {
            const std::size_t g = h * n_hypo + k;
            s.targets.push_back({"hypo" + std::to_string(h) + "_" + std::to_string(k), {g}, {1.0}});
            hyper.groups.push_back(g);
            hyper.weights.push_back(1.0 / static_cast<double>(n_hypo));
        }
        s.targets.push_back(std::move(hyper));
    }
    s.tokens_per_doc = tokens_per_doc;
    s.n_docs = std::max<std::size_t>(1, total_tokens / tokens_per_doc);
    s.seed = seed;
    return s;
}

} // namespace bsg::oracle
