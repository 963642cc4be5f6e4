#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bsg/baselines.hpp"
#include "bsg/bsg.hpp"
#include "bsg/corpus.hpp"
#include "bsg/error.hpp"
#include "bsg/gauss.hpp"

namespace bsg {

// ---------------------------------------------------------------------------
// Correlations

namespace detail {

inline void check_series(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DataError("correlation inputs differ in length");
    if (xs.size() < 2) throw DataError("correlation needs at least 2 points");
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw DataError("non-finite value in correlation input");
}

// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace detail

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    detail::check_series(xs, ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("undefined correlation: constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    detail::check_series(xs, ys);
    const auto rx = detail::average_ranks(xs);
    const auto ry = detail::average_ranks(ys);
    return pearson(rx, ry);
}

// ---------------------------------------------------------------------------
// Word densities as seen by the evaluations

// Per-word means and (optionally) log-variances, copied to double.
struct DensityTable {
    CovKind cov = CovKind::spherical;
    Matrix<double> mean;
    Matrix<double> log_var;  // empty for point embeddings
    bool has_variance = false;

    std::size_t size() const { return mean.rows(); }
    std::span<const double> mean_of(WordId w) const { return mean.row(w); }
    GaussView<double> density(WordId w) const {
        if (!has_variance) throw UsageError("model has no variances (point embeddings); use the cosine measure");
        return {mean.row(w), log_var.row(w)};
    }
};

// BSG is evaluated through its priors.
template <typename Real>
DensityTable density_table(const BsgModel<Real>& m) {
    return {m.cov, m.prior_mean.template cast<double>(), m.prior_lv.template cast<double>(), true};
}

template <typename Real>
DensityTable density_table(const W2gModel<Real>& m) {
    return {m.cov, m.mean.template cast<double>(), m.log_var.template cast<double>(), true};
}

template <typename Real>
DensityTable density_table(const SgModel<Real>& m) {
    return {CovKind::spherical, m.input.template cast<double>(), Matrix<double>(), false};
}

// ---------------------------------------------------------------------------
// Similarity

struct SimilarityPair {
    std::string word1, word2;
    double gold = 0.0;
};

struct SimilarityResult {
    double rho = 0.0;
    std::size_t used = 0;
    std::size_t oov = 0;
};

inline SimilarityResult eval_similarity(const DensityTable& t, const Vocabulary& vocab,
                                        std::span<const SimilarityPair> pairs) {
    SimilarityResult r;
    std::vector<double> sys, gold;
    for (const auto& p : pairs) {
        auto a = vocab.lookup(p.word1), b = vocab.lookup(p.word2);
        if (!a || !b) {
            ++r.oov;
            continue;
        }
        sys.push_back(cosine(t.mean_of(*a), t.mean_of(*b)));
        gold.push_back(p.gold);
    }
    r.used = sys.size();
    if (r.used == 0)
        throw DataError("no usable similarity pairs (" + std::to_string(r.oov) + " of " + std::to_string(pairs.size()) +
                        " out of vocabulary)");
    r.rho = spearman(sys, gold);
    return r;
}

// ---------------------------------------------------------------------------
// Entailment

struct EntailmentPair {
    std::string word1, word2;
    bool label = false;  // word1 entails word2
};

enum class EntailMeasure { neg_kl, cosine };

inline EntailMeasure parse_entail_measure(const std::string& s) {
    if (s == "neg_kl") return EntailMeasure::neg_kl;
    if (s == "cosine") return EntailMeasure::cosine;
    throw UsageError("unknown measure '" + s + "' (expected neg_kl or cosine)");
}

struct ThresholdResult {
    double threshold = 0.0;
    double f1 = 0.0;
};

// Sweeps -inf, every midpoint between adjacent distinct scores, and +inf;
// predicts "entails" when score >= threshold. Ties go to the lowest threshold.
inline ThresholdResult best_f1_threshold(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    std::size_t total_pos = 0;
    for (bool l : labels) total_pos += l ? 1 : 0;
    if (total_pos == 0) throw DataError("best_f1_threshold needs at least one positive label");

    auto f1 = [](std::size_t tp, std::size_t predicted, std::size_t pos) {
        if (tp == 0) return 0.0;
        return 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + pos);
    };
    // Threshold below everything: all predicted positive.
    ThresholdResult best{-std::numeric_limits<double>::infinity(), f1(total_pos, scores.size(), total_pos)};
    std::size_t tp = total_pos;
    std::size_t predicted = scores.size();
    for (std::size_t i = 0; i < idx.size();) {
        // drop every item with this score value from the predicted set
        std::size_t j = i;
        const double v = scores[idx[i]];
        while (j < idx.size() && scores[idx[j]] == v) {
            if (labels[idx[j]]) --tp;
            --predicted;
            ++j;
        }
        const double thr = j < idx.size() ? 0.5 * (v + scores[idx[j]]) : std::numeric_limits<double>::infinity();
        const double f = f1(tp, predicted, total_pos);
        if (f > best.f1) best = {thr, f};
        i = j;
    }
    return best;
}

struct EntailmentResult {
    double f1 = 0.0;
    double threshold = 0.0;
    std::vector<double> scores;
    std::vector<bool> labels;
    std::size_t used = 0;
    std::size_t oov = 0;
};

inline double entail_score(const DensityTable& t, WordId a, WordId b, EntailMeasure m) {
    if (m == EntailMeasure::cosine) return cosine(t.mean_of(a), t.mean_of(b));
    return -kl_divergence(t.density(a), t.density(b));
}

inline EntailmentResult eval_entailment(const DensityTable& t, const Vocabulary& vocab,
                                        std::span<const EntailmentPair> pairs, EntailMeasure measure) {
    EntailmentResult r;
    for (const auto& p : pairs) {
        auto a = vocab.lookup(p.word1), b = vocab.lookup(p.word2);
        if (!a || !b) {
            ++r.oov;
            continue;
        }
        r.scores.push_back(entail_score(t, *a, *b, measure));
        r.labels.push_back(p.label);
    }
    r.used = r.scores.size();
    if (r.used == 0) throw DataError("no usable entailment pairs");
    const auto best = best_f1_threshold(r.scores, r.labels);
    r.f1 = best.f1;
    r.threshold = best.threshold;
    return r;
}

// Binned score histogram split by label: bin_lo,bin_hi,positive,negative
inline void write_score_histogram(const EntailmentResult& r, std::size_t bins, std::ostream& out) {
    if (bins < 1) throw UsageError("histogram needs at least one bin");
    out << "bin_lo,bin_hi,positive,negative\n";
    if (r.scores.empty()) return;
    const auto [lo_it, hi_it] = std::minmax_element(r.scores.begin(), r.scores.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    std::vector<std::size_t> pos(bins, 0), neg(bins, 0);
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
        auto b = static_cast<std::size_t>((r.scores[i] - lo) / width);
        b = std::min(b, bins - 1);
        (r.labels[i] ? pos : neg)[b]++;
    }
    for (std::size_t b = 0; b < bins; ++b)
        out << lo + width * static_cast<double>(b) << ',' << lo + width * static_cast<double>(b + 1) << ',' << pos[b]
            << ',' << neg[b] << '\n';
}

// ---------------------------------------------------------------------------
// Directionality

struct DirectionResult {
    double accuracy = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;  // out-of-vocabulary or negative pairs
};

// True when the pair is predicted as word1 -> word2 (ties included).
inline bool predict_forward_kl(const DensityTable& t, WordId a, WordId b) {
    return !(kl_divergence(t.density(a), t.density(b)) > kl_divergence(t.density(b), t.density(a)));
}

namespace detail {
template <typename Predict>
DirectionResult direction_accuracy(const Vocabulary& vocab, std::span<const EntailmentPair> pairs, Predict predict) {
    if (pairs.empty()) throw DataError("directionality needs at least one pair");
    DirectionResult r;
    std::size_t correct = 0;
    for (const auto& p : pairs) {
        auto a = vocab.lookup(p.word1), b = vocab.lookup(p.word2);
        if (!p.label || !a || !b) {
            ++r.skipped;
            continue;
        }
        ++r.used;
        if (predict(*a, *b)) ++correct;
    }
    if (r.used == 0) throw DataError("no usable directionality pairs");
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.used);
    return r;
}
} // namespace detail

// Accuracy of KL[w1||w2] < KL[w2||w1] as the w1 -> w2 prediction on gold
// (label = true) pairs.
inline DirectionResult eval_directionality(const DensityTable& t, const Vocabulary& vocab,
                                           std::span<const EntailmentPair> pairs) {
    return detail::direction_accuracy(vocab, pairs, [&](WordId a, WordId b) { return predict_forward_kl(t, a, b); });
}

// The rarer word entails the more frequent one; equal counts predict w1 -> w2.
inline DirectionResult frequency_direction_baseline(const Vocabulary& vocab, std::span<const EntailmentPair> pairs) {
    return detail::direction_accuracy(vocab, pairs,
                                      [&](WordId a, WordId b) { return !(vocab.count(a) > vocab.count(b)); });
}

// ---------------------------------------------------------------------------
// Lexical substitution

struct LexsubInstance {
    std::string target;
    std::size_t target_index = 0;
    std::vector<std::string> context_tokens;
    std::vector<std::string> candidates;
    std::map<std::string, double> gold_weights;

    void validate() const {
        if (target_index >= context_tokens.size()) throw DataError("target_index out of range");
        if (context_tokens[target_index] != target)
            throw DataError("context_tokens[target_index] is '" + context_tokens[target_index] + "', expected '" +
                            target + "'");
        bool any = false;
        for (const auto& [w, g] : gold_weights) {
            if (!(g >= 0.0) || !std::isfinite(g)) throw DataError("gold weight for '" + w + "' is not a non-negative number");
            any = any || g > 0.0;
        }
        if (!any) throw DataError("instance for '" + target + "' has no positive gold weight");
    }
};

struct RankedCandidate {
    std::string word;
    double score = 0.0;
    bool in_vocab = true;
};

// In-vocabulary ids within `window` tokens either side of the target.
inline std::vector<WordId> context_window_ids(const Vocabulary& vocab, const LexsubInstance& inst, std::size_t window) {
    std::vector<WordId> ids;
    const std::size_t lo = inst.target_index >= window ? inst.target_index - window : 0;
    const std::size_t hi = std::min(inst.context_tokens.size(), inst.target_index + window + 1);
    for (std::size_t i = lo; i < hi; ++i) {
        if (i == inst.target_index) continue;
        if (auto id = vocab.lookup(inst.context_tokens[i])) ids.push_back(*id);
    }
    return ids;
}

namespace detail {
// Splits candidates into scored in-vocabulary ones (stable-sorted by `better`)
// followed by OOV ones in input order.
template <typename Score, typename Better>
std::vector<RankedCandidate> rank_candidates(const Vocabulary& vocab, const LexsubInstance& inst, Score score,
                                             Better better, double oov_score) {
    std::vector<RankedCandidate> known, unknown;
    for (const auto& c : inst.candidates) {
        if (auto id = vocab.lookup(c))
            known.push_back({c, score(*id), true});
        else
            unknown.push_back({c, oov_score, false});
    }
    if (known.empty()) throw DataError("no in-vocabulary candidate for '" + inst.target + "'");
    std::stable_sort(known.begin(), known.end(),
                     [&](const RankedCandidate& a, const RankedCandidate& b) { return better(a.score, b.score); });
    known.insert(known.end(), unknown.begin(), unknown.end());
    return known;
}
} // namespace detail

// Ascending KL[q(z|context, target) || prior_s].
template <typename Real>
std::vector<RankedCandidate> lexsub_rank(const BsgModel<Real>& m, const Vocabulary& vocab, const LexsubInstance& inst,
                                         std::size_t window) {
    auto target = vocab.lookup(inst.target);
    if (!target) throw DataError("target '" + inst.target + "' is out of vocabulary");
    const auto ctx = context_window_ids(vocab, inst, window);
    const Gaussian q = infer_posterior(m, *target, ctx);
    return detail::rank_candidates(
        vocab, inst, [&](WordId s) { return kl_divergence(q.view(), m.prior(s)); },
        [](double a, double b) { return a < b; }, std::numeric_limits<double>::infinity());
}

enum class SubstMode { add, mult };

inline SubstMode parse_subst_mode(const std::string& s) {
    if (s == "add") return SubstMode::add;
    if (s == "mult") return SubstMode::mult;
    throw UsageError("unknown mode '" + s + "' (expected add or mult)");
}

// Cosine-based substitute scores over the mean vectors, descending.
inline std::vector<RankedCandidate> add_mult_baseline(const DensityTable& t, const Vocabulary& vocab,
                                                      const LexsubInstance& inst, std::size_t window, SubstMode mode) {
    auto target = vocab.lookup(inst.target);
    if (!target) throw DataError("target '" + inst.target + "' is out of vocabulary");
    const auto ctx = context_window_ids(vocab, inst, window);
    const double n = static_cast<double>(ctx.size() + 1);
    auto score = [&](WordId s) {
        const auto sv = t.mean_of(s);
        if (mode == SubstMode::add) {
            double acc = cosine(sv, t.mean_of(*target));
            for (auto c : ctx) acc += cosine(sv, t.mean_of(c));
            return acc / n;
        }
        auto pcos = [&](WordId o) { return 0.5 * (cosine(sv, t.mean_of(o)) + 1.0); };
        double log_acc = std::log(pcos(*target));
        for (auto c : ctx) log_acc += std::log(pcos(c));
        return std::exp(log_acc / n);
    };
    return detail::rank_candidates(
        vocab, inst, score, [](double a, double b) { return a > b; }, -std::numeric_limits<double>::infinity());
}

// Generalized average precision of a ranking against graded gold weights.
inline double gap(std::span<const double> ranked_gold_weights, std::span<const double> all_gold_weights) {
    std::vector<double> gold;
    for (double w : all_gold_weights)
        if (w > 0.0) gold.push_back(w);
    if (gold.empty()) throw DataError("gap needs at least one positive gold weight");
    std::sort(gold.begin(), gold.end(), std::greater<>());
    double denom = 0.0, run = 0.0;
    for (std::size_t j = 0; j < gold.size(); ++j) {
        run += gold[j];
        denom += run / static_cast<double>(j + 1);
    }
    double num = 0.0;
    run = 0.0;
    for (std::size_t i = 0; i < ranked_gold_weights.size(); ++i) {
        run += ranked_gold_weights[i];
        if (ranked_gold_weights[i] > 0.0) num += run / static_cast<double>(i + 1);
    }
    return num / denom;
}

// GAP of one ranking for one instance; gold words absent from the ranking
// still count towards the ideal.
inline double instance_gap(const std::vector<RankedCandidate>& ranked, const LexsubInstance& inst) {
    std::vector<double> ranked_w, all_w;
    for (const auto& r : ranked) {
        auto it = inst.gold_weights.find(r.word);
        ranked_w.push_back(it == inst.gold_weights.end() ? 0.0 : it->second);
    }
    for (const auto& [w, g] : inst.gold_weights) all_w.push_back(g);
    return gap(ranked_w, all_w);
}

struct LexsubResult {
    double mean_gap = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;  // OOV target, no usable context or no known candidate
};

template <typename Rank>
LexsubResult eval_lexsub(std::span<const LexsubInstance> instances, Rank rank) {
    LexsubResult r;
    double acc = 0.0;
    for (const auto& inst : instances) {
        std::vector<RankedCandidate> ranked;
        try {
            ranked = rank(inst);
        } catch (const DataError&) {
            ++r.skipped;
            continue;
        }
        acc += instance_gap(ranked, inst);
        ++r.used;
    }
    if (r.used == 0) throw DataError("no usable lexical substitution instances");
    r.mean_gap = acc / static_cast<double>(r.used);
    return r;
}

// ---------------------------------------------------------------------------
// Log-determinant vs frequency

struct LogdetRow {
    std::string word;
    double log_count = 0.0;
    double log_det = 0.0;
};

struct LogdetReport {
    std::vector<LogdetRow> rows;
    std::optional<double> pearson_r;  // empty when undefined
};

inline LogdetReport logdet_frequency_report(const DensityTable& t, const Vocabulary& vocab) {
    if (t.size() != vocab.size()) throw DataError("model and vocabulary sizes differ");
    LogdetReport rep;
    std::vector<double> xs, ys;
    for (WordId w = 0; w < vocab.size(); ++w) {
        LogdetRow row{vocab.word(w), std::log(static_cast<double>(vocab.count(w))), log_det_cov(t.density(w))};
        xs.push_back(row.log_count);
        ys.push_back(row.log_det);
        rep.rows.push_back(std::move(row));
    }
    try {
        rep.pearson_r = pearson(xs, ys);
    } catch (const DataError&) {
        rep.pearson_r.reset();
    }
    return rep;
}

inline void write_logdet_csv(const LogdetReport& rep, std::ostream& out) {
    out << "word,log_count,log_det_cov\n";
    for (const auto& r : rep.rows) out << r.word << ',' << r.log_count << ',' << r.log_det << '\n';
    out << "# pearson_r,";
    if (rep.pearson_r)
        out << *rep.pearson_r;
    else
        out << "undefined";
    out << '\n';
}

} // namespace bsg
