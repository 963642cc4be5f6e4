#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "bsg/eval.hpp"
#include "bsg/serialize.hpp"

namespace bsg {

enum class NearMeasure { cosine_mean, neg_kl };

inline NearMeasure parse_near_measure(const std::string& s) {
    if (s == "cosine_mean" || s == "cosine") return NearMeasure::cosine_mean;
    if (s == "neg_kl") return NearMeasure::neg_kl;
    throw UsageError("unknown measure '" + s + "' (expected cosine_mean or neg_kl)");
}

struct Neighbor {
    std::string word;
    double score = 0.0;
};

inline DensityTable density_table(const ModelBundle& b) {
    return std::visit([](const auto& m) { return density_table(m); }, b.model);
}

// Top-k words by score, excluding the query; equal scores keep id order.
inline std::vector<Neighbor> nearest(const DensityTable& t, const Vocabulary& vocab, const std::string& word,
                                     std::size_t k, NearMeasure measure) {
    if (k < 1) throw UsageError("k must be >= 1");
    const WordId q = vocab.id_of(word);
    std::vector<std::pair<double, WordId>> scored;
    scored.reserve(vocab.size());
    for (WordId w = 0; w < vocab.size(); ++w) {
        if (w == q) continue;
        const double s = measure == NearMeasure::cosine_mean ? cosine(t.mean_of(q), t.mean_of(w))
                                                             : -kl_divergence(t.density(q), t.density(w));
        scored.emplace_back(s, w);
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<Neighbor> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({vocab.word(scored[i].second), scored[i].first});
    return out;
}

inline std::vector<Neighbor> nearest(const ModelBundle& b, const std::string& word, std::size_t k, NearMeasure measure) {
    return nearest(density_table(b), b.vocab, word, k, measure);
}

// Posterior of sentence[target_index] given its in-vocabulary neighbours
// within `window` tokens.
inline Gaussian infer(const ModelBundle& b, const std::vector<std::string>& sentence, std::size_t target_index,
                      std::size_t window) {
    const auto* m = std::get_if<BsgModel<float>>(&b.model);
    if (!m) throw UsageError(std::string("no encoder: model kind is ") + to_string(b.kind()));
    if (target_index >= sentence.size()) throw UsageError("target index out of range");
    const WordId target = b.vocab.id_of(sentence[target_index]);
    LexsubInstance inst;
    inst.target = sentence[target_index];
    inst.target_index = target_index;
    inst.context_tokens = sentence;
    const auto ctx = context_window_ids(b.vocab, inst, window);
    if (ctx.empty()) throw DataError("no in-vocabulary context within the window");
    return infer_posterior(*m, target, ctx);
}

} // namespace bsg
