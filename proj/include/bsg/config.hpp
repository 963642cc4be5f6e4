#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "bsg/error.hpp"
#include "bsg/gauss.hpp"

namespace bsg {

enum class Objective { hinge, soft };
enum class Pairing { matched, all_pairs };
enum class Energy { expected_likelihood, negated_kl };
enum class ModelKind { bsg, sg, w2g };

inline const char* to_string(Objective o) { return o == Objective::hinge ? "hinge" : "soft"; }
inline const char* to_string(Pairing p) { return p == Pairing::matched ? "matched" : "all_pairs"; }
inline const char* to_string(Energy e) { return e == Energy::expected_likelihood ? "expected_likelihood" : "negated_kl"; }
inline const char* to_string(ModelKind k) {
    switch (k) {
    case ModelKind::bsg: return "bsg";
    case ModelKind::sg: return "sg";
    case ModelKind::w2g: return "w2g";
    }
    return "?";
}

inline Objective parse_objective(const std::string& s) {
    if (s == "hinge") return Objective::hinge;
    if (s == "soft") return Objective::soft;
    throw UsageError("unknown objective '" + s + "'");
}
inline Pairing parse_pairing(const std::string& s) {
    if (s == "matched") return Pairing::matched;
    if (s == "all_pairs") return Pairing::all_pairs;
    throw UsageError("unknown pairing '" + s + "'");
}
inline Energy parse_energy(const std::string& s) {
    if (s == "expected_likelihood") return Energy::expected_likelihood;
    if (s == "negated_kl") return Energy::negated_kl;
    throw UsageError("unknown energy '" + s + "'");
}
inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "bsg") return ModelKind::bsg;
    if (s == "sg") return ModelKind::sg;
    if (s == "w2g") return ModelKind::w2g;
    throw UsageError("unknown model kind '" + s + "'");
}

// Learning rates tuned per model at full scale.
inline constexpr double kLearningRateBsg = 0.00055;
inline constexpr double kLearningRateW2gSpherical = 0.0065;
inline constexpr double kLearningRateW2gDiagonal = 0.0015;
inline constexpr double kLearningRateSg = 0.0015;

inline double default_learning_rate(ModelKind kind, CovKind cov) {
    switch (kind) {
    case ModelKind::bsg: return kLearningRateBsg;
    case ModelKind::sg: return kLearningRateSg;
    case ModelKind::w2g: return cov == CovKind::spherical ? kLearningRateW2gSpherical : kLearningRateW2gDiagonal;
    }
    return kLearningRateBsg;
}

struct TrainConfig {
    std::size_t dim = 100;
    std::size_t hidden = 100;
    std::size_t window = 5;
    std::size_t negatives_per_positive = 1;
    std::size_t batch_size = 22000;  // prediction tasks (center, context) per batch
    std::size_t epochs = 1;
    double margin = 1.0;
    double learning_rate = kLearningRateBsg;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    Objective objective = Objective::hinge;
    Pairing pairing = Pairing::matched;
    CovKind cov = CovKind::spherical;
    bool tie_prior_context = false;
    bool tie_encoder_embeddings = false;
    std::size_t threads = 1;
    bool deterministic = true;
    // W2G only
    Energy energy = Energy::expected_likelihood;
    double clip_mean_norm = 20.0;
    double var_lo = 1e-3;
    double var_hi = 10.0;

    void validate() const {
        if (dim < 1 || hidden < 1) throw UsageError("dim and hidden must be >= 1");
        if (window < 1) throw UsageError("window must be >= 1");
        if (negatives_per_positive < 1) throw UsageError("negatives per positive must be >= 1");
        if (batch_size < 1) throw UsageError("batch size must be >= 1");
        if (!(margin >= 0.0)) throw UsageError("margin must be >= 0");
        if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
            throw UsageError("invalid Adam moments");
        if (threads < 1) throw UsageError("threads must be >= 1");
        if (!(clip_mean_norm > 0.0 && var_lo > 0.0 && var_hi >= var_lo)) throw UsageError("invalid clip bounds");
    }

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

} // namespace bsg
