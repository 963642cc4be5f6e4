#pragma once

#include "bsg/baselines.hpp"
#include "bsg/bsg.hpp"
#include "bsg/serialize.hpp"

namespace bsg {

// 5 passes for small (desk-scale) corpora, 1 for large ones.
inline std::size_t default_epochs(std::size_t corpus_tokens) { return corpus_tokens < 10'000'000 ? 5 : 1; }

inline ModelBundle train_bundle(ModelKind kind, const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg,
                                const TrainHooks& hooks = {}) {
    switch (kind) {
    case ModelKind::bsg: return {train_bsg<float>(corpus, vocab, cfg, hooks), vocab, cfg};
    case ModelKind::sg: return {train_sg<float>(corpus, vocab, cfg, hooks), vocab, cfg};
    case ModelKind::w2g: return {train_w2g<float>(corpus, vocab, cfg, hooks), vocab, cfg};
    }
    throw UsageError("unknown model kind");
}

} // namespace bsg
