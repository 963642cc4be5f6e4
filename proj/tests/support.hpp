#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <string>
#include <vector>

#include "bsg/config.hpp"
#include "bsg/corpus.hpp"
#include "bsg/oracles.hpp"
#include "bsg/training.hpp"

namespace bsg::fixture {

struct SynthData {
    oracle::SynthCorpus text;
    Vocabulary vocab;
    Corpus corpus;
};

// Every synthetic word is far above 1e-4 frequency, so subsampling is off (t = 1).
inline SynthData make_synth(const oracle::SynthSpec& spec, double neg_exponent = 1.0) {
    SynthData d;
    d.text = oracle::synth_corpus(spec);
    VocabCounter c;
    for (const auto& doc : d.text.docs)
        for (const auto& w : doc) c.add(w);
    VocabParams p;
    p.subsample_t = 1.0;
    p.neg_exponent = neg_exponent;
    d.vocab = build_vocabulary(c, p);
    for (const auto& doc : d.text.docs) d.corpus.docs.push_back(encode(doc, d.vocab));
    return d;
}

// Small-corpus training settings: the full-scale defaults (batch 22000,
// lr 0.00055) would take only a handful of tiny steps on 1e5 tokens.
inline TrainConfig desk_config(std::uint64_t seed = 1) {
    TrainConfig c;
    c.dim = 10;
    c.hidden = 10;
    c.window = 5;
    c.batch_size = 1000;
    c.epochs = 5;
    c.learning_rate = 0.01;
    c.seed = seed;
    c.threads = 4;
    c.deterministic = true;
    return c;
}

inline TrainHooks stats_hook(TrainStats& s) {
    TrainHooks h;
    h.stats = &s;
    return h;
}

} // namespace bsg::fixture
