#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "bsg/config.hpp"
#include "bsg/corpus.hpp"
#include "bsg/error.hpp"
#include "bsg/random.hpp"

namespace bsg {

// One prediction window with its sampled negatives.
struct Example {
    WordId center = 0;
    std::vector<WordId> positives;
    std::vector<WordId> negatives;
};

// Deterministic stream of subsampled windows and negatives. Every model kind
// consumes the same stream for a given corpus, config and seed.
class TrainingStream {
public:
    TrainingStream(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg)
        : corpus_(corpus), vocab_(vocab), cfg_(cfg), rng_(derive_seed(cfg.seed, 1)) {}

    // Shuffles the document order and subsamples; call once per epoch.
    void start_epoch() {
        order_.resize(corpus_.docs.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        rng_.shuffle(order_.begin(), order_.end());
        next_doc_ = 0;
        pending_.clear();
        pending_pos_ = 0;
    }

    // Fills `batch` with windows until it holds >= batch_size positives.
    // Returns false once the epoch is exhausted and nothing was produced.
    bool next_batch(std::vector<Example>& batch) {
        batch.clear();
        std::size_t tasks = 0;
        while (tasks < cfg_.batch_size) {
            if (pending_pos_ == pending_.size()) {
                if (!refill()) break;
                continue;
            }
            Window& w = pending_[pending_pos_++];
            Example ex;
            ex.center = w.center;
            ex.positives = std::move(w.contexts);
            ex.negatives = vocab_.sample_negatives(ex.positives.size() * cfg_.negatives_per_positive, rng_);
            tasks += ex.positives.size();
            mix(ex);
            batch.push_back(std::move(ex));
        }
        return !batch.empty();
    }

    // Running FNV-1a hash of every emitted example.
    std::uint64_t fingerprint() const noexcept { return hash_; }

private:
    bool refill() {
        pending_.clear();
        pending_pos_ = 0;
        while (pending_.empty()) {
            if (next_doc_ >= order_.size()) return false;
            const auto& doc = corpus_.docs[order_[next_doc_++]];
            const auto kept = subsample_stream(doc, vocab_, rng_);
            pending_ = extract_windows(kept, cfg_.window);
        }
        return true;
    }

    void mix(const Example& ex) {
        auto feed = [this](std::uint64_t v) {
            for (int i = 0; i < 4; ++i) {
                hash_ ^= (v >> (8 * i)) & 0xff;
                hash_ *= 0x100000001b3ULL;
            }
        };
        feed(ex.center);
        feed(ex.positives.size());
        for (auto w : ex.positives) feed(w);
        for (auto w : ex.negatives) feed(w);
    }

    const Corpus& corpus_;
    const Vocabulary& vocab_;
    const TrainConfig& cfg_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t next_doc_ = 0;
    std::vector<Window> pending_;
    std::size_t pending_pos_ = 0;
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

struct TrainStats {
    std::vector<double> batch_loss;       // mean loss per window
    std::vector<double> epoch_mean_loss;  // mean loss per window over each epoch
    std::size_t examples_seen = 0;
    std::uint64_t stream_fingerprint = 0;
};

struct TrainHooks {
    TrainStats* stats = nullptr;
    std::ostream* log = nullptr;  // CSV batch_index,loss,examples_seen
    std::function<void(std::size_t batch_index)> after_batch;
};

// Shard count used when results must not depend on the thread count.
inline constexpr std::size_t kDeterministicShards = 8;

// Generic mini-batch driver. Each batch is cut into contiguous shards whose
// gradients are computed against the same parameter snapshot, merged in
// shard order and applied by a single writer.
//   make_grad()                      -> fresh accumulator
//   compute(model, example, grad&)   -> window loss, adds its gradient
//   merge(grad&, const grad&)
//   apply(model, const grad&, step)
//   describe(model)                  -> diagnostics on numerical failure
template <typename Model, typename MakeGrad, typename Compute, typename Merge, typename Apply, typename Describe>
void run_training(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg, Model& model,
                  const TrainHooks& hooks, MakeGrad make_grad, Compute compute, Merge merge, Apply apply,
                  Describe describe) {
    TrainingStream stream(corpus, vocab, cfg);
    const std::size_t shards = cfg.deterministic ? kDeterministicShards : cfg.threads;
    const std::size_t workers = std::min(cfg.threads, shards);
    if (hooks.log) *hooks.log << "batch_index,loss,examples_seen\n";

    std::vector<Example> batch;
    std::size_t step = 0;
    std::size_t seen = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        stream.start_epoch();
        double epoch_loss = 0.0;
        std::size_t epoch_windows = 0;
        while (stream.next_batch(batch)) {
            using Grad = decltype(make_grad());
            std::vector<Grad> grads;
            grads.reserve(shards);
            for (std::size_t s = 0; s < shards; ++s) grads.push_back(make_grad());
            std::vector<double> losses(shards, 0.0);
            const std::size_t n = batch.size();
            auto work = [&](std::size_t first_shard) {
                for (std::size_t s = first_shard; s < shards; s += workers) {
                    const std::size_t lo = n * s / shards, hi = n * (s + 1) / shards;
                    double acc = 0.0;
                    for (std::size_t i = lo; i < hi; ++i) acc += compute(model, batch[i], grads[s]);
                    losses[s] = acc;
                }
            };
            if (workers <= 1) {
                work(0);
            } else {
                std::vector<std::jthread> pool;
                for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work, t);
                work(0);
            }
            double loss = 0.0;
            for (std::size_t s = 0; s < shards; ++s) loss += losses[s];
            for (std::size_t s = 1; s < shards; ++s) merge(grads[0], grads[s]);

            if (!std::isfinite(loss)) {
                throw NumericalError("non-finite loss at batch " + std::to_string(step) + " (epoch " +
                                     std::to_string(epoch) + ", " + std::to_string(n) +
                                     " windows); parameter norms: " + describe(model));
            }
            ++step;
            apply(model, grads[0], step);
            seen += n;
            epoch_loss += loss;
            epoch_windows += n;
            const double mean = loss / static_cast<double>(n);
            if (hooks.stats) hooks.stats->batch_loss.push_back(mean);
            if (hooks.log) *hooks.log << (step - 1) << ',' << mean << ',' << seen << '\n';
            if (hooks.after_batch) hooks.after_batch(step - 1);
        }
        if (hooks.stats)
            hooks.stats->epoch_mean_loss.push_back(epoch_windows ? epoch_loss / static_cast<double>(epoch_windows) : 0.0);
    }
    if (hooks.stats) {
        hooks.stats->examples_seen = seen;
        hooks.stats->stream_fingerprint = stream.fingerprint();
    }
}

} // namespace bsg
