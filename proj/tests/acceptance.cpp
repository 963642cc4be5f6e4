// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bsg/pipeline.hpp"
#include "bsg/selftest.hpp"
#include "support.hpp"

using namespace bsg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool passed, const std::string& detail, double seconds) {
    if (!passed) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", passed ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
                seconds);
    std::fflush(stdout);
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void oracle_check(int id, const selftest::CheckResult& r, double budget) {
    const bool in_time = r.seconds < budget;
    std::string detail = r.detail;
    if (!in_time) detail += "; over the " + std::to_string(static_cast<int>(budget)) + "s budget";
    report(id, r.name, r.passed && in_time, detail, r.seconds);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// --- criterion 4 ------------------------------------------------------------

constexpr std::size_t kSenses = 2;

// Mean KL from the posterior to the priors of one sense group's indicator words.
double group_score(const BsgModel<float>& m, const Vocabulary& vocab, const Gaussian& q, std::size_t group,
                   std::size_t indicators) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < indicators; ++i) {
        const auto id = vocab.lookup(oracle::indicator_word(group, i));
        if (!id) continue;
        s += kl_divergence(q.view(), m.prior(*id));
        ++n;
    }
    return n ? s / static_cast<double>(n) : INFINITY;
}

double disambiguation_accuracy(const BsgModel<float>& m, const Vocabulary& vocab, const oracle::SynthSpec& spec,
                               std::size_t n_windows) {
    const auto held_out = oracle::synth_corpus(spec);
    std::size_t correct = 0, used = 0;
    for (const auto& tag : held_out.tags) {
        if (used == n_windows) break;
        const auto& doc = held_out.docs[tag.doc];
        std::vector<WordId> ctx;
        for (std::size_t i = 0; i < doc.size(); ++i)
            if (i != tag.position)
                if (auto id = vocab.lookup(doc[i])) ctx.push_back(*id);
        const Gaussian q = infer_posterior(m, vocab.id_of(tag.word), ctx);
        // the other sense of the same word
        const std::size_t base = tag.group - tag.group % kSenses;
        const std::size_t other = base + (tag.group - base + 1) % kSenses;
        ++used;
        if (group_score(m, vocab, q, tag.group, spec.indicators_per_group) <
            group_score(m, vocab, q, other, spec.indicators_per_group))
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(used);
}

// --- criterion 5 ------------------------------------------------------------

struct Generality {
    double direction = 0.0;
    double logdet = 0.0;  // fraction with logdet(hypernym) > logdet(hyponym)
};

Generality generality(std::size_t n_hyper, std::size_t n_hypo, std::uint64_t seed, double margin) {
    const auto d = fixture::make_synth(oracle::hypernymy_spec(n_hyper, n_hypo, 100000, seed));
    auto cfg = fixture::desk_config(seed);
    cfg.margin = margin;
    const auto m = train_bsg<float>(d.corpus, d.vocab, cfg);
    const auto table = density_table(m);
    std::vector<EntailmentPair> pairs;
    std::size_t wider = 0;
    for (std::size_t h = 0; h < n_hyper; ++h) {
        const std::string hyper = "hyper" + std::to_string(h);
        for (std::size_t k = 0; k < n_hypo; ++k) {
            const std::string hypo = "hypo" + std::to_string(h) + "_" + std::to_string(k);
            pairs.push_back({hypo, hyper, true});
            if (log_det_cov(table.density(d.vocab.id_of(hyper))) > log_det_cov(table.density(d.vocab.id_of(hypo))))
                ++wider;
        }
    }
    return {eval_directionality(table, d.vocab, pairs).accuracy,
            static_cast<double>(wider) / static_cast<double>(pairs.size())};
}

// --- criterion 7 ------------------------------------------------------------

int run(const std::string& args) {
    const std::string cmd = std::string(BSG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

int main() {
    oracle_check(1, selftest::check_kl_quadrature(), 10.0);
    oracle_check(2, selftest::check_gradients(), 60.0);
    oracle_check(3, selftest::check_elbo_bound(), 120.0);

    // 4: sense disambiguation on held-out windows
    const auto poly = fixture::make_synth(oracle::polysemy_spec(2, kSenses, 100000, 101));
    TrainStats bsg_stats;
    {
        Timer t;
        const auto m = train_bsg<float>(poly.corpus, poly.vocab, fixture::desk_config(4), fixture::stats_hook(bsg_stats));
        const double acc = disambiguation_accuracy(m, poly.vocab, oracle::polysemy_spec(2, kSenses, 100000, 202), 200);
        const double secs = t.seconds();
        report(4, "sense disambiguation", acc >= 0.9 && secs < 300.0, fmt("accuracy %.3f on 200 held-out windows", acc),
               secs);
    }

    // 5: generality. The margin is chosen on a development corpus and judged on a fresh one.
    {
        Timer t;
        double best_margin = 0.0, best = -1.0;
        std::string sweep;
        for (double margin : {1.0, 5.0, 20.0}) {
            const auto g = generality(5, 4, 303, margin);
            sweep += fmt(" m=%g:%.2f/%.2f", margin, g.direction, g.logdet);
            if (g.direction + g.logdet > best) {
                best = g.direction + g.logdet;
                best_margin = margin;
            }
        }
        const auto g = generality(5, 4, 404, best_margin);
        const double secs = t.seconds();
        report(5, "generality", g.direction >= 0.8 && g.logdet >= 0.8 && secs < 300.0,
               fmt("margin %g: directionality %.2f, logdet %.2f;", best_margin, g.direction, g.logdet) +
                   " dev sweep" + sweep,
               secs);
    }

    {
        const auto r = selftest::check_metrics();
        report(6, r.name, r.passed, r.detail, r.seconds);
    }

    // 7: byte-identical deterministic training across thread counts, and text round trip
    {
        Timer t;
        const fs::path dir = fs::temp_directory_path() / ("bsg_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        const auto p = [&](const char* n) { return (dir / n).string(); };
        bool ok = run("synth-corpus --kind polysemy --words 2 --senses 2 --tokens 20000 --seed 7 --out " + p("c.txt")) == 0;
        const std::string common = "train --corpus " + p("c.txt") +
                                   " --dim 10 --hidden 10 --epochs 2 --batch-size 1000 --lr 0.01 --subsample-t 1"
                                   " --deterministic --seed 9";
        ok = ok && run(common + " --threads 4 --out " + p("a.bin")) == 0;
        ok = ok && run(common + " --threads 1 --out " + p("b.bin")) == 0;
        std::string detail = ok ? "" : "CLI run failed; ";
        const bool same_bytes = ok && slurp(p("a.bin")) == slurp(p("b.bin"));
        bool round_trip = false;
        if (ok) {
            const auto bundle = load_model(p("a.bin"));
            save_model(bundle, p("a.txt"), FileMode::text);
            round_trip = load_model(p("a.txt")) == bundle;
        }
        fs::remove_all(dir);
        detail += std::string("binaries ") + (same_bytes ? "identical" : "differ") + ", text round trip " +
                  (round_trip ? "exact" : "lossy");
        report(7, "determinism and serialization", same_bytes && round_trip, detail, t.seconds());
    }

    // 8: baselines on the same corpus and stream
    {
        Timer t;
        auto cfg = fixture::desk_config(4);
        TrainStats sg, w2g_s, w2g_d;
        train_sg<float>(poly.corpus, poly.vocab, cfg, fixture::stats_hook(sg));
        train_w2g<float>(poly.corpus, poly.vocab, cfg, fixture::stats_hook(w2g_s));
        cfg.cov = CovKind::diagonal;
        train_w2g<float>(poly.corpus, poly.vocab, cfg, fixture::stats_hook(w2g_d));

        bool ok = true;
        std::string detail;
        const std::pair<const char*, const TrainStats*> runs[] = {
            {"sg", &sg}, {"w2g-s", &w2g_s}, {"w2g-d", &w2g_d}, {"bsg", &bsg_stats}};
        for (const auto& [name, s] : runs) {
            bool finite = true;
            for (double l : s->batch_loss) finite = finite && std::isfinite(l);
            const bool decreasing = s->epoch_mean_loss.size() >= 2 && s->epoch_mean_loss.back() < s->epoch_mean_loss.front();
            const bool same_stream =
                s->stream_fingerprint == bsg_stats.stream_fingerprint && s->examples_seen == bsg_stats.examples_seen;
            ok = ok && finite && decreasing && same_stream;
            detail += std::string(detail.empty() ? "" : ", ") + name +
                      fmt(" %.4g->%.4g", s->epoch_mean_loss.front(), s->epoch_mean_loss.back()) +
                      (finite ? "" : " non-finite") + (same_stream ? "" : " different stream");
        }
        report(8, "baseline parity", ok, detail, t.seconds());
    }

    std::printf("%d of 8 criteria failed\n", failures);
    return failures ? 1 : 0;
}
