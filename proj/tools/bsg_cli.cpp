// bsg: command-line front end.
//
// Every failure prints one line "error[<kind>]: <message>" on stderr and exits
// 1 (usage), 2 (data) or 3 (numerical).

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "bsg/datasets.hpp"
#include "bsg/eval.hpp"
#include "bsg/inspect.hpp"
#include "bsg/oracles.hpp"
#include "bsg/pipeline.hpp"
#include "bsg/selftest.hpp"
#include "bsg/serialize.hpp"

namespace {

using namespace bsg;

struct Opts {
    // shared
    std::string corpus, vocab_path, model, data, out;
    bool no_lowercase = false;
    // vocabulary
    std::size_t max_size = 280000;
    std::uint64_t min_count = 1;
    double subsample_t = 1e-4;
    double neg_exponent = 1.0;
    // training
    TrainConfig cfg;
    std::string kind = "bsg", format = "binary", objective = "hinge", pairing = "matched", cov = "spherical",
                energy = "expected_likelihood";
    std::optional<double> lr;
    std::optional<std::size_t> epochs;
    std::string log_path;
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    bool deterministic = false;
    // eval / inspect
    std::string measure = "neg_kl", near_measure = "cosine_mean", mode = "kl", hist;
    std::size_t bins = 20, window = 5, k = 10, index = 0;
    bool frequency = false;
    std::string word, sentence;
    // synth
    std::string synth_kind = "polysemy", tags;
    std::size_t tokens = 100000, tokens_per_doc = 11, groups_a = 2, groups_b = 2, indicators = 10;
    std::uint64_t synth_seed = 0;
    bool quick = false;
};

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw DataError("cannot write " + path);
    return file;
}

Vocabulary vocab_from(const Opts& o) {
    if (!o.vocab_path.empty()) return load_vocabulary(o.vocab_path, o.subsample_t, o.neg_exponent);
    std::ifstream in(o.corpus, std::ios::binary);
    if (!in) throw DataError("cannot open " + o.corpus);
    VocabParams p{o.max_size, o.min_count, o.subsample_t, o.neg_exponent};
    return build_vocabulary(count_tokens(in, !o.no_lowercase), p);
}

void cmd_build_vocab(const Opts& o) {
    std::ifstream in(o.corpus, std::ios::binary);
    if (!in) throw DataError("cannot open " + o.corpus);
    VocabParams p{o.max_size, o.min_count, o.subsample_t, o.neg_exponent};
    const auto v = build_vocabulary(count_tokens(in, !o.no_lowercase), p);
    std::ofstream file;
    save_vocabulary(v, open_out(o.out, file));
    std::cerr << "vocabulary: " << v.size() << " words, " << v.total_count() << " tokens\n";
}

void cmd_train(Opts o) {
    const ModelKind kind = parse_model_kind(o.kind);
    TrainConfig& cfg = o.cfg;
    cfg.objective = parse_objective(o.objective);
    cfg.pairing = parse_pairing(o.pairing);
    cfg.cov = parse_cov_kind(o.cov);
    cfg.energy = parse_energy(o.energy);
    cfg.learning_rate = o.lr ? *o.lr : default_learning_rate(kind, cfg.cov);
    cfg.threads = o.threads;
    cfg.deterministic = o.deterministic;
    const Vocabulary vocab = vocab_from(o);
    const Corpus corpus = read_corpus(o.corpus, vocab, !o.no_lowercase);
    cfg.epochs = o.epochs ? *o.epochs : default_epochs(corpus.tokens());
    cfg.validate();

    std::string log_path = o.log_path;
    if (log_path.empty())
        if (const char* env = std::getenv("BSG_LOG")) log_path = env;
    std::ofstream log;
    TrainHooks hooks;
    TrainStats stats;
    hooks.stats = &stats;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw DataError("cannot write telemetry to " + log_path);
        hooks.log = &log;
    }
    const auto bundle = train_bundle(kind, corpus, vocab, cfg, hooks);
    save_model(bundle, o.out, parse_file_mode(o.format));
    std::cerr << to_string(kind) << ": " << stats.batch_loss.size() << " batches, " << stats.examples_seen
              << " windows, final epoch mean loss "
              << (stats.epoch_mean_loss.empty() ? 0.0 : stats.epoch_mean_loss.back()) << '\n';
}

void cmd_eval_sim(const Opts& o) {
    const auto b = load_model(o.model);
    const auto pairs = read_similarity(o.data, !o.no_lowercase);
    const auto r = eval_similarity(density_table(b), b.vocab, pairs);
    std::cout << "spearman\t" << r.rho << "\nused\t" << r.used << "\noov\t" << r.oov << '\n';
}

void cmd_eval_entail(const Opts& o) {
    const auto b = load_model(o.model);
    const auto pairs = read_entailment(o.data, !o.no_lowercase);
    const auto r = eval_entailment(density_table(b), b.vocab, pairs, parse_entail_measure(o.measure));
    std::cout << "f1\t" << r.f1 << "\nthreshold\t" << r.threshold << "\nused\t" << r.used << "\noov\t" << r.oov << '\n';
    if (!o.hist.empty()) {
        std::ofstream file;
        write_score_histogram(r, o.bins, open_out(o.hist, file));
    }
}

void cmd_eval_direction(const Opts& o) {
    const auto b = load_model(o.model);
    const auto pairs = read_entailment(o.data, !o.no_lowercase);
    const auto r = o.frequency ? frequency_direction_baseline(b.vocab, pairs)
                               : eval_directionality(density_table(b), b.vocab, pairs);
    std::cout << "accuracy\t" << r.accuracy << "\nused\t" << r.used << "\nskipped\t" << r.skipped << '\n';
}

void cmd_eval_lexsub(const Opts& o) {
    const auto b = load_model(o.model);
    const auto instances = read_lexsub(o.data, !o.no_lowercase);
    LexsubResult r;
    if (o.mode == "kl") {
        const auto* m = std::get_if<BsgModel<float>>(&b.model);
        if (!m) throw UsageError("mode kl needs a bsg model (no encoder in " + std::string(to_string(b.kind())) + ")");
        r = eval_lexsub(std::span<const LexsubInstance>(instances),
                        [&](const LexsubInstance& inst) { return lexsub_rank(*m, b.vocab, inst, o.window); });
    } else {
        const auto mode = parse_subst_mode(o.mode);
        const auto t = density_table(b);
        r = eval_lexsub(std::span<const LexsubInstance>(instances), [&](const LexsubInstance& inst) {
            return add_mult_baseline(t, b.vocab, inst, o.window, mode);
        });
    }
    std::cout << "gap\t" << r.mean_gap << "\nused\t" << r.used << "\nskipped\t" << r.skipped << '\n';
}

void cmd_nearest(const Opts& o) {
    const auto b = load_model(o.model);
    for (const auto& n : nearest(b, o.word, o.k, parse_near_measure(o.near_measure)))
        std::cout << n.word << '\t' << n.score << '\n';
}

void cmd_infer(const Opts& o) {
    const auto b = load_model(o.model);
    const auto tokens = tokenize(o.sentence, !o.no_lowercase);
    const auto q = infer(b, tokens, o.index, o.window);
    std::cout << "mean";
    for (double v : q.mean) std::cout << '\t' << v;
    std::cout << "\nvariance";
    for (std::size_t i = 0; i < q.dim(); ++i) std::cout << '\t' << q.variance(i);
    std::cout << '\n';
}

void cmd_report_logdet(const Opts& o) {
    const auto b = load_model(o.model);
    const auto rep = logdet_frequency_report(density_table(b), b.vocab);
    std::ofstream file;
    write_logdet_csv(rep, open_out(o.out, file));
}

void cmd_synth(const Opts& o) {
    const auto spec = o.synth_kind == "polysemy"
                          ? oracle::polysemy_spec(o.groups_a, o.groups_b, o.tokens, o.synth_seed, o.tokens_per_doc, o.indicators)
                      : o.synth_kind == "hypernymy"
                          ? oracle::hypernymy_spec(o.groups_a, o.groups_b, o.tokens, o.synth_seed, o.tokens_per_doc, o.indicators)
                          : throw UsageError("unknown synthetic corpus kind '" + o.synth_kind + "'");
    const auto sc = oracle::synth_corpus(spec);
    std::ofstream file;
    sc.write_text(open_out(o.out, file));
    if (!o.tags.empty()) {
        std::ofstream tags(o.tags);
        if (!tags) throw DataError("cannot write " + o.tags);
        sc.write_tags(tags);
    }
}

int cmd_selftest(const Opts& o) {
    bool ok = true;
    for (const auto& r : selftest::run_all(o.quick)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    if (!ok) throw NumericalError("selftest failed");
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Bayesian Skip-gram embeddings: training, evaluation and inspection"};
    app.require_subcommand(1);
    Opts o;

    auto lower_flag = [&](CLI::App* c) { c->add_flag("--no-lowercase", o.no_lowercase, "Keep case of input tokens"); };
    auto vocab_opts = [&](CLI::App* c) {
        c->add_option("--max-size", o.max_size, "Vocabulary size cap")->capture_default_str();
        c->add_option("--min-count", o.min_count, "Minimum word count")->capture_default_str();
        c->add_option("--subsample-t", o.subsample_t, "Subsampling threshold t")->capture_default_str();
        c->add_option("--neg-exponent", o.neg_exponent, "Negative-sampling unigram exponent")->capture_default_str();
    };

    auto* bv = app.add_subcommand("build-vocab", "Count a corpus and write word<TAB>count");
    bv->add_option("--corpus", o.corpus, "One document per line")->required();
    bv->add_option("--out", o.out, "Output TSV (default stdout)");
    vocab_opts(bv);
    lower_flag(bv);

    auto* tr = app.add_subcommand("train", "Train a bsg, sg or w2g model");
    tr->add_option("--corpus", o.corpus, "One document per line")->required();
    tr->add_option("--vocab", o.vocab_path, "Vocabulary TSV (default: build from corpus)");
    tr->add_option("--out", o.out, "Model file")->required();
    tr->add_option("--model-kind", o.kind, "bsg | sg | w2g")->capture_default_str();
    tr->add_option("--format", o.format, "binary | text")->capture_default_str();
    tr->add_option("--dim", o.cfg.dim)->capture_default_str();
    tr->add_option("--hidden", o.cfg.hidden, "Encoder hidden units")->capture_default_str();
    tr->add_option("--window", o.cfg.window, "Context words each side")->capture_default_str();
    tr->add_option("--negatives", o.cfg.negatives_per_positive, "Negatives per positive")->capture_default_str();
    tr->add_option("--batch-size", o.cfg.batch_size, "Prediction tasks per batch")->capture_default_str();
    tr->add_option("--epochs", o.epochs, "Passes (default 5 below 10M tokens, else 1)");
    tr->add_option("--margin", o.cfg.margin)->capture_default_str();
    tr->add_option("--lr", o.lr, "Learning rate (default per model kind)");
    tr->add_option("--beta1", o.cfg.beta1)->capture_default_str();
    tr->add_option("--beta2", o.cfg.beta2)->capture_default_str();
    tr->add_option("--epsilon", o.cfg.epsilon)->capture_default_str();
    tr->add_option("--seed", o.cfg.seed)->capture_default_str();
    tr->add_option("--objective", o.objective, "hinge | soft")->capture_default_str();
    tr->add_option("--pairing", o.pairing, "matched | all_pairs")->capture_default_str();
    tr->add_option("--cov", o.cov, "spherical | diagonal")->capture_default_str();
    tr->add_flag("--tie-prior-context", o.cfg.tie_prior_context, "Context densities are the priors");
    tr->add_flag("--tie-embeddings", o.cfg.tie_encoder_embeddings, "Encoder reads the prior means");
    tr->add_option("--energy", o.energy, "w2g: expected_likelihood | negated_kl")->capture_default_str();
    tr->add_option("--clip-mean-norm", o.cfg.clip_mean_norm, "w2g mean norm bound")->capture_default_str();
    tr->add_option("--var-lo", o.cfg.var_lo, "w2g variance lower bound")->capture_default_str();
    tr->add_option("--var-hi", o.cfg.var_hi, "w2g variance upper bound")->capture_default_str();
    tr->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
    tr->add_flag("--deterministic", o.deterministic, "Fixed sharding; bit-identical runs for equal seeds");
    tr->add_option("--log", o.log_path, "Telemetry CSV (default $BSG_LOG)");
    vocab_opts(tr);
    lower_flag(tr);

    auto* es = app.add_subcommand("eval-sim", "Spearman correlation on a similarity TSV");
    es->add_option("--model", o.model)->required();
    es->add_option("--data", o.data, "word1<TAB>word2<TAB>score")->required();
    lower_flag(es);

    auto* ee = app.add_subcommand("eval-entail", "Best-F1 entailment detection");
    ee->add_option("--model", o.model)->required();
    ee->add_option("--data", o.data, "word1<TAB>word2<TAB>0|1")->required();
    ee->add_option("--measure", o.measure, "neg_kl | cosine")->capture_default_str();
    ee->add_option("--hist", o.hist, "Write a binned score histogram CSV here");
    ee->add_option("--bins", o.bins)->capture_default_str();
    lower_flag(ee);

    auto* ed = app.add_subcommand("eval-direction", "Entailment directionality accuracy");
    ed->add_option("--model", o.model)->required();
    ed->add_option("--data", o.data, "word1<TAB>word2<TAB>1 (hyponym, hypernym)")->required();
    ed->add_flag("--frequency-baseline", o.frequency, "Predict that the rarer word entails");
    lower_flag(ed);

    auto* el = app.add_subcommand("eval-lexsub", "Lexical substitution GAP");
    el->add_option("--model", o.model)->required();
    el->add_option("--data", o.data, "JSON lines")->required();
    el->add_option("--mode", o.mode, "kl | add | mult")->capture_default_str();
    el->add_option("--window", o.window)->capture_default_str();
    lower_flag(el);

    auto* nn = app.add_subcommand("nearest", "Nearest words");
    nn->add_option("--model", o.model)->required();
    nn->add_option("--word", o.word)->required();
    nn->add_option("-k", o.k)->capture_default_str();
    nn->add_option("--measure", o.near_measure, "cosine_mean | neg_kl")->capture_default_str();

    auto* in = app.add_subcommand("infer", "Posterior of one word in a sentence");
    in->add_option("--model", o.model)->required();
    in->add_option("--sentence", o.sentence)->required();
    in->add_option("--index", o.index, "Target token position")->required();
    in->add_option("--window", o.window)->capture_default_str();
    lower_flag(in);

    auto* rl = app.add_subcommand("report-logdet", "log det covariance vs log frequency CSV");
    rl->add_option("--model", o.model)->required();
    rl->add_option("--out", o.out, "CSV path (default stdout)");

    auto* sy = app.add_subcommand("synth-corpus", "Generate a synthetic sense-tagged corpus");
    sy->add_option("--kind", o.synth_kind, "polysemy | hypernymy")->capture_default_str();
    sy->add_option("--tokens", o.tokens)->capture_default_str();
    sy->add_option("--tokens-per-doc", o.tokens_per_doc)->capture_default_str();
    sy->add_option("--words", o.groups_a, "polysemy: words; hypernymy: hypernyms")->capture_default_str();
    sy->add_option("--senses", o.groups_b, "polysemy: senses per word; hypernymy: hyponyms each")->capture_default_str();
    sy->add_option("--indicators", o.indicators, "Indicator words per group")->capture_default_str();
    sy->add_option("--seed", o.synth_seed)->capture_default_str();
    sy->add_option("--out", o.out, "Corpus path (default stdout)");
    sy->add_option("--tags", o.tags, "Sidecar TSV position<TAB>word<TAB>true_group");

    auto* st = app.add_subcommand("selftest", "Run the oracle suites");
    st->add_flag("--quick", o.quick, "Smaller sample counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "error[usage]: " << msg << '\n';
        return 1;
    }

    if (*bv) cmd_build_vocab(o);
    else if (*tr) cmd_train(o);
    else if (*es) cmd_eval_sim(o);
    else if (*ee) cmd_eval_entail(o);
    else if (*ed) cmd_eval_direction(o);
    else if (*el) cmd_eval_lexsub(o);
    else if (*nn) cmd_nearest(o);
    else if (*in) cmd_infer(o);
    else if (*rl) cmd_report_logdet(o);
    else if (*sy) cmd_synth(o);
    else if (*st) return cmd_selftest(o);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    auto one_line = [](std::string s) {
        for (auto& c : s)
            if (c == '\n' || c == '\r') c = ' ';
        return s;
    };
    try {
        return run(argc, argv);
    } catch (const bsg::Error& e) {
        std::cerr << "error[" << e.kind() << "]: " << one_line(e.what()) << '\n';
        return e.exit_code();
    } catch (const std::bad_alloc&) {
        std::cerr << "error[numerical]: out of memory\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error[data]: " << one_line(e.what()) << '\n';
        return 2;
    }
}
