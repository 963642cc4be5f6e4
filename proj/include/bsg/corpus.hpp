#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bsg/error.hpp"
#include "bsg/matrix.hpp"
#include "bsg/random.hpp"

namespace bsg {

// Offset of the first byte that breaks UTF-8 well-formedness, if any.
inline std::optional<std::size_t> find_invalid_utf8(std::string_view s) {
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        const unsigned char c = p[i];
        std::size_t len;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return i;
        }
        if (i + len > n) return i;
        for (std::size_t k = 1; k < len; ++k) {
            if ((p[i + k] & 0xC0) != 0x80) return i;
            cp = (cp << 6) | (p[i + k] & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
            return i;
        i += len;
    }
    return std::nullopt;
}

// Whitespace tokenizer. Lowercasing touches ASCII letters only.
inline std::vector<std::string> tokenize(std::string_view line, bool lowercase = true) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) {
            std::string tok(line.substr(i, j - i));
            if (lowercase)
                for (char& ch : tok)
                    if (static_cast<unsigned char>(ch) < 0x80) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            out.push_back(std::move(tok));
        }
        i = j;
    }
    return out;
}

// Token counts in first-seen order. Counters over consecutive shards merge
// into the same result as one counter over the whole stream.
class VocabCounter {
public:
    void add(std::string_view word, std::uint64_t n = 1) {
        auto it = index_.find(std::string(word));
        if (it == index_.end()) {
            index_.emplace(std::string(word), words_.size());
            words_.emplace_back(word);
            counts_.push_back(n);
        } else {
            counts_[it->second] += n;
        }
        total_ += n;
    }

    // `other` must describe the stream portion that follows this one.
    void merge(const VocabCounter& other) {
        for (std::size_t i = 0; i < other.words_.size(); ++i) add(other.words_[i], other.counts_[i]);
    }

    std::size_t distinct() const noexcept { return words_.size(); }
    std::uint64_t total() const noexcept { return total_; }
    const std::vector<std::string>& words() const noexcept { return words_; }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct VocabParams {
    std::size_t max_size = 280000;
    std::uint64_t min_count = 1;
    double subsample_t = 1e-4;
    double neg_exponent = 1.0;
};

class Vocabulary {
public:
    Vocabulary() = default;

    // Words must already be in their final order.
    Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts, double subsample_t,
               double neg_exponent)
        : words_(std::move(words)), counts_(std::move(counts)), t_(subsample_t), neg_exponent_(neg_exponent) {
        if (words_.size() != counts_.size()) throw DataError("vocabulary words/counts length mismatch");
        if (words_.empty()) throw DataError("empty vocabulary");
        if (!(t_ > 0.0)) throw UsageError("subsampling threshold must be positive");
        if (!(neg_exponent_ >= 0.0)) throw UsageError("negative-sampling exponent must be non-negative");
        finalize();
    }

    std::size_t size() const noexcept { return words_.size(); }
    const std::string& word(WordId id) const { return words_.at(id); }
    const std::vector<std::string>& words() const noexcept { return words_; }
    std::uint64_t count(WordId id) const { return counts_.at(id); }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
    std::uint64_t total_count() const noexcept { return total_; }
    double unigram_prob(WordId id) const { return unigram_.at(id); }
    const std::vector<double>& unigram_probs() const noexcept { return unigram_; }
    double keep_prob(WordId id) const { return keep_.at(id); }
    double subsample_t() const noexcept { return t_; }
    double neg_exponent() const noexcept { return neg_exponent_; }

    std::optional<WordId> lookup(std::string_view w) const {
        auto it = index_.find(std::string(w));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(std::string_view w) const { return lookup(w).has_value(); }

    WordId id_of(std::string_view w) const {
        auto id = lookup(w);
        if (!id) throw DataError("word '" + std::string(w) + "' is not in the vocabulary");
        return *id;
    }

    // One draw from unigram^exponent, renormalised.
    WordId sample_negative(Rng& rng) const {
        const double u = rng.uniform() * neg_cdf_.back();
        auto it = std::upper_bound(neg_cdf_.begin(), neg_cdf_.end(), u);
        if (it == neg_cdf_.end()) --it;
        return static_cast<WordId>(it - neg_cdf_.begin());
    }

    std::vector<WordId> sample_negatives(std::size_t k, Rng& rng) const {
        std::vector<WordId> out(k);
        for (auto& w : out) w = sample_negative(rng);
        return out;
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.words_ == b.words_ && a.counts_ == b.counts_ && a.t_ == b.t_ && a.neg_exponent_ == b.neg_exponent_;
    }

private:
    void finalize() {
        index_.clear();
        total_ = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            if (!index_.emplace(words_[i], static_cast<WordId>(i)).second)
                throw DataError("duplicate vocabulary word '" + words_[i] + "'");
            if (counts_[i] == 0) throw DataError("vocabulary word '" + words_[i] + "' has zero count");
            total_ += counts_[i];
        }
        unigram_.resize(words_.size());
        keep_.resize(words_.size());
        neg_cdf_.resize(words_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            const double f = static_cast<double>(counts_[i]) / static_cast<double>(total_);
            unigram_[i] = f;
            keep_[i] = f <= t_ ? 1.0 : std::min(1.0, std::sqrt(t_ / f));
            acc += neg_exponent_ == 0.0 ? 1.0 : std::pow(f, neg_exponent_);
            neg_cdf_[i] = acc;
        }
    }

    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, WordId> index_;
    std::vector<double> unigram_;
    std::vector<double> keep_;
    std::vector<double> neg_cdf_;
    std::uint64_t total_ = 0;
    double t_ = 1e-4;
    double neg_exponent_ = 1.0;
};

// Keeps the most frequent words (ties: first seen first), dropping those below
// min_count and beyond max_size.
inline Vocabulary build_vocabulary(const VocabCounter& counter, const VocabParams& p) {
    if (p.max_size < 1) throw UsageError("max vocabulary size must be >= 1");
    if (p.min_count < 1) throw UsageError("min_count must be >= 1");
    if (!(p.subsample_t > 0.0)) throw UsageError("subsampling threshold must be positive");
    if (counter.total() == 0) throw DataError("empty corpus");

    std::vector<std::size_t> order(counter.distinct());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto& counts = counter.counts();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });

    std::vector<std::string> words;
    std::vector<std::uint64_t> kept;
    for (std::size_t i : order) {
        if (words.size() >= p.max_size || counts[i] < p.min_count) break;
        words.push_back(counter.words()[i]);
        kept.push_back(counts[i]);
    }
    if (words.empty()) throw DataError("no word reaches min_count " + std::to_string(p.min_count));
    return Vocabulary(std::move(words), std::move(kept), p.subsample_t, p.neg_exponent);
}

template <typename Range>
Vocabulary build_vocabulary(const Range& tokens, const VocabParams& p) {
    VocabCounter c;
    for (const auto& t : tokens) c.add(t);
    return build_vocabulary(c, p);
}

// Counts tokens of a one-document-per-line UTF-8 stream.
inline VocabCounter count_tokens(std::istream& in, bool lowercase = true) {
    VocabCounter c;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        if (auto bad = find_invalid_utf8(line))
            throw DataError("invalid UTF-8 at byte offset " + std::to_string(offset + *bad));
        for (const auto& tok : tokenize(line, lowercase)) c.add(tok);
        offset += line.size() + 1;
    }
    return c;
}

// TSV `word<TAB>count`, descending count. Subsampling and negative-table
// settings are not part of the file and come from the caller.
inline void save_vocabulary(const Vocabulary& v, std::ostream& out) {
    for (std::size_t i = 0; i < v.size(); ++i) out << v.words()[i] << '\t' << v.counts()[i] << '\n';
}

inline Vocabulary load_vocabulary(std::istream& in, double subsample_t, double neg_exponent) {
    std::vector<std::string> words;
    std::vector<std::uint64_t> counts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw DataError("vocabulary line " + std::to_string(lineno) + ": expected word<TAB>count");
        std::uint64_t n = 0;
        try {
            std::size_t used = 0;
            n = std::stoull(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError("vocabulary line " + std::to_string(lineno) + ": bad count");
        }
        if (!counts.empty() && n > counts.back())
            throw DataError("vocabulary line " + std::to_string(lineno) + ": counts not in descending order");
        words.push_back(line.substr(0, tab));
        counts.push_back(n);
    }
    return Vocabulary(std::move(words), std::move(counts), subsample_t, neg_exponent);
}

inline void save_vocabulary(const Vocabulary& v, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary '" + path + "'");
    save_vocabulary(v, out);
}

inline Vocabulary load_vocabulary(const std::string& path, double subsample_t, double neg_exponent) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocabulary '" + path + "'");
    return load_vocabulary(in, subsample_t, neg_exponent);
}

// Corpus as word ids, one vector per document. OOV tokens are dropped.
struct Corpus {
    std::vector<std::vector<WordId>> docs;

    std::size_t tokens() const {
        std::size_t n = 0;
        for (const auto& d : docs) n += d.size();
        return n;
    }
};

inline std::vector<WordId> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::vector<WordId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens)
        if (auto id = vocab.lookup(t)) ids.push_back(*id);
    return ids;
}

inline Corpus read_corpus(std::istream& in, const Vocabulary& vocab, bool lowercase = true) {
    Corpus c;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        if (auto bad = find_invalid_utf8(line))
            throw DataError("invalid UTF-8 at byte offset " + std::to_string(offset + *bad));
        c.docs.push_back(encode(tokenize(line, lowercase), vocab));
        offset += line.size() + 1;
    }
    return c;
}

inline Corpus read_corpus(const std::string& path, const Vocabulary& vocab, bool lowercase = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus '" + path + "'");
    return read_corpus(in, vocab, lowercase);
}

// Keeps each token independently with probability keep_prob[w].
inline std::vector<WordId> subsample_stream(std::span<const WordId> tokens, const Vocabulary& vocab, Rng& rng) {
    std::vector<WordId> out;
    out.reserve(tokens.size());
    for (WordId w : tokens) {
        const double keep = vocab.keep_prob(w);
        if (keep >= 1.0 || rng.uniform() < keep) out.push_back(w);
    }
    return out;
}

struct Window {
    WordId center = 0;
    std::vector<WordId> contexts;

    friend bool operator==(const Window&, const Window&) = default;
};

// One window per position with at least one neighbour within window_size.
inline std::vector<Window> extract_windows(std::span<const WordId> tokens, std::size_t window_size) {
    if (window_size < 1) throw UsageError("window size must be >= 1");
    std::vector<Window> out;
    const std::size_t n = tokens.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= window_size ? i - window_size : 0;
        const std::size_t hi = std::min(n - 1, i + window_size);
        if (hi == lo) continue;
        Window w;
        w.center = tokens[i];
        w.contexts.reserve(hi - lo);
        for (std::size_t j = lo; j <= hi; ++j)
            if (j != i) w.contexts.push_back(tokens[j]);
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace bsg
