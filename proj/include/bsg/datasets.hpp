#pragma once

// Readers for the benchmark file layouts.

#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsg/corpus.hpp"
#include "bsg/error.hpp"
#include "bsg/eval.hpp"

namespace bsg {

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline double parse_real(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DataError(where + ": '" + s + "' is not a number");
    }
    if (used != s.size() || !std::isfinite(v)) throw DataError(where + ": '" + s + "' is not a finite number");
    return v;
}

inline std::string lower(std::string s) {
    for (auto& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

template <typename Fn>
void for_each_line(std::istream& in, const std::string& name, Fn fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        fn(line, name + ":" + std::to_string(lineno));
    }
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

} // namespace detail

// word1<TAB>word2<TAB>score
inline std::vector<SimilarityPair> read_similarity(std::istream& in, bool lowercase = true,
                                                   const std::string& name = "<similarity>") {
    std::vector<SimilarityPair> out;
    detail::for_each_line(in, name, [&](const std::string& line, const std::string& where) {
        auto f = detail::split_tabs(line);
        if (f.size() != 3) throw DataError(where + ": expected 3 tab-separated fields");
        if (lowercase) f[0] = detail::lower(f[0]), f[1] = detail::lower(f[1]);
        out.push_back({f[0], f[1], detail::parse_real(f[2], where)});
    });
    return out;
}

inline std::vector<SimilarityPair> read_similarity(const std::string& path, bool lowercase = true) {
    auto in = detail::open_in(path);
    return read_similarity(in, lowercase, path);
}

// word1<TAB>word2<TAB>{0,1}
inline std::vector<EntailmentPair> read_entailment(std::istream& in, bool lowercase = true,
                                                   const std::string& name = "<entailment>") {
    std::vector<EntailmentPair> out;
    detail::for_each_line(in, name, [&](const std::string& line, const std::string& where) {
        auto f = detail::split_tabs(line);
        if (f.size() != 3) throw DataError(where + ": expected 3 tab-separated fields");
        if (f[2] != "0" && f[2] != "1") throw DataError(where + ": label must be 0 or 1, got '" + f[2] + "'");
        if (lowercase) f[0] = detail::lower(f[0]), f[1] = detail::lower(f[1]);
        out.push_back({f[0], f[1], f[2] == "1"});
    });
    return out;
}

inline std::vector<EntailmentPair> read_entailment(const std::string& path, bool lowercase = true) {
    auto in = detail::open_in(path);
    return read_entailment(in, lowercase, path);
}

// One JSON object per line: target, target_index, context_tokens, candidates, gold_weights.
inline std::vector<LexsubInstance> read_lexsub(std::istream& in, bool lowercase = true,
                                               const std::string& name = "<lexsub>") {
    std::vector<LexsubInstance> out;
    detail::for_each_line(in, name, [&](const std::string& line, const std::string& where) {
        LexsubInstance inst;
        try {
            const auto j = nlohmann::json::parse(line);
            inst.target = j.at("target").get<std::string>();
            inst.target_index = j.at("target_index").get<std::size_t>();
            inst.context_tokens = j.at("context_tokens").get<std::vector<std::string>>();
            inst.candidates = j.at("candidates").get<std::vector<std::string>>();
            for (const auto& [k, v] : j.at("gold_weights").items()) inst.gold_weights[k] = v.get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (lowercase) {
            inst.target = detail::lower(inst.target);
            for (auto& t : inst.context_tokens) t = detail::lower(t);
            for (auto& c : inst.candidates) c = detail::lower(c);
            std::map<std::string, double> g;
            for (auto& [k, v] : inst.gold_weights) g[detail::lower(k)] += v;
            inst.gold_weights = std::move(g);
        }
        try {
            inst.validate();
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        out.push_back(std::move(inst));
    });
    return out;
}

inline std::vector<LexsubInstance> read_lexsub(const std::string& path, bool lowercase = true) {
    auto in = detail::open_in(path);
    return read_lexsub(in, lowercase, path);
}

} // namespace bsg
