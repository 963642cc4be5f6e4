#pragma once

// Model files.
//
// Text:   "BSG-MODEL <version>" then "#SECTION <name>" blocks, floats at 17
//         significant digits, terminated by "#SECTION end".
// Binary: magic "BSG1", u32 version, then sections
//         {u32 name_len, name, u64 payload_len, payload} ending with "end".
//         Matrix payloads are u64 rows, u64 cols, float32 values; all
//         integers and floats little-endian.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bsg/baselines.hpp"
#include "bsg/bsg.hpp"
#include "bsg/config.hpp"
#include "bsg/corpus.hpp"
#include "bsg/error.hpp"

namespace bsg {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

inline constexpr std::uint32_t kFormatVersion = 1;

using AnyModel = std::variant<BsgModel<float>, SgModel<float>, W2gModel<float>>;

struct ModelBundle {
    AnyModel model;
    Vocabulary vocab;
    TrainConfig config;

    ModelKind kind() const { return static_cast<ModelKind>(model.index()); }
    friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

enum class FileMode { text, binary };

inline FileMode parse_file_mode(const std::string& s) {
    if (s == "text") return FileMode::text;
    if (s == "binary") return FileMode::binary;
    throw UsageError("unknown model format '" + s + "' (expected text or binary)");
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_num(std::string_view s, const std::string& where) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw DataError(where + ": cannot parse '" + std::string(s) + "'");
    return v;
}

// Biases are stored as single-row tables.
inline Matrix<float> as_row(const std::vector<float>& v) {
    Matrix<float> m(1, v.size());
    std::copy(v.begin(), v.end(), m.flat().begin());
    return m;
}

inline std::vector<float> from_row(const Matrix<float>& m) { return {m.flat().begin(), m.flat().end()}; }

// Named parameter tables of a model, in file order.
inline std::vector<std::pair<std::string, Matrix<float>>> tables_of(const AnyModel& model) {
    std::vector<std::pair<std::string, Matrix<float>>> t;
    if (auto* b = std::get_if<BsgModel<float>>(&model)) {
        t.emplace_back("prior_mean", b->prior_mean);
        t.emplace_back("prior_lv", b->prior_lv);
        if (!b->tie_prior_context) {
            t.emplace_back("ctx_mean", b->ctx_mean);
            t.emplace_back("ctx_lv", b->ctx_lv);
        }
        if (!b->tie_embeddings) t.emplace_back("enc_R", b->enc.R);
        t.emplace_back("enc_M", b->enc.M);
        t.emplace_back("enc_U", b->enc.U);
        t.emplace_back("enc_b1", as_row(b->enc.b1));
        t.emplace_back("enc_W", b->enc.W);
        t.emplace_back("enc_b2", as_row(b->enc.b2));
    } else if (auto* s = std::get_if<SgModel<float>>(&model)) {
        t.emplace_back("sg_input", s->input);
        t.emplace_back("sg_output", s->output);
    } else if (auto* w = std::get_if<W2gModel<float>>(&model)) {
        t.emplace_back("w2g_mean", w->mean);
        t.emplace_back("w2g_lv", w->log_var);
    }
    return t;
}

// Key/value lines describing the model shape.
inline std::string header_text(const ModelBundle& b) {
    std::ostringstream o;
    o << "kind " << to_string(b.kind()) << '\n';
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, BsgModel<float>>) {
                o << "cov " << to_string(m.cov) << "\ndim " << m.dim << "\nhidden " << m.enc.hidden
                  << "\ntie_prior_context " << m.tie_prior_context << "\ntie_embeddings " << m.tie_embeddings << '\n';
            } else if constexpr (std::is_same_v<M, W2gModel<float>>) {
                o << "cov " << to_string(m.cov) << "\ndim " << m.dim() << "\nenergy " << to_string(m.energy)
                  << "\nclip_mean_norm " << fmt17(m.clip.max_mean_norm) << "\nvar_lo " << fmt17(m.clip.var_lo)
                  << "\nvar_hi " << fmt17(m.clip.var_hi) << '\n';
            } else {
                o << "dim " << m.dim() << '\n';
            }
        },
        b.model);
    return o.str();
}

// The thread count is not stored: it is an execution setting, and a
// deterministic run writes the same file whatever it was.
inline std::string config_text(const TrainConfig& c) {
    std::ostringstream o;
    o << "dim " << c.dim << "\nhidden " << c.hidden << "\nwindow " << c.window << "\nnegatives_per_positive "
      << c.negatives_per_positive << "\nbatch_size " << c.batch_size << "\nepochs " << c.epochs << "\nmargin "
      << fmt17(c.margin) << "\nlearning_rate " << fmt17(c.learning_rate) << "\nbeta1 " << fmt17(c.beta1)
      << "\nbeta2 " << fmt17(c.beta2) << "\nepsilon " << fmt17(c.epsilon) << "\nseed " << c.seed << "\nobjective "
      << to_string(c.objective) << "\npairing " << to_string(c.pairing) << "\ncov " << to_string(c.cov)
      << "\ntie_prior_context " << c.tie_prior_context << "\ntie_encoder_embeddings " << c.tie_encoder_embeddings
      << "\ndeterministic " << c.deterministic << "\nenergy " << to_string(c.energy)
      << "\nclip_mean_norm " << fmt17(c.clip_mean_norm) << "\nvar_lo " << fmt17(c.var_lo) << "\nvar_hi "
      << fmt17(c.var_hi) << '\n';
    return o.str();
}

inline std::string vocab_text(const Vocabulary& v) {
    std::ostringstream o;
    o << "subsample_t " << fmt17(v.subsample_t()) << "\nneg_exponent " << fmt17(v.neg_exponent()) << "\nsize "
      << v.size() << '\n';
    for (WordId i = 0; i < v.size(); ++i) o << v.word(i) << '\t' << v.count(i) << '\n';
    return o.str();
}

// A section body split into lines, each tagged with its location for errors.
struct Section {
    std::string name;
    std::vector<std::string> lines;
    std::vector<std::string> where;
    std::string binary;            // raw payload (binary files)
    std::size_t binary_offset = 0;  // byte offset of the payload
    bool is_binary = false;
};

inline std::pair<std::string, std::string> split_kv(const std::string& line, const std::string& where) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw DataError(where + ": expected 'key value', got '" + line + "'");
    return {line.substr(0, sp), line.substr(sp + 1)};
}

inline std::map<std::string, std::pair<std::string, std::string>> key_values(const Section& s) {
    std::map<std::string, std::pair<std::string, std::string>> kv;
    for (std::size_t i = 0; i < s.lines.size(); ++i) {
        auto [k, v] = split_kv(s.lines[i], s.where[i]);
        kv[k] = {v, s.where[i]};
    }
    return kv;
}

class KeyValues {
public:
    KeyValues(const Section& s, std::string what) : kv_(key_values(s)), what_(std::move(what)) {}

    const std::string& str(const std::string& key) const { return at(key).first; }
    template <typename T>
    T num(const std::string& key) const {
        const auto& [v, where] = at(key);
        return parse_num<T>(v, where);
    }
    bool flag(const std::string& key) const { return num<int>(key) != 0; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    const std::string& where(const std::string& key) const { return at(key).second; }

private:
    const std::pair<std::string, std::string>& at(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw DataError("section '" + what_ + "' lacks key '" + key + "'");
        return it->second;
    }
    std::map<std::string, std::pair<std::string, std::string>> kv_;
    std::string what_;
};

inline TrainConfig parse_config(const Section& s) {
    KeyValues kv(s, "config");
    TrainConfig c;
    c.dim = kv.num<std::size_t>("dim");
    c.hidden = kv.num<std::size_t>("hidden");
    c.window = kv.num<std::size_t>("window");
    c.negatives_per_positive = kv.num<std::size_t>("negatives_per_positive");
    c.batch_size = kv.num<std::size_t>("batch_size");
    c.epochs = kv.num<std::size_t>("epochs");
    c.margin = kv.num<double>("margin");
    c.learning_rate = kv.num<double>("learning_rate");
    c.beta1 = kv.num<double>("beta1");
    c.beta2 = kv.num<double>("beta2");
    c.epsilon = kv.num<double>("epsilon");
    c.seed = kv.num<std::uint64_t>("seed");
    c.objective = parse_objective(kv.str("objective"));
    c.pairing = parse_pairing(kv.str("pairing"));
    c.cov = parse_cov_kind(kv.str("cov"));
    c.tie_prior_context = kv.flag("tie_prior_context");
    c.tie_encoder_embeddings = kv.flag("tie_encoder_embeddings");
    c.deterministic = kv.flag("deterministic");
    c.energy = parse_energy(kv.str("energy"));
    c.clip_mean_norm = kv.num<double>("clip_mean_norm");
    c.var_lo = kv.num<double>("var_lo");
    c.var_hi = kv.num<double>("var_hi");
    return c;
}

inline Vocabulary parse_vocab(const Section& s) {
    if (s.lines.size() < 3) throw DataError("section 'vocab' is incomplete");
    Section head;
    head.name = s.name;
    head.lines.assign(s.lines.begin(), s.lines.begin() + 3);
    head.where.assign(s.where.begin(), s.where.begin() + 3);
    KeyValues kv(head, "vocab");
    const auto n = kv.num<std::size_t>("size");
    if (s.lines.size() != 3 + n)
        throw DataError(kv.where("size") + ": vocab declares " + std::to_string(n) + " words but holds " +
                        std::to_string(s.lines.size() - 3));
    std::vector<std::string> words;
    std::vector<std::uint64_t> counts;
    for (std::size_t i = 3; i < s.lines.size(); ++i) {
        const auto tab = s.lines[i].find('\t');
        if (tab == std::string::npos) throw DataError(s.where[i] + ": expected word<TAB>count");
        words.push_back(s.lines[i].substr(0, tab));
        counts.push_back(parse_num<std::uint64_t>(std::string_view(s.lines[i]).substr(tab + 1), s.where[i]));
    }
    return Vocabulary(std::move(words), std::move(counts), kv.num<double>("subsample_t"),
                      kv.num<double>("neg_exponent"));
}

inline Matrix<float> parse_matrix(const Section& s) {
    if (s.is_binary) {
        const auto& p = s.binary;
        auto where = [&](std::size_t off) {
            return "byte " + std::to_string(s.binary_offset + off) + " (section '" + s.name + "')";
        };
        if (p.size() < 16) throw DataError(where(0) + ": matrix header is truncated");
        std::uint64_t rows = 0, cols = 0;
        std::memcpy(&rows, p.data(), 8);
        std::memcpy(&cols, p.data() + 8, 8);
        if (cols != 0 && rows > (p.size() / 4) / cols + 1) throw DataError(where(0) + ": implausible matrix shape");
        const std::uint64_t need = 16 + 4 * rows * cols;
        if (p.size() != need)
            throw DataError(where(16) + ": payload holds " + std::to_string(p.size()) + " bytes, shape needs " +
                            std::to_string(need));
        Matrix<float> m(rows, cols);
        if (!m.empty()) std::memcpy(m.flat().data(), p.data() + 16, 4 * rows * cols);
        return m;
    }
    if (s.lines.empty()) throw DataError("section '" + s.name + "' is empty");
    std::istringstream shape(s.lines[0]);
    std::size_t rows = 0, cols = 0;
    if (!(shape >> rows >> cols)) throw DataError(s.where[0] + ": expected '<rows> <cols>'");
    if (s.lines.size() != rows + 1)
        throw DataError(s.where[0] + ": section '" + s.name + "' declares " + std::to_string(rows) + " rows, holds " +
                        std::to_string(s.lines.size() - 1));
    Matrix<float> m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string& line = s.lines[r + 1];
        std::size_t pos = 0, c = 0;
        while (pos < line.size()) {
            const auto end = std::min(line.find(' ', pos), line.size());
            if (c >= cols) throw DataError(s.where[r + 1] + ": more than " + std::to_string(cols) + " values");
            m(r, c++) = static_cast<float>(parse_num<double>(std::string_view(line).substr(pos, end - pos), s.where[r + 1]));
            pos = end + 1;
        }
        if (c != cols) throw DataError(s.where[r + 1] + ": expected " + std::to_string(cols) + " values, got " + std::to_string(c));
    }
    return m;
}

inline std::vector<std::string> expected_tables(ModelKind kind, bool tie_ctx, bool tie_emb) {
    switch (kind) {
    case ModelKind::sg: return {"sg_input", "sg_output"};
    case ModelKind::w2g: return {"w2g_mean", "w2g_lv"};
    case ModelKind::bsg: break;
    }
    std::vector<std::string> t{"prior_mean", "prior_lv"};
    if (!tie_ctx) t.insert(t.end(), {"ctx_mean", "ctx_lv"});
    if (!tie_emb) t.push_back("enc_R");
    t.insert(t.end(), {"enc_M", "enc_U", "enc_b1", "enc_W", "enc_b2"});
    return t;
}

inline void check_shape(const Matrix<float>& m, std::size_t rows, std::size_t cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols)
        throw DataError("section '" + name + "' has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

// Builds a bundle from parsed sections; `origin` prefixes "missing section" errors.
inline ModelBundle assemble(const std::map<std::string, Section>& sections, bool saw_end, const std::string& origin) {
    auto need = [&](const std::string& name) -> const Section& {
        auto it = sections.find(name);
        if (it == sections.end())
            throw DataError(origin + ": " + (saw_end ? "missing" : "truncated file, missing") + " section '" + name + "'");
        return it->second;
    };
    const KeyValues header(need("header"), "header");
    const ModelKind kind = parse_model_kind(header.str("kind"));
    TrainConfig cfg = parse_config(need("config"));
    Vocabulary vocab = parse_vocab(need("vocab"));
    const std::size_t V = vocab.size();

    bool tie_ctx = false, tie_emb = false;
    if (kind == ModelKind::bsg) {
        tie_ctx = header.flag("tie_prior_context");
        tie_emb = header.flag("tie_embeddings");
    }
    std::map<std::string, Matrix<float>> tables;
    for (const auto& name : expected_tables(kind, tie_ctx, tie_emb)) tables[name] = parse_matrix(need(name));
    if (!saw_end) throw DataError(origin + ": truncated file, missing section 'end'");

    const auto dim = header.num<std::size_t>("dim");
    AnyModel model;
    if (kind == ModelKind::bsg) {
        BsgModel<float> m;
        m.cov = parse_cov_kind(header.str("cov"));
        m.dim = dim;
        m.tie_prior_context = tie_ctx;
        m.tie_embeddings = tie_emb;
        const auto hidden = header.num<std::size_t>("hidden");
        const auto k = log_var_width(m.cov, dim);
        auto take = [&](const std::string& name, std::size_t r, std::size_t c) {
            check_shape(tables.at(name), r, c, name);
            return std::move(tables.at(name));
        };
        m.prior_mean = take("prior_mean", V, dim);
        m.prior_lv = take("prior_lv", V, k);
        if (!tie_ctx) {
            m.ctx_mean = take("ctx_mean", V, dim);
            m.ctx_lv = take("ctx_lv", V, k);
        }
        m.enc.cov = m.cov;
        m.enc.dim = dim;
        m.enc.hidden = hidden;
        if (!tie_emb) m.enc.R = take("enc_R", V, dim);
        m.enc.M = take("enc_M", hidden, 2 * dim);
        m.enc.U = take("enc_U", dim, hidden);
        m.enc.b1 = from_row(take("enc_b1", 1, dim));
        m.enc.W = take("enc_W", k, hidden);
        m.enc.b2 = from_row(take("enc_b2", 1, k));
        model = std::move(m);
    } else if (kind == ModelKind::sg) {
        check_shape(tables.at("sg_input"), V, dim, "sg_input");
        check_shape(tables.at("sg_output"), V, dim, "sg_output");
        model = SgModel<float>{std::move(tables.at("sg_input")), std::move(tables.at("sg_output"))};
    } else {
        W2gModel<float> m;
        m.cov = parse_cov_kind(header.str("cov"));
        m.energy = parse_energy(header.str("energy"));
        m.clip = {header.num<double>("clip_mean_norm"), header.num<double>("var_lo"), header.num<double>("var_hi")};
        check_shape(tables.at("w2g_mean"), V, dim, "w2g_mean");
        check_shape(tables.at("w2g_lv"), V, log_var_width(m.cov, dim), "w2g_lv");
        m.mean = std::move(tables.at("w2g_mean"));
        m.log_var = std::move(tables.at("w2g_lv"));
        model = std::move(m);
    }
    return {std::move(model), std::move(vocab), cfg};
}

inline std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

// ---- text -----------------------------------------------------------------

inline void write_matrix_text(std::ostream& out, const Matrix<float>& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << fmt17(row[c]);
        out << '\n';
    }
}

inline void save_text(const ModelBundle& b, std::ostream& out) {
    out << "BSG-MODEL " << kFormatVersion << '\n';
    out << "#SECTION header\n" << header_text(b);
    out << "#SECTION config\n" << config_text(b.config);
    out << "#SECTION vocab\n" << vocab_text(b.vocab);
    for (const auto& [name, m] : tables_of(b.model)) {
        out << "#SECTION " << name << '\n';
        write_matrix_text(out, m);
    }
    out << "#SECTION end\n";
}

inline ModelBundle load_text(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    auto where = [&] { return origin + ":" + std::to_string(lineno); };
    if (!std::getline(in, line)) throw DataError(origin + ": empty model file");
    ++lineno;
    if (line.rfind("BSG-MODEL ", 0) != 0) throw DataError(where() + ": not a text model file");
    const auto version = parse_num<std::uint32_t>(std::string_view(line).substr(10), where());
    if (version != kFormatVersion)
        throw DataError(where() + ": unsupported model format version " + std::to_string(version) + " (expected " +
                        std::to_string(kFormatVersion) + ")");
    std::map<std::string, Section> sections;
    Section* cur = nullptr;
    bool saw_end = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("#SECTION ", 0) == 0) {
            const std::string name = line.substr(9);
            if (saw_end) throw DataError(where() + ": section '" + name + "' after end");
            if (name == "end") {
                saw_end = true;
                cur = nullptr;
                continue;
            }
            if (sections.count(name)) throw DataError(where() + ": duplicate section '" + name + "'");
            cur = &sections[name];
            cur->name = name;
            continue;
        }
        if (!cur) {
            if (line.empty()) continue;
            throw DataError(where() + ": content outside any section");
        }
        cur->lines.push_back(line);
        cur->where.push_back(where());
    }
    return assemble(sections, saw_end, origin);
}

// ---- binary ---------------------------------------------------------------

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

inline void put_section(std::string& out, const std::string& name, const std::string& payload) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, payload.size());
    out += payload;
}

inline std::string matrix_payload(const Matrix<float>& m) {
    std::string p;
    p.reserve(16 + 4 * m.size());
    put<std::uint64_t>(p, m.rows());
    put<std::uint64_t>(p, m.cols());
    if (!m.empty()) p.append(reinterpret_cast<const char*>(m.flat().data()), 4 * m.size());
    return p;
}

inline void save_binary(const ModelBundle& b, std::ostream& out) {
    std::string buf = "BSG1";
    put<std::uint32_t>(buf, kFormatVersion);
    put_section(buf, "header", header_text(b));
    put_section(buf, "config", config_text(b.config));
    put_section(buf, "vocab", vocab_text(b.vocab));
    for (const auto& [name, m] : tables_of(b.model)) put_section(buf, name, matrix_payload(m));
    put_section(buf, "end", "");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline ModelBundle load_binary(const std::string& data, const std::string& origin) {
    std::size_t pos = 0;
    auto at = [&](std::size_t off) { return origin + ": byte " + std::to_string(off); };
    auto get = [&](auto& v, const char* what) {
        if (data.size() - pos < sizeof v) return false;
        std::memcpy(&v, data.data() + pos, sizeof v);
        pos += sizeof v;
        (void)what;
        return true;
    };
    if (data.size() < 8 || data.compare(0, 4, "BSG1") != 0) throw DataError(at(0) + ": not a binary model file");
    pos = 4;
    std::uint32_t version = 0;
    get(version, "version");
    if (version != kFormatVersion)
        throw DataError(at(4) + ": unsupported model format version " + std::to_string(version) + " (expected " +
                        std::to_string(kFormatVersion) + ")");

    std::map<std::string, Section> sections;
    bool saw_end = false;
    while (pos < data.size()) {
        const std::size_t start = pos;
        std::uint32_t name_len = 0;
        if (!get(name_len, "name length")) throw DataError(at(start) + ": truncated section header");
        if (name_len > 256 || data.size() - pos < name_len) throw DataError(at(start) + ": corrupt section name");
        const std::string name = data.substr(pos, name_len);
        pos += name_len;
        std::uint64_t len = 0;
        if (!get(len, "payload length"))
            throw DataError(at(start) + ": truncated file inside section '" + name + "'");
        if (data.size() - pos < len)
            throw DataError(at(pos) + ": truncated file, section '" + name + "' needs " + std::to_string(len) +
                            " bytes, " + std::to_string(data.size() - pos) + " remain");
        if (name == "end") {
            saw_end = true;
            pos += len;
            if (pos != data.size()) throw DataError(at(pos) + ": trailing bytes after end section");
            break;
        }
        if (sections.count(name)) throw DataError(at(start) + ": duplicate section '" + name + "'");
        Section s;
        s.name = name;
        s.binary = data.substr(pos, len);
        s.binary_offset = pos;
        s.is_binary = true;
        if (name == "header" || name == "config" || name == "vocab") {
            s.lines = split_lines(s.binary);
            for (std::size_t i = 0; i < s.lines.size(); ++i)
                s.where.push_back(at(pos) + " (section '" + name + "', line " + std::to_string(i + 1) + ")");
        }
        pos += len;
        sections.emplace(name, std::move(s));
    }
    return assemble(sections, saw_end, origin);
}

} // namespace detail

inline void save_model(const ModelBundle& b, std::ostream& out, FileMode mode) {
    if (mode == FileMode::text)
        detail::save_text(b, out);
    else
        detail::save_binary(b, out);
}

inline void save_model(const ModelBundle& b, const std::string& path, FileMode mode) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    save_model(b, out, mode);
    if (!out) throw DataError("write failed: " + path);
}

// Detects the format from the leading bytes.
inline ModelBundle load_model_from(const std::string& data, const std::string& origin = "<model>") {
    if (data.compare(0, 4, "BSG1") == 0) return detail::load_binary(data, origin);
    if (data.compare(0, 10, "BSG-MODEL ") == 0) {
        std::istringstream in(data);
        return detail::load_text(in, origin);
    }
    throw DataError(origin + ": byte 0: not a model file");
}

inline ModelBundle load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_model_from(ss.str(), path);
}

} // namespace bsg
