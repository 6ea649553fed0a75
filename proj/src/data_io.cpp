#include "xdjdl/data_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace xdjdl::io {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'X', 'D', 'J', 'D'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(char(v & 0xff));
    buf.push_back(char((v >> 8) & 0xff));
}
void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    explicit Reader(const std::string& b) : buf(b) {}
    void need(std::size_t n, Err code, const char* what) {
        if (pos + n > buf.size()) fail(code, what);
    }
    std::uint16_t u16(Err code = Err::CorruptEntryTable, const char* what = "truncated file") {
        need(2, code, what);
        auto v = std::uint16_t(std::uint8_t(buf[pos])) |
                 std::uint16_t(std::uint8_t(buf[pos + 1])) << 8;
        pos += 2;
        return std::uint16_t(v);
    }
    std::uint32_t u32(Err code = Err::CorruptEntryTable, const char* what = "truncated file") {
        need(4, code, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64(Err code = Err::CorruptEntryTable, const char* what = "truncated file") {
        need(8, code, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
};

struct Entry {
    std::string name;
    Matrix value;
};

void write_container(const std::string& path, const json& meta, const std::vector<Entry>& entries) {
    std::string header;
    header.append(kMagic, 4);
    put_u16(header, kVersion);
    put_u16(header, 0); // reserved
    put_u32(header, std::uint32_t(entries.size()));
    const std::string meta_str = meta.dump();
    put_u32(header, std::uint32_t(meta_str.size()));
    header += meta_str;

    // entry table size is known up front, so payload offsets are absolute
    std::size_t table_size = 0;
    for (const Entry& e : entries) table_size += 2 + e.name.size() + 8 + 8 + 8;

    std::string table, payload;
    std::uint64_t offset = header.size() + table_size;
    for (const Entry& e : entries) {
        put_u16(table, std::uint16_t(e.name.size()));
        table += e.name;
        put_u64(table, std::uint64_t(e.value.rows()));
        put_u64(table, std::uint64_t(e.value.cols()));
        put_u64(table, offset);
        for (Index r = 0; r < e.value.rows(); ++r)
            for (Index c = 0; c < e.value.cols(); ++c) put_f64(payload, e.value(r, c));
        offset += std::uint64_t(e.value.size()) * 8;
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open for writing: " + path);
    f << header << table << payload;
    if (!f.good()) fail(Err::IoError, "short write: " + path);
}

json hyper_to_json(const HyperParams& h) {
    return json{{"k_e", h.k_e},       {"k_p", h.k_p},
                {"t_e", h.t_e},       {"t_p", h.t_p},
                {"alpha", h.alpha},   {"beta", h.beta},
                {"gamma", h.gamma},   {"ridge_lambda", h.ridge_lambda},
                {"max_iters", h.max_iters}, {"rel_tol", h.rel_tol},
                {"seed", h.seed}};
}

HyperParams hyper_from_json(const json& j) {
    HyperParams h;
    h.k_e = j.at("k_e").get<Index>();
    h.k_p = j.at("k_p").get<Index>();
    h.t_e = j.at("t_e").get<Index>();
    h.t_p = j.at("t_p").get<Index>();
    h.alpha = j.at("alpha").get<double>();
    h.beta = j.at("beta").get<double>();
    h.gamma = j.at("gamma").get<double>();
    h.ridge_lambda = j.at("ridge_lambda").get<double>();
    h.max_iters = j.at("max_iters").get<Index>();
    h.rel_tol = j.at("rel_tol").get<double>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

Matrix trace_to_matrix(const std::vector<double>& trace) {
    Matrix m(1, Index(trace.size()));
    for (std::size_t i = 0; i < trace.size(); ++i) m(0, Index(i)) = trace[i];
    return m;
}

} // namespace

void save_model(const std::string& path, const XdjdlModel& model) {
    json meta{{"variant", "xdjdl"}, {"hyper", hyper_to_json(model.hyper)}};
    write_container(path, meta,
                    {{"D_e", model.D_e}, {"D_p", model.D_p}, {"W", model.W},
                     {"trace", trace_to_matrix(model.trace)}});
}

void save_model(const std::string& path, const LcXdjdlModel& model) {
    json meta{{"variant", "lc_xdjdl"},
              {"hyper", hyper_to_json(model.base.hyper)},
              {"class_count", model.class_count},
              {"ones_per_class", model.ones_per_class}};
    write_container(path, meta,
                    {{"D_e", model.base.D_e}, {"D_p", model.base.D_p}, {"W", model.base.W},
                     {"H", model.H}, {"trace", trace_to_matrix(model.base.trace)}});
}

void save_model(const std::string& path, const SavedModel& model) {
    json meta{{"variant", model.variant}, {"hyper", hyper_to_json(model.model.hyper)}};
    std::vector<Entry> entries{{"D_e", model.model.D_e},
                               {"D_p", model.model.D_p},
                               {"W", model.model.W},
                               {"trace", trace_to_matrix(model.model.trace)}};
    if (model.H) {
        meta["class_count"] = model.class_count;
        meta["ones_per_class"] = model.ones_per_class;
        entries.push_back({"H", *model.H});
    }
    write_container(path, meta, entries);
}

SavedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Err::IoError, "cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    Reader rd(buf);
    rd.need(4, Err::BadMagic, "file shorter than the magic");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) fail(Err::BadMagic, "not a model container");
    rd.pos = 4;
    const std::uint16_t version = rd.u16(Err::BadMagic, "truncated header");
    if (version != kVersion)
        fail(Err::UnsupportedVersion, "container version " + std::to_string(version));
    rd.u16(Err::BadMagic, "truncated header"); // reserved
    const std::uint32_t entry_count = rd.u32(Err::BadMagic, "truncated header");
    const std::uint32_t meta_len = rd.u32(Err::BadMagic, "truncated header");
    rd.need(meta_len, Err::BadMagic, "truncated metadata");
    json meta;
    try {
        meta = json::parse(buf.substr(rd.pos, meta_len));
    } catch (const json::exception& e) {
        fail(Err::ParseError, std::string("bad metadata json: ") + e.what());
    }
    rd.pos += meta_len;

    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < entry_count; ++i) {
        const std::uint16_t name_len = rd.u16();
        rd.need(name_len, Err::CorruptEntryTable, "truncated entry name");
        Entry e;
        e.name = buf.substr(rd.pos, name_len);
        rd.pos += name_len;
        const std::uint64_t rows = rd.u64();
        const std::uint64_t cols = rd.u64();
        const std::uint64_t off = rd.u64();
        if (rows > (1u << 26) || cols > (1u << 26))
            fail(Err::CorruptEntryTable, "implausible entry shape");
        const std::uint64_t bytes = rows * cols * 8;
        if (off > buf.size() || off + bytes > buf.size())
            fail(Err::CorruptEntryTable, "entry payload out of bounds");
        e.value.resize(Index(rows), Index(cols));
        std::size_t p = off;
        for (std::uint64_t r = 0; r < rows; ++r)
            for (std::uint64_t c = 0; c < cols; ++c) {
                std::uint64_t bits = 0;
                for (int b = 0; b < 8; ++b)
                    bits |= std::uint64_t(std::uint8_t(buf[p + b])) << (8 * b);
                p += 8;
                double v;
                std::memcpy(&v, &bits, 8);
                e.value(Index(r), Index(c)) = v;
            }
        entries.push_back(std::move(e));
    }

    const auto find = [&](const char* name) -> const Matrix& {
        for (const Entry& e : entries)
            if (e.name == name) return e.value;
        fail(Err::CorruptEntryTable, std::string("missing entry: ") + name);
    };

    SavedModel out;
    try {
        out.variant = meta.at("variant").get<std::string>();
        out.model.hyper = hyper_from_json(meta.at("hyper"));
        if (out.variant == "lc_xdjdl") {
            out.class_count = meta.at("class_count").get<Index>();
            out.ones_per_class = meta.at("ones_per_class").get<Index>();
        }
    } catch (const json::exception& e) {
        fail(Err::ParseError, std::string("bad metadata fields: ") + e.what());
    }
    out.model.D_e = find("D_e");
    out.model.D_p = find("D_p");
    out.model.W = find("W");
    const Matrix& tr = find("trace");
    out.model.trace.assign(tr.data(), tr.data() + tr.size());
    if (out.variant == "lc_xdjdl") out.H = find("H");
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t line_no, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
        if (used != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        fail(Err::ParseError, path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

RawRecord read_signals(const std::string& path, double default_fs) {
    std::ifstream f(path);
    if (!f) fail(Err::IoError, "cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line)) fail(Err::ParseError, path + ":1: empty file");
    auto header = split_line(line, ',');
    bool with_time;
    if (header.size() == 3 && header[0] == "t" && header[1] == "ppg" && header[2] == "ecg")
        with_time = true;
    else if (header.size() == 2 && header[0] == "ppg" && header[1] == "ecg")
        with_time = false;
    else
        fail(Err::ParseError, path + ":1: expected header 't,ppg,ecg' or 'ppg,ecg'");

    RawRecord rec;
    std::vector<double> times;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto parts = split_line(line, ',');
        if (parts.size() != header.size())
            fail(Err::ParseError,
                 path + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(header.size()) + " fields");
        std::size_t k = 0;
        if (with_time) times.push_back(parse_double(parts[k++], line_no, path));
        rec.ppg.push_back(parse_double(parts[k++], line_no, path));
        rec.ecg.push_back(parse_double(parts[k], line_no, path));
    }
    if (rec.ppg.size() < 2) fail(Err::SequenceTooShort, path + ": fewer than 2 samples");

    if (with_time) {
        const double span = times.back() - times.front();
        if (!(span > 0)) fail(Err::ParseError, path + ": time column must increase");
        rec.fs = double(times.size() - 1) / span;
    } else {
        if (!(default_fs > 0)) fail(Err::InvalidParams, "sample rate required when no time column");
        rec.fs = default_fs;
    }
    return rec;
}

void write_signals(const std::string& path, const RawRecord& record, bool with_time) {
    if (record.ppg.size() != record.ecg.size())
        fail(Err::DimensionMismatch, "ppg/ecg lengths differ");
    if (with_time && !(record.fs > 0)) fail(Err::InvalidParams, "time column needs a sample rate");
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open for writing: " + path);
    f << (with_time ? "t,ppg,ecg\n" : "ppg,ecg\n");
    for (std::size_t i = 0; i < record.ppg.size(); ++i) {
        if (with_time) f << fmt17(double(i) / record.fs) << ',';
        f << fmt17(record.ppg[i]) << ',' << fmt17(record.ecg[i]) << '\n';
    }
    if (!f.good()) fail(Err::IoError, "short write: " + path);
}

void write_cycles(const std::string& base, const CyclePairSet& cycles) {
    cycles.validate();
    write_matrix_csv(base + "_ppg.csv", cycles.ppg);
    write_matrix_csv(base + "_ecg.csv", cycles.ecg);

    json meta{{"d", cycles.d()}, {"N", cycles.n()}, {"fs", cycles.fs}, {"mode", cycles.mode}};
    if (!cycles.labels.empty()) meta["labels"] = cycles.labels;
    if (!cycles.src_len.empty()) meta["src_len"] = cycles.src_len;
    std::ofstream f(base + ".json", std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open for writing: " + base + ".json");
    f << meta.dump(2) << '\n';
    if (!f.good()) fail(Err::IoError, "short write: " + base + ".json");
}

CyclePairSet read_cycles(const std::string& base) {
    std::ifstream f(base + ".json");
    if (!f) fail(Err::IoError, "cannot open for reading: " + base + ".json");
    json meta;
    try {
        f >> meta;
    } catch (const json::exception& e) {
        fail(Err::ParseError, base + ".json: " + e.what());
    }

    CyclePairSet out;
    try {
        out.fs = meta.at("fs").get<double>();
        out.mode = meta.at("mode").get<std::string>();
        if (meta.contains("labels")) out.labels = meta["labels"].get<std::vector<int>>();
        if (meta.contains("src_len")) out.src_len = meta["src_len"].get<std::vector<int>>();
    } catch (const json::exception& e) {
        fail(Err::ParseError, base + ".json: " + e.what());
    }
    out.ppg = read_matrix_csv(base + "_ppg.csv");
    out.ecg = read_matrix_csv(base + "_ecg.csv");
    if (meta.contains("d") && meta["d"].get<Index>() != out.ppg.rows())
        fail(Err::ShapeMismatch, base + ": d does not match the csv shape");
    if (meta.contains("N") && meta["N"].get<Index>() != out.ppg.cols())
        fail(Err::ShapeMismatch, base + ": N does not match the csv shape");
    out.validate();
    return out;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open for writing: " + path);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c) f << ',';
            f << fmt17(m(r, c));
        }
        f << '\n';
    }
    if (!f.good()) fail(Err::IoError, "short write: " + path);
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(Err::IoError, "cannot open for writing: " + path);
    f << "cycle_index,class_id\n";
    for (std::size_t i = 0; i < labels.size(); ++i) f << i << ',' << labels[i] << '\n';
    if (!f.good()) fail(Err::IoError, "short write: " + path);
}

std::vector<int> read_labels(const std::string& path, Index n) {
    std::ifstream f(path);
    if (!f) fail(Err::IoError, "cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line) || split_line(line, ',') != std::vector<std::string>{"cycle_index", "class_id"})
        fail(Err::ParseError, path + ":1: expected header 'cycle_index,class_id'");

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto parts = split_line(line, ',');
        if (parts.size() != 2)
            fail(Err::ParseError, path + ":" + std::to_string(line_no) + ": expected 2 fields");
        const auto idx = static_cast<long long>(parse_double(parts[0], line_no, path));
        const int cls = static_cast<int>(parse_double(parts[1], line_no, path));
        if (idx < 0 || idx >= n)
            fail(Err::ParseError, path + ":" + std::to_string(line_no) + ": cycle index out of range");
        if (labels[static_cast<std::size_t>(idx)] != -1)
            fail(Err::ParseError, path + ":" + std::to_string(line_no) + ": duplicate cycle index");
        if (cls < 0)
            fail(Err::ParseError, path + ":" + std::to_string(line_no) + ": negative class id");
        labels[static_cast<std::size_t>(idx)] = cls;
    }
    for (Index i = 0; i < n; ++i)
        if (labels[static_cast<std::size_t>(i)] == -1)
            fail(Err::ParseError, path + ": no label for cycle " + std::to_string(i));
    return labels;
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(Err::IoError, "cannot open for reading: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto parts = split_line(line, ',');
        std::vector<double> row;
        row.reserve(parts.size());
        for (const auto& p : parts) row.push_back(parse_double(p, line_no, path));
        if (!rows.empty() && row.size() != rows.front().size())
            fail(Err::ParseError, path + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(Err::ParseError, path + ": empty matrix");
    Matrix m(Index(rows.size()), Index(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(Index(r), Index(c)) = rows[r][c];
    return m;
}

} // namespace xdjdl::io
