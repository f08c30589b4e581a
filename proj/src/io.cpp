#include "qdwh/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "qdwh/error.hpp"

namespace qdwh::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& s, std::size_t line) {
    if (s.empty()) throw ParseError("empty numeric field", line);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ParseError("bad numeric field '" + s + "'", line);
    return v;
}

std::size_t parse_size(const std::string& s, std::size_t line) {
    if (s.empty()) throw ParseError("empty integer field", line);
    for (char ch : s)
        if (ch < '0' || ch > '9') throw ParseError("bad integer field '" + s + "'", line);
    return static_cast<std::size_t>(std::strtoull(s.c_str(), nullptr, 10));
}

class LineReader {
public:
    explicit LineReader(const std::string& path) : in_(path) {
        if (!in_) throw ParseError("cannot open " + path);
    }

    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_;
        return true;
    }

    std::string require() {
        std::string line;
        if (!next(line)) throw ParseError("unexpected end of file", line_ + 1);
        return line;
    }

    std::size_t line() const { return line_; }

private:
    std::ifstream in_;
    std::size_t line_ = 0;
};

void rename_into_place(const std::string& tmp, const std::string& path) {
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error("cannot move temp file onto " + path);
    }
}

void write_bytes_atomic(const std::string& path, const std::string& content, bool binary) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
        if (!out) throw Error("cannot open " + tmp + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed on " + tmp);
    }
    rename_into_place(tmp, path);
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
    write_bytes_atomic(path, content, false);
}

Dataset read_dataset(const std::string& path) {
    LineReader reader(path);
    std::vector<std::string> header = split(reader.require(), '\t');
    if (header.size() != 3) throw ParseError("header must be n, d, c", reader.line());
    Dataset ds;
    ds.num_items = parse_size(header[0], reader.line());
    ds.feature_dim = parse_size(header[1], reader.line());
    ds.num_classes = parse_size(header[2], reader.line());
    if (ds.feature_dim == 0 || ds.num_classes == 0)
        throw ParseError("dimensions must be positive", reader.line());
    ds.features.resize(ds.num_items * ds.feature_dim);
    ds.labels.assign(ds.num_items * ds.num_classes, 0);

    for (std::size_t i = 0; i < ds.num_items; ++i) {
        std::vector<std::string> fields = split(reader.require(), '\t');
        if (fields.size() != ds.feature_dim + 1)
            throw ParseError("expected " + std::to_string(ds.feature_dim + 1) + " fields",
                             reader.line());
        for (std::size_t j = 0; j < ds.feature_dim; ++j)
            ds.features[i * ds.feature_dim + j] = parse_double(fields[j], reader.line());
        const std::string& label = fields.back();
        if (label.empty()) throw ParseError("empty label field", reader.line());
        for (const std::string& part : split(label, ';')) {
            std::size_t cls = parse_size(part, reader.line());
            if (cls >= ds.num_classes)
                throw ParseError("class index " + part + " out of range", reader.line());
            ds.labels[i * ds.num_classes + cls] = 1;
        }
    }
    std::string extra;
    if (reader.next(extra) && !extra.empty())
        throw ParseError("trailing content", reader.line());
    return ds;
}

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ostringstream out;
    out << ds.num_items << '\t' << ds.feature_dim << '\t' << ds.num_classes << '\n';
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        for (std::size_t j = 0; j < ds.feature_dim; ++j)
            out << format_double(ds.features[i * ds.feature_dim + j]) << '\t';
        bool first = true;
        for (std::size_t cls = 0; cls < ds.num_classes; ++cls) {
            if (!ds.labels[i * ds.num_classes + cls]) continue;
            if (!first) out << ';';
            out << cls;
            first = false;
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

namespace {

void write_tensor(std::ostringstream& out, const std::string& name, std::size_t rows,
                  std::size_t cols, const double* data) {
    out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (j) out << '\t';
            out << format_double(data[i * cols + j]);
        }
        out << '\n';
    }
}

// Expects "tensor <name> <rows> <cols>" then the value rows.
void read_tensor(LineReader& reader, const std::string& name, std::size_t& rows,
                 std::size_t& cols, std::vector<double>& data) {
    std::vector<std::string> head = split(reader.require(), ' ');
    if (head.size() != 4 || head[0] != "tensor" || head[1] != name)
        throw ParseError("expected tensor " + name, reader.line());
    rows = parse_size(head[2], reader.line());
    cols = parse_size(head[3], reader.line());
    data.resize(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<std::string> fields = split(reader.require(), '\t');
        if (fields.size() != cols) throw ParseError("tensor row width mismatch", reader.line());
        for (std::size_t j = 0; j < cols; ++j)
            data[i * cols + j] = parse_double(fields[j], reader.line());
    }
}

Matrix read_matrix(LineReader& reader, const std::string& name) {
    Matrix m;
    read_tensor(reader, name, m.rows, m.cols, m.data);
    return m;
}

Vec read_vector(LineReader& reader, const std::string& name) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec v;
    read_tensor(reader, name, rows, cols, v);
    if (rows != 1) throw ParseError("expected a single-row tensor for " + name, reader.line());
    return v;
}

}  // namespace

Checkpoint read_checkpoint(const std::string& path) {
    LineReader reader(path);
    std::vector<std::string> magic = split(reader.require(), ' ');
    if (magic.size() != 2 || magic[0] != "QDWH-CHECKPOINT")
        throw ParseError("not a checkpoint file", reader.line());
    Checkpoint cp;
    cp.version = static_cast<std::uint32_t>(parse_size(magic[1], reader.line()));
    if (cp.version != 1) throw ParseError("unsupported checkpoint version", reader.line());

    std::vector<std::string> step = split(reader.require(), ' ');
    if (step.size() != 2 || step[0] != "step") throw ParseError("expected step", reader.line());
    cp.step = parse_size(step[1], reader.line());

    std::vector<std::string> count = split(reader.require(), ' ');
    if (count.size() != 2 || count[0] != "feature_layers")
        throw ParseError("expected feature_layers", reader.line());
    std::size_t layers = parse_size(count[1], reader.line());

    for (std::size_t l = 0; l < layers; ++l) {
        AffineLayer layer;
        layer.weight = read_matrix(reader, "feature_weight_" + std::to_string(l));
        layer.bias = read_vector(reader, "feature_bias_" + std::to_string(l));
        if (layer.bias.size() != layer.weight.cols)
            throw ParseError("feature bias width mismatch", reader.line());
        cp.params.feature_layers.push_back(std::move(layer));
    }
    cp.params.hash_weight = read_matrix(reader, "hash_weight");
    cp.params.hash_bias = read_vector(reader, "hash_bias");
    cp.params.class_weights = read_matrix(reader, "class_weights");
    cp.params.classifier_weight = read_matrix(reader, "classifier_weight");
    cp.params.classifier_bias = read_vector(reader, "classifier_bias");

    const ModelParams& p = cp.params;
    bool consistent = p.hash_bias.size() == p.hash_weight.cols &&
                      p.class_weights.cols == p.hash_weight.cols &&
                      p.classifier_bias.size() == p.classifier_weight.cols &&
                      p.classifier_weight.rows == p.hash_weight.rows &&
                      p.class_weights.rows == p.classifier_weight.cols;
    for (std::size_t l = 0; l + 1 < p.feature_layers.size(); ++l)
        consistent = consistent &&
                     p.feature_layers[l].weight.cols == p.feature_layers[l + 1].weight.rows;
    if (!p.feature_layers.empty())
        consistent = consistent && p.feature_layers.back().weight.cols == p.hash_weight.rows;
    if (!consistent) throw ParseError("inconsistent tensor dimensions", reader.line());
    for (double w : p.class_weights.data)
        if (w < 0.0) throw ParseError("negative class weight", reader.line());

    std::vector<std::string> cfg = split(reader.require(), ' ');
    if (cfg.size() != 2 || cfg[0] != "config") throw ParseError("expected config", reader.line());
    std::size_t cfg_lines = parse_size(cfg[1], reader.line());
    for (std::size_t i = 0; i < cfg_lines; ++i) cp.config_lines.push_back(reader.require());
    if (reader.require() != "end") throw ParseError("expected end", reader.line());
    return cp;
}

void write_checkpoint(const Checkpoint& cp, const std::string& path) {
    std::ostringstream out;
    out << "QDWH-CHECKPOINT " << cp.version << '\n';
    out << "step " << cp.step << '\n';
    out << "feature_layers " << cp.params.feature_layers.size() << '\n';
    for (std::size_t l = 0; l < cp.params.feature_layers.size(); ++l) {
        const AffineLayer& layer = cp.params.feature_layers[l];
        write_tensor(out, "feature_weight_" + std::to_string(l), layer.weight.rows,
                     layer.weight.cols, layer.weight.data.data());
        write_tensor(out, "feature_bias_" + std::to_string(l), 1, layer.bias.size(),
                     layer.bias.data());
    }
    const ModelParams& p = cp.params;
    write_tensor(out, "hash_weight", p.hash_weight.rows, p.hash_weight.cols,
                 p.hash_weight.data.data());
    write_tensor(out, "hash_bias", 1, p.hash_bias.size(), p.hash_bias.data());
    write_tensor(out, "class_weights", p.class_weights.rows, p.class_weights.cols,
                 p.class_weights.data.data());
    write_tensor(out, "classifier_weight", p.classifier_weight.rows, p.classifier_weight.cols,
                 p.classifier_weight.data.data());
    write_tensor(out, "classifier_bias", 1, p.classifier_bias.size(), p.classifier_bias.data());
    out << "config " << cp.config_lines.size() << '\n';
    for (const std::string& line : cp.config_lines) out << line << '\n';
    out << "end\n";
    write_text_atomic(path, out.str());
}

BitCodeSet read_codes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 15) throw ParseError("code file shorter than its header");
    if (bytes.compare(0, 4, "QDWH") != 0) throw ParseError("bad magic in code file");
    if (static_cast<std::uint8_t>(bytes[4]) != 1) throw ParseError("unsupported code file version");
    auto u8 = [&bytes](std::size_t i) { return static_cast<std::uint8_t>(bytes[i]); };
    std::size_t q = u8(5) | (static_cast<std::size_t>(u8(6)) << 8);
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(u8(7 + i)) << (8 * i);
    if (q < 1) throw ParseError("code length 0 in code file");
    std::size_t nb = (q + 7) / 8;
    if (bytes.size() != 15 + n * nb)
        throw ParseError("code file size mismatch: expected " + std::to_string(15 + n * nb) +
                         " bytes, found " + std::to_string(bytes.size()));
    std::vector<std::uint8_t> records(bytes.begin() + 15, bytes.end());
    return codes_from_bytes(static_cast<std::size_t>(n), q, records);
}

void write_codes(const BitCodeSet& set, const std::string& path) {
    if (set.code_length > 0xFFFF) throw ArgumentError("code length exceeds the file format");
    std::string bytes;
    bytes.reserve(15 + set.num_items * set.bytes_per_code());
    bytes += "QDWH";
    bytes += static_cast<char>(1);
    bytes += static_cast<char>(set.code_length & 0xFF);
    bytes += static_cast<char>((set.code_length >> 8) & 0xFF);
    for (int i = 0; i < 8; ++i)
        bytes += static_cast<char>((static_cast<std::uint64_t>(set.num_items) >> (8 * i)) & 0xFF);
    for (std::size_t i = 0; i < set.num_items; ++i) {
        std::vector<std::uint8_t> rec = code_bytes(set, i);
        bytes.append(reinterpret_cast<const char*>(rec.data()), rec.size());
    }
    write_bytes_atomic(path, bytes, true);
}

void write_loss_log(const TrainReport& report, const std::string& path) {
    std::ostringstream out;
    out << "step\ttriplet_loss\tclass_loss\tlr\n";
    for (std::size_t s = 0; s < report.steps; ++s) {
        out << s << '\t' << format_double(report.triplet_loss[s]) << '\t'
            << format_double(report.class_loss[s]) << '\t' << format_double(report.lr[s]) << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_ranking(const std::vector<RankedList>& rankings, const std::string& path) {
    std::ostringstream out;
    for (std::size_t qi = 0; qi < rankings.size(); ++qi) {
        for (std::size_t r = 0; r < rankings[qi].size(); ++r) {
            out << qi << '\t' << r + 1 << '\t' << rankings[qi][r].index << '\t'
                << format_double(rankings[qi][r].distance) << '\n';
        }
    }
    write_text_atomic(path, out.str());
}

std::vector<RankedList> read_ranking(const std::string& path, std::size_t num_queries) {
    LineReader reader(path);
    struct Row {
        std::size_t rank;
        std::size_t item;
        double dist;
    };
    std::vector<std::vector<Row>> rows(num_queries);
    std::string line;
    while (reader.next(line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() != 4)
            throw ParseError("expected query, rank, item, distance", reader.line());
        std::size_t qi = parse_size(fields[0], reader.line());
        if (qi >= num_queries)
            throw ParseError("query index " + fields[0] + " out of range", reader.line());
        rows[qi].push_back(Row{parse_size(fields[1], reader.line()),
                               parse_size(fields[2], reader.line()),
                               parse_double(fields[3], reader.line())});
    }
    std::string missing;
    for (std::size_t qi = 0; qi < num_queries; ++qi) {
        if (!rows[qi].empty()) continue;
        if (!missing.empty()) missing += ", ";
        missing += std::to_string(qi);
    }
    if (!missing.empty()) throw Error("missing rankings for query indices: " + missing);

    std::vector<RankedList> rankings(num_queries);
    for (std::size_t qi = 0; qi < num_queries; ++qi) {
        std::sort(rows[qi].begin(), rows[qi].end(),
                  [](const Row& a, const Row& b) { return a.rank < b.rank; });
        for (std::size_t r = 0; r < rows[qi].size(); ++r) {
            if (rows[qi][r].rank != r + 1)
                throw ParseError("ranks for query " + std::to_string(qi) +
                                 " are not contiguous from 1");
            rankings[qi].push_back(RankedItem{rows[qi][r].item, rows[qi][r].dist});
        }
    }
    return rankings;
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ostringstream out;
    out << "QDWH-REPORT 1\n";
    out << "code_length " << report.code_length << '\n';
    out << "num_database " << report.num_database << '\n';
    out << "num_queries " << report.num_queries << '\n';
    out << "mode " << report.mode << '\n';
    out << "truncation " << report.truncation << '\n';
    out << "queries_without_relevant " << report.queries_without_relevant << '\n';
    out << "empty_radius_buckets " << report.empty_radius_buckets << '\n';
    out << "map " << format_double(report.map) << '\n';
    out << "precision_within_radius2 " << format_double(report.precision_within_radius2) << '\n';
    for (const auto& [k, p] : report.precision_at_k)
        out << "precision_at_k " << k << ' ' << format_double(p) << '\n';
    for (const PrPoint& pt : report.pr_points)
        out << "pr_point " << format_double(pt.recall) << ' ' << format_double(pt.precision)
            << '\n';
    out << "end\n";
    write_text_atomic(path, out.str());
}

}  // namespace qdwh::io
