#include "drtr/io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drtr/errors.hpp"

namespace fs = std::filesystem;

namespace drtr {

namespace {

constexpr char kFeatureMagic[8] = {'D', 'R', 'T', 'R', 'F', 'M', 'A', 'T'};

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw MalformedInputError("cannot open '" + path + "'");
    return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw MalformedInputError("cannot write '" + path + "'");
    return out;
}

// Parses "a<TAB>b" (any run of tabs/spaces accepted between fields).
bool parse_pair(const std::string& line, long long& a, long long& b) {
    std::istringstream ss(line);
    return static_cast<bool>(ss >> a >> b);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) |
           (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f32_le(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32_le(out, bits);
}

float read_f32_le(std::istream& in) {
    const std::uint32_t bits = read_u32_le(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

EdgeList read_edge_list(const std::string& path) {
    auto in = open_input(path);
    EdgeList edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        long long a, b;
        if (!parse_pair(line, a, b) || a < 0 || b < 0) {
            throw MalformedInputError(path + ":" + std::to_string(lineno) +
                                      ": expected 'u<TAB>v'");
        }
        edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
    return edges;
}

void write_edge_list(std::ostream& out, const EdgeList& edges) {
    for (const auto& [v, u] : edges) out << v << '\t' << u << '\n';
}

void write_edge_list_file(const std::string& path, const EdgeList& edges) {
    auto out = open_output(path);
    write_edge_list(out, edges);
}

Matrix read_features_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw MalformedInputError("feature CSV: bad value '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw MalformedInputError("feature CSV: ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw MalformedInputError("feature CSV: no rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
    }
    return m;
}

Matrix read_features(const std::string& path) {
    auto in = open_input(path, std::ios::in | std::ios::binary);
    char magic[8] = {};
    in.read(magic, 8);
    if (in.gcount() == 8 && std::memcmp(magic, kFeatureMagic, 8) == 0) {
        const std::uint32_t rows = read_u32_le(in);
        const std::uint32_t cols = read_u32_le(in);
        if (!in || rows == 0 || cols == 0) {
            throw MalformedInputError("feature file: bad header in '" + path + "'");
        }
        Matrix m(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                m.at(r, c) = static_cast<double>(read_f32_le(in));
            }
        }
        if (!in) throw MalformedInputError("feature file: truncated '" + path + "'");
        return m;
    }
    // CSV fallback.
    in.clear();
    in.seekg(0);
    return read_features_csv(in);
}

void write_features(const std::string& path, const Matrix& m) {
    auto out = open_output(path, std::ios::out | std::ios::binary);
    out.write(kFeatureMagic, 8);
    write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            write_f32_le(out, static_cast<float>(m.at(r, c)));
        }
    }
}

std::vector<std::pair<NodeId, int>> read_labels(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::pair<NodeId, int>> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        long long v, c;
        if (!parse_pair(line, v, c) || v < 0 || c < 0) {
            throw MalformedInputError(path + ":" + std::to_string(lineno) +
                                      ": expected 'node<TAB>class'");
        }
        labels.emplace_back(static_cast<NodeId>(v), static_cast<int>(c));
    }
    return labels;
}

void write_labels(const std::string& path, const std::vector<std::pair<NodeId, int>>& labels) {
    auto out = open_output(path);
    for (const auto& [v, c] : labels) out << v << '\t' << c << '\n';
}

void read_node_list(const std::string& path, std::vector<NodeId>& out) {
    auto in = open_input(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        long long v;
        std::istringstream ss(line);
        if (!(ss >> v) || v < 0) {
            throw MalformedInputError(path + ": expected one node index per line");
        }
        out.push_back(static_cast<NodeId>(v));
    }
}

void write_node_list(const std::string& path, const std::vector<NodeId>& nodes) {
    auto out = open_output(path);
    for (NodeId v : nodes) out << v << '\n';
}

GraphStore load_graph_dir(const std::string& dir) {
    const fs::path base(dir);
    const auto edges = read_edge_list((base / "edges.tsv").string());
    auto features = read_features((base / "features.bin").string());
    std::vector<std::pair<NodeId, int>> labels;
    if (fs::exists(base / "labels.tsv")) {
        labels = read_labels((base / "labels.tsv").string());
    }
    GraphStore g = build_graph(edges, std::move(features), labels);
    if (fs::exists(base / "labeled.tsv")) {
        std::vector<NodeId> labeled;
        read_node_list((base / "labeled.tsv").string(), labeled);
        g.set_labeled_set(std::move(labeled));
    }
    return g;
}

void save_graph_dir(const std::string& dir, const GraphStore& g) {
    fs::create_directories(dir);
    const fs::path base(dir);
    write_edge_list_file((base / "edges.tsv").string(), g.edge_list());
    write_features((base / "features.bin").string(), g.features());
    std::vector<std::pair<NodeId, int>> labels;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        if (g.label(v) != GraphStore::kUnlabeled) labels.emplace_back(v, g.label(v));
    }
    write_labels((base / "labels.tsv").string(), labels);
    write_node_list((base / "labeled.tsv").string(), g.labeled_set());
}

} // namespace drtr
