#pragma once

#include <iosfwd>
#include <string>

#include "drtr/graph_store.hpp"

namespace drtr {

// One "u<TAB>v" pair per line, 0-based indices.
EdgeList read_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const EdgeList& edges);
void write_edge_list_file(const std::string& path, const EdgeList& edges);

// Feature files: binary layout is a 16-byte header (magic "DRTRFMAT",
// u32 rows, u32 cols, little-endian) followed by row-major f32 values.
// read_features falls back to CSV when the magic is absent.
Matrix read_features(const std::string& path);
void write_features(const std::string& path, const Matrix& m);
Matrix read_features_csv(std::istream& in);

// "node<TAB>class" per line; absent nodes stay unlabeled.
std::vector<std::pair<NodeId, int>> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<std::pair<NodeId, int>>& labels);

void read_node_list(const std::string& path, std::vector<NodeId>& out);
void write_node_list(const std::string& path, const std::vector<NodeId>& nodes);

// Directory layout shared by the CLI: edges.tsv, features.bin, labels.tsv,
// plus optional labeled.tsv restricting the trainer-visible label set.
GraphStore load_graph_dir(const std::string& dir);
void save_graph_dir(const std::string& dir, const GraphStore& g);

} // namespace drtr
