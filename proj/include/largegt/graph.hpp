#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "largegt/matrix.hpp"

namespace largegt {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected-or-directed adjacency in compressed sparse row form.
///
/// Rows are sorted and deduplicated and never contain self-loops; the +I
/// used by the normalized adjacency is added implicitly at apply time.
class GraphCSR {
 public:
  GraphCSR() : row_offsets_{0} {}

  /// Validates the arrays against every CSR invariant; throws
  /// ValidationError on the first violation.
  GraphCSR(std::vector<std::uint64_t> row_offsets, std::vector<NodeId> col_indices);

  /// Builds from an arbitrary edge list. Self-loops are dropped, duplicates
  /// merged, and with `symmetrize` the edge set is closed under reversal.
  static GraphCSR from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                             bool symmetrize);

  std::size_t num_nodes() const noexcept { return row_offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return col_indices_.size(); }

  std::span<const std::uint64_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }

  std::size_t degree(NodeId i) const noexcept {
    return static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i]);
  }
  std::vector<std::size_t> degrees() const;

  std::span<const NodeId> neighbors(NodeId i) const noexcept {
    return {col_indices_.data() + row_offsets_[i], degree(i)};
  }

  /// Edges in row-major order, one entry per stored (directed) arc.
  std::vector<Edge> edge_list() const;

  friend bool operator==(const GraphCSR&, const GraphCSR&) = default;

 private:
  std::vector<std::uint64_t> row_offsets_;
  std::vector<NodeId> col_indices_;
};

/// Parses whitespace separated "src dst" lines. Blank lines and lines
/// starting with '#' are skipped.
GraphCSR read_edge_list(std::istream& in, std::size_t num_nodes, bool symmetrize);
GraphCSR ingest_edge_list(const std::filesystem::path& path, std::size_t num_nodes,
                          bool symmetrize);
void write_edge_list(const GraphCSR& g, const std::filesystem::path& path);

/// Binary CSR snapshot ("LGTG"), used by the CLI to skip re-parsing.
void save_graph(const GraphCSR& g, const std::filesystem::path& path);
GraphCSR load_graph(const std::filesystem::path& path);

/// Loads either a binary snapshot or a text edge list (detected by magic).
/// `num_nodes` is only consulted for text input.
GraphCSR load_graph_any(const std::filesystem::path& path, std::size_t num_nodes,
                        bool symmetrize);

/// Computes Ã·M with Ã = D̃^-1/2 (A + I) D̃^-1/2, D̃ = diag(rowsum(A + I)),
/// row by row from the CSR. Accumulation is in double regardless of T; each
/// output row reads only the rows of its closed neighborhood, in a fixed
/// order, so the result for row i is bit-stable under changes elsewhere.
template <typename T>
RowMatrix<T> normalized_adjacency_apply(const GraphCSR& g, const RowMatrix<T>& m,
                                        unsigned parallelism = 1);

extern template RowMatrix<float> normalized_adjacency_apply(const GraphCSR&,
                                                            const RowMatrix<float>&,
                                                            unsigned);
extern template RowMatrix<double> normalized_adjacency_apply(const GraphCSR&,
                                                             const RowMatrix<double>&,
                                                             unsigned);

/// {u : 1 <= dist(i, u) <= 2}, sorted ascending.
std::vector<NodeId> two_hop_neighbors(const GraphCSR& g, NodeId i);

/// Same as above, reusing `out` as storage.
void two_hop_neighbors(const GraphCSR& g, NodeId i, std::vector<NodeId>& out);

/// Hop distances from `source` (-1 when unreachable), up to `max_depth`.
std::vector<int> bfs_distances(const GraphCSR& g, NodeId source,
                               int max_depth = -1);

// ---------------------------------------------------------------------------

/// Raw node features, optionally with positional-encoding columns appended.
struct NodeFeatures {
  RowMatrixF values;

  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Throws ValidationError naming the first node with a non-finite entry.
  void validate() const;
};

/// Little-endian "LGTF" binary: magic, u32 version, u32 N, u32 D, then N*D f32.
void save_features(const NodeFeatures& f, const std::filesystem::path& path);
NodeFeatures load_features(const std::filesystem::path& path);
/// Comma separated rows, one node per line. Intended for tests and small data.
NodeFeatures load_features_csv(const std::filesystem::path& path);
/// Column-wise concatenation [f | pe]; row counts must match.
NodeFeatures append_columns(const NodeFeatures& f, const NodeFeatures& pe);

struct LabelsAndSplits {
  std::vector<std::int32_t> labels;  // -1 marks unlabeled nodes
  std::size_t num_classes = 0;
  std::vector<NodeId> train;
  std::vector<NodeId> valid;
  std::vector<NodeId> test;

  void validate(std::size_t num_nodes) const;
};

/// Labels: one class id per line. Splits directory: train.txt, valid.txt,
/// test.txt with one node id per line. num_classes = max label + 1.
LabelsAndSplits load_labels_and_splits(const std::filesystem::path& labels_path,
                                       const std::filesystem::path& splits_dir);
void save_labels_and_splits(const LabelsAndSplits& ls,
                            const std::filesystem::path& labels_path,
                            const std::filesystem::path& splits_dir);

}  // namespace largegt
