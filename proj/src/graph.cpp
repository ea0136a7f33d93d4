#include "largegt/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "largegt/error.hpp"
#include "largegt/parallel.hpp"

namespace largegt {

namespace {

constexpr std::uint32_t kGraphVersion = 1;
constexpr std::uint32_t kFeatureVersion = 1;

const char* skip_space(const char* p, const char* end) {
  while (p != end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p;
}

}  // namespace

GraphCSR::GraphCSR(std::vector<std::uint64_t> row_offsets, std::vector<NodeId> col_indices)
    : row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)) {
  if (row_offsets_.empty() || row_offsets_.front() != 0)
    throw ValidationError("row_offsets must start with 0");
  if (row_offsets_.back() != col_indices_.size())
    throw ValidationError("row_offsets[N] must equal the number of edges");
  const std::size_t n = num_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i])
      throw ValidationError("row_offsets decreases at row " + std::to_string(i));
    for (auto e = row_offsets_[i]; e < row_offsets_[i + 1]; ++e) {
      const NodeId c = col_indices_[e];
      if (c >= n) throw ValidationError("column index out of range in row " + std::to_string(i));
      if (c == i) throw ValidationError("self-loop stored in row " + std::to_string(i));
      if (e > row_offsets_[i] && col_indices_[e - 1] >= c)
        throw ValidationError("row " + std::to_string(i) + " is not strictly increasing");
    }
  }
}

GraphCSR GraphCSR::from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                              bool symmetrize) {
  std::vector<Edge> arcs;
  arcs.reserve(symmetrize ? 2 * edges.size() : edges.size());
  for (const auto& [s, d] : edges) {
    if (s >= num_nodes || d >= num_nodes)
      throw BoundsError("edge (" + std::to_string(s) + ", " + std::to_string(d) +
                        ") out of range for " + std::to_string(num_nodes) + " nodes");
    if (s == d) continue;
    arcs.emplace_back(s, d);
    if (symmetrize) arcs.emplace_back(d, s);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  std::vector<std::uint64_t> offsets(num_nodes + 1, 0);
  std::vector<NodeId> cols;
  cols.reserve(arcs.size());
  for (const auto& [s, d] : arcs) {
    ++offsets[s + 1];
    cols.push_back(d);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) offsets[i + 1] += offsets[i];
  GraphCSR g;
  g.row_offsets_ = std::move(offsets);
  g.col_indices_ = std::move(cols);
  return g;
}

std::vector<std::size_t> GraphCSR::degrees() const {
  std::vector<std::size_t> d(num_nodes());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = degree(static_cast<NodeId>(i));
  return d;
}

std::vector<Edge> GraphCSR::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < num_nodes(); ++i)
    for (NodeId c : neighbors(static_cast<NodeId>(i))) out.emplace_back(static_cast<NodeId>(i), c);
  return out;
}

GraphCSR read_edge_list(std::istream& in, std::size_t num_nodes, bool symmetrize) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const char* p = line.data();
    const char* end = p + line.size();
    p = skip_space(p, end);
    if (p == end || *p == '#') continue;
    std::uint64_t ids[2];
    for (auto& id : ids) {
      p = skip_space(p, end);
      auto [next, ec] = std::from_chars(p, end, id);
      if (ec != std::errc{} || next == p)
        throw ParseError("expected two non-negative integer node ids", line_no);
      p = next;
    }
    p = skip_space(p, end);
    if (p != end) throw ParseError("unexpected trailing characters", line_no);
    if (ids[0] >= num_nodes || ids[1] >= num_nodes)
      throw BoundsError("node id out of range on line " + std::to_string(line_no) + " (N=" +
                        std::to_string(num_nodes) + ")");
    edges.emplace_back(static_cast<NodeId>(ids[0]), static_cast<NodeId>(ids[1]));
  }
  return GraphCSR::from_edges(num_nodes, edges, symmetrize);
}

GraphCSR ingest_edge_list(const std::filesystem::path& path, std::size_t num_nodes,
                          bool symmetrize) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list: " + path.string());
  return read_edge_list(in, num_nodes, symmetrize);
}

void write_edge_list(const GraphCSR& g, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (const auto& [s, d] : g.edge_list()) out << s << ' ' << d << '\n';
}

void save_graph(const GraphCSR& g, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  out.write("LGTG", 4);
  io::write_pod(out, kGraphVersion);
  io::write_pod(out, static_cast<std::uint64_t>(g.num_nodes()));
  io::write_pod(out, static_cast<std::uint64_t>(g.num_edges()));
  io::write_span(out, g.row_offsets());
  io::write_span(out, g.col_indices());
}

GraphCSR load_graph(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  io::expect_magic(in, "LGTG", path);
  io::expect_version(io::read_pod<std::uint32_t>(in, "version"), kGraphVersion, path);
  const auto n = io::read_pod<std::uint64_t>(in, "N");
  const auto e = io::read_pod<std::uint64_t>(in, "E");
  std::vector<std::uint64_t> offsets(n + 1);
  std::vector<NodeId> cols(e);
  io::read_span(in, std::span(offsets), "row offsets");
  io::read_span(in, std::span(cols), "column indices");
  io::expect_eof(in, path);
  return GraphCSR(std::move(offsets), std::move(cols));
}

GraphCSR load_graph_any(const std::filesystem::path& path, std::size_t num_nodes,
                        bool symmetrize) {
  if (io::has_magic(path, "LGTG")) return load_graph(path);
  return ingest_edge_list(path, num_nodes, symmetrize);
}

template <typename T>
RowMatrix<T> normalized_adjacency_apply(const GraphCSR& g, const RowMatrix<T>& m,
                                        unsigned parallelism) {
  const std::size_t n = g.num_nodes();
  if (static_cast<std::size_t>(m.rows()) != n)
    throw ContractViolation("normalized_adjacency_apply: matrix has " +
                            std::to_string(m.rows()) + " rows, graph has " +
                            std::to_string(n) + " nodes");
  const Eigen::Index dim = m.cols();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(static_cast<NodeId>(i)) + 1));

  RowMatrix<T> out(m.rows(), dim);
  parallel_for(n, parallelism, [&](std::size_t begin, std::size_t end) {
    Eigen::RowVectorXd acc(dim);
    for (std::size_t i = begin; i < end; ++i) {
      const auto id = static_cast<NodeId>(i);
      const double wi = inv_sqrt[i];
      acc = (wi * wi) * m.row(id).template cast<double>();
      for (NodeId j : g.neighbors(id)) acc += (wi * inv_sqrt[j]) * m.row(j).template cast<double>();
      out.row(id) = acc.template cast<T>();
    }
  });
  return out;
}

template RowMatrix<float> normalized_adjacency_apply(const GraphCSR&, const RowMatrix<float>&,
                                                     unsigned);
template RowMatrix<double> normalized_adjacency_apply(const GraphCSR&,
                                                      const RowMatrix<double>&, unsigned);

void two_hop_neighbors(const GraphCSR& g, NodeId i, std::vector<NodeId>& out) {
  if (i >= g.num_nodes()) throw BoundsError("node " + std::to_string(i) + " out of range");
  out.clear();
  for (NodeId u : g.neighbors(i)) {
    out.push_back(u);
    for (NodeId w : g.neighbors(u))
      if (w != i) out.push_back(w);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

std::vector<NodeId> two_hop_neighbors(const GraphCSR& g, NodeId i) {
  std::vector<NodeId> out;
  two_hop_neighbors(g, i, out);
  return out;
}

std::vector<int> bfs_distances(const GraphCSR& g, NodeId source, int max_depth) {
  if (source >= g.num_nodes()) throw BoundsError("node " + std::to_string(source) + " out of range");
  std::vector<int> dist(g.num_nodes(), -1);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    if (max_depth >= 0 && dist[u] >= max_depth) continue;
    for (NodeId w : g.neighbors(u)) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

// --- features -------------------------------------------------------------

void NodeFeatures::validate() const {
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    if (!values.row(r).allFinite())
      throw ValidationError("non-finite feature value at node " + std::to_string(r));
}

void save_features(const NodeFeatures& f, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  out.write("LGTF", 4);
  io::write_pod(out, kFeatureVersion);
  io::write_pod(out, static_cast<std::uint32_t>(f.num_nodes()));
  io::write_pod(out, static_cast<std::uint32_t>(f.dim()));
  io::write_span(out, std::span<const float>(f.values.data(), static_cast<std::size_t>(f.values.size())));
}

NodeFeatures load_features(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  io::expect_magic(in, "LGTF", path);
  io::expect_version(io::read_pod<std::uint32_t>(in, "version"), kFeatureVersion, path);
  const auto n = io::read_pod<std::uint32_t>(in, "N");
  const auto d = io::read_pod<std::uint32_t>(in, "D");
  NodeFeatures f;
  f.values.resize(n, d);
  io::read_span(in, std::span<float>(f.values.data(), static_cast<std::size_t>(f.values.size())),
                "feature payload");
  io::expect_eof(in, path);
  return f;
}

NodeFeatures load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<float> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stof(cell, &used));
      } catch (const std::exception&) {
        throw ParseError("bad number '" + cell + "'", line_no);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("row width differs from the first row", line_no);
    rows.push_back(std::move(row));
  }
  NodeFeatures f;
  f.values.resize(static_cast<Eigen::Index>(rows.size()),
                  rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return f;
}

NodeFeatures append_columns(const NodeFeatures& f, const NodeFeatures& pe) {
  if (f.num_nodes() != pe.num_nodes())
    throw ValidationError("positional encodings have " + std::to_string(pe.num_nodes()) +
                          " rows, features have " + std::to_string(f.num_nodes()));
  NodeFeatures out;
  out.values.resize(f.values.rows(), f.values.cols() + pe.values.cols());
  out.values << f.values, pe.values;
  return out;
}

// --- labels / splits ------------------------------------------------------

void LabelsAndSplits::validate(std::size_t num_nodes) const {
  if (labels.size() != num_nodes)
    throw ValidationError("labels cover " + std::to_string(labels.size()) + " nodes, graph has " +
                          std::to_string(num_nodes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < -1 || (labels[i] >= 0 && static_cast<std::size_t>(labels[i]) >= num_classes))
      throw ValidationError("label out of range at node " + std::to_string(i));
  std::vector<std::uint8_t> owner(num_nodes, 0);
  const std::vector<NodeId>* sets[] = {&train, &valid, &test};
  for (std::uint8_t s = 0; s < 3; ++s) {
    for (NodeId id : *sets[s]) {
      if (id >= num_nodes) throw ValidationError("split node id out of range: " + std::to_string(id));
      if (owner[id] != 0)
        throw ValidationError("node " + std::to_string(id) + " appears in more than one split slot");
      owner[id] = static_cast<std::uint8_t>(s + 1);
    }
  }
}

namespace {

std::vector<std::int64_t> read_int_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const char* p = skip_space(line.data(), line.data() + line.size());
    const char* end = line.data() + line.size();
    if (p == end || *p == '#') continue;
    std::int64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || skip_space(next, end) != end)
      throw ParseError("expected one integer in " + path.filename().string(), line_no);
    out.push_back(v);
  }
  return out;
}

std::vector<NodeId> to_ids(const std::vector<std::int64_t>& v, const std::filesystem::path& path) {
  std::vector<NodeId> out;
  out.reserve(v.size());
  for (auto x : v) {
    if (x < 0) throw ValidationError("negative node id in " + path.string());
    out.push_back(static_cast<NodeId>(x));
  }
  return out;
}

void write_lines(const std::filesystem::path& path, const auto& values) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (auto v : values) out << v << '\n';
}

}  // namespace

LabelsAndSplits load_labels_and_splits(const std::filesystem::path& labels_path,
                                       const std::filesystem::path& splits_dir) {
  LabelsAndSplits ls;
  std::int64_t max_label = -1;
  for (auto v : read_int_lines(labels_path)) {
    if (v < -1) throw ValidationError("label below -1 in " + labels_path.string());
    ls.labels.push_back(static_cast<std::int32_t>(v));
    max_label = std::max(max_label, v);
  }
  ls.num_classes = static_cast<std::size_t>(max_label + 1);
  ls.train = to_ids(read_int_lines(splits_dir / "train.txt"), splits_dir / "train.txt");
  ls.valid = to_ids(read_int_lines(splits_dir / "valid.txt"), splits_dir / "valid.txt");
  ls.test = to_ids(read_int_lines(splits_dir / "test.txt"), splits_dir / "test.txt");
  return ls;
}

void save_labels_and_splits(const LabelsAndSplits& ls, const std::filesystem::path& labels_path,
                            const std::filesystem::path& splits_dir) {
  write_lines(labels_path, ls.labels);
  write_lines(splits_dir / "train.txt", ls.train);
  write_lines(splits_dir / "valid.txt", ls.valid);
  write_lines(splits_dir / "test.txt", ls.test);
}

}  // namespace largegt
