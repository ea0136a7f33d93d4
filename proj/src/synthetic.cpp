#include "largegt/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "largegt/error.hpp"

namespace largegt {

void assign_random_splits(LabelsAndSplits& ls, double train_frac, double valid_frac, std::uint64_t seed) {
  if (train_frac < 0 || valid_frac < 0 || train_frac + valid_frac > 1.0)
    throw ContractViolation("split fractions must be non-negative and sum to at most 1");
  std::vector<NodeId> labeled;
  for (std::size_t v = 0; v < ls.labels.size(); ++v)
    if (ls.labels[v] >= 0) labeled.push_back(static_cast<NodeId>(v));
  std::mt19937_64 rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  const auto n = labeled.size();
  const auto n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
  const auto n_valid = static_cast<std::size_t>(valid_frac * static_cast<double>(n));
  const auto it = labeled.begin();
  ls.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  ls.valid.assign(it + static_cast<std::ptrdiff_t>(n_train), it + static_cast<std::ptrdiff_t>(n_train + n_valid));
  ls.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_valid), labeled.end());
  for (auto* s : {&ls.train, &ls.valid, &ls.test}) std::sort(s->begin(), s->end());
}

SyntheticDataset generate_sbm(const SbmSpec& spec) {
  if (spec.num_nodes == 0 || spec.num_blocks == 0) throw ContractViolation("SBM needs nodes and blocks");
  if (spec.p_intra < 0 || spec.p_intra > 1 || spec.p_inter < 0 || spec.p_inter > 1)
    throw ContractViolation("SBM probabilities must be in [0, 1]");
  const std::size_t n = spec.num_nodes;
  const std::size_t width = spec.feature_dim == 0 ? spec.num_blocks : spec.feature_dim;
  if (width < spec.num_blocks) throw ContractViolation("feature_dim must be at least num_blocks");
  auto block = [&](std::size_t v) { return v * spec.num_blocks / n; };

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (u(rng) < (block(a) == block(b) ? spec.p_intra : spec.p_inter))
        edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));

  SyntheticDataset d;
  d.graph = GraphCSR::from_edges(n, edges, true);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(spec.noise_sigma));
  d.features.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  d.labels.labels.resize(n);
  d.labels.num_classes = spec.num_blocks;
  for (std::size_t v = 0; v < n; ++v) {
    const auto r = static_cast<Eigen::Index>(v);
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(width); ++c)
      d.features.values(r, c) = (static_cast<std::size_t>(c) == block(v) ? 1.0f : 0.0f) + noise(rng);
    d.labels.labels[v] = static_cast<std::int32_t>(block(v));
  }
  assign_random_splits(d.labels, spec.train_frac, spec.valid_frac, spec.seed ^ 0x9e3779b97f4a7c15ULL);
  return d;
}

GraphCSR path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(i + 1));
  return GraphCSR::from_edges(n, edges, true);
}

GraphCSR star_graph(std::size_t leaves) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i <= leaves; ++i) edges.emplace_back(0, static_cast<NodeId>(i));
  return GraphCSR::from_edges(leaves + 1, edges, true);
}

GraphCSR random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 2 && m > 0) throw ContractViolation("random graph needs at least 2 nodes for edges");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  std::vector<Edge> edges;
  edges.reserve(m);
  while (edges.size() < m) {
    const NodeId a = pick(rng), b = pick(rng);
    if (a != b) edges.emplace_back(a, b);
  }
  return GraphCSR::from_edges(n, edges, true);
}

GraphCSR power_law_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m == 0 || n <= m) throw ContractViolation("power-law graph needs 0 < m < n");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  // endpoint list: sampling uniformly from it is sampling proportional to degree
  std::vector<NodeId> ends;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j <= m; ++j) {
      edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
      ends.push_back(static_cast<NodeId>(i));
      ends.push_back(static_cast<NodeId>(j));
    }
  std::vector<NodeId> targets;
  for (std::size_t v = m + 1; v < n; ++v) {
    targets.clear();
    while (targets.size() < m) {
      std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
      const NodeId t = ends[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (NodeId t : targets) {
      edges.emplace_back(static_cast<NodeId>(v), t);
      ends.push_back(static_cast<NodeId>(v));
      ends.push_back(t);
    }
  }
  return GraphCSR::from_edges(n, edges, true);
}

NodeFeatures gaussian_features(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  NodeFeatures f;
  f.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = g(rng);
  return f;
}

SyntheticDataset generate_distance_label_task(const GraphCSR& g, int radius, std::uint64_t seed,
                                              std::size_t feature_dim, double mark_rate) {
  if (radius < 0) throw ContractViolation("radius must be non-negative");
  if (feature_dim < 1) throw ContractViolation("feature_dim must be at least 1");
  const std::size_t n = g.num_nodes();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution mark(mark_rate);
  std::normal_distribution<float> noise(0.0f, 0.1f);
  SyntheticDataset d;
  d.graph = g;
  d.features.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_dim));
  std::vector<char> marked(n);
  for (std::size_t v = 0; v < n; ++v) {
    marked[v] = mark(rng);
    const auto r = static_cast<Eigen::Index>(v);
    d.features.values(r, 0) = marked[v] ? 1.0f : 0.0f;
    for (Eigen::Index c = 1; c < d.features.values.cols(); ++c) d.features.values(r, c) = noise(rng);
  }
  d.labels.labels.resize(n);
  d.labels.num_classes = 2;
  for (std::size_t v = 0; v < n; ++v) {
    const auto dist = bfs_distances(g, static_cast<NodeId>(v), radius);
    int count = 0;
    for (std::size_t u = 0; u < n; ++u) count += dist[u] >= 0 && marked[u];
    d.labels.labels[v] = count % 2;
  }
  assign_random_splits(d.labels, 0.6, 0.2, seed ^ 0x51u);
  return d;
}

void write_dataset(const SyntheticDataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_graph(d.graph, dir / "graph.lgtg");
  save_features(d.features, dir / "features.lgtf");
  save_labels_and_splits(d.labels, dir / "labels.txt", dir / "splits");
}

}  // namespace largegt
