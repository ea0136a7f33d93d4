#pragma once

#include <cstdint>
#include <filesystem>

#include "largegt/graph.hpp"

namespace largegt {

/// A generated graph with features, labels and a train/valid/test split.
struct SyntheticDataset {
  GraphCSR graph;
  NodeFeatures features;
  LabelsAndSplits labels;
};

struct SbmSpec {
  std::size_t num_nodes = 1000;
  std::size_t num_blocks = 2;
  double p_intra = 0.2;
  double p_inter = 0.01;
  double noise_sigma = 0.5;
  // Features are one-hot block indicators, zero-padded to this width, plus
  // Gaussian noise on every column.
  std::size_t feature_dim = 0;  // 0 means num_blocks
  double train_frac = 0.6;
  double valid_frac = 0.2;
  std::uint64_t seed = 0;
};

/// Stochastic block model; node v belongs to block v * num_blocks / N.
SyntheticDataset generate_sbm(const SbmSpec& spec);

GraphCSR path_graph(std::size_t n);
GraphCSR star_graph(std::size_t leaves);  // hub is node 0
GraphCSR random_graph(std::size_t n, std::size_t m, std::uint64_t seed);
/// Preferential attachment, each new node linking to `m` existing nodes.
GraphCSR power_law_graph(std::size_t n, std::size_t m, std::uint64_t seed);

/// Random features N(0, 1) of the given width.
NodeFeatures gaussian_features(std::size_t n, std::size_t dim, std::uint64_t seed);

/// Label = parity of the number of marked nodes within `radius` hops.
/// Column 0 of the features is the mark, the rest is noise. Useful for
/// probing how far the model can see.
SyntheticDataset generate_distance_label_task(const GraphCSR& g, int radius, std::uint64_t seed,
                                              std::size_t feature_dim = 4, double mark_rate = 0.5);

/// Random train/valid/test split of the labeled nodes.
void assign_random_splits(LabelsAndSplits& ls, double train_frac, double valid_frac, std::uint64_t seed);

/// Writes graph.lgtg, features.lgtf, labels.txt and splits/{train,valid,test}.txt.
void write_dataset(const SyntheticDataset& d, const std::filesystem::path& dir);

}  // namespace largegt
