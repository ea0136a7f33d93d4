#include <gtest/gtest.h>

#include <cmath>

#include "largegt/synthetic.hpp"
#include "test_util.hpp"

using namespace largegt;

TEST(Sbm, CompleteBlocksGiveDisjointTriangles) {
  const auto d = generate_sbm(SbmSpec{.num_nodes = 6, .p_intra = 1.0, .p_inter = 0.0, .noise_sigma = 0.0});
  EXPECT_EQ(d.graph.num_edges(), 12u);
  EXPECT_EQ(two_hop_neighbors(d.graph, 0), (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(two_hop_neighbors(d.graph, 4), (std::vector<NodeId>{3, 5}));
  EXPECT_EQ(d.labels.labels, (std::vector<std::int32_t>{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(d.features.values(4, 1), 1.0f);
  EXPECT_EQ(d.features.values(4, 0), 0.0f);
}

TEST(Sbm, EdgeCountWithinThreeSigma) {
  const SbmSpec spec{.num_nodes = 400, .p_intra = 0.1, .p_inter = 0.02, .seed = 3};
  const auto d = generate_sbm(spec);
  // 2 blocks of 200: intra pairs 2*C(200,2), inter pairs 200*200
  const double intra = 2 * 200.0 * 199.0 / 2, inter = 200.0 * 200.0;
  const double mean = intra * 0.1 + inter * 0.02;
  const double sd = std::sqrt(intra * 0.1 * 0.9 + inter * 0.02 * 0.98);
  const double undirected = static_cast<double>(d.graph.num_edges()) / 2;
  EXPECT_NEAR(undirected, mean, 3 * sd);
}

TEST(Sbm, SeedDeterminismAndSplits) {
  const SbmSpec spec{.num_nodes = 150, .seed = 5};
  const auto a = generate_sbm(spec), b = generate_sbm(spec);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.features.values, b.features.values);
  EXPECT_EQ(a.labels.train, b.labels.train);
  EXPECT_NO_THROW(a.labels.validate(150));
  EXPECT_EQ(a.labels.train.size(), 90u);
  EXPECT_EQ(a.labels.valid.size(), 30u);
  EXPECT_EQ(a.labels.test.size(), 30u);
  EXPECT_NE(generate_sbm(SbmSpec{.num_nodes = 150, .seed = 6}).graph, a.graph);
}

TEST(Generators, PassGraphInvariants) {
  for (const auto& g : {path_graph(7), star_graph(4), random_graph(50, 80, 1), power_law_graph(60, 2, 1)}) {
    EXPECT_NO_THROW(GraphCSR(std::vector<std::uint64_t>(g.row_offsets().begin(), g.row_offsets().end()),
                             std::vector<NodeId>(g.col_indices().begin(), g.col_indices().end())));
    EXPECT_EQ(g.num_edges() % 2, 0u);  // symmetric
  }
  EXPECT_THROW(power_law_graph(3, 3, 0), ContractViolation);
}

TEST(DistanceTask, RadiusZeroIsOwnMark) {
  const auto d = generate_distance_label_task(random_graph(40, 60, 2), 0, 2);
  for (NodeId v = 0; v < 40; ++v) EXPECT_EQ(d.labels.labels[v], d.features.values(v, 0) > 0.5f ? 1 : 0);
}

TEST(DistanceTask, PathHandCheck) {
  const auto g = path_graph(9);
  const auto d = generate_distance_label_task(g, 3, 4);
  for (NodeId v = 0; v < 9; ++v) {
    int count = 0;
    for (NodeId u = 0; u < 9; ++u)
      if (std::abs(static_cast<int>(u) - static_cast<int>(v)) <= 3 && d.features.values(u, 0) > 0.5f) ++count;
    EXPECT_EQ(d.labels.labels[v], count % 2) << "node " << v;
  }
}

TEST(DistanceTask, LabelsRoughlyBalanced) {
  const auto d = generate_distance_label_task(random_graph(600, 900, 5), 4, 5);
  const double ones = std::count(d.labels.labels.begin(), d.labels.labels.end(), 1);
  EXPECT_NEAR(ones / 600.0, 0.5, 0.1);
}

TEST(WriteDataset, FilesReload) {
  const auto dir = largegt::testing::temp_dir("write_dataset");
  const auto d = generate_sbm(SbmSpec{.num_nodes = 30, .seed = 1});
  write_dataset(d, dir);
  EXPECT_EQ(load_graph(dir / "graph.lgtg"), d.graph);
  EXPECT_EQ(load_features(dir / "features.lgtf").values, d.features.values);
  const auto ls = load_labels_and_splits(dir / "labels.txt", dir / "splits");
  EXPECT_EQ(ls.labels, d.labels.labels);
  EXPECT_EQ(ls.test, d.labels.test);
}
