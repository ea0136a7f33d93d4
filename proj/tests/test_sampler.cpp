#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "largegt/sampler.hpp"
#include "largegt/synthetic.hpp"
#include "test_util.hpp"

using namespace largegt;
using largegt::testing::oracle_two_hop;
using largegt::testing::temp_dir;

namespace {

// Checks seed-first, membership and the three branch rules for every row.
void expect_invariants(const GraphCSR& g, const LocalNodeSets& s, PadStrategy pad) {
  ASSERT_EQ(s.sets.size(), g.num_nodes() * s.k);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const auto row = s.row(i);
    ASSERT_EQ(row[0], i);
    const auto t = oracle_two_hop(g, i);
    const std::vector<NodeId> rest(row.begin() + 1, row.end());
    for (NodeId v : rest) ASSERT_LT(v, g.num_nodes());
    if (t.size() >= s.k - 1) {
      std::set<NodeId> distinct(rest.begin(), rest.end());
      EXPECT_EQ(distinct.size(), rest.size()) << "node " << i;
      for (NodeId v : rest) EXPECT_TRUE(t.count(v)) << "node " << i;
    } else if (!t.empty()) {
      for (NodeId v : rest) EXPECT_TRUE(t.count(v)) << "node " << i;
      if (pad == PadStrategy::IncludeThenPad)
        for (NodeId v : t) EXPECT_NE(std::find(rest.begin(), rest.end(), v), rest.end()) << "node " << i;
    }
  }
}

}  // namespace

TEST(Sampler, KOneKeepsOnlySeed) {
  const auto g = random_graph(30, 60, 1);
  const auto s = sample_local_nodes(g, 1, 7);
  for (NodeId i = 0; i < 30; ++i) EXPECT_EQ(std::vector<NodeId>(s.row(i).begin(), s.row(i).end()), std::vector<NodeId>{i});
}

TEST(Sampler, PathNodeTwoTakesWholeTwoHopSet) {
  const auto s = sample_local_nodes(path_graph(5), 5, 3);
  const auto row = s.row(2);
  EXPECT_EQ(row[0], 2u);
  std::vector<NodeId> rest(row.begin() + 1, row.end());
  std::sort(rest.begin(), rest.end());
  EXPECT_EQ(rest, (std::vector<NodeId>{0, 1, 3, 4}));
}

TEST(Sampler, IsolatedNodeDrawsFromAllNodes) {
  std::vector<Edge> edges{{0, 1}, {1, 2}};
  const auto g = GraphCSR::from_edges(10, edges, true);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = sample_local_nodes(g, 4, seed);
    EXPECT_EQ(s.row(7)[0], 7u);
    for (NodeId v : s.row(7)) EXPECT_LT(v, 10u);
  }
}

TEST(Sampler, KZeroIsContractViolation) { EXPECT_THROW(sample_local_nodes(path_graph(3), 0, 0), ContractViolation); }

TEST(Sampler, InvariantsOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = 50 + 180 * seed;  // up to 950 nodes
    const auto g = seed % 2 ? power_law_graph(n, 2, seed) : random_graph(n, n, seed);
    for (std::size_t k : {1, 2, 5, 20})
      for (auto pad : {PadStrategy::IncludeThenPad, PadStrategy::PureReplacement})
        expect_invariants(g, sample_local_nodes(g, k, seed * 31 + k, 1, pad), pad);
  }
}

TEST(Sampler, ParallelMatchesSerial) {
  const auto g = power_law_graph(1000, 3, 4);
  const auto serial = sample_local_nodes(g, 20, 11, 1);
  for (unsigned p : {4u, 16u}) EXPECT_EQ(sample_local_nodes(g, 20, 11, p), serial);
}

TEST(Sampler, SeedChangesOutput) {
  const auto g = power_law_graph(200, 3, 4);
  EXPECT_NE(sample_local_nodes(g, 5, 1).sets, sample_local_nodes(g, 5, 2).sets);
}

TEST(Sampler, IncludeThenPadCoversSmallNeighborhoods) {
  // node 0 of P4 has two-hop set {1, 2}; K - 1 = 5 forces padding
  const auto s = sample_local_nodes(path_graph(4), 6, 9);
  const auto row = s.row(0);
  EXPECT_NE(std::find(row.begin() + 1, row.end(), 1u), row.end());
  EXPECT_NE(std::find(row.begin() + 1, row.end(), 2u), row.end());
}

TEST(Sampler, BranchOneInclusionIsUniform) {
  const auto g = star_graph(10);  // hub 0 has |T| = 10
  constexpr int kSeeds = 10000;
  std::map<NodeId, int> hits;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto s = sample_local_nodes(g, 6, seed);
    for (std::size_t j = 1; j < 6; ++j) ++hits[s.row(0)[j]];
  }
  ASSERT_EQ(hits.size(), 10u);
  double chi2 = 0;
  for (const auto& [node, count] : hits) {
    const double freq = static_cast<double>(count) / kSeeds;
    EXPECT_NEAR(freq, 0.5, 0.02) << "neighbor " << node;
    chi2 += (count - 5000.0) * (count - 5000.0) / 5000.0;
  }
  EXPECT_LT(chi2, 21.666);  // chi-square, 9 dof, alpha = 0.01
}

TEST(SamplerIo, RoundTrip) {
  const auto dir = temp_dir("sampler_io");
  const auto s = sample_local_nodes(power_law_graph(100, 2, 1), 7, 12345);
  save_local_nodes(s, dir / "s.lgts");
  const auto back = load_local_nodes(dir / "s.lgts");
  EXPECT_EQ(back, s);
  EXPECT_EQ(back.seed, 12345u);
  EXPECT_EQ(back.k, 7u);
}

TEST(SamplerIo, TruncatedIsFormatError) {
  const auto dir = temp_dir("sampler_trunc");
  save_local_nodes(sample_local_nodes(path_graph(10), 3, 1), dir / "s.lgts");
  std::filesystem::resize_file(dir / "s.lgts", std::filesystem::file_size(dir / "s.lgts") - 4);
  EXPECT_THROW(load_local_nodes(dir / "s.lgts"), FormatError);
}

TEST(SamplerIo, ZeroKHeaderIsContractViolation) {
  const auto dir = temp_dir("sampler_k0");
  save_local_nodes(sample_local_nodes(path_graph(10), 3, 1), dir / "s.lgts");
  std::fstream io(dir / "s.lgts", std::ios::in | std::ios::out | std::ios::binary);
  io.seekp(12);  // magic, version, N, then K
  const std::uint32_t zero = 0;
  io.write(reinterpret_cast<const char*>(&zero), 4);
  io.close();
  EXPECT_THROW(load_local_nodes(dir / "s.lgts"), ContractViolation);
}

TEST(PadStrategy, ParsesNames) {
  EXPECT_EQ(parse_pad_strategy("include-then-pad"), PadStrategy::IncludeThenPad);
  EXPECT_EQ(parse_pad_strategy("pure-replacement"), PadStrategy::PureReplacement);
  EXPECT_EQ(to_string(PadStrategy::PureReplacement), "pure-replacement");
  EXPECT_THROW(parse_pad_strategy("other"), ContractViolation);
}
