#include <gtest/gtest.h>

#include <sstream>

#include "largegt/synthetic.hpp"
#include "largegt/tokens.hpp"
#include "test_util.hpp"

using namespace largegt;

namespace {

struct Instance {
  GraphCSR g;
  NodeFeatures h;
  ContextFeatures c;
  LocalNodeSets s;
};

Instance make(GraphCSR g, std::size_t d, std::size_t k, std::uint64_t seed) {
  Instance in;
  in.h = gaussian_features(g.num_nodes(), d, seed);
  in.c = precompute_context(g, in.h);
  in.s = sample_local_nodes(g, k, seed);
  in.g = std::move(g);
  return in;
}

// Independent gather: walks S, H and C with plain loops.
void expect_matches_oracle(const Instance& in, const std::vector<NodeId>& nodes, const TokenBatch& x) {
  const std::size_t k = in.s.k;
  ASSERT_EQ(x.tokens_per_node, 3 * k);
  ASSERT_EQ(static_cast<std::size_t>(x.data.rows()), nodes.size() * 3 * k);
  for (std::size_t r = 0; r < nodes.size(); ++r)
    for (std::size_t j = 0; j < k; ++j) {
      const NodeId u = in.s.sets[nodes[r] * k + j];
      for (Eigen::Index c = 0; c < in.h.values.cols(); ++c) {
        ASSERT_EQ(x.token(r, 3 * j)(c), in.h.values(u, c));
        ASSERT_EQ(x.token(r, 3 * j + 1)(c), in.c.hop1(u, c));
        ASSERT_EQ(x.token(r, 3 * j + 2)(c), in.c.hop2(u, c));
      }
    }
}

}  // namespace

TEST(Tokens, SingleTripleLayout) {
  const auto in = make(path_graph(4), 3, 1, 0);
  const std::vector<NodeId> nodes{2};
  const auto x = build_token_batch(nodes, in.s, in.h, in.c);
  ASSERT_EQ(x.data.rows(), 3);
  EXPECT_EQ(x.token(0, 0), in.h.values.row(2));
  EXPECT_EQ(x.token(0, 1), in.c.hop1.row(2));
  EXPECT_EQ(x.token(0, 2), in.c.hop2.row(2));
}

TEST(Tokens, PathFiveNodeTwo) {
  const auto in = make(path_graph(5), 2, 5, 4);
  const std::vector<NodeId> nodes{2};
  const auto x = build_token_batch(nodes, in.s, in.h, in.c);
  EXPECT_EQ(x.data.rows(), 15);
  expect_matches_oracle(in, nodes, x);
}

TEST(Tokens, EmptyBatch) {
  const auto in = make(path_graph(5), 2, 3, 0);
  const auto x = build_token_batch({}, in.s, in.h, in.c);
  EXPECT_EQ(x.batch_size(), 0u);
  EXPECT_EQ(x.data.rows(), 0);
  EXPECT_EQ(x.data.cols(), 2);
  EXPECT_EQ(x.tokens_per_node, 9u);
}

TEST(Tokens, GatherOracleOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 40 + 45 * seed;
    const auto in = make(random_graph(n, 2 * n, seed), 1 + seed % 16, 1 + (seed * 3) % 20, seed);
    std::vector<NodeId> nodes;
    for (NodeId v = 0; v < n; v += 3) nodes.push_back(v);
    expect_matches_oracle(in, nodes, build_token_batch(nodes, in.s, in.h, in.c, 1 + seed % 3));
  }
}

TEST(Tokens, InconsistentInputsAreRejected) {
  const auto in = make(path_graph(5), 2, 3, 0);
  const std::vector<NodeId> ok{0}, bad{9};
  EXPECT_THROW(build_token_batch(bad, in.s, in.h, in.c), BoundsError);
  auto wrong_dim = in.c;
  wrong_dim.hop1 = RowMatrixF::Zero(5, 3);
  EXPECT_THROW(build_token_batch(ok, in.s, in.h, wrong_dim), ContractViolation);
  auto wrong_n = in.h;
  wrong_n.values = RowMatrixF::Zero(4, 2);
  EXPECT_THROW(build_token_batch(ok, in.s, wrong_n, in.c), ContractViolation);
}

TEST(Tokens, RowDependsOnlyOnFourHopBall) {
  const auto g = random_graph(200, 260, 5);
  auto in = make(g, 3, 8, 5);
  const NodeId i = 0;
  const std::vector<NodeId> nodes{i};
  const auto base = build_token_batch(nodes, in.s, in.h, in.c);
  const auto dist = largegt::testing::oracle_distances(g, i);
  int checked = 0;
  for (NodeId u = 0; u < 200 && checked < 25; ++u) {
    if (dist[u] >= 0 && dist[u] <= 4) continue;
    auto h = in.h;
    h.values.row(u).array() += 5.0f;
    const auto c = precompute_context(g, h);
    EXPECT_EQ(build_token_batch(nodes, in.s, h, c).data, base.data) << "node " << u;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Tokens, DistanceFourReachesThroughHopTwoContext) {
  const auto g = path_graph(9);
  auto in = make(g, 2, 5, 1);
  const std::vector<NodeId> nodes{0};
  // node 2 (a 2-hop sample of node 0) has node 4 in its own 2-hop context
  const auto row = in.s.row(0);
  ASSERT_NE(std::find(row.begin(), row.end(), 2u), row.end());
  const auto base = build_token_batch(nodes, in.s, in.h, in.c);

  auto h4 = in.h;
  h4.values.row(4).array() += 1.0f;
  EXPECT_NE(build_token_batch(nodes, in.s, h4, precompute_context(g, h4)).data, base.data);

  auto h5 = in.h;
  h5.values.row(5).array() += 1.0f;
  EXPECT_EQ(build_token_batch(nodes, in.s, h5, precompute_context(g, h5)).data, base.data);
}

TEST(Tokens, CsvDumpHasOneLinePerToken) {
  const auto in = make(path_graph(4), 2, 2, 0);
  const std::vector<NodeId> nodes{1, 3};
  std::ostringstream os;
  write_token_batch_csv(build_token_batch(nodes, in.s, in.h, in.c), os);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2 * 6);
  EXPECT_EQ(text.rfind("1,0,feature,", 0), 0u);
}
