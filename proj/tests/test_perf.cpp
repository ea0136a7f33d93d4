#include <gtest/gtest.h>

#include <chrono>

#include "largegt/sampler.hpp"
#include "largegt/synthetic.hpp"

using namespace largegt;

namespace {

double seconds_per_node(std::size_t n) {
  const auto g = random_graph(n, 2 * n, n);  // average degree 4
  double best = 1e30;
  for (int rep = 0; rep < 2; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = sample_local_nodes(g, 20, 1);
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    EXPECT_EQ(s.sets.size(), n * 20);
  }
  return best / static_cast<double>(n);
}

}  // namespace

TEST(SamplerPerf, NearLinearInNodeCount) {
  const double small = seconds_per_node(10'000);
  const double mid = seconds_per_node(100'000);
  const double large = seconds_per_node(1'000'000);
  RecordProperty("per_node_1e4", std::to_string(small));
  RecordProperty("per_node_1e6", std::to_string(large));
  EXPECT_LT(mid / small, 2.0);
  EXPECT_LT(large / small, 2.0);
}
