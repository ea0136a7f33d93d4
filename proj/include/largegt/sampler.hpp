#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "largegt/graph.hpp"

namespace largegt {

/// How a node whose 1/2-hop set is smaller than K-1 fills its slots.
enum class PadStrategy {
  // Every 2-hop member once, then uniform with-replacement draws.
  IncludeThenPad,
  // K-1 independent with-replacement draws, which may omit members.
  PureReplacement,
};

PadStrategy parse_pad_strategy(std::string_view s);
std::string_view to_string(PadStrategy p);

/// N x K matrix S of local-node multisets. Row i starts with i itself.
struct LocalNodeSets {
  std::size_t num_nodes = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<NodeId> sets;  // row-major N x K

  std::span<const NodeId> row(NodeId i) const noexcept { return {sets.data() + i * k, k}; }

  friend bool operator==(const LocalNodeSets&, const LocalNodeSets&) = default;
};

/// Offline sampling of a K-multiset per node from its 1- and 2-hop
/// neighbors. Each node draws from its own stream keyed by (seed, node), so
/// the output does not depend on `parallelism`.
LocalNodeSets sample_local_nodes(const GraphCSR& g, std::size_t k, std::uint64_t seed,
                                 unsigned parallelism = 1,
                                 PadStrategy pad = PadStrategy::IncludeThenPad);

/// "LGTS" binary: magic, u32 version, u32 N, u32 K, u64 seed, N*K u32 ids.
void save_local_nodes(const LocalNodeSets& s, const std::filesystem::path& path);
LocalNodeSets load_local_nodes(const std::filesystem::path& path);

}  // namespace largegt
