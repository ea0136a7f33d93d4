#include "largegt/sampler.hpp"

#include <string>

#include "binary_io.hpp"
#include "largegt/error.hpp"
#include "largegt/parallel.hpp"
#include "largegt/rng.hpp"

namespace largegt {

namespace {

constexpr std::uint32_t kSetsVersion = 1;

void sample_row(const GraphCSR& g, NodeId i, std::size_t k, std::uint64_t seed, PadStrategy pad,
                std::vector<NodeId>& candidates, std::span<NodeId> out) {
  out[0] = i;
  const std::size_t want = k - 1;
  if (want == 0) return;
  SplitMix64 rng(stream_seed(seed, i));
  two_hop_neighbors(g, i, candidates);
  const std::size_t m = candidates.size();

  if (m >= want) {
    // Partial Fisher-Yates: the first `want` slots are a uniform subset.
    for (std::size_t j = 0; j < want; ++j) {
      const std::size_t pick = j + uniform_below(rng, m - j);
      std::swap(candidates[j], candidates[pick]);
      out[1 + j] = candidates[j];
    }
  } else if (m > 0) {
    std::size_t filled = 0;
    if (pad == PadStrategy::IncludeThenPad) {
      for (NodeId c : candidates) out[1 + filled++] = c;
    }
    while (filled < want) out[1 + filled++] = candidates[uniform_below(rng, m)];
  } else {
    const std::uint64_t n = g.num_nodes();
    for (std::size_t j = 0; j < want; ++j) out[1 + j] = static_cast<NodeId>(uniform_below(rng, n));
  }
}

}  // namespace

PadStrategy parse_pad_strategy(std::string_view s) {
  if (s == "include-then-pad") return PadStrategy::IncludeThenPad;
  if (s == "pure-replacement") return PadStrategy::PureReplacement;
  throw ContractViolation("unknown pad strategy '" + std::string(s) +
                          "' (expected include-then-pad or pure-replacement)");
}

std::string_view to_string(PadStrategy p) {
  return p == PadStrategy::IncludeThenPad ? "include-then-pad" : "pure-replacement";
}

LocalNodeSets sample_local_nodes(const GraphCSR& g, std::size_t k, std::uint64_t seed,
                                 unsigned parallelism, PadStrategy pad) {
  if (k < 1) throw ContractViolation("sample_local_nodes: k must be at least 1");
  LocalNodeSets s;
  s.num_nodes = g.num_nodes();
  s.k = k;
  s.seed = seed;
  s.sets.resize(s.num_nodes * k);
  parallel_for(s.num_nodes, resolve_parallelism(parallelism), [&](std::size_t begin, std::size_t end) {
    std::vector<NodeId> candidates;
    for (std::size_t i = begin; i < end; ++i)
      sample_row(g, static_cast<NodeId>(i), k, seed, pad, candidates,
                 std::span<NodeId>(s.sets.data() + i * k, k));
  });
  return s;
}

void save_local_nodes(const LocalNodeSets& s, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  out.write("LGTS", 4);
  io::write_pod(out, kSetsVersion);
  io::write_pod(out, static_cast<std::uint32_t>(s.num_nodes));
  io::write_pod(out, static_cast<std::uint32_t>(s.k));
  io::write_pod(out, s.seed);
  io::write_span(out, std::span<const NodeId>(s.sets));
}

LocalNodeSets load_local_nodes(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  io::expect_magic(in, "LGTS", path);
  io::expect_version(io::read_pod<std::uint32_t>(in, "version"), kSetsVersion, path);
  LocalNodeSets s;
  s.num_nodes = io::read_pod<std::uint32_t>(in, "N");
  s.k = io::read_pod<std::uint32_t>(in, "K");
  s.seed = io::read_pod<std::uint64_t>(in, "seed");
  if (s.k < 1) throw ContractViolation("local node file " + path.string() + " declares K = 0");
  s.sets.resize(s.num_nodes * s.k);
  io::read_span(in, std::span<NodeId>(s.sets), "local node ids");
  io::expect_eof(in, path);
  for (std::size_t i = 0; i < s.num_nodes; ++i) {
    if (s.sets[i * s.k] != i)
      throw FormatError("row " + std::to_string(i) + " does not start with its own node id");
  }
  for (NodeId id : s.sets)
    if (id >= s.num_nodes) throw FormatError("node id out of range in " + path.string());
  return s;
}

}  // namespace largegt
