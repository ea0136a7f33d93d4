#include "largegt/tokens.hpp"

#include <ostream>
#include <string>

#include "largegt/error.hpp"
#include "largegt/parallel.hpp"

namespace largegt {

TokenBatch build_token_batch(std::span<const NodeId> batch_nodes, const LocalNodeSets& s,
                             const NodeFeatures& h, const ContextFeatures& c,
                             unsigned parallelism) {
  if (s.num_nodes != h.num_nodes() || c.num_nodes() != h.num_nodes())
    throw ContractViolation("token batch inputs disagree on N (sets " + std::to_string(s.num_nodes) +
                            ", features " + std::to_string(h.num_nodes()) + ", contexts " +
                            std::to_string(c.num_nodes()) + ")");
  if (c.dim() != h.dim())
    throw ContractViolation("context dim " + std::to_string(c.dim()) + " != feature dim " +
                            std::to_string(h.dim()));
  if (s.k < 1 || s.sets.size() != s.num_nodes * s.k)
    throw ContractViolation("local node sets are malformed");
  for (NodeId id : batch_nodes)
    if (id >= s.num_nodes) throw BoundsError("batch node " + std::to_string(id) + " out of range");

  TokenBatch x;
  x.node_ids.assign(batch_nodes.begin(), batch_nodes.end());
  x.tokens_per_node = 3 * s.k;
  x.data.resize(static_cast<Eigen::Index>(batch_nodes.size() * x.tokens_per_node),
                static_cast<Eigen::Index>(h.dim()));
  parallel_for(batch_nodes.size(), parallelism, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto local = s.row(batch_nodes[r]);
      auto base = static_cast<Eigen::Index>(r * x.tokens_per_node);
      for (NodeId u : local) {
        x.data.row(base++) = h.values.row(u);
        x.data.row(base++) = c.hop1.row(u);
        x.data.row(base++) = c.hop2.row(u);
      }
    }
  });
  return x;
}

void write_token_batch_csv(const TokenBatch& x, std::ostream& out) {
  static constexpr const char* kinds[] = {"feature", "hop1", "hop2"};
  for (std::size_t r = 0; r < x.batch_size(); ++r) {
    for (std::size_t slot = 0; slot < x.tokens_per_node; ++slot) {
      out << x.node_ids[r] << ',' << slot << ',' << kinds[slot % 3];
      const auto row = x.token(r, slot);
      for (Eigen::Index j = 0; j < row.size(); ++j) out << ',' << row(j);
      out << '\n';
    }
  }
}

}  // namespace largegt
