#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "largegt/context.hpp"
#include "largegt/sampler.hpp"

namespace largegt {

/// M x 3K x D_in token tensor, stored as an (M*3K) x D_in row-major matrix.
/// Row 3j of node r's block is H[S[r][j]], 3j+1 is hop1, 3j+2 is hop2.
struct TokenBatch {
  std::vector<NodeId> node_ids;
  std::size_t tokens_per_node = 0;
  RowMatrixF data;

  std::size_t batch_size() const noexcept { return node_ids.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data.cols()); }
  auto token(std::size_t row, std::size_t slot) const {
    return data.row(static_cast<Eigen::Index>(row * tokens_per_node + slot));
  }
};

/// Pure gather of the triple-slot layout for each batch node.
TokenBatch build_token_batch(std::span<const NodeId> batch_nodes, const LocalNodeSets& s,
                             const NodeFeatures& h, const ContextFeatures& c,
                             unsigned parallelism = 1);

/// Debug dump: one line per token, "node,slot,kind,v0,v1,...".
void write_token_batch_csv(const TokenBatch& x, std::ostream& out);

}  // namespace largegt
