#pragma once

#include <filesystem>

#include "largegt/graph.hpp"

namespace largegt {

/// Per-node 1-hop (ÃH) and 2-hop (Ã²H) context rows.
struct ContextFeatures {
  RowMatrixF hop1;
  RowMatrixF hop2;

  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(hop1.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(hop1.cols()); }
};

/// hop1 = ÃH, hop2 = Ã·hop1. Ã² is never formed. Throws ValidationError on
/// non-finite input, ContractViolation on row-count mismatch.
ContextFeatures precompute_context(const GraphCSR& g, const NodeFeatures& h,
                                   unsigned parallelism = 1);

/// "LGTX" binary with the feature header layout (magic, u32 version, u32 N,
/// u32 D) followed by hop1 then hop2, each N*D f32.
void save_context(const ContextFeatures& c, const std::filesystem::path& path);
ContextFeatures load_context(const std::filesystem::path& path);
/// As above, then checks N against the graph the contexts will be used with.
ContextFeatures load_context(const std::filesystem::path& path, std::size_t expected_nodes);

}  // namespace largegt
