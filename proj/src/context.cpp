#include "largegt/context.hpp"

#include <string>

#include "binary_io.hpp"
#include "largegt/error.hpp"
#include "largegt/parallel.hpp"

namespace largegt {

namespace {
constexpr std::uint32_t kContextVersion = 1;

std::span<const float> as_span(const RowMatrixF& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
}  // namespace

ContextFeatures precompute_context(const GraphCSR& g, const NodeFeatures& h, unsigned parallelism) {
  if (h.num_nodes() != g.num_nodes())
    throw ContractViolation("features have " + std::to_string(h.num_nodes()) +
                            " rows, graph has " + std::to_string(g.num_nodes()) + " nodes");
  h.validate();
  const unsigned threads = resolve_parallelism(parallelism);
  ContextFeatures c;
  c.hop1 = normalized_adjacency_apply(g, h.values, threads);
  c.hop2 = normalized_adjacency_apply(g, c.hop1, threads);
  return c;
}

void save_context(const ContextFeatures& c, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  out.write("LGTX", 4);
  io::write_pod(out, kContextVersion);
  io::write_pod(out, static_cast<std::uint32_t>(c.num_nodes()));
  io::write_pod(out, static_cast<std::uint32_t>(c.dim()));
  io::write_span(out, as_span(c.hop1));
  io::write_span(out, as_span(c.hop2));
}

ContextFeatures load_context(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  io::expect_magic(in, "LGTX", path);
  io::expect_version(io::read_pod<std::uint32_t>(in, "version"), kContextVersion, path);
  const auto n = io::read_pod<std::uint32_t>(in, "N");
  const auto d = io::read_pod<std::uint32_t>(in, "D");
  ContextFeatures c;
  c.hop1.resize(n, d);
  c.hop2.resize(n, d);
  io::read_span(in, std::span<float>(c.hop1.data(), static_cast<std::size_t>(c.hop1.size())), "hop1");
  io::read_span(in, std::span<float>(c.hop2.data(), static_cast<std::size_t>(c.hop2.size())), "hop2");
  io::expect_eof(in, path);
  return c;
}

ContextFeatures load_context(const std::filesystem::path& path, std::size_t expected_nodes) {
  auto c = load_context(path);
  if (c.num_nodes() != expected_nodes)
    throw ValidationError("context file " + path.string() + " has " + std::to_string(c.num_nodes()) +
                          " nodes, expected " + std::to_string(expected_nodes));
  return c;
}

}  // namespace largegt
