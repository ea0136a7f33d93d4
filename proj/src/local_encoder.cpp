#include "largegt/local_encoder.hpp"

namespace largegt {

Readout parse_readout(std::string_view s) {
  if (s == "mean") return Readout::Mean;
  if (s == "seed" || s == "seed-token") return Readout::SeedToken;
  throw ContractViolation("unknown readout '" + std::string(s) + "' (expected mean or seed-token)");
}

std::string_view to_string(Readout r) { return r == Readout::Mean ? "mean" : "seed-token"; }

template <typename T>
LocalEncoder<T>::LocalEncoder(nn::ParamStore<T>& store, const std::string& prefix,
                              const LocalEncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  if (cfg.in_dim == 0 || cfg.dim == 0) throw ContractViolation("local encoder dims must be positive");
  if (cfg.heads == 0 || cfg.dim % cfg.heads != 0)
    throw ContractViolation("hidden dim " + std::to_string(cfg.dim) + " not divisible by " +
                            std::to_string(cfg.heads) + " heads");
  input_projection_ = nn::Linear<T>(store, prefix + ".input_projection",
                                    static_cast<Eigen::Index>(cfg.in_dim), d, rng);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    layers_.push_back(Layer{
        nn::LayerNorm<T>(store, p + ".attn_norm", d),
        nn::MultiHeadSelfAttention<T>(store, p + ".attn", d, cfg.heads, rng),
        nn::LayerNorm<T>(store, p + ".ffn_norm", d),
        nn::FeedForward<T>(store, p + ".ffn", d, d * static_cast<Eigen::Index>(cfg.ffn_mult), d, rng),
    });
  }
}

template <typename T>
nn::Var<T> LocalEncoder<T>::forward(nn::Tape<T>& tape, nn::Var<T> tokens, std::size_t tokens_per_node,
                                    bool training, std::mt19937_64& rng) const {
  if (tokens.cols() != static_cast<Eigen::Index>(cfg_.in_dim))
    throw ContractViolation("token width " + std::to_string(tokens.cols()) +
                            " does not match encoder input dim " + std::to_string(cfg_.in_dim));
  if (tokens_per_node == 0 || static_cast<std::size_t>(tokens.rows()) % tokens_per_node != 0)
    throw ContractViolation("token rows are not a multiple of tokens_per_node");
  const double p = training ? cfg_.dropout : 0.0;
  auto z = input_projection_(tape, tokens);
  // pre-norm: z + Attn(LN(z)), then z + FFN(LN(z))
  for (const auto& layer : layers_) {
    auto a = layer.attn(tape, layer.attn_norm(tape, z), tokens_per_node);
    z = nn::add(tape, z, nn::dropout(tape, a, p, rng));
    auto f = layer.ffn(tape, layer.ffn_norm(tape, z));
    z = nn::add(tape, z, nn::dropout(tape, f, p, rng));
  }
  return cfg_.readout == Readout::Mean ? nn::group_mean(tape, z, tokens_per_node)
                                       : nn::group_first(tape, z, tokens_per_node);
}

template <typename T>
nn::Var<T> LocalEncoder<T>::forward(nn::Tape<T>& tape, const TokenBatch& batch, bool training,
                                    std::mt19937_64& rng) const {
  auto tokens = tape.constant(batch.data.template cast<T>());
  return forward(tape, tokens, batch.tokens_per_node, training, rng);
}

template class LocalEncoder<float>;
template class LocalEncoder<double>;

}  // namespace largegt
