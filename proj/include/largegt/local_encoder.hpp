#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "largegt/nn/layers.hpp"
#include "largegt/tokens.hpp"

namespace largegt {

enum class Readout { Mean, SeedToken };

Readout parse_readout(std::string_view s);
std::string_view to_string(Readout r);

struct LocalEncoderConfig {
  std::size_t in_dim = 0;
  std::size_t dim = 256;
  std::size_t heads = 2;
  std::size_t layers = 1;
  std::size_t ffn_mult = 2;
  double dropout = 0.0;
  Readout readout = Readout::Mean;
};

/// Transformer encoder over the 3K tokens of each node followed by a
/// readout to one D-vector. Tokens carry no positional encoding, so with
/// the mean readout the output is invariant to reordering the triples.
template <typename T>
class LocalEncoder {
 public:
  LocalEncoder(nn::ParamStore<T>& store, const std::string& prefix, const LocalEncoderConfig& cfg,
               std::mt19937_64& rng);

  /// D_in -> D projection shared with the residual path of the model.
  nn::Var<T> project(nn::Tape<T>& tape, nn::Var<T> x) const { return input_projection_(tape, x); }

  /// tokens: (M * tokens_per_node) x D_in. Returns M x D.
  nn::Var<T> forward(nn::Tape<T>& tape, nn::Var<T> tokens, std::size_t tokens_per_node,
                     bool training, std::mt19937_64& rng) const;
  nn::Var<T> forward(nn::Tape<T>& tape, const TokenBatch& batch, bool training,
                     std::mt19937_64& rng) const;

  const LocalEncoderConfig& config() const noexcept { return cfg_; }

 private:
  struct Layer {
    nn::LayerNorm<T> attn_norm;
    nn::MultiHeadSelfAttention<T> attn;
    nn::LayerNorm<T> ffn_norm;
    nn::FeedForward<T> ffn;
  };

  LocalEncoderConfig cfg_;
  nn::Linear<T> input_projection_;
  std::vector<Layer> layers_;
};

extern template class LocalEncoder<float>;
extern template class LocalEncoder<double>;

}  // namespace largegt
