#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "largegt/global_encoder.hpp"
#include "largegt/local_encoder.hpp"
#include "largegt/nn/layers.hpp"
#include "largegt/tokens.hpp"

namespace largegt {

enum class Variant { Local, Full };

Variant parse_variant(std::string_view s);
std::string_view to_string(Variant v);

/// Hyperparameters of one fused layer plus head.
struct ModelConfig {
  Variant variant = Variant::Full;
  std::size_t in_dim = 0;
  std::size_t dim = 256;
  std::size_t heads = 2;
  std::size_t k = 100;
  std::size_t centroids = 4096;
  std::size_t local_layers = 1;
  std::size_t ffn_mult = 2;
  double dropout = 0.5;
  Readout readout = Readout::Mean;
  std::size_t num_classes = 0;
  double codebook_decay = 0.99;
  std::size_t population = 0;
  std::uint64_t init_seed = 0;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Config plus every tensor needed to rebuild a model, including the
/// codebook state of the full variant.
struct Checkpoint {
  ModelConfig config;
  std::vector<nn::NamedTensor> tensors;

  std::uint64_t hash() const;
};

/// Directory with config.json and tensors.bin.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// One LargeGT update followed by a linear classifier:
///   h_local  = LocalModule(X)
///   h_global = GlobalModule(h_in)                  (full variant only)
///   ĥ        = FFN(h_local || h_global)
///   h_out    = proj(h_in) + LayerNorm(ĥ)
///   logits   = Linear(dropout(h_out))
template <typename T>
class LargeGtModel {
 public:
  explicit LargeGtModel(const ModelConfig& cfg);
  explicit LargeGtModel(const Checkpoint& ckpt);

  /// `h_in` holds the raw feature rows of the batch nodes, in batch order.
  /// In training mode dropout is active and the codebook is updated.
  nn::Var<T> forward(nn::Tape<T>& tape, const TokenBatch& batch, const nn::Matrix<T>& h_in,
                     bool training, std::mt19937_64& rng);

  /// Pieces of forward() exposed for tests and ablations.
  nn::Var<T> local_features(nn::Tape<T>& tape, const TokenBatch& batch, bool training,
                            std::mt19937_64& rng) const;

  /// Seeds the codebook from MLP_a of `sample_h` (full variant; no-op otherwise).
  void init_codebook(const nn::Matrix<T>& sample_h, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return cfg_; }
  nn::ParamStore<T>& params() noexcept { return store_; }
  const nn::ParamStore<T>& params() const noexcept { return store_; }
  Codebook<T>& codebook() noexcept { return codebook_; }
  const Codebook<T>& codebook() const noexcept { return codebook_; }
  const LocalEncoder<T>& local() const noexcept { return *local_; }
  const GlobalEncoder<T>* global() const noexcept { return global_ ? &*global_ : nullptr; }

  Checkpoint checkpoint() const;
  void load(const Checkpoint& ckpt);

 private:
  ModelConfig cfg_;
  nn::ParamStore<T> store_;
  std::optional<LocalEncoder<T>> local_;
  std::optional<GlobalEncoder<T>> global_;
  Codebook<T> codebook_;
  nn::FeedForward<T> fusion_;
  nn::LayerNorm<T> norm_;
  nn::Linear<T> classifier_;
};

extern template class LargeGtModel<float>;
extern template class LargeGtModel<double>;

}  // namespace largegt
