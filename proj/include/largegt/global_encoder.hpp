#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "largegt/graph.hpp"
#include "largegt/nn/layers.hpp"

namespace largegt {

/// B centroids maintained by EMA K-Means in the hidden space of MLP_a.
template <typename T>
struct Codebook {
  // Centroids with an EMA count at or below this are left in place.
  static constexpr double kCountFloor = 1e-5;
  // Floor under the rescaled population estimate inside the log bias.
  static constexpr double kBiasFloor = 1e-3;

  nn::Matrix<T> centroids;  // B x D
  nn::Matrix<T> ema_sums;   // B x D
  Eigen::Matrix<T, Eigen::Dynamic, 1> ema_counts;
  double decay = 0.99;
  // Centroid index of every row of the most recent training batch, and the
  // node ids of those rows when the caller supplied them.
  std::vector<std::uint32_t> assignments;
  std::vector<NodeId> assigned_nodes;

  std::size_t size() const noexcept { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(centroids.cols()); }
  bool initialized() const noexcept { return centroids.size() > 0; }

  /// B distinct rows of `sample` (n >= B), counts 1, sums = centroids.
  static Codebook init(std::size_t size, double decay, const nn::Matrix<T>& sample, std::uint64_t seed);

  /// Nearest-centroid assignment of each row of x, then
  ///   counts <- decay*counts + (1-decay)*n_b
  ///   sums   <- decay*sums   + (1-decay)*s_b
  ///   centroid_b <- sums_b / counts_b for counts_b > floor.
  void ema_update(const nn::Matrix<T>& x, std::span<const NodeId> node_ids = {});

  /// log(max(count_b * population / sum(counts), kBiasFloor)) per centroid.
  std::vector<T> log_count_bias(std::size_t population) const;

  std::vector<std::uint32_t> assign(const nn::Matrix<T>& x) const;

  std::vector<nn::NamedTensor> export_tensors(const std::string& prefix) const;
  void import_tensors(const std::vector<nn::NamedTensor>& tensors, const std::string& prefix);
};

struct GlobalEncoderConfig {
  std::size_t in_dim = 0;
  std::size_t dim = 256;
  std::size_t centroids = 4096;
  double decay = 0.99;
  std::size_t population = 0;  // N used to rescale the count bias
};

/// Codebook attention: every node attends to the B centroids with a
/// log-population bias; the codebook is refreshed from MLP_a outputs after
/// each training forward.
template <typename T>
class GlobalEncoder {
 public:
  GlobalEncoder(nn::ParamStore<T>& store, const std::string& prefix, const GlobalEncoderConfig& cfg,
                std::mt19937_64& rng);

  /// x = MLP_a(h_in)
  nn::Var<T> embed(nn::Tape<T>& tape, nn::Var<T> h_in) const { return mlp_a_(tape, h_in); }

  /// MLP_b(softmax(q Kᵀ / sqrt(D) + bias) V), q = x W_Q, K = μ W_K, V = μ W_V.
  /// With `training`, the codebook is updated with x afterwards.
  nn::Var<T> forward(nn::Tape<T>& tape, nn::Var<T> h_in, Codebook<T>& cb, bool training,
                     std::span<const NodeId> node_ids = {}) const;

  /// Runs MLP_a on `sample` without recording and seeds a codebook from it.
  Codebook<T> init_codebook(const nn::Matrix<T>& sample, std::uint64_t seed) const;

  const GlobalEncoderConfig& config() const noexcept { return cfg_; }
  const nn::FeedForward<T>& mlp_b() const noexcept { return mlp_b_; }

 private:
  GlobalEncoderConfig cfg_;
  nn::FeedForward<T> mlp_a_;
  nn::Linear<T> w_q_, w_k_, w_v_;
  nn::FeedForward<T> mlp_b_;
};

extern template struct Codebook<float>;
extern template struct Codebook<double>;
extern template class GlobalEncoder<float>;
extern template class GlobalEncoder<double>;

}  // namespace largegt
