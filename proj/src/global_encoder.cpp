#include "largegt/global_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "largegt/rng.hpp"

namespace largegt {

template <typename T>
Codebook<T> Codebook<T>::init(std::size_t size, double decay, const nn::Matrix<T>& sample,
                              std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(sample.rows());
  if (size == 0) throw ContractViolation("codebook size must be at least 1");
  if (n < size)
    throw ContractViolation("codebook init needs at least " + std::to_string(size) + " sample rows, got " +
                            std::to_string(n));
  if (!(decay >= 0.0 && decay < 1.0)) throw ContractViolation("codebook decay must be in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(stream_seed(seed, 0xc0debeefULL));
  for (std::size_t j = 0; j < size; ++j) std::swap(idx[j], idx[j + uniform_below(rng, n - j)]);

  Codebook cb;
  cb.decay = decay;
  cb.centroids.resize(static_cast<Eigen::Index>(size), sample.cols());
  for (std::size_t j = 0; j < size; ++j)
    cb.centroids.row(static_cast<Eigen::Index>(j)) = sample.row(static_cast<Eigen::Index>(idx[j]));
  cb.ema_sums = cb.centroids;
  cb.ema_counts = Eigen::Matrix<T, Eigen::Dynamic, 1>::Ones(static_cast<Eigen::Index>(size));
  return cb;
}

template <typename T>
std::vector<std::uint32_t> Codebook<T>::assign(const nn::Matrix<T>& x) const {
  if (!initialized()) throw StateError("codebook is not initialized");
  if (x.cols() != centroids.cols()) throw ContractViolation("codebook assign: width mismatch");
  // |x - c|^2 = |x|^2 - 2 x·c + |c|^2; the |x|^2 term does not change the argmin
  const nn::Matrix<T> cross = x * centroids.transpose();
  const Eigen::Matrix<T, 1, Eigen::Dynamic> norms = centroids.rowwise().squaredNorm().transpose();
  std::vector<std::uint32_t> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::Index best = 0;
    (norms - T(2) * cross.row(r)).minCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

template <typename T>
void Codebook<T>::ema_update(const nn::Matrix<T>& x, std::span<const NodeId> node_ids) {
  assignments = assign(x);
  assigned_nodes.assign(node_ids.begin(), node_ids.end());
  const Eigen::Index b = centroids.rows();
  Eigen::Matrix<T, Eigen::Dynamic, 1> counts = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(b);
  nn::Matrix<T> sums = nn::Matrix<T>::Zero(b, centroids.cols());
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    counts(assignments[r]) += T(1);
    sums.row(assignments[r]) += x.row(static_cast<Eigen::Index>(r));
  }
  const T d = static_cast<T>(decay);
  ema_counts = d * ema_counts + (T(1) - d) * counts;
  ema_sums = d * ema_sums + (T(1) - d) * sums;
  // a centroid whose count has decayed below the floor keeps its last position
  for (Eigen::Index j = 0; j < b; ++j)
    if (ema_counts(j) > static_cast<T>(kCountFloor)) centroids.row(j) = ema_sums.row(j) / ema_counts(j);
}

template <typename T>
std::vector<T> Codebook<T>::log_count_bias(std::size_t population) const {
  if (!initialized()) throw StateError("codebook is not initialized");
  const double total = static_cast<double>(ema_counts.sum());
  const double scale = total > 0 ? static_cast<double>(std::max<std::size_t>(population, 1)) / total : 0.0;
  std::vector<T> bias(size());
  for (std::size_t j = 0; j < bias.size(); ++j) {
    const double est = static_cast<double>(ema_counts(static_cast<Eigen::Index>(j))) * scale;
    bias[j] = static_cast<T>(std::log(std::max(est, kBiasFloor)));
  }
  return bias;
}

template <typename T>
std::vector<nn::NamedTensor> Codebook<T>::export_tensors(const std::string& prefix) const {
  nn::Matrix<T> d(1, 1);
  d(0, 0) = static_cast<T>(decay);
  nn::Matrix<T> counts = ema_counts.transpose();
  return {nn::to_named<T>(prefix + ".centroids", centroids), nn::to_named<T>(prefix + ".ema_sums", ema_sums),
          nn::to_named<T>(prefix + ".ema_counts", counts), nn::to_named<T>(prefix + ".decay", d)};
}

template <typename T>
void Codebook<T>::import_tensors(const std::vector<nn::NamedTensor>& tensors, const std::string& prefix) {
  auto find = [&](const std::string& name) -> const nn::NamedTensor& {
    for (const auto& t : tensors)
      if (t.name == prefix + name) return t;
    throw FormatError("checkpoint is missing '" + prefix + name + "'");
  };
  centroids = nn::from_named<T>(find(".centroids"));
  ema_sums = nn::from_named<T>(find(".ema_sums"));
  ema_counts = nn::from_named<T>(find(".ema_counts")).transpose();
  // stored as f32; only adopt it when it disagrees beyond rounding
  const double stored = nn::from_named<double>(find(".decay"))(0, 0);
  if (std::abs(stored - decay) > 1e-6) decay = stored;
  if (ema_sums.rows() != centroids.rows() || ema_sums.cols() != centroids.cols() ||
      ema_counts.size() != centroids.rows())
    throw FormatError("inconsistent codebook tensors in checkpoint");
  assignments.clear();
  assigned_nodes.clear();
}

template <typename T>
GlobalEncoder<T>::GlobalEncoder(nn::ParamStore<T>& store, const std::string& prefix,
                                const GlobalEncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
  const auto din = static_cast<Eigen::Index>(cfg.in_dim);
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  if (din == 0 || d == 0) throw ContractViolation("global encoder dims must be positive");
  mlp_a_ = nn::FeedForward<T>(store, prefix + ".mlp_a", din, d, d, rng);
  w_q_ = nn::Linear<T>(store, prefix + ".w_q", d, d, rng, false);
  w_k_ = nn::Linear<T>(store, prefix + ".w_k", d, d, rng, false);
  w_v_ = nn::Linear<T>(store, prefix + ".w_v", d, d, rng, false);
  mlp_b_ = nn::FeedForward<T>(store, prefix + ".mlp_b", d, d, d, rng);
}

template <typename T>
nn::Var<T> GlobalEncoder<T>::forward(nn::Tape<T>& tape, nn::Var<T> h_in, Codebook<T>& cb, bool training,
                                     std::span<const NodeId> node_ids) const {
  if (!cb.initialized()) throw StateError("global encoder used before its codebook was initialized");
  if (cb.dim() != cfg_.dim) throw ContractViolation("codebook width does not match encoder dim");
  auto x = mlp_a_(tape, h_in);
  auto mu = tape.constant(cb.centroids);
  auto q = w_q_(tape, x);
  auto keys = w_k_(tape, mu);
  auto values = w_v_(tape, mu);
  const std::vector<T> bias = cb.log_count_bias(cfg_.population);
  auto attended = nn::attention(tape, q, keys, values, 1, 1, std::span<const T>(bias));
  auto out = mlp_b_(tape, attended);
  if (training && x.rows() > 0) cb.ema_update(x.value(), node_ids);
  return out;
}

template <typename T>
Codebook<T> GlobalEncoder<T>::init_codebook(const nn::Matrix<T>& sample, std::uint64_t seed) const {
  nn::Tape<T> tape(false);
  auto x = embed(tape, tape.constant(sample));
  return Codebook<T>::init(cfg_.centroids, cfg_.decay, x.value(), seed);
}

template struct Codebook<float>;
template struct Codebook<double>;
template class GlobalEncoder<float>;
template class GlobalEncoder<double>;

}  // namespace largegt
