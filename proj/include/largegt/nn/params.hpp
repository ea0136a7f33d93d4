#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "largegt/nn/tape.hpp"

namespace largegt::nn {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;  // leaf; requires_grad is always true
  Matrix<T> first_moment;
  Matrix<T> second_moment;

  Var<T> var() { return Var<T>(&tensor); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// A named tensor as stored on disk: float32 payload regardless of the
/// precision it was trained in.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;
};

/// "LGTP" binary: magic, u32 version, u32 count, then per tensor u32 name
/// length, name bytes, u32 rank, u64 dims, f32 payload.
void save_named_tensors(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path);
std::vector<NamedTensor> load_named_tensors(const std::filesystem::path& path);

template <typename T>
NamedTensor to_named(const std::string& name, const Matrix<T>& m);
template <typename T>
Matrix<T> from_named(const NamedTensor& t);

/// Owns every trainable tensor of a model plus its Adam state. Parameters
/// keep stable addresses for the lifetime of the store.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Var<T> add(std::string name, Matrix<T> init);
  Parameter<T>& get(const std::string& name);
  const Parameter<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::unique_ptr<Parameter<T>>>& params() const noexcept { return params_; }
  std::size_t num_scalars() const;
  std::uint64_t step() const noexcept { return step_; }

  void zero_grad();

  /// Bias-corrected Adam. Parameters without a gradient are skipped but the
  /// step counter still advances.
  void adam_step(const AdamConfig& cfg);

  std::vector<NamedTensor> export_tensors() const;
  /// Overwrites values of matching names; missing or mis-shaped tensors throw.
  void import_tensors(const std::vector<NamedTensor>& tensors);

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::uint64_t step_ = 0;
};

/// Glorot-uniform initial weight matrix.
template <typename T>
Matrix<T> xavier_uniform(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng, double gain = 1.0);

/// FNV-1a over names, shapes and payload bytes; used to prove a model was
/// not mutated.
std::uint64_t hash_tensors(const std::vector<NamedTensor>& tensors);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace largegt::nn
