#pragma once

#include <random>
#include <string>

#include "largegt/nn/ops.hpp"
#include "largegt/nn/params.hpp"

namespace largegt::nn {

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore<T>& store, const std::string& name, Eigen::Index in, Eigen::Index out,
         std::mt19937_64& rng, bool bias = true, double init_gain = 1.0)
      : weight_(store.add(name + ".weight", xavier_uniform<T>(in, out, rng, init_gain))) {
    if (bias) bias_ = store.add(name + ".bias", Matrix<T>::Zero(1, out));
  }

  Var<T> operator()(Tape<T>& tape, Var<T> x) const { return linear(tape, x, weight_, bias_); }

  Var<T> weight() const { return weight_; }
  Var<T> bias() const { return bias_; }
  Eigen::Index in_dim() const { return weight_.rows(); }
  Eigen::Index out_dim() const { return weight_.cols(); }

 private:
  Var<T> weight_;
  Var<T> bias_;
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore<T>& store, const std::string& name, Eigen::Index dim, T eps = T(1e-5))
      : gain_(store.add(name + ".gain", Matrix<T>::Ones(1, dim))),
        shift_(store.add(name + ".shift", Matrix<T>::Zero(1, dim))),
        eps_(eps) {}

  Var<T> operator()(Tape<T>& tape, Var<T> x) const { return layer_norm(tape, x, gain_, shift_, eps_); }

  Var<T> gain() const { return gain_; }
  Var<T> shift() const { return shift_; }

 private:
  Var<T> gain_;
  Var<T> shift_;
  T eps_ = T(1e-5);
};

/// in -> hidden -> out with GELU in between. Also serves as the two-layer
/// perceptrons of the global branch.
template <typename T>
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParamStore<T>& store, const std::string& name, Eigen::Index in, Eigen::Index hidden,
              Eigen::Index out, std::mt19937_64& rng)
      : first_(store, name + ".fc1", in, hidden, rng), second_(store, name + ".fc2", hidden, out, rng) {}

  Var<T> operator()(Tape<T>& tape, Var<T> x) const { return second_(tape, gelu(tape, first_(tape, x))); }

  const Linear<T>& first() const { return first_; }
  const Linear<T>& second() const { return second_; }

 private:
  Linear<T> first_;
  Linear<T> second_;
};

/// Q/K/V projections, grouped attention, output projection.
template <typename T>
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParamStore<T>& store, const std::string& name, Eigen::Index dim,
                         std::size_t heads, std::mt19937_64& rng)
      : q_(store, name + ".q", dim, dim, rng),
        k_(store, name + ".k", dim, dim, rng),
        v_(store, name + ".v", dim, dim, rng),
        o_(store, name + ".o", dim, dim, rng),
        heads_(heads) {
    if (heads == 0 || dim % static_cast<Eigen::Index>(heads) != 0)
      throw ContractViolation("attention width " + std::to_string(dim) + " not divisible by " +
                              std::to_string(heads) + " heads");
  }

  /// Tokens attend within consecutive blocks of `group` rows.
  Var<T> operator()(Tape<T>& tape, Var<T> x, std::size_t group) const {
    const auto groups = static_cast<std::size_t>(x.rows()) / group;
    auto a = attention(tape, q_(tape, x), k_(tape, x), v_(tape, x), heads_, groups);
    return o_(tape, a);
  }

 private:
  Linear<T> q_, k_, v_, o_;
  std::size_t heads_ = 1;
};

}  // namespace largegt::nn
