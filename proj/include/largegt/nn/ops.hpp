#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "largegt/nn/tape.hpp"

namespace largegt::nn {

// All ops append their result to `tape` and, when any input requires a
// gradient, register the matching backward closure.

template <typename T>
Var<T> matmul(Tape<T>& tape, Var<T> a, Var<T> b);

/// x·W + b over the rows of x. `b` may be empty (no bias).
template <typename T>
Var<T> linear(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b);

template <typename T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b);

/// Exact GELU, x·Φ(x).
template <typename T>
Var<T> gelu(Tape<T>& tape, Var<T> x);

/// Per-row standardization followed by gain/shift (both 1 x D).
template <typename T>
Var<T> layer_norm(Tape<T>& tape, Var<T> x, Var<T> gain, Var<T> shift, T eps = T(1e-5));

template <typename T>
Var<T> concat_cols(Tape<T>& tape, Var<T> a, Var<T> b);

/// Averages consecutive blocks of `group` rows: (n*group) x D -> n x D.
template <typename T>
Var<T> group_mean(Tape<T>& tape, Var<T> x, std::size_t group);

/// Takes the first row of each block of `group` rows.
template <typename T>
Var<T> group_first(Tape<T>& tape, Var<T> x, std::size_t group);

/// Inverted dropout; identity when p == 0.
template <typename T>
Var<T> dropout(Tape<T>& tape, Var<T> x, double p, std::mt19937_64& rng);

/// Scaled dot-product attention, split into `heads` column blocks.
///
/// q has groups*gq rows and k, v have groups*gk rows; queries of group g
/// attend only to keys of group g. Per head h with width d_h = D / heads:
///   out_h = softmax(q_h k_hᵀ / sqrt(d_h) + bias) v_h
/// `bias` (length gk, constant) is added to every query's logits. Heads are
/// concatenated back into D columns; no output projection is applied here.
template <typename T>
Var<T> attention(Tape<T>& tape, Var<T> q, Var<T> k, Var<T> v, std::size_t heads,
                 std::size_t groups, std::span<const T> bias = {});

/// Mean negative log-likelihood of `labels` under row-wise softmax(logits).
template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& tape, Var<T> logits, std::span<const std::int32_t> labels);

/// sum(x ∘ w) for a constant w; used to turn tensors into scalar probes.
template <typename T>
Var<T> weighted_sum(Tape<T>& tape, Var<T> x, const Matrix<T>& w);

/// Row-wise softmax of a plain matrix (no tape), numerically stabilized.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits);

}  // namespace largegt::nn
