#include "largegt/nn/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace largegt::nn {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return "[" + std::to_string(r) + ", " + std::to_string(c) + "]";
}

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation(std::string(op) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                            " vs " + shape_str(b.rows(), b.cols()));
}

}  // namespace

template <typename T>
Var<T> matmul(Tape<T>& tape, Var<T> a, Var<T> b) {
  if (a.cols() != b.rows())
    throw ContractViolation("matmul: inner dimensions differ " + shape_str(a.rows(), a.cols()) +
                            " x " + shape_str(b.rows(), b.cols()));
  tape.stats().matmul_flops += 2ULL * a.rows() * a.cols() * b.cols();
  Matrix<T> y;
  y.noalias() = a.value() * b.value();
  auto out = tape.make(std::move(y), {a, b});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [a, b, o] {
      if (a.requires_grad()) a->accumulate(o->grad * b.value().transpose());
      if (b.requires_grad()) b->accumulate(a.value().transpose() * o->grad);
    };
  }
  return out;
}

template <typename T>
Var<T> linear(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b) {
  if (x.cols() != w.rows())
    throw ContractViolation("linear: input width " + std::to_string(x.cols()) +
                            " does not match weight " + shape_str(w.rows(), w.cols()));
  if (b && (b.rows() != 1 || b.cols() != w.cols()))
    throw ContractViolation("linear: bias must be [1, " + std::to_string(w.cols()) + "]");
  tape.stats().matmul_flops += 2ULL * x.rows() * x.cols() * w.cols();
  Matrix<T> y;
  y.noalias() = x.value() * w.value();
  if (b) y.rowwise() += b.value().row(0);
  auto out = b ? tape.make(std::move(y), {x, w, b}) : tape.make(std::move(y), {x, w});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, w, b, o] {
      if (x.requires_grad()) x->accumulate(o->grad * w.value().transpose());
      if (w.requires_grad()) w->accumulate(x.value().transpose() * o->grad);
      if (b && b.requires_grad()) b->accumulate(o->grad.colwise().sum());
    };
  }
  return out;
}

template <typename T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b) {
  require_same_shape(a, b, "add");
  auto out = tape.make(a.value() + b.value(), {a, b});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [a, b, o] {
      if (a.requires_grad()) a->accumulate(o->grad);
      if (b.requires_grad()) b->accumulate(o->grad);
    };
  }
  return out;
}

template <typename T>
Var<T> gelu(Tape<T>& tape, Var<T> x) {
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  Matrix<T> y = x.value().unaryExpr([inv_sqrt2](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); });
  auto out = tape.make(std::move(y), {x});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, o, inv_sqrt2] {
      const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
      Matrix<T> d = x.value().unaryExpr([&](T v) {
        return T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      });
      x->accumulate(o->grad.cwiseProduct(d));
    };
  }
  return out;
}

template <typename T>
Var<T> layer_norm(Tape<T>& tape, Var<T> x, Var<T> gain, Var<T> shift, T eps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || shift.rows() != 1 || shift.cols() != d)
    throw ContractViolation("layer_norm: gain/shift must be [1, " + std::to_string(d) + "]");
  Matrix<T> xhat(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = x.value().row(r);
    const T mean = row.mean();
    const T var = (row.array() - mean).square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = (row.array() - mean) * inv_std(r);
  }
  Matrix<T> y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += shift.value().row(0);
  auto out = tape.make(std::move(y), {x, gain, shift});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, gain, shift, o, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
      const Matrix<T>& dy = o->grad;
      if (gain.requires_grad()) gain->accumulate(dy.cwiseProduct(xhat).colwise().sum());
      if (shift.requires_grad()) shift->accumulate(dy.colwise().sum());
      if (x.requires_grad()) {
        Matrix<T> dxhat = dy;
        dxhat.array().rowwise() *= gain.value().row(0).array();
        Matrix<T> dx(dxhat.rows(), dxhat.cols());
        for (Eigen::Index r = 0; r < dx.rows(); ++r) {
          const T m1 = dxhat.row(r).mean();
          const T m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
          dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
        }
        x->accumulate(dx);
      }
    };
  }
  return out;
}

template <typename T>
Var<T> concat_cols(Tape<T>& tape, Var<T> a, Var<T> b) {
  if (a.rows() != b.rows())
    throw ContractViolation("concat_cols: row counts differ (" + std::to_string(a.rows()) + " vs " +
                            std::to_string(b.rows()) + ")");
  Matrix<T> y(a.rows(), a.cols() + b.cols());
  y << a.value(), b.value();
  auto out = tape.make(std::move(y), {a, b});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [a, b, o] {
      if (a.requires_grad()) a->accumulate(o->grad.leftCols(a.cols()));
      if (b.requires_grad()) b->accumulate(o->grad.rightCols(b.cols()));
    };
  }
  return out;
}

template <typename T>
Var<T> group_mean(Tape<T>& tape, Var<T> x, std::size_t group) {
  const auto g = static_cast<Eigen::Index>(group);
  if (g == 0 || x.rows() % g != 0)
    throw ContractViolation("group_mean: " + std::to_string(x.rows()) + " rows not divisible by " +
                            std::to_string(group));
  const Eigen::Index n = x.rows() / g;
  Matrix<T> y(n, x.cols());
  for (Eigen::Index r = 0; r < n; ++r) y.row(r) = x.value().middleRows(r * g, g).colwise().mean();
  auto out = tape.make(std::move(y), {x});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, o, g] {
      Matrix<T> dx(x.rows(), x.cols());
      const T inv = T(1) / static_cast<T>(g);
      for (Eigen::Index r = 0; r < o->grad.rows(); ++r)
        dx.middleRows(r * g, g).rowwise() = o->grad.row(r) * inv;
      x->accumulate(dx);
    };
  }
  return out;
}

template <typename T>
Var<T> group_first(Tape<T>& tape, Var<T> x, std::size_t group) {
  const auto g = static_cast<Eigen::Index>(group);
  if (g == 0 || x.rows() % g != 0)
    throw ContractViolation("group_first: " + std::to_string(x.rows()) + " rows not divisible by " +
                            std::to_string(group));
  const Eigen::Index n = x.rows() / g;
  Matrix<T> y(n, x.cols());
  for (Eigen::Index r = 0; r < n; ++r) y.row(r) = x.value().row(r * g);
  auto out = tape.make(std::move(y), {x});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, o, g] {
      Matrix<T> dx = Matrix<T>::Zero(x.rows(), x.cols());
      for (Eigen::Index r = 0; r < o->grad.rows(); ++r) dx.row(r * g) = o->grad.row(r);
      x->accumulate(dx);
    };
  }
  return out;
}

template <typename T>
Var<T> dropout(Tape<T>& tape, Var<T> x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ContractViolation("dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const T scale = T(1.0 / (1.0 - p));
  Matrix<T> mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : T(0);
  auto out = tape.make(x.value().cwiseProduct(mask), {x});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, o, mask = std::move(mask)] { x->accumulate(o->grad.cwiseProduct(mask)); };
  }
  return out;
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const T mx = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

template <typename T>
Var<T> attention(Tape<T>& tape, Var<T> q, Var<T> k, Var<T> v, std::size_t heads,
                 std::size_t groups, std::span<const T> bias) {
  const Eigen::Index d = q.cols();
  if (heads == 0 || d % static_cast<Eigen::Index>(heads) != 0)
    throw ContractViolation("attention: width " + std::to_string(d) + " not divisible by " +
                            std::to_string(heads) + " heads");
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows())
    throw ContractViolation("attention: q/k/v shapes disagree");
  const auto ng = static_cast<Eigen::Index>(groups);
  if (ng == 0 && q.rows() == 0) return tape.make(Matrix<T>(0, d), {q, k, v});
  if (ng == 0 || q.rows() % ng != 0 || k.rows() % ng != 0)
    throw ContractViolation("attention: rows not divisible into " + std::to_string(groups) + " groups");
  const Eigen::Index gq = q.rows() / ng;
  const Eigen::Index gk = k.rows() / ng;
  if (gk == 0) throw ContractViolation("attention: no keys");
  if (!bias.empty() && static_cast<Eigen::Index>(bias.size()) != gk)
    throw ContractViolation("attention: bias length must equal keys per group");
  const auto nh = static_cast<Eigen::Index>(heads);
  const Eigen::Index dh = d / nh;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  tape.stats().attention_flops += 4ULL * ng * nh * gq * gk * dh;

  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias_row(bias.data(), gk);
  const bool keep = tape.recording() && (q.requires_grad() || k.requires_grad() || v.requires_grad());
  std::vector<Matrix<T>> probs;
  if (keep) probs.reserve(static_cast<std::size_t>(ng * nh));

  Matrix<T> y(q.rows(), d);
  Matrix<T> s(gq, gk);
  for (Eigen::Index g = 0; g < ng; ++g) {
    for (Eigen::Index h = 0; h < nh; ++h) {
      const auto qh = q.value().block(g * gq, h * dh, gq, dh);
      const auto kh = k.value().block(g * gk, h * dh, gk, dh);
      const auto vh = v.value().block(g * gk, h * dh, gk, dh);
      s.noalias() = (qh * kh.transpose()) * scale;
      if (!bias.empty()) s.rowwise() += bias_row;
      for (Eigen::Index r = 0; r < gq; ++r) {
        const T mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
      }
      y.block(g * gq, h * dh, gq, dh).noalias() = s * vh;
      if (keep) probs.push_back(s);
    }
  }

  auto out = tape.make(std::move(y), {q, k, v});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [q, k, v, o, probs = std::move(probs), ng, nh, gq, gk, dh, scale] {
      Matrix<T> dq = Matrix<T>::Zero(q.rows(), q.cols());
      Matrix<T> dk = Matrix<T>::Zero(k.rows(), k.cols());
      Matrix<T> dv = Matrix<T>::Zero(v.rows(), v.cols());
      Matrix<T> dp(gq, gk);
      for (Eigen::Index g = 0; g < ng; ++g) {
        for (Eigen::Index h = 0; h < nh; ++h) {
          const Matrix<T>& p = probs[static_cast<std::size_t>(g * nh + h)];
          const auto dout = o->grad.block(g * gq, h * dh, gq, dh);
          const auto qh = q.value().block(g * gq, h * dh, gq, dh);
          const auto kh = k.value().block(g * gk, h * dh, gk, dh);
          const auto vh = v.value().block(g * gk, h * dh, gk, dh);
          dv.block(g * gk, h * dh, gk, dh).noalias() += p.transpose() * dout;
          dp.noalias() = dout * vh.transpose();
          // softmax Jacobian: ds = p ∘ (dp - rowsum(dp ∘ p))
          const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = dp.cwiseProduct(p).rowwise().sum();
          dp = p.cwiseProduct(dp.colwise() - dot) * scale;
          dq.block(g * gq, h * dh, gq, dh).noalias() += dp * kh;
          dk.block(g * gk, h * dh, gk, dh).noalias() += dp.transpose() * qh;
        }
      }
      if (q.requires_grad()) q->accumulate(dq);
      if (k.requires_grad()) k->accumulate(dk);
      if (v.requires_grad()) v->accumulate(dv);
    };
  }
  return out;
}

template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& tape, Var<T> logits, std::span<const std::int32_t> labels) {
  const Eigen::Index m = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != m)
    throw ContractViolation("softmax_cross_entropy: " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(m) + " rows");
  if (m == 0) throw ContractViolation("softmax_cross_entropy: empty batch");
  for (auto l : labels)
    if (l < 0 || l >= c)
      throw BoundsError("softmax_cross_entropy: label " + std::to_string(l) + " outside [0, " +
                        std::to_string(c) + ")");
  T total = 0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto row = logits.value().row(r);
    const T mx = row.maxCoeff();
    const T lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row(labels[static_cast<std::size_t>(r)]);
  }
  Matrix<T> loss(1, 1);
  loss(0, 0) = total / static_cast<T>(m);
  auto out = tape.make(std::move(loss), {logits});
  if (out.requires_grad()) {
    auto* o = out.get();
    std::vector<std::int32_t> lab(labels.begin(), labels.end());
    out->backward = [logits, o, lab = std::move(lab)] {
      Matrix<T> g = softmax_rows<T>(logits.value());
      for (std::size_t r = 0; r < lab.size(); ++r) g(static_cast<Eigen::Index>(r), lab[r]) -= T(1);
      g *= o->grad(0, 0) / static_cast<T>(lab.size());
      logits->accumulate(g);
    };
  }
  return out;
}

template <typename T>
Var<T> weighted_sum(Tape<T>& tape, Var<T> x, const Matrix<T>& w) {
  if (w.rows() != x.rows() || w.cols() != x.cols())
    throw ContractViolation("weighted_sum: weight shape mismatch");
  Matrix<T> s(1, 1);
  s(0, 0) = x.value().cwiseProduct(w).sum();
  auto out = tape.make(std::move(s), {x});
  if (out.requires_grad()) {
    auto* o = out.get();
    out->backward = [x, o, w] { x->accumulate(w * o->grad(0, 0)); };
  }
  return out;
}

#define LARGEGT_INSTANTIATE_OPS(T)                                                              \
  template Var<T> matmul(Tape<T>&, Var<T>, Var<T>);                                             \
  template Var<T> linear(Tape<T>&, Var<T>, Var<T>, Var<T>);                                     \
  template Var<T> add(Tape<T>&, Var<T>, Var<T>);                                                \
  template Var<T> gelu(Tape<T>&, Var<T>);                                                       \
  template Var<T> layer_norm(Tape<T>&, Var<T>, Var<T>, Var<T>, T);                              \
  template Var<T> concat_cols(Tape<T>&, Var<T>, Var<T>);                                        \
  template Var<T> group_mean(Tape<T>&, Var<T>, std::size_t);                                    \
  template Var<T> group_first(Tape<T>&, Var<T>, std::size_t);                                   \
  template Var<T> dropout(Tape<T>&, Var<T>, double, std::mt19937_64&);                          \
  template Var<T> attention(Tape<T>&, Var<T>, Var<T>, Var<T>, std::size_t, std::size_t,         \
                            std::span<const T>);                                                \
  template Var<T> softmax_cross_entropy(Tape<T>&, Var<T>, std::span<const std::int32_t>);       \
  template Var<T> weighted_sum(Tape<T>&, Var<T>, const Matrix<T>&);                             \
  template Matrix<T> softmax_rows(const Matrix<T>&);

LARGEGT_INSTANTIATE_OPS(float)
LARGEGT_INSTANTIATE_OPS(double)

#undef LARGEGT_INSTANTIATE_OPS

}  // namespace largegt::nn
