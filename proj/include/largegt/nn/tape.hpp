#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "largegt/error.hpp"
#include "largegt/matrix.hpp"

namespace largegt::nn {

template <typename T>
using Matrix = RowMatrix<T>;

/// A value in the computation graph. Tensors with more than two axes are
/// stored with their leading axes flattened into rows: an M x 3K x D token
/// tensor is an (M*3K) x D matrix.
template <typename T>
struct Tensor {
  Matrix<T> value;
  Matrix<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::function<void()> backward;

  void accumulate(const Matrix<T>& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
  void zero_grad() { grad.resize(0, 0); }
};

/// Non-owning handle to a Tensor living on a Tape or in a ParamStore.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T>* t) : t_(t) {}

  explicit operator bool() const noexcept { return t_ != nullptr; }
  Tensor<T>* get() const noexcept { return t_; }
  Tensor<T>* operator->() const noexcept { return t_; }

  const Matrix<T>& value() const { return t_->value; }
  const Matrix<T>& grad() const { return t_->grad; }
  bool requires_grad() const noexcept { return t_ && t_->requires_grad; }
  Eigen::Index rows() const { return t_->value.rows(); }
  Eigen::Index cols() const { return t_->value.cols(); }

 private:
  Tensor<T>* t_ = nullptr;
};

struct OpStats {
  // Multiply-add FLOPs spent in attention score and weighted-value products.
  std::uint64_t attention_flops = 0;
  std::uint64_t matmul_flops = 0;
};

/// Records every intermediate of one forward pass in creation order so the
/// reverse sweep is a plain reverse iteration. With recording off (eval)
/// no backward closures are kept.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  OpStats& stats() noexcept { return stats_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var<T> constant(Matrix<T> value) { return push(std::move(value), false); }

  /// Input whose gradient the caller wants to read after backward().
  Var<T> input(Matrix<T> value) { return push(std::move(value), recording_); }

  /// New node whose requires_grad is the OR of its parents'.
  Var<T> make(Matrix<T> value, std::initializer_list<Var<T>> parents) {
    bool needs = false;
    if (recording_)
      for (const auto& p : parents) needs = needs || p.requires_grad();
    return push(std::move(value), needs);
  }

  /// Seeds d(loss)/d(loss) = 1 and runs the reverse sweep.
  void backward(Var<T> loss) {
    if (!recording_) throw StateError("backward() on a tape created with recording off");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw ContractViolation("backward() expects a scalar loss");
    loss->accumulate(Matrix<T>::Ones(1, 1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Tensor<T>& n = **it;
      if (n.backward && n.grad.size() != 0) n.backward();
    }
  }

 private:
  Var<T> push(Matrix<T> value, bool requires_grad) {
    auto t = std::make_unique<Tensor<T>>();
    t->value = std::move(value);
    t->requires_grad = requires_grad;
    nodes_.push_back(std::move(t));
    return Var<T>(nodes_.back().get());
  }

  bool recording_;
  OpStats stats_;
  std::vector<std::unique_ptr<Tensor<T>>> nodes_;
};

}  // namespace largegt::nn
