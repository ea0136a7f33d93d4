#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "largegt/graph.hpp"
#include "largegt/nn/ops.hpp"
#include "largegt/nn/params.hpp"
#include "largegt/nn/tape.hpp"

namespace largegt::testing {

using MatD = Eigen::MatrixXd;

inline MatD dense_adjacency(const GraphCSR& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  MatD a = MatD::Zero(n, n);
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    for (NodeId j : g.neighbors(i)) a(i, j) = 1.0;
  return a;
}

// D̃^-1/2 (A + I) D̃^-1/2 built densely.
inline MatD dense_normalized(const GraphCSR& g) {
  MatD a = dense_adjacency(g) + MatD::Identity(static_cast<Eigen::Index>(g.num_nodes()),
                                               static_cast<Eigen::Index>(g.num_nodes()));
  const Eigen::VectorXd d = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * a * d.asDiagonal();
}

// Plain queue BFS on the dense adjacency, independent of the CSR helpers.
inline std::vector<int> oracle_distances(const GraphCSR& g, NodeId src) {
  const MatD a = dense_adjacency(g);
  std::vector<int> dist(g.num_nodes(), -1);
  std::vector<NodeId> frontier{src};
  dist[src] = 0;
  for (int d = 1; !frontier.empty(); ++d) {
    std::vector<NodeId> next;
    for (NodeId u : frontier)
      for (NodeId v = 0; v < g.num_nodes(); ++v)
        if (a(u, v) != 0 && dist[v] < 0) {
          dist[v] = d;
          next.push_back(v);
        }
    frontier = std::move(next);
  }
  return dist;
}

inline std::set<NodeId> oracle_two_hop(const GraphCSR& g, NodeId i) {
  const auto dist = oracle_distances(g, i);
  std::set<NodeId> out;
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    if (dist[v] == 1 || dist[v] == 2) out.insert(v);
  return out;
}

inline nn::Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  nn::Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("largegt_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// ||a - n|| / max(||a||, ||n||). Gradients that vanish identically (a key
// bias under softmax, say) leave only finite-difference roundoff, so both
// sides below 1e-7 count as agreement.
inline double relative_error(const nn::Matrix<double>& a, const nn::Matrix<double>& n) {
  const double denom = std::max(a.norm(), n.norm());
  if (denom < 1e-7) return 0.0;
  return (a - n).norm() / denom;
}

using LossFn = std::function<nn::Var<double>(nn::Tape<double>&, const std::vector<nn::Var<double>>&)>;

// Central finite differences against the tape gradient for every input.
// Returns the worst relative error over inputs.
inline double gradient_check(const LossFn& f, std::vector<nn::Matrix<double>> inputs, double h = 1e-6) {
  std::vector<nn::Matrix<double>> analytic;
  {
    nn::Tape<double> tape;
    std::vector<nn::Var<double>> vars;
    for (const auto& m : inputs) vars.push_back(tape.input(m));
    auto loss = f(tape, vars);
    tape.backward(loss);
    for (auto& v : vars)
      analytic.push_back(v.grad().size() ? v.grad() : nn::Matrix<double>::Zero(v.rows(), v.cols()));
  }
  auto eval = [&](const std::vector<nn::Matrix<double>>& xs) {
    nn::Tape<double> tape(false);
    std::vector<nn::Var<double>> vars;
    for (const auto& m : xs) vars.push_back(tape.constant(m));
    return f(tape, vars).value()(0, 0);
  };
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    nn::Matrix<double> numeric(inputs[k].rows(), inputs[k].cols());
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k].data()[i];
      inputs[k].data()[i] = orig + h;
      const double up = eval(inputs);
      inputs[k].data()[i] = orig - h;
      const double down = eval(inputs);
      inputs[k].data()[i] = orig;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    worst = std::max(worst, relative_error(analytic[k], numeric));
  }
  return worst;
}

// Reduces any matrix to a scalar with fixed random weights so every output
// entry carries a distinct gradient.
inline nn::Var<double> reduce(nn::Tape<double>& tape, nn::Var<double> x, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(x.rows() * 131 + x.cols()));
  return nn::weighted_sum(tape, x, random_matrix(x.rows(), x.cols(), rng));
}

// Same check for every parameter of a store; `f` builds the loss on a tape.
// When `max_entries` is set only that many entries per parameter are probed.
inline double param_gradient_check(nn::ParamStore<double>& store,
                                   const std::function<nn::Var<double>(nn::Tape<double>&)>& f,
                                   double h = 1e-6, Eigen::Index max_entries = 0) {
  store.zero_grad();
  {
    nn::Tape<double> tape;
    tape.backward(f(tape));
  }
  double worst = 0;
  for (const auto& p : store.params()) {
    auto& value = p->tensor.value;
    const nn::Matrix<double> analytic =
        p->tensor.grad.size() ? p->tensor.grad : nn::Matrix<double>::Zero(value.rows(), value.cols());
    const Eigen::Index n = max_entries > 0 ? std::min(max_entries, value.size()) : value.size();
    nn::Matrix<double> a(1, n), num(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index idx = max_entries > 0 ? (i * 7919) % value.size() : i;
      const double orig = value.data()[idx];
      value.data()[idx] = orig + h;
      nn::Tape<double> t1(false);
      const double up = f(t1).value()(0, 0);
      value.data()[idx] = orig - h;
      nn::Tape<double> t2(false);
      const double down = f(t2).value()(0, 0);
      value.data()[idx] = orig;
      a(0, i) = analytic.data()[idx];
      num(0, i) = (up - down) / (2 * h);
    }
    worst = std::max(worst, relative_error(a, num));
  }
  return worst;
}

}  // namespace largegt::testing
