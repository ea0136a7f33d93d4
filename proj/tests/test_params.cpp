#include <gtest/gtest.h>

#include <fstream>

#include "largegt/error.hpp"
#include "largegt/nn/layers.hpp"
#include "test_util.hpp"

using namespace largegt;
using namespace largegt::nn;
using largegt::testing::temp_dir;

TEST(Adam, MinimizesQuadratic) {
  ParamStore<double> store;
  Matrix<double> init(1, 3);
  init << 3.0, -2.0, 0.5;
  auto w = store.add("w", init);
  Matrix<double> target(1, 3);
  target << 1.0, 1.0, -1.0;
  AdamConfig cfg;
  cfg.lr = 0.05;
  double loss = 0;
  int steps = 0;
  for (; steps < 2000; ++steps) {
    store.zero_grad();
    Tape<double> tape;
    auto diff = add(tape, w, tape.constant(-target));
    auto sq = weighted_sum(tape, diff, diff.value());  // sum(d^2) with d held fixed
    loss = sq.value()(0, 0);
    if (loss < 1e-6) break;
    tape.backward(sq);
    store.get("w").tensor.grad *= 2.0;
    store.adam_step(cfg);
  }
  EXPECT_LT(loss, 1e-6) << "after " << steps << " steps";
}

TEST(Adam, ZeroGradientLeavesValuesAndCountsStep) {
  ParamStore<double> store;
  store.add("a", Matrix<double>::Constant(2, 2, 1.5));
  store.add("b", Matrix<double>::Constant(1, 2, -1.0));
  store.get("a").tensor.grad = Matrix<double>::Zero(2, 2);
  store.adam_step({});
  store.adam_step({});
  EXPECT_EQ(store.get("a").tensor.value, Matrix<double>::Constant(2, 2, 1.5));
  EXPECT_EQ(store.get("b").tensor.value, Matrix<double>::Constant(1, 2, -1.0));
  EXPECT_EQ(store.step(), 2u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore<double> store;
  store.add("w", Matrix<double>::Zero(1, 2));
  Matrix<double> g(1, 2);
  g << 4.0, -0.01;
  store.get("w").tensor.grad = g;
  AdamConfig cfg;
  cfg.lr = 0.1;
  store.adam_step(cfg);
  // bias-corrected first step is lr * sign(g) up to eps
  EXPECT_NEAR(store.get("w").tensor.value(0, 0), -0.1, 1e-6);
  EXPECT_NEAR(store.get("w").tensor.value(0, 1), 0.1, 1e-4);
}

TEST(ParamStore, NamesAreUnique) {
  ParamStore<float> store;
  store.add("x", Matrix<float>::Zero(1, 1));
  EXPECT_THROW(store.add("x", Matrix<float>::Zero(1, 1)), ContractViolation);
  EXPECT_THROW(store.get("y"), ContractViolation);
  EXPECT_TRUE(store.contains("x"));
  EXPECT_EQ(store.num_scalars(), 1u);
}

TEST(NamedTensors, RoundTripAndImport) {
  const auto dir = temp_dir("named_tensors");
  std::mt19937_64 rng(1);
  ParamStore<float> a;
  Linear<float> la(a, "lin", 3, 4, rng);
  save_named_tensors(a.export_tensors(), dir / "p.lgtp");
  const auto back = load_named_tensors(dir / "p.lgtp");
  EXPECT_EQ(hash_tensors(back), hash_tensors(a.export_tensors()));

  ParamStore<float> b;
  std::mt19937_64 other(2);
  Linear<float> lb(b, "lin", 3, 4, other);
  EXPECT_NE(b.get("lin.weight").tensor.value, a.get("lin.weight").tensor.value);
  b.import_tensors(back);
  EXPECT_EQ(b.get("lin.weight").tensor.value, a.get("lin.weight").tensor.value);

  ParamStore<float> wrong;
  Linear<float> lw(wrong, "lin", 3, 5, other);
  EXPECT_THROW(wrong.import_tensors(back), FormatError);
}

TEST(NamedTensors, GarbageFileIsFormatError) {
  const auto dir = temp_dir("named_garbage");
  {
    std::ofstream out(dir / "p.lgtp", std::ios::binary);
    out << "not a tensor file";
  }
  EXPECT_THROW(load_named_tensors(dir / "p.lgtp"), FormatError);
}

TEST(Xavier, BoundsAndDeterminism) {
  std::mt19937_64 r1(5), r2(5);
  const auto a = xavier_uniform<double>(10, 30, r1);
  const auto b = xavier_uniform<double>(10, 30, r2);
  EXPECT_EQ(a, b);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 40.0));
}
