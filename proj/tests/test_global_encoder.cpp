#include <gtest/gtest.h>

#include <set>

#include "largegt/global_encoder.hpp"
#include "test_util.hpp"

using namespace largegt;
using namespace largegt::nn;
using largegt::testing::random_matrix;
using MatD = Matrix<double>;

namespace {

GlobalEncoderConfig config(std::size_t in_dim, std::size_t dim, std::size_t b) {
  GlobalEncoderConfig c;
  c.in_dim = in_dim;
  c.dim = dim;
  c.centroids = b;
  c.population = 100;
  return c;
}

Codebook<double> manual_codebook(const MatD& centroids, const std::vector<double>& counts) {
  Codebook<double> cb;
  cb.centroids = centroids;
  cb.ema_counts = Eigen::Map<const Eigen::VectorXd>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  cb.ema_sums = cb.ema_counts.asDiagonal() * centroids;
  return cb;
}

// Makes MLP_a output the constant row `x` for every input.
void pin_embedding(ParamStore<double>& store, const std::string& prefix, const MatD& x) {
  auto& w = store.get(prefix + ".mlp_a.fc2.weight").tensor.value;
  w.setZero();
  store.get(prefix + ".mlp_a.fc2.bias").tensor.value = x;
}

MatD apply_mlp_b(const GlobalEncoder<double>& enc, const MatD& in) {
  Tape<double> tape(false);
  return enc.mlp_b()(tape, tape.constant(in)).value();
}

}  // namespace

TEST(GlobalEncoder, SingleCentroidTakesAllWeight) {
  std::mt19937_64 rng(1);
  ParamStore<double> store;
  const GlobalEncoder<double> enc(store, "g", config(3, 4, 1), rng);
  auto cb = manual_codebook(random_matrix(1, 4, rng), {1.0});
  Tape<double> tape(false);
  const MatD h = random_matrix(5, 3, rng);
  const MatD out = enc.forward(tape, tape.constant(h), cb, false).value();
  const MatD expect = apply_mlp_b(enc, cb.centroids * store.get("g.w_v.weight").tensor.value);
  for (Eigen::Index r = 0; r < 5; ++r) EXPECT_LT((out.row(r) - expect.row(0)).norm(), 1e-12);
}

TEST(GlobalEncoder, TwoCentroidWorkedExample) {
  std::mt19937_64 rng(2);
  ParamStore<double> store;
  const GlobalEncoder<double> enc(store, "g", config(2, 2, 2), rng);
  for (const char* n : {"g.w_q.weight", "g.w_k.weight", "g.w_v.weight"})
    store.get(n).tensor.value = MatD::Identity(2, 2);
  MatD q(1, 2);
  q << 1.0, 0.0;
  pin_embedding(store, "g", q);
  auto cb = manual_codebook(MatD::Identity(2, 2), {1.0, 1.0});

  const double a = std::exp(1.0 / std::sqrt(2.0));
  const double w0 = a / (a + 1.0);
  EXPECT_NEAR(w0, 0.6698, 1e-4);
  MatD attended(1, 2);
  attended << w0, 1.0 - w0;

  Tape<double> tape(false);
  const MatD out = enc.forward(tape, tape.constant(random_matrix(1, 2, rng)), cb, false).value();
  EXPECT_LT((out - apply_mlp_b(enc, attended)).norm(), 1e-12);
}

TEST(GlobalEncoder, GradientCheckWithFrozenCodebook) {
  std::mt19937_64 rng(3);
  ParamStore<double> store;
  const GlobalEncoder<double> enc(store, "g", config(3, 4, 3), rng);
  auto cb = manual_codebook(random_matrix(3, 4, rng), {2.0, 0.5, 1.0});
  const MatD h = random_matrix(5, 3, rng);
  const double err = largegt::testing::param_gradient_check(store, [&](Tape<double>& t) {
    return largegt::testing::reduce(t, enc.forward(t, t.constant(h), cb, false));
  });
  EXPECT_LT(err, 1e-4);
  const double input_err = largegt::testing::gradient_check(
      [&](Tape<double>& t, const std::vector<Var<double>>& v) {
        return largegt::testing::reduce(t, enc.forward(t, v[0], cb, false));
      },
      {h});
  EXPECT_LT(input_err, 1e-4);
}

TEST(GlobalEncoder, BiasFavorsLargerCount) {
  std::mt19937_64 rng(4);
  ParamStore<double> store;
  const GlobalEncoder<double> enc(store, "g", config(2, 2, 2), rng);
  store.get("g.w_k.weight").tensor.value.setZero();  // identical (zero) keys
  store.get("g.w_v.weight").tensor.value = MatD::Identity(2, 2);
  auto cb = manual_codebook(MatD::Identity(2, 2), {3.0, 1.0});
  const auto bias = cb.log_count_bias(100);
  EXPECT_NEAR(bias[0] - bias[1], std::log(3.0), 1e-12);

  Tape<double> tape(false);
  const MatD out = enc.forward(tape, tape.constant(random_matrix(3, 2, rng)), cb, false).value();
  MatD attended(1, 2);
  attended << 0.75, 0.25;
  const MatD expect = apply_mlp_b(enc, attended);
  for (Eigen::Index r = 0; r < 3; ++r) EXPECT_LT((out.row(r) - expect).norm(), 1e-12);
}

TEST(GlobalEncoder, EvalIsPureTrainingUpdatesCodebook) {
  std::mt19937_64 rng(5);
  ParamStore<double> store;
  const GlobalEncoder<double> enc(store, "g", config(3, 4, 2), rng);
  const MatD h = random_matrix(8, 3, rng);
  auto cb = enc.init_codebook(h, 7);
  const MatD before = cb.centroids;
  Tape<double> t1(false), t2(false);
  const MatD a = enc.forward(t1, t1.constant(h), cb, false).value();
  const MatD b = enc.forward(t2, t2.constant(h), cb, false).value();
  EXPECT_EQ(a, b);
  EXPECT_EQ(cb.centroids, before);
  Tape<double> t3;
  enc.forward(t3, t3.constant(h), cb, true);
  EXPECT_NE(cb.centroids, before);
  EXPECT_EQ(cb.assignments.size(), 8u);
  for (auto p : cb.assignments) EXPECT_LT(p, 2u);
}

TEST(GlobalEncoder, UninitializedCodebookIsStateError) {
  std::mt19937_64 rng(6);
  ParamStore<double> store;
  const GlobalEncoder<double> enc(store, "g", config(3, 4, 2), rng);
  Codebook<double> cb;
  Tape<double> tape(false);
  EXPECT_THROW(enc.forward(tape, tape.constant(MatD::Ones(1, 3)), cb, false), StateError);
  EXPECT_THROW(cb.log_count_bias(10), StateError);
}

TEST(Codebook, ZeroDecayJumpsToBatchMeans) {
  MatD init(2, 2);
  init << 0.0, 0.0, 10.0, 10.0;
  auto cb = manual_codebook(init, {1.0, 1.0});
  cb.decay = 0.0;
  MatD x(4, 2);
  x << 1.0, 0.0, 0.0, 1.0, 9.0, 9.0, 11.0, 12.0;
  cb.ema_update(x);
  EXPECT_EQ(cb.assignments, (std::vector<std::uint32_t>{0, 0, 1, 1}));
  MatD expect(2, 2);
  expect << 0.5, 0.5, 10.0, 10.5;
  EXPECT_LT((cb.centroids - expect).norm(), 1e-12);
  EXPECT_EQ(cb.ema_counts, Eigen::Vector2d(2.0, 2.0));
}

TEST(Codebook, ConvergesToClusterMeans) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  MatD means(2, 2);
  means << 0.0, 0.0, 10.0, 0.0;  // 10 sigma apart
  MatD init(2, 2);
  init << 1.0, 1.0, 8.0, -1.0;
  auto cb = manual_codebook(init, {1.0, 1.0});
  cb.decay = 0.99;
  for (int batch = 0; batch < 200; ++batch) {
    MatD x(64, 2);
    for (Eigen::Index r = 0; r < 64; ++r) x.row(r) = means.row(r % 2) + Eigen::RowVector2d(noise(rng), noise(rng));
    cb.ema_update(x);
  }
  for (Eigen::Index b = 0; b < 2; ++b) EXPECT_LT((cb.centroids.row(b) - means.row(b)).norm(), 0.1) << b;
}

TEST(Codebook, EmptyClusterDecaysWithoutBlowup) {
  MatD init(2, 1);
  init << 0.0, 100.0;
  auto cb = manual_codebook(init, {1.0, 1.0});
  cb.decay = 0.5;
  MatD x = MatD::Zero(3, 1);
  for (int i = 0; i < 60; ++i) cb.ema_update(x);
  EXPECT_TRUE(cb.centroids.allFinite());
  EXPECT_TRUE(cb.ema_counts.allFinite());
  EXPECT_LT(cb.ema_counts(1), 1e-15);
  EXPECT_NEAR(cb.centroids(1, 0), 100.0, 1e-9);
  const auto bias = cb.log_count_bias(10);
  for (double b : bias) EXPECT_TRUE(std::isfinite(b));
}

TEST(Codebook, InitPicksDistinctRowsDeterministically) {
  std::mt19937_64 rng(8);
  const MatD sample = random_matrix(20, 3, rng);
  const auto a = Codebook<double>::init(20, 0.9, sample, 3);
  const auto b = Codebook<double>::init(20, 0.9, sample, 3);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.ema_sums, a.centroids);
  EXPECT_EQ(a.ema_counts, Eigen::VectorXd::Ones(20));
  std::set<std::vector<double>> rows, sample_rows;
  for (Eigen::Index r = 0; r < 20; ++r) {
    rows.insert({a.centroids(r, 0), a.centroids(r, 1), a.centroids(r, 2)});
    sample_rows.insert({sample(r, 0), sample(r, 1), sample(r, 2)});
  }
  EXPECT_EQ(rows, sample_rows);  // B = n gives a permutation
  EXPECT_NE(Codebook<double>::init(5, 0.9, sample, 4).centroids, Codebook<double>::init(5, 0.9, sample, 3).centroids);
  EXPECT_THROW(Codebook<double>::init(21, 0.9, sample, 3), ContractViolation);
}

TEST(Codebook, TensorRoundTrip) {
  std::mt19937_64 rng(9);
  auto cb = Codebook<double>::init(4, 0.95, random_matrix(10, 3, rng), 1);
  cb.ema_update(random_matrix(6, 3, rng));
  Codebook<double> back;
  back.import_tensors(cb.export_tensors("cb"), "cb");
  EXPECT_LT((back.centroids - cb.centroids).norm(), 1e-5);
  EXPECT_NEAR(back.decay, 0.95, 1e-6);
}
