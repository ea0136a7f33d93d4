#include "largegt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "largegt/nn/ops.hpp"
#include "largegt/rng.hpp"

namespace largegt {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RowMatrixF gather_rows(const RowMatrixF& m, std::span<const NodeId> ids) {
  RowMatrixF out(static_cast<Eigen::Index>(ids.size()), m.cols());
  for (std::size_t r = 0; r < ids.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(ids[r]));
  return out;
}

std::vector<std::int32_t> gather_labels(const LabelsAndSplits& ls, std::span<const NodeId> ids) {
  std::vector<std::int32_t> out(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) out[r] = ls.labels[ids[r]];
  return out;
}

void check_model_matches(const LargeGtModel<float>& model, const DataBundle& data) {
  const auto& c = model.config();
  if (c.in_dim != static_cast<std::size_t>(data.features.values.cols()))
    throw ValidationError("model in_dim " + std::to_string(c.in_dim) + " does not match feature width " +
                          std::to_string(data.features.values.cols()));
  if (c.k != data.local_nodes.k)
    throw ValidationError("model K " + std::to_string(c.k) + " does not match local-node sets K " +
                          std::to_string(data.local_nodes.k));
  if (c.num_classes < data.labels.num_classes)
    throw ValidationError("model has " + std::to_string(c.num_classes) + " classes, labels need " +
                          std::to_string(data.labels.num_classes));
}

// The codebook is seeded from the first B rows of a seeded permutation of all nodes.
void ensure_codebook(LargeGtModel<float>& model, const DataBundle& data, std::uint64_t seed) {
  if (model.config().variant != Variant::Full || model.codebook().initialized()) return;
  const std::size_t n = data.graph.num_nodes();
  const std::size_t b = model.config().centroids;
  if (b > n)
    throw ValidationError("B = " + std::to_string(b) + " centroids exceeds the " + std::to_string(n) +
                          " nodes available to seed the codebook");
  model.init_codebook(data.features.values, seed);
}

std::vector<std::vector<NodeId>> make_batches(std::span<const NodeId> nodes, std::size_t batch_size) {
  std::vector<std::vector<NodeId>> out;
  for (std::size_t i = 0; i < nodes.size(); i += batch_size) {
    const std::size_t end = std::min(nodes.size(), i + batch_size);
    out.emplace_back(nodes.begin() + static_cast<std::ptrdiff_t>(i), nodes.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

double train_one_batch(LargeGtModel<float>& model, const DataBundle& data, std::span<const NodeId> batch_nodes,
                       const nn::AdamConfig& adam, std::mt19937_64& rng, unsigned parallelism) {
  const TokenBatch batch =
      build_token_batch(batch_nodes, data.local_nodes, data.features, data.contexts, parallelism);
  const RowMatrixF h_in = gather_rows(data.features.values, batch_nodes);
  const auto labels = gather_labels(data.labels, batch_nodes);
  nn::Tape<float> tape;
  auto logits = model.forward(tape, batch, h_in, true, rng);
  auto loss = nn::softmax_cross_entropy(tape, logits, std::span<const std::int32_t>(labels));
  model.params().zero_grad();
  tape.backward(loss);
  model.params().adam_step(adam);
  return static_cast<double>(loss.value()(0, 0));
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

}  // namespace

void DataBundle::validate() const {
  const std::size_t n = graph.num_nodes();
  features.validate();
  if (static_cast<std::size_t>(features.values.rows()) != n)
    throw ValidationError("features have " + std::to_string(features.values.rows()) + " rows, graph has " +
                          std::to_string(n) + " nodes");
  if (contexts.num_nodes() != n || contexts.dim() != static_cast<std::size_t>(features.values.cols()))
    throw ValidationError("context features do not match the graph/feature shape");
  if (local_nodes.num_nodes != n)
    throw ValidationError("local-node sets cover " + std::to_string(local_nodes.num_nodes) +
                          " nodes, graph has " + std::to_string(n));
  labels.validate(n);
  for (const auto* split : {&labels.train, &labels.valid, &labels.test})
    for (NodeId v : *split)
      if (labels.labels[v] < 0)
        throw ValidationError("split node " + std::to_string(v) + " has no label");
}

DataBundle make_bundle(GraphCSR graph, NodeFeatures features, LabelsAndSplits labels, std::size_t k,
                       std::uint64_t sample_seed, unsigned parallelism, PadStrategy pad) {
  DataBundle d;
  d.contexts = precompute_context(graph, features, parallelism);
  d.local_nodes = sample_local_nodes(graph, k, sample_seed, parallelism, pad);
  d.graph = std::move(graph);
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.validate();
  return d;
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "valid" || s == "val") return Split::Valid;
  if (s == "test") return Split::Test;
  throw ContractViolation("unknown split '" + std::string(s) + "' (expected train, valid or test)");
}

const std::vector<NodeId>& split_nodes(const LabelsAndSplits& ls, Split s) {
  switch (s) {
    case Split::Train: return ls.train;
    case Split::Valid: return ls.valid;
    case Split::Test: return ls.test;
  }
  throw ContractViolation("bad split");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ContractViolation("batch size must be positive");
  if (!(lr >= 0.0)) throw ContractViolation("learning rate must be non-negative");
  if (eval_every == 0) throw ContractViolation("eval_every must be positive");
  if (time_budget_seconds < 0) throw ContractViolation("time budget must be non-negative");
}

ModelConfig model_config_for(const DataBundle& data, ModelConfig base) {
  base.in_dim = static_cast<std::size_t>(data.features.values.cols());
  base.num_classes = std::max<std::size_t>(data.labels.num_classes, 1);
  base.k = data.local_nodes.k;
  base.population = data.graph.num_nodes();
  return base;
}

std::vector<std::int32_t> predict(LargeGtModel<float>& model, const DataBundle& data,
                                  std::span<const NodeId> nodes, std::size_t batch_size) {
  check_model_matches(model, data);
  if (batch_size == 0) throw ContractViolation("batch size must be positive");
  std::vector<std::int32_t> out;
  out.reserve(nodes.size());
  std::mt19937_64 unused(0);
  for (std::size_t i = 0; i < nodes.size(); i += batch_size) {
    const auto chunk = nodes.subspan(i, std::min(batch_size, nodes.size() - i));
    const TokenBatch batch = build_token_batch(chunk, data.local_nodes, data.features, data.contexts);
    const RowMatrixF h_in = gather_rows(data.features.values, chunk);
    nn::Tape<float> tape(false);
    auto logits = model.forward(tape, batch, h_in, false, unused);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index best = 0;
      logits.value().row(r).maxCoeff(&best);
      out.push_back(static_cast<std::int32_t>(best));
    }
  }
  return out;
}

double accuracy(LargeGtModel<float>& model, const DataBundle& data, std::span<const NodeId> nodes,
                std::size_t batch_size) {
  if (nodes.empty()) throw ContractViolation("accuracy over an empty node set is undefined");
  const auto pred = predict(model, data, nodes, batch_size);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) hit += pred[i] == data.labels.labels[nodes[i]];
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

double evaluate(const Checkpoint& ckpt, const DataBundle& data, Split split, std::size_t batch_size) {
  const auto& nodes = split_nodes(data.labels, split);
  if (nodes.empty()) throw ContractViolation("evaluation split is empty");
  LargeGtModel<float> model(ckpt);
  if (model.config().variant == Variant::Full && !model.codebook().initialized())
    throw StateError("checkpoint of a full model carries no codebook");
  return accuracy(model, data, nodes, batch_size);
}

TrainResult train(LargeGtModel<float>& model, const DataBundle& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  check_model_matches(model, data);
  if (data.labels.train.empty()) throw ValidationError("train split is empty");
  ensure_codebook(model, data, stream_seed(cfg.seed, 0x5eedULL));

  nn::AdamConfig adam;
  adam.lr = cfg.lr;
  TrainResult result;
  result.best = model.checkpoint();
  bool have_best = false;
  std::size_t since_best = 0;
  const auto run_start = Clock::now();

  std::vector<NodeId> order(data.labels.train);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    std::mt19937_64 shuffle_rng(stream_seed(cfg.seed, 2 * epoch));
    std::mt19937_64 dropout_rng(stream_seed(cfg.seed, 2 * epoch + 1));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
      const auto chunk = std::span<const NodeId>(order).subspan(i, std::min(cfg.batch_size, order.size() - i));
      loss_sum += train_one_batch(model, data, chunk, adam, dropout_rng, cfg.parallelism) *
                  static_cast<double>(chunk.size());
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.loss = loss_sum / static_cast<double>(order.size());
    em.seconds = seconds_since(t0);
    const bool last = epoch == cfg.epochs;
    if (epoch % cfg.eval_every == 0 || last) {
      em.train_acc = accuracy(model, data, data.labels.train, cfg.batch_size);
      if (!data.labels.valid.empty()) em.valid_acc = accuracy(model, data, data.labels.valid, cfg.batch_size);
      if (!data.labels.test.empty()) em.test_acc = accuracy(model, data, data.labels.test, cfg.batch_size);
      // with no validation split the training accuracy picks the checkpoint
      const double score = em.valid_acc.value_or(*em.train_acc);
      if (!have_best || score > result.metrics.best_valid) {
        have_best = true;
        since_best = 0;
        result.metrics.best_valid = score;
        result.metrics.best_epoch = epoch;
        result.metrics.test_at_best = em.test_acc.value_or(0.0);
        result.best = model.checkpoint();
      } else {
        ++since_best;
      }
    }
    result.metrics.epochs.push_back(em);
    if (cfg.patience > 0 && since_best >= cfg.patience) {
      result.metrics.stopped_early = true;
      break;
    }
    if (cfg.time_budget_seconds > 0 && seconds_since(run_start) > cfg.time_budget_seconds) {
      result.metrics.stopped_early = !last;
      break;
    }
  }
  if (!have_best) result.best = model.checkpoint();
  return result;
}

std::string RunMetrics::to_jsonl() const {
  std::ostringstream os;
  for (const auto& e : epochs) {
    json j = {{"epoch", e.epoch}, {"loss", e.loss}, {"seconds", e.seconds}};
    j["train_acc"] = e.train_acc ? json(*e.train_acc) : json(nullptr);
    j["valid_acc"] = e.valid_acc ? json(*e.valid_acc) : json(nullptr);
    j["test_acc"] = e.test_acc ? json(*e.test_acc) : json(nullptr);
    os << j.dump() << '\n';
  }
  return os.str();
}

std::string RunMetrics::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(7) << "epoch" << std::setw(10) << "loss" << std::setw(10) << "train"
     << std::setw(10) << "valid" << std::setw(10) << "test" << "seconds\n";
  for (const auto& e : epochs) {
    os << std::left << std::setw(7) << e.epoch << std::setw(10) << std::fixed << std::setprecision(4) << e.loss
       << std::setw(10) << fmt_opt(e.train_acc) << std::setw(10) << fmt_opt(e.valid_acc) << std::setw(10)
       << fmt_opt(e.test_acc) << std::setprecision(3) << e.seconds << '\n';
  }
  os << "best epoch " << best_epoch << ": valid " << std::setprecision(4) << best_valid << ", test "
     << test_at_best << (stopped_early ? " (stopped early)" : "") << '\n';
  return os.str();
}

std::string EpochTimeReport::to_json() const {
  json j = {{"mode", mode == BenchMode::Train ? "train" : "forward"},
            {"num_nodes", num_nodes},
            {"batches_per_epoch", batches_per_epoch},
            {"epoch_seconds", epoch_seconds},
            {"mean_seconds", mean_seconds},
            {"stdev_seconds", stdev_seconds},
            {"mean_batch_seconds", mean_batch_seconds}};
  return j.dump(2);
}

EpochTimeReport benchmark_epoch_time(LargeGtModel<float>& model, const DataBundle& data, const BenchConfig& cfg) {
  check_model_matches(model, data);
  if (cfg.epochs == 0) throw ContractViolation("benchmark needs at least one timed epoch");
  if (cfg.batch_size == 0) throw ContractViolation("batch size must be positive");
  if (data.labels.train.empty()) throw ValidationError("train split is empty");
  ensure_codebook(model, data, stream_seed(cfg.seed, 0x5eedULL));

  std::vector<NodeId> order(data.labels.train);
  std::mt19937_64 shuffle_rng(stream_seed(cfg.seed, 0xbe7cULL));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  auto batches = make_batches(order, cfg.batch_size);
  if (cfg.max_batches > 0 && batches.size() > cfg.max_batches) batches.resize(cfg.max_batches);

  EpochTimeReport rep;
  rep.mode = cfg.mode;
  rep.num_nodes = data.graph.num_nodes();
  rep.batches_per_epoch = batches.size();

  std::vector<TokenBatch> prebuilt;
  std::vector<RowMatrixF> h_ins;
  if (cfg.mode == BenchMode::Forward) {
    for (const auto& b : batches) {
      prebuilt.push_back(build_token_batch(b, data.local_nodes, data.features, data.contexts));
      h_ins.push_back(gather_rows(data.features.values, b));
    }
  }

  nn::AdamConfig adam;
  adam.lr = cfg.lr;
  std::mt19937_64 rng(stream_seed(cfg.seed, 0xd209ULL));
  for (std::size_t e = 0; e < cfg.warmup_epochs + cfg.epochs; ++e) {
    const auto t0 = Clock::now();
    if (cfg.mode == BenchMode::Train) {
      for (const auto& b : batches) train_one_batch(model, data, b, adam, rng, 1);
    } else {
      for (std::size_t i = 0; i < prebuilt.size(); ++i) {
        nn::Tape<float> tape(false);
        auto logits = model.forward(tape, prebuilt[i], h_ins[i], false, rng);
        if (!logits.value().allFinite()) throw Error("non-finite logits during benchmark");
      }
    }
    if (e >= cfg.warmup_epochs) rep.epoch_seconds.push_back(seconds_since(t0));
  }
  const double n = static_cast<double>(rep.epoch_seconds.size());
  rep.mean_seconds = std::accumulate(rep.epoch_seconds.begin(), rep.epoch_seconds.end(), 0.0) / n;
  double var = 0;
  for (double s : rep.epoch_seconds) var += (s - rep.mean_seconds) * (s - rep.mean_seconds);
  rep.stdev_seconds = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  rep.mean_batch_seconds = batches.empty() ? 0.0 : rep.mean_seconds / static_cast<double>(batches.size());
  return rep;
}

std::vector<SweepRow> sweep_k(const GraphCSR& graph, const NodeFeatures& features, const LabelsAndSplits& labels,
                              const ModelConfig& base, const TrainConfig& train_cfg,
                              std::span<const std::size_t> k_values, std::uint64_t sample_seed,
                              unsigned parallelism, PadStrategy pad) {
  if (k_values.empty()) throw ContractViolation("K sweep needs at least one value");
  DataBundle data;
  data.contexts = precompute_context(graph, features, parallelism);
  data.graph = graph;
  data.features = features;
  data.labels = labels;
  std::vector<SweepRow> rows;
  for (std::size_t k : k_values) {
    data.local_nodes = sample_local_nodes(graph, k, sample_seed, parallelism, pad);
    data.validate();
    LargeGtModel<float> model(model_config_for(data, base));
    const auto res = train(model, data, train_cfg);
    SweepRow row;
    row.k = k;
    row.best_valid = res.metrics.best_valid;
    row.test_acc = res.metrics.test_at_best;
    row.epochs_run = res.metrics.epochs.size();
    double total = 0;
    for (const auto& e : res.metrics.epochs) total += e.seconds;
    row.epoch_seconds_mean = row.epochs_run ? total / static_cast<double>(row.epochs_run) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_table(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "K" << std::setw(10) << "test" << std::setw(10) << "valid" << std::setw(8)
     << "epochs" << "epoch_s\n";
  for (const auto& r : rows)
    os << std::left << std::setw(6) << r.k << std::setw(10) << std::fixed << std::setprecision(4) << r.test_acc
       << std::setw(10) << r.best_valid << std::setw(8) << r.epochs_run << std::setprecision(4)
       << r.epoch_seconds_mean << '\n';
  return os.str();
}

}  // namespace largegt
