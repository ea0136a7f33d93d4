#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "largegt/context.hpp"
#include "largegt/model.hpp"
#include "largegt/sampler.hpp"

namespace largegt {

/// Everything a run consumes, already precomputed.
struct DataBundle {
  GraphCSR graph;
  NodeFeatures features;
  ContextFeatures contexts;
  LocalNodeSets local_nodes;
  LabelsAndSplits labels;

  /// Throws ValidationError describing the first inconsistency.
  void validate() const;
};

/// Runs the offline steps (contexts, local-node sampling) for a graph.
DataBundle make_bundle(GraphCSR graph, NodeFeatures features, LabelsAndSplits labels, std::size_t k,
                       std::uint64_t sample_seed, unsigned parallelism = 1,
                       PadStrategy pad = PadStrategy::IncludeThenPad);

enum class Split { Train, Valid, Test };
Split parse_split(std::string_view s);
const std::vector<NodeId>& split_nodes(const LabelsAndSplits& ls, Split s);

struct TrainConfig {
  std::size_t batch_size = 1024;
  double lr = 1e-3;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::size_t patience = 0;  // validations without improvement; 0 disables
  std::size_t eval_every = 1;
  double time_budget_seconds = 0;  // 0 disables the wall-clock stop
  unsigned parallelism = 1;        // batch assembly only; math stays single-threaded

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0;
  std::optional<double> train_acc;
  std::optional<double> valid_acc;
  std::optional<double> test_acc;
  double seconds = 0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
  double best_valid = 0;
  double test_at_best = 0;
  bool stopped_early = false;

  /// One JSON object per line: epoch, loss, train/valid/test acc, seconds.
  std::string to_jsonl() const;
  std::string to_table() const;
};

struct TrainResult {
  Checkpoint best;
  RunMetrics metrics;
};

/// Mini-batch Adam training over the train split; the checkpoint with the
/// best validation accuracy is kept. Deterministic for a fixed seed.
TrainResult train(LargeGtModel<float>& model, const DataBundle& data, const TrainConfig& cfg);

/// Builds a model config matching the data (in_dim, num_classes, K, N).
ModelConfig model_config_for(const DataBundle& data, ModelConfig base);

/// Class predictions in eval mode. Never mutates the model.
std::vector<std::int32_t> predict(LargeGtModel<float>& model, const DataBundle& data,
                                  std::span<const NodeId> nodes, std::size_t batch_size = 1024);
double accuracy(LargeGtModel<float>& model, const DataBundle& data, std::span<const NodeId> nodes,
                std::size_t batch_size = 1024);

/// Accuracy of a checkpoint on one split. Throws ContractViolation on an
/// empty split.
double evaluate(const Checkpoint& ckpt, const DataBundle& data, Split split, std::size_t batch_size = 1024);

enum class BenchMode { Train, Forward };

struct BenchConfig {
  BenchMode mode = BenchMode::Train;
  std::size_t epochs = 3;
  std::size_t warmup_epochs = 1;
  std::size_t batch_size = 1024;
  // Batches per timed epoch; 0 means a full pass over the train split.
  std::size_t max_batches = 0;
  std::uint64_t seed = 0;
  double lr = 1e-3;
};

struct EpochTimeReport {
  BenchMode mode = BenchMode::Train;
  std::size_t num_nodes = 0;
  std::size_t batches_per_epoch = 0;
  std::vector<double> epoch_seconds;
  double mean_seconds = 0;
  double stdev_seconds = 0;
  double mean_batch_seconds = 0;

  std::string to_json() const;
};

/// Times whole epochs (Train) or eval forwards on pre-built batches
/// (Forward, token assembly excluded). Warmup epochs are not reported.
EpochTimeReport benchmark_epoch_time(LargeGtModel<float>& model, const DataBundle& data,
                                     const BenchConfig& cfg);

struct SweepRow {
  std::size_t k = 0;
  double test_acc = 0;
  double best_valid = 0;
  double epoch_seconds_mean = 0;
  std::size_t epochs_run = 0;
};

/// For each K: resample local nodes, train a fresh model, report accuracy
/// and mean epoch time.
std::vector<SweepRow> sweep_k(const GraphCSR& graph, const NodeFeatures& features, const LabelsAndSplits& labels,
                              const ModelConfig& base, const TrainConfig& train_cfg,
                              std::span<const std::size_t> k_values, std::uint64_t sample_seed,
                              unsigned parallelism = 1, PadStrategy pad = PadStrategy::IncludeThenPad);

std::string sweep_table(std::span<const SweepRow> rows);

}  // namespace largegt
