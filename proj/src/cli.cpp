#include "largegt/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "largegt/context.hpp"
#include "largegt/error.hpp"
#include "largegt/parallel.hpp"
#include "largegt/sampler.hpp"
#include "largegt/synthetic.hpp"
#include "largegt/tokens.hpp"
#include "largegt/trainer.hpp"

#ifndef LARGEGT_VERSION
#define LARGEGT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace largegt {

std::string tool_version() { return LARGEGT_VERSION; }

namespace {

struct DataOpts {
  std::string graph, features, labels, splits, pe_file, contexts, local_nodes;
  std::size_t num_nodes = 0;
  bool symmetrize = true;
};

struct ModelOpts {
  std::string variant = "full";
  std::size_t k = 100;
  std::size_t b = 4096;
  std::size_t dim = 256;
  std::size_t heads = 2;
  std::size_t layers = 1;
  double dropout = 0.5;
  std::string readout = "mean";
  double decay = 0.99;
};

struct TrainOpts {
  std::size_t epochs = 100;
  std::size_t batch_size = 1024;
  double lr = 1e-3;
  std::size_t patience = 0;
  std::size_t eval_every = 1;
  double time_budget = 0;
};

struct CommonOpts {
  std::uint64_t seed = 0;
  unsigned parallelism = 0;
  std::string out_dir = ".";
  std::string pad_strategy = "include-then-pad";
};

struct SynthOpts {
  std::string kind = "sbm";
  std::size_t nodes = 1000;
  std::size_t blocks = 2;
  double p_intra = 0.2;
  double p_inter = 0.01;
  double noise = 0.5;
  std::size_t feature_dim = 0;
  std::size_t edges = 0;
  std::size_t attach = 3;
  int radius = 3;
};

struct BenchOpts {
  std::string mode = "train";
  std::size_t epochs = 3;
  std::size_t warmup = 1;
  std::size_t max_batches = 0;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

void add_data_options(CLI::App* sub, DataOpts& d, bool need_labels) {
  auto* g = sub->add_option("--graph", d.graph, "Graph: binary snapshot or text edge list");
  auto* f = sub->add_option("--features", d.features, "Node features (LGTF binary or .csv)");
  g->required();
  f->required();
  sub->add_option("--num-nodes", d.num_nodes, "Node count for text edge lists (default: feature rows)");
  sub->add_option("--symmetrize", d.symmetrize, "Close text edge lists under reversal")->default_val(true);
  sub->add_option("--pe-file", d.pe_file, "Precomputed positional encodings appended to the features");
  sub->add_option("--contexts", d.contexts, "Reuse a precomputed context file");
  sub->add_option("--local-nodes", d.local_nodes, "Reuse a precomputed local-node file");
  if (need_labels) {
    sub->add_option("--labels", d.labels, "Per-node class ids, -1 for unlabeled")->required();
    sub->add_option("--splits", d.splits, "Directory with train.txt, valid.txt, test.txt")->required();
  }
}

void add_common(CLI::App* sub, CommonOpts& c, bool with_pad) {
  sub->add_option("--seed", c.seed, "Global seed")->capture_default_str();
  sub->add_option("--parallelism", c.parallelism, "Worker threads (0: LARGEGT_THREADS or all cores)")
      ->capture_default_str();
  sub->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  if (with_pad)
    sub->add_option("--pad-strategy", c.pad_strategy, "Padding rule for small neighborhoods")
        ->check(CLI::IsMember({"include-then-pad", "pure-replacement"}))
        ->capture_default_str();
}

void add_model_options(CLI::App* sub, ModelOpts& m) {
  sub->add_option("--variant", m.variant, "local or full")->check(CLI::IsMember({"local", "full"}))
      ->capture_default_str();
  sub->add_option("--k", m.k, "Local nodes per seed node (K)")->capture_default_str();
  sub->add_option("--b-centroids", m.b, "Codebook size (B)")->capture_default_str();
  sub->add_option("--dim", m.dim, "Hidden dimension")->capture_default_str();
  sub->add_option("--heads", m.heads, "Attention heads in the local encoder")->capture_default_str();
  sub->add_option("--local-layers", m.layers, "Local encoder layers")->capture_default_str();
  sub->add_option("--dropout", m.dropout, "Dropout rate")->capture_default_str();
  sub->add_option("--readout", m.readout, "mean or seed")->check(CLI::IsMember({"mean", "seed", "seed-token"}))
      ->capture_default_str();
  sub->add_option("--codebook-decay", m.decay, "EMA decay of the codebook")->capture_default_str();
}

void add_train_options(CLI::App* sub, TrainOpts& t) {
  sub->add_option("--epochs", t.epochs, "Maximum epochs")->capture_default_str();
  sub->add_option("--batch-size", t.batch_size, "Mini-batch size")->capture_default_str();
  sub->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--patience", t.patience, "Early-stopping patience in validations (0: off)")
      ->capture_default_str();
  sub->add_option("--eval-every", t.eval_every, "Epochs between evaluations")->capture_default_str();
  sub->add_option("--time-budget", t.time_budget, "Wall-clock budget in seconds (0: off)")
      ->capture_default_str();
}

NodeFeatures load_any_features(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return load_features_csv(path);
  return load_features(path);
}

struct Loaded {
  GraphCSR graph;
  NodeFeatures features;
  LabelsAndSplits labels;
};

Loaded load_inputs(const DataOpts& d, bool need_labels) {
  Loaded l;
  l.features = load_any_features(d.features);
  if (!d.pe_file.empty()) l.features = append_columns(l.features, load_any_features(d.pe_file));
  const std::size_t n = d.num_nodes ? d.num_nodes : l.features.num_nodes();
  l.graph = load_graph_any(d.graph, n, d.symmetrize);
  if (l.graph.num_nodes() != l.features.num_nodes())
    throw ValidationError("graph has " + std::to_string(l.graph.num_nodes()) + " nodes, features have " +
                          std::to_string(l.features.num_nodes()) + " rows");
  l.features.validate();
  if (need_labels) l.labels = load_labels_and_splits(d.labels, d.splits);
  return l;
}

DataBundle bundle_from(Loaded l, const DataOpts& d, std::size_t k, const CommonOpts& c, unsigned par) {
  DataBundle b;
  b.contexts = d.contexts.empty() ? precompute_context(l.graph, l.features, par)
                                  : load_context(d.contexts, l.graph.num_nodes());
  if (!d.local_nodes.empty()) {
    b.local_nodes = load_local_nodes(d.local_nodes);
    if (b.local_nodes.k != k)
      throw ValidationError("local-node file has K = " + std::to_string(b.local_nodes.k) + ", expected " +
                            std::to_string(k));
  } else {
    b.local_nodes = sample_local_nodes(l.graph, k, c.seed, par, parse_pad_strategy(c.pad_strategy));
  }
  b.graph = std::move(l.graph);
  b.features = std::move(l.features);
  b.labels = std::move(l.labels);
  b.validate();
  return b;
}

ModelConfig model_config(const ModelOpts& m, const CommonOpts& c) {
  ModelConfig mc;
  mc.variant = parse_variant(m.variant);
  mc.k = m.k;
  mc.centroids = m.b;
  mc.dim = m.dim;
  mc.heads = m.heads;
  mc.local_layers = m.layers;
  mc.dropout = m.dropout;
  mc.readout = parse_readout(m.readout);
  mc.codebook_decay = m.decay;
  mc.init_seed = c.seed;
  return mc;
}

TrainConfig train_config(const TrainOpts& t, const CommonOpts& c, unsigned par) {
  TrainConfig tc;
  tc.epochs = t.epochs;
  tc.batch_size = t.batch_size;
  tc.lr = t.lr;
  tc.patience = t.patience;
  tc.eval_every = t.eval_every;
  tc.time_budget_seconds = t.time_budget;
  tc.seed = c.seed;
  tc.parallelism = par;
  return tc;
}

// Writes the resolved options of `sub` plus a manifest pointing at every artifact.
void write_manifest(CLI::App* sub, const fs::path& out_dir, const std::map<std::string, fs::path>& artifacts) {
  // Keys live in a [command] section so the top-level --config can replay them.
  std::istringstream raw(sub->config_to_str(true, false));
  std::string config_text = "[" + sub->get_name() + "]\n";
  for (std::string line; std::getline(raw, line);)
    if (!line.ends_with("=\"\"")) config_text += line + "\n";
  const fs::path config_path = out_dir / (sub->get_name() + ".config.toml");
  write_text(config_path, config_text);
  json j;
  j["tool"] = "largegt";
  j["version"] = tool_version();
  j["command"] = sub->get_name();
  j["config_file"] = fs::absolute(config_path).string();
  j["config_hash"] = hex64(fnv1a(config_text));
  json arts = json::object();
  for (const auto& [name, path] : artifacts) {
    if (!fs::exists(path)) throw Error("artifact '" + name + "' was not written: " + path.string());
    arts[name] = fs::absolute(path).string();
  }
  j["artifacts"] = arts;
  write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

// `--manifest m.json` becomes `--config <resolved config of that run>`.
std::vector<std::string> expand_manifest(std::vector<std::string> args) {
  for (std::size_t i = 1; i + 1 < args.size(); ++i) {
    if (args[i] != "--manifest") continue;
    json j;
    try {
      j = json::parse(read_text(args[i + 1]));
    } catch (const json::exception& e) {
      throw ValidationError("manifest " + args[i + 1] + " is not valid JSON: " + e.what());
    }
    if (!j.contains("config_file")) throw ValidationError("manifest has no config_file entry");
    args[i] = "--config";
    args[i + 1] = j["config_file"].get<std::string>();
    break;
  }
  return args;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& raw_args) {
  CLI::App app{"LargeGT graph transformer: preprocessing, training and evaluation", "largegt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());
  app.set_config("--config", "", "TOML config file with one [command] section; flags take precedence");
  app.fallthrough();

  DataOpts data;
  ModelOpts model;
  TrainOpts trn;
  CommonOpts common;
  SynthOpts synth;
  BenchOpts bench;
  std::string edges_path, checkpoint_dir, split = "test", manifest, dump_batch;
  std::vector<std::size_t> sweep_values{20, 40, 50, 60, 80, 100, 150, 200};

  auto* ingest = app.add_subcommand("ingest", "Convert a text edge list into a binary CSR snapshot");
  ingest->add_option("--edges", edges_path, "Whitespace separated 'src dst' pairs")->required();
  ingest->add_option("--num-nodes", data.num_nodes, "Number of nodes")->required();
  ingest->add_option("--symmetrize", data.symmetrize, "Close the edge set under reversal")->default_val(true);
  add_common(ingest, common, false);

  auto* context = app.add_subcommand("precompute-context", "Compute 1-hop and 2-hop context features");
  add_data_options(context, data, false);
  add_common(context, common, false);

  auto* sample = app.add_subcommand("sample-local-nodes", "Sample K local nodes per node");
  sample->add_option("--graph", data.graph, "Graph snapshot or edge list")->required();
  sample->add_option("--num-nodes", data.num_nodes, "Node count for text edge lists");
  sample->add_option("--symmetrize", data.symmetrize, "Close text edge lists under reversal")->default_val(true);
  sample->add_option("--k", model.k, "Local nodes per seed node (K)")->required();
  add_common(sample, common, true);

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic dataset in the ingest formats");
  gen->add_option("--kind", synth.kind, "sbm, path, star, random, power-law or distance")
      ->check(CLI::IsMember({"sbm", "path", "star", "random", "power-law", "distance"}))
      ->capture_default_str();
  gen->add_option("--nodes", synth.nodes, "Number of nodes")->capture_default_str();
  gen->add_option("--blocks", synth.blocks, "SBM blocks")->capture_default_str();
  gen->add_option("--p-intra", synth.p_intra, "SBM intra-block edge probability")->capture_default_str();
  gen->add_option("--p-inter", synth.p_inter, "SBM inter-block edge probability")->capture_default_str();
  gen->add_option("--noise", synth.noise, "Feature noise sigma")->capture_default_str();
  gen->add_option("--feature-dim", synth.feature_dim, "Feature width (0: blocks, or 4 for graph-only kinds)");
  gen->add_option("--edges", synth.edges, "Edge count for random graphs (default 4n)");
  gen->add_option("--attach", synth.attach, "Edges per new node for power-law graphs")->capture_default_str();
  gen->add_option("--radius", synth.radius, "Radius of the distance-label task")->capture_default_str();
  add_common(gen, common, false);

  auto* train_cmd = app.add_subcommand("train", "Train a model and keep the best-validation checkpoint");
  add_data_options(train_cmd, data, true);
  add_model_options(train_cmd, model);
  add_train_options(train_cmd, trn);
  add_common(train_cmd, common, true);
  app.add_option("--manifest", manifest, "Re-run with the resolved config of an earlier run")
      ->configurable(false);
  train_cmd->add_option("--dump-batch", dump_batch, "Write the first training batch as CSV and exit")
      ->configurable(false);

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a checkpoint on one split");
  add_data_options(eval_cmd, data, true);
  eval_cmd->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
  eval_cmd->add_option("--split", split, "train, valid or test")
      ->check(CLI::IsMember({"train", "valid", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--batch-size", trn.batch_size, "Evaluation batch size")->capture_default_str();
  add_common(eval_cmd, common, true);

  auto* bench_cmd = app.add_subcommand("bench", "Time training epochs or forward passes");
  add_data_options(bench_cmd, data, true);
  add_model_options(bench_cmd, model);
  bench_cmd->add_option("--batch-size", trn.batch_size, "Mini-batch size")->capture_default_str();
  bench_cmd->add_option("--mode", bench.mode, "train or forward")->check(CLI::IsMember({"train", "forward"}))
      ->capture_default_str();
  bench_cmd->add_option("--bench-epochs", bench.epochs, "Timed epochs")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed warmup epochs")->capture_default_str();
  bench_cmd->add_option("--max-batches", bench.max_batches, "Batches per epoch (0: full pass)")
      ->capture_default_str();
  add_common(bench_cmd, common, true);

  auto* sweep_cmd = app.add_subcommand("sweep-k", "Train once per K value and tabulate accuracy and epoch time");
  add_data_options(sweep_cmd, data, true);
  add_model_options(sweep_cmd, model);
  add_train_options(sweep_cmd, trn);
  sweep_cmd->add_option("--values", sweep_values, "Comma separated K values")->delimiter(',')
      ->capture_default_str();
  add_common(sweep_cmd, common, true);

  std::vector<std::string> args;
  try {
    args = expand_manifest(raw_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    if (code == 0) return kExitOk;
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  }

  try {
    const unsigned par = resolve_parallelism(common.parallelism);
    const fs::path out(common.out_dir);
    fs::create_directories(out);

    if (*ingest) {
      const auto g = ingest_edge_list(edges_path, data.num_nodes, data.symmetrize);
      save_graph(g, out / "graph.lgtg");
      std::cout << "graph: " << g.num_nodes() << " nodes, " << g.num_edges() << " directed edges\n";
      write_manifest(ingest, out, {{"graph", out / "graph.lgtg"}});
    } else if (*context) {
      const auto l = load_inputs(data, false);
      save_context(precompute_context(l.graph, l.features, par), out / "contexts.lgtx");
      write_manifest(context, out, {{"contexts", out / "contexts.lgtx"}});
    } else if (*sample) {
      if (model.k < 1) throw ValidationError("--k must be at least 1");
      const auto g = load_graph_any(data.graph, data.num_nodes, data.symmetrize);
      save_local_nodes(sample_local_nodes(g, model.k, common.seed, par, parse_pad_strategy(common.pad_strategy)),
                       out / "local_nodes.lgts");
      write_manifest(sample, out, {{"local_nodes", out / "local_nodes.lgts"}});
    } else if (*gen) {
      SyntheticDataset ds;
      const std::size_t fdim = synth.feature_dim ? synth.feature_dim : 4;
      if (synth.kind == "sbm") {
        SbmSpec spec;
        spec.num_nodes = synth.nodes;
        spec.num_blocks = synth.blocks;
        spec.p_intra = synth.p_intra;
        spec.p_inter = synth.p_inter;
        spec.noise_sigma = synth.noise;
        spec.feature_dim = synth.feature_dim;
        spec.seed = common.seed;
        ds = generate_sbm(spec);
      } else {
        GraphCSR g;
        if (synth.kind == "path") g = path_graph(synth.nodes);
        else if (synth.kind == "star") g = star_graph(synth.nodes > 0 ? synth.nodes - 1 : 0);
        else if (synth.kind == "power-law") g = power_law_graph(synth.nodes, synth.attach, common.seed);
        else g = random_graph(synth.nodes, synth.edges ? synth.edges : 4 * synth.nodes, common.seed);
        if (synth.kind == "distance") {
          ds = generate_distance_label_task(g, synth.radius, common.seed, fdim);
        } else {
          // graph-only kinds get random features and balanced random labels
          ds.graph = std::move(g);
          ds.features = gaussian_features(ds.graph.num_nodes(), fdim, common.seed);
          ds.labels.labels.resize(ds.graph.num_nodes());
          for (std::size_t v = 0; v < ds.labels.labels.size(); ++v)
            ds.labels.labels[v] = static_cast<std::int32_t>(v % 2);
          ds.labels.num_classes = 2;
          assign_random_splits(ds.labels, 0.6, 0.2, common.seed);
        }
      }
      write_dataset(ds, out);
      std::cout << "wrote " << ds.graph.num_nodes() << " nodes to " << out.string() << '\n';
      write_manifest(gen, out,
                     {{"graph", out / "graph.lgtg"},
                      {"features", out / "features.lgtf"},
                      {"labels", out / "labels.txt"},
                      {"splits", out / "splits"}});
    } else if (*train_cmd) {
      const auto data_bundle = bundle_from(load_inputs(data, true), data, model.k, common, par);
      if (!dump_batch.empty()) {
        const auto& ids = data_bundle.labels.train;
        const auto m = std::min<std::size_t>(trn.batch_size, ids.size());
        const auto batch = build_token_batch(std::span<const NodeId>(ids).first(m), data_bundle.local_nodes,
                                             data_bundle.features, data_bundle.contexts, par);
        std::ofstream csv(dump_batch);
        if (!csv) throw Error("cannot write " + dump_batch);
        write_token_batch_csv(batch, csv);
        return kExitOk;
      }
      save_context(data_bundle.contexts, out / "contexts.lgtx");
      save_local_nodes(data_bundle.local_nodes, out / "local_nodes.lgts");
      LargeGtModel<float> m(model_config_for(data_bundle, model_config(model, common)));
      const auto result = train(m, data_bundle, train_config(trn, common, par));
      save_checkpoint(result.best, out / "checkpoint");
      write_text(out / "metrics.jsonl", result.metrics.to_jsonl());
      write_text(out / "metrics.txt", result.metrics.to_table());
      std::cout << result.metrics.to_table();
      write_manifest(train_cmd, out,
                     {{"graph", data.graph},
                      {"features", data.features},
                      {"contexts", out / "contexts.lgtx"},
                      {"local_nodes", out / "local_nodes.lgts"},
                      {"checkpoint", out / "checkpoint"},
                      {"metrics", out / "metrics.jsonl"}});
    } else if (*eval_cmd) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_dir);
      const auto data_bundle = bundle_from(load_inputs(data, true), data, ckpt.config.k, common, par);
      const double acc = evaluate(ckpt, data_bundle, parse_split(split), trn.batch_size);
      json j = {{"split", split}, {"accuracy", acc}, {"checkpoint_hash", hex64(ckpt.hash())}};
      std::cout << j.dump() << '\n';
      write_text(out / "eval.json", j.dump(2) + "\n");
    } else if (*bench_cmd) {
      const auto data_bundle = bundle_from(load_inputs(data, true), data, model.k, common, par);
      LargeGtModel<float> m(model_config_for(data_bundle, model_config(model, common)));
      BenchConfig bc;
      bc.mode = bench.mode == "forward" ? BenchMode::Forward : BenchMode::Train;
      bc.epochs = bench.epochs;
      bc.warmup_epochs = bench.warmup;
      bc.max_batches = bench.max_batches;
      bc.batch_size = trn.batch_size;
      bc.seed = common.seed;
      const auto rep = benchmark_epoch_time(m, data_bundle, bc);
      write_text(out / "bench.json", rep.to_json() + "\n");
      std::cout << rep.to_json() << '\n';
      write_manifest(bench_cmd, out, {{"bench", out / "bench.json"}});
    } else if (*sweep_cmd) {
      auto l = load_inputs(data, true);
      const auto rows = sweep_k(l.graph, l.features, l.labels, model_config(model, common),
                                train_config(trn, common, par), sweep_values, common.seed, par,
                                parse_pad_strategy(common.pad_strategy));
      json j = json::array();
      for (const auto& r : rows)
        j.push_back({{"k", r.k},
                     {"test_acc", r.test_acc},
                     {"best_valid", r.best_valid},
                     {"epoch_seconds_mean", r.epoch_seconds_mean},
                     {"epochs", r.epochs_run}});
      write_text(out / "sweep.json", j.dump(2) + "\n");
      write_text(out / "sweep.txt", sweep_table(rows));
      std::cout << sweep_table(rows);
      write_manifest(sweep_cmd, out, {{"sweep", out / "sweep.json"}, {"table", out / "sweep.txt"}});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

int cli_dispatch(int argc, const char* const* argv) {
  return cli_dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace largegt
