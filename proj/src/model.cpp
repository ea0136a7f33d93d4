#include "largegt/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace largegt {

using json = nlohmann::json;

Variant parse_variant(std::string_view s) {
  if (s == "local") return Variant::Local;
  if (s == "full") return Variant::Full;
  throw ContractViolation("unknown variant '" + std::string(s) + "' (expected local or full)");
}

std::string_view to_string(Variant v) { return v == Variant::Local ? "local" : "full"; }

void ModelConfig::validate() const {
  if (in_dim == 0) throw ContractViolation("model in_dim must be positive");
  if (dim == 0 || heads == 0 || dim % heads != 0)
    throw ContractViolation("hidden dim " + std::to_string(dim) + " must be a positive multiple of heads (" +
                            std::to_string(heads) + ")");
  if (k < 1) throw ContractViolation("K must be at least 1");
  if (variant == Variant::Full && centroids < 1)
    throw ContractViolation("the full variant needs at least one centroid");
  if (num_classes < 1) throw ContractViolation("num_classes must be positive");
  if (ffn_mult < 1) throw ContractViolation("ffn_mult must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractViolation("dropout must be in [0, 1)");
  if (!(codebook_decay >= 0.0 && codebook_decay < 1.0))
    throw ContractViolation("codebook decay must be in [0, 1)");
}

std::string ModelConfig::to_json() const {
  json j = {
      {"variant", std::string(to_string(variant))},
      {"in_dim", in_dim},
      {"dim", dim},
      {"heads", heads},
      {"k", k},
      {"centroids", centroids},
      {"local_layers", local_layers},
      {"ffn_mult", ffn_mult},
      {"dropout", dropout},
      {"readout", std::string(to_string(readout))},
      {"num_classes", num_classes},
      {"codebook_decay", codebook_decay},
      {"population", population},
      {"init_seed", init_seed},
  };
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.in_dim = j.at("in_dim").get<std::size_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    c.centroids = j.at("centroids").get<std::size_t>();
    c.local_layers = j.at("local_layers").get<std::size_t>();
    c.ffn_mult = j.at("ffn_mult").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.readout = parse_readout(j.at("readout").get<std::string>());
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.codebook_decay = j.at("codebook_decay").get<double>();
    c.population = j.at("population").get<std::size_t>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t Checkpoint::hash() const {
  auto h = nn::hash_tensors(tensors);
  for (char ch : config.to_json()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    if (!out) throw Error("cannot write " + (dir / "config.json").string());
    out << ckpt.config.to_json() << '\n';
  }
  nn::save_named_tensors(ckpt.tensors, dir / "tensors.bin");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw Error("cannot open " + (dir / "config.json").string());
  std::stringstream ss;
  ss << in.rdbuf();
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(ss.str());
  ckpt.tensors = nn::load_named_tensors(dir / "tensors.bin");
  return ckpt;
}

template <typename T>
LargeGtModel<T>::LargeGtModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.init_seed);
  const auto d = static_cast<Eigen::Index>(cfg_.dim);

  LocalEncoderConfig lc;
  lc.in_dim = cfg_.in_dim;
  lc.dim = cfg_.dim;
  lc.heads = cfg_.heads;
  lc.layers = cfg_.local_layers;
  lc.ffn_mult = cfg_.ffn_mult;
  lc.dropout = cfg_.dropout;
  lc.readout = cfg_.readout;
  local_.emplace(store_, "local", lc, rng);

  Eigen::Index fused = d;
  if (cfg_.variant == Variant::Full) {
    GlobalEncoderConfig gc;
    gc.in_dim = cfg_.in_dim;
    gc.dim = cfg_.dim;
    gc.centroids = cfg_.centroids;
    gc.decay = cfg_.codebook_decay;
    gc.population = cfg_.population;
    global_.emplace(store_, "global", gc, rng);
    fused = 2 * d;
  }
  fusion_ = nn::FeedForward<T>(store_, "fusion", fused, d * static_cast<Eigen::Index>(cfg_.ffn_mult), d, rng);
  norm_ = nn::LayerNorm<T>(store_, "norm", d);
  // small head so initial logits stay near zero
  classifier_ = nn::Linear<T>(store_, "classifier", d, static_cast<Eigen::Index>(cfg_.num_classes), rng,
                              true, 0.1);
  codebook_.decay = cfg_.codebook_decay;
}

template <typename T>
LargeGtModel<T>::LargeGtModel(const Checkpoint& ckpt) : LargeGtModel(ckpt.config) {
  load(ckpt);
}

template <typename T>
nn::Var<T> LargeGtModel<T>::local_features(nn::Tape<T>& tape, const TokenBatch& batch, bool training,
                                           std::mt19937_64& rng) const {
  if (batch.tokens_per_node != 3 * cfg_.k)
    throw ContractViolation("token batch has " + std::to_string(batch.tokens_per_node) +
                            " tokens per node, model expects 3K = " + std::to_string(3 * cfg_.k));
  return local_->forward(tape, batch, training, rng);
}

template <typename T>
nn::Var<T> LargeGtModel<T>::forward(nn::Tape<T>& tape, const TokenBatch& batch, const nn::Matrix<T>& h_in,
                                    bool training, std::mt19937_64& rng) {
  if (static_cast<std::size_t>(h_in.rows()) != batch.batch_size() ||
      static_cast<std::size_t>(h_in.cols()) != cfg_.in_dim)
    throw ContractViolation("h_in must be [batch, in_dim]");
  auto h_local = local_features(tape, batch, training, rng);
  auto hin = tape.constant(h_in);
  nn::Var<T> fused_in = h_local;
  if (cfg_.variant == Variant::Full) {
    auto h_global = global_->forward(tape, hin, codebook_, training, batch.node_ids);
    fused_in = nn::concat_cols(tape, h_local, h_global);
  }
  auto hat = fusion_(tape, fused_in);
  auto h_out = nn::add(tape, local_->project(tape, hin), norm_(tape, hat));
  h_out = nn::dropout(tape, h_out, training ? cfg_.dropout : 0.0, rng);
  return classifier_(tape, h_out);
}

template <typename T>
void LargeGtModel<T>::init_codebook(const nn::Matrix<T>& sample_h, std::uint64_t seed) {
  if (!global_) return;
  codebook_ = global_->init_codebook(sample_h, seed);
}

template <typename T>
Checkpoint LargeGtModel<T>::checkpoint() const {
  Checkpoint ckpt;
  ckpt.config = cfg_;
  ckpt.tensors = store_.export_tensors();
  if (global_ && codebook_.initialized()) {
    auto cb = codebook_.export_tensors("codebook");
    ckpt.tensors.insert(ckpt.tensors.end(), cb.begin(), cb.end());
  }
  return ckpt;
}

template <typename T>
void LargeGtModel<T>::load(const Checkpoint& ckpt) {
  if (!(ckpt.config == cfg_)) throw ContractViolation("checkpoint config does not match this model");
  store_.import_tensors(ckpt.tensors);
  const bool has_codebook = std::any_of(ckpt.tensors.begin(), ckpt.tensors.end(),
                                        [](const auto& t) { return t.name == "codebook.centroids"; });
  if (global_ && has_codebook) codebook_.import_tensors(ckpt.tensors, "codebook");
}

template class LargeGtModel<float>;
template class LargeGtModel<double>;

}  // namespace largegt
