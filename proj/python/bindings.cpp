#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "largegt/context.hpp"
#include "largegt/error.hpp"
#include "largegt/synthetic.hpp"
#include "largegt/tokens.hpp"
#include "largegt/trainer.hpp"

namespace py = pybind11;
using namespace largegt;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using U32Array = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

NodeFeatures to_features(const F32Array& a) {
  if (a.ndim() != 2) throw ContractViolation("features must be a 2-D array");
  NodeFeatures f;
  f.values = Eigen::Map<const RowMatrixF>(a.data(), a.shape(0), a.shape(1));
  return f;
}

F32Array to_array(const RowMatrixF& m) {
  F32Array out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

template <typename V>
py::array_t<typename V::value_type> to_array(const V& v) {
  py::array_t<typename V::value_type> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<NodeId> to_ids(const U32Array& a) { return {a.data(), a.data() + a.size()}; }

LocalNodeSets to_sets(const U32Array& s) {
  if (s.ndim() != 2) throw ContractViolation("local node sets must be an N x K array");
  LocalNodeSets out;
  out.num_nodes = static_cast<std::size_t>(s.shape(0));
  out.k = static_cast<std::size_t>(s.shape(1));
  out.sets = to_ids(s);
  return out;
}

LabelsAndSplits to_labels(const std::vector<std::int32_t>& labels, const U32Array& train, const U32Array& valid,
                          const U32Array& test) {
  LabelsAndSplits ls;
  ls.labels = labels;
  for (auto l : labels) ls.num_classes = std::max<std::size_t>(ls.num_classes, static_cast<std::size_t>(l + 1));
  ls.train = to_ids(train);
  ls.valid = to_ids(valid);
  ls.test = to_ids(test);
  return ls;
}

py::dict metrics_dict(const RunMetrics& m) {
  py::list epochs;
  for (const auto& e : m.epochs) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["loss"] = e.loss;
    d["train_acc"] = e.train_acc;
    d["valid_acc"] = e.valid_acc;
    d["test_acc"] = e.test_acc;
    d["seconds"] = e.seconds;
    epochs.append(d);
  }
  py::dict out;
  out["epochs"] = epochs;
  out["best_epoch"] = m.best_epoch;
  out["best_valid"] = m.best_valid;
  out["test_at_best"] = m.test_at_best;
  out["stopped_early"] = m.stopped_early;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph transformer with sampled local tokens and a codebook global module";

  // translators registered later take precedence, so the base class goes first
  auto& base_error = py::register_exception<Error>(m, "LargeGtError", PyExc_RuntimeError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", base_error.ptr());
  py::register_exception<StateError>(m, "StateError", base_error.ptr());
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<BoundsError>(m, "BoundsError", PyExc_IndexError);

  py::class_<GraphCSR>(m, "Graph")
      .def_static(
          "from_edges",
          [](std::size_t n, const U32Array& edges, bool symmetrize) {
            if (edges.size() != 0 && (edges.ndim() != 2 || edges.shape(1) != 2))
              throw ContractViolation("edges must be an E x 2 array");
            std::vector<Edge> list(static_cast<std::size_t>(edges.size() / 2));
            for (std::size_t e = 0; e < list.size(); ++e) list[e] = {edges.data()[2 * e], edges.data()[2 * e + 1]};
            return GraphCSR::from_edges(n, list, symmetrize);
          },
          py::arg("num_nodes"), py::arg("edges"), py::arg("symmetrize") = true)
      .def_static("load", [](const std::filesystem::path& p) { return load_graph(p); })
      .def("save", [](const GraphCSR& g, const std::filesystem::path& p) { save_graph(g, p); })
      .def_property_readonly("num_nodes", &GraphCSR::num_nodes)
      .def_property_readonly("num_edges", &GraphCSR::num_edges)
      .def_property_readonly("row_offsets", [](const GraphCSR& g) { return to_array(g.row_offsets()); })
      .def_property_readonly("col_indices", [](const GraphCSR& g) { return to_array(g.col_indices()); })
      .def("degree", &GraphCSR::degree)
      .def("two_hop_neighbors", [](const GraphCSR& g, NodeId i) { return two_hop_neighbors(g, i); })
      .def("__repr__", [](const GraphCSR& g) {
        return "Graph(num_nodes=" + std::to_string(g.num_nodes()) + ", num_edges=" + std::to_string(g.num_edges()) + ")";
      });

  m.def(
      "precompute_context",
      [](const GraphCSR& g, const F32Array& h, unsigned parallelism) {
        const auto f = to_features(h);
        ContextFeatures c;
        {
          py::gil_scoped_release release;
          c = precompute_context(g, f, parallelism);
        }
        return py::make_tuple(to_array(c.hop1), to_array(c.hop2));
      },
      py::arg("graph"), py::arg("features"), py::arg("parallelism") = 1,
      "Returns (hop1, hop2) = (A H, A A H) with A the symmetric-normalized adjacency with self-loops.");

  m.def(
      "sample_local_nodes",
      [](const GraphCSR& g, std::size_t k, std::uint64_t seed, unsigned parallelism, const std::string& pad) {
        LocalNodeSets s;
        const auto strategy = parse_pad_strategy(pad);
        {
          py::gil_scoped_release release;
          s = sample_local_nodes(g, k, seed, parallelism, strategy);
        }
        py::array_t<std::uint32_t> out({static_cast<py::ssize_t>(s.num_nodes), static_cast<py::ssize_t>(s.k)});
        std::copy(s.sets.begin(), s.sets.end(), out.mutable_data());
        return out;
      },
      py::arg("graph"), py::arg("k"), py::arg("seed") = 0, py::arg("parallelism") = 1,
      py::arg("pad") = "include-then-pad", "N x K array; row i starts with i.");

  m.def(
      "build_token_batch",
      [](const U32Array& nodes, const U32Array& sets, const F32Array& h, const F32Array& hop1, const F32Array& hop2) {
        const auto s = to_sets(sets);
        ContextFeatures c{to_features(hop1).values, to_features(hop2).values};
        const auto ids = to_ids(nodes);
        const auto batch = build_token_batch(ids, s, to_features(h), c);
        return to_array(batch.data);
      },
      py::arg("nodes"), py::arg("local_nodes"), py::arg("features"), py::arg("hop1"), py::arg("hop2"),
      "(M * 3K) x D token matrix, triples (h, hop1, hop2) per local node.");

  m.def(
      "generate_sbm",
      [](std::size_t n, std::size_t blocks, double p_intra, double p_inter, double noise, std::uint64_t seed) {
        SbmSpec spec;
        spec.num_nodes = n;
        spec.num_blocks = blocks;
        spec.p_intra = p_intra;
        spec.p_inter = p_inter;
        spec.noise_sigma = noise;
        spec.seed = seed;
        auto d = generate_sbm(spec);
        py::dict out;
        out["graph"] = std::move(d.graph);
        out["features"] = to_array(d.features.values);
        out["labels"] = to_array(d.labels.labels);
        out["train"] = to_array(d.labels.train);
        out["valid"] = to_array(d.labels.valid);
        out["test"] = to_array(d.labels.test);
        return out;
      },
      py::arg("num_nodes") = 1000, py::arg("num_blocks") = 2, py::arg("p_intra") = 0.2, py::arg("p_inter") = 0.01,
      py::arg("noise_sigma") = 0.5, py::arg("seed") = 0);

  m.def(
      "train",
      [](const GraphCSR& g, const F32Array& h, const std::vector<std::int32_t>& labels, const U32Array& train_ids,
         const U32Array& valid_ids, const U32Array& test_ids, std::size_t k, const std::string& variant,
         std::size_t dim, std::size_t heads, std::size_t centroids, double dropout, std::size_t epochs,
         std::size_t batch_size, double lr, std::uint64_t seed, const std::optional<std::filesystem::path>& out) {
        auto data = make_bundle(g, to_features(h), to_labels(labels, train_ids, valid_ids, test_ids), k, seed);
        ModelConfig base;
        base.variant = parse_variant(variant);
        base.dim = dim;
        base.heads = heads;
        base.centroids = centroids;
        base.dropout = dropout;
        base.init_seed = seed;
        TrainConfig tc;
        tc.epochs = epochs;
        tc.batch_size = batch_size;
        tc.lr = lr;
        tc.seed = seed;
        TrainResult res;
        {
          py::gil_scoped_release release;
          LargeGtModel<float> model(model_config_for(data, base));
          res = train(model, data, tc);
        }
        if (out) save_checkpoint(res.best, *out);
        auto d = metrics_dict(res.metrics);
        d["checkpoint_hash"] = res.best.hash();
        return d;
      },
      py::arg("graph"), py::arg("features"), py::arg("labels"), py::arg("train"), py::arg("valid"), py::arg("test"),
      py::kw_only(), py::arg("k") = 20, py::arg("variant") = "full", py::arg("dim") = 64, py::arg("heads") = 2,
      py::arg("centroids") = 64, py::arg("dropout") = 0.1, py::arg("epochs") = 50, py::arg("batch_size") = 64,
      py::arg("lr") = 1e-3, py::arg("seed") = 0, py::arg("checkpoint_dir") = py::none(),
      "Trains a fresh model and returns the metric trace; keeps the best-validation checkpoint.");

  m.def(
      "evaluate",
      [](const std::filesystem::path& ckpt_dir, const GraphCSR& g, const F32Array& h,
         const std::vector<std::int32_t>& labels, const U32Array& train_ids, const U32Array& valid_ids,
         const U32Array& test_ids, const std::string& split, std::uint64_t seed) {
        const auto ckpt = load_checkpoint(ckpt_dir);
        const auto data =
            make_bundle(g, to_features(h), to_labels(labels, train_ids, valid_ids, test_ids), ckpt.config.k, seed);
        py::gil_scoped_release release;
        return evaluate(ckpt, data, parse_split(split));
      },
      py::arg("checkpoint_dir"), py::arg("graph"), py::arg("features"), py::arg("labels"), py::arg("train"),
      py::arg("valid"), py::arg("test"), py::kw_only(), py::arg("split") = "test", py::arg("seed") = 0,
      "Accuracy of a saved checkpoint; local nodes are resampled with `seed`.");

  m.attr("__version__") = LARGEGT_VERSION;
}
