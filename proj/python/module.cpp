#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <memory>

#include "stsc/data.hpp"
#include "stsc/delaunay.hpp"
#include "stsc/error.hpp"
#include "stsc/io.hpp"
#include "stsc/operators.hpp"
#include "stsc/train.hpp"
#include "stsc/walks.hpp"

namespace py = pybind11;
using namespace stsc;

namespace {

template <typename T>
py::array_t<T> to_numpy(const std::vector<std::size_t>& shape, std::span<const T> data) {
  py::array_t<T> out(std::vector<py::ssize_t>(shape.begin(), shape.end()));
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

py::array_t<float> to_numpy(const STTensor& t) { return to_numpy<float>(t.shape(), t.data()); }

STTensor from_numpy(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return STTensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<std::int64_t> dense(const SparseOperator& op) {
  const auto d = op.to_dense();
  return to_numpy<std::int64_t>({op.rows(), op.cols()}, d);
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["MAE"] = m.mae;
  d["RMSE"] = m.rmse;
  d["MRE"] = m.mre;
  d["count"] = m.count;
  return d;
}

nlohmann::json parse_json(const std::string& text) {
  try {
    return text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, e.what());
  }
}

// Dataset plus the complex it lives on; TaskData keeps a pointer to it.
struct PyDataset {
  Dataset ds;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simplicial complexes, walks and spatio-temporal models";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<SimplicialComplex>(m, "Complex")
      .def_static(
          "from_edges",
          [](const std::vector<Edge>& edges, bool lift) {
            return SimplicialComplex::from_edges(edges, lift);
          },
          py::arg("edges"), py::arg("lift") = true)
      .def_static(
          "from_points",
          [](const std::vector<std::pair<double, double>>& xy, const std::vector<VertexId>& ids) {
            std::vector<Point2> pts;
            for (const auto& [x, y] : xy) pts.push_back({x, y});
            return delaunay(pts, ids);
          },
          py::arg("points"), py::arg("ids") = std::vector<VertexId>{})
      .def_static("from_json", [](const std::string& text) { return complex_from_json(parse_json(text)); })
      .def_static("load", [](const std::string& path) { return load_complex(path); })
      .def("to_json", [](const SimplicialComplex& c) { return complex_to_json(c).dump(); })
      .def("save", [](const SimplicialComplex& c, const std::string& path) { save_complex(path, c); })
      .def_property_readonly("vertices", &SimplicialComplex::vertices)
      .def_property_readonly("edges", &SimplicialComplex::edges)
      .def_property_readonly("triangles", &SimplicialComplex::triangles)
      .def("counts", &SimplicialComplex::counts)
      .def(
          "neighbors",
          [](const SimplicialComplex& c, int order, std::size_t index, const std::string& relation) {
            std::vector<std::pair<int, std::size_t>> out;
            for (const auto& s : c.neighbors({order, index}, parse_relation(relation)))
              out.emplace_back(s.order, s.index);
            return out;
          },
          py::arg("order"), py::arg("index"), py::arg("relation"))
      .def("simplex", [](const SimplicialComplex& c, int order, std::size_t index) {
        return c.vertex_set({order, index});
      })
      .def("__len__", &SimplicialComplex::size);

  m.def(
      "boundary", [](const SimplicialComplex& c, int k, bool signed_entries) { return dense(boundary(c, k, signed_entries)); },
      py::arg("complex"), py::arg("k"), py::arg("signed") = true);
  m.def(
      "adjacency",
      [](const SimplicialComplex& c, int k, const std::string& kind) {
        return dense(adjacency(c, k, parse_adjacency_kind(kind)));
      },
      py::arg("complex"), py::arg("k"), py::arg("kind"));
  m.def("hodge_laplacian", [](const SimplicialComplex& c, int k) { return dense(hodge_laplacian(c, k)); });
  m.def(
      "full_adjacency", [](const SimplicialComplex& c, int variant) { return dense(full_adjacency(c, variant)); },
      py::arg("complex"), py::arg("variant") = 1);

  m.def(
      "sample_walks",
      [](const SimplicialComplex& c, std::uint32_t length, std::uint32_t samples, int variant, bool biased,
         std::uint64_t seed, unsigned threads) {
        WalkConfig cfg{length, samples, variant, biased, seed};
        cfg.validate();
        const auto starts = vertex_starts(c);
        const auto batch = sample_walks(c, full_adjacency(c, variant), starts, cfg, threads);
        const std::vector<std::size_t> shape{batch.num_starts(), samples, batch.positions()};
        return py::make_tuple(to_numpy<std::uint32_t>(shape, batch.trajectories()),
                              to_numpy<std::uint16_t>(shape, batch.anonymous_labels()));
      },
      py::arg("complex"), py::arg("length") = 4, py::arg("samples") = 4, py::arg("variant") = 1,
      py::arg("biased") = false, py::arg("seed") = 0, py::arg("threads") = 1,
      "Walks from every vertex as (trajectories, anonymous labels), each (N, samples, length + 1). "
      "Trajectory entries are global simplex indices.");
  m.def("anonymize", [](const std::vector<std::uint32_t>& walk) { return anonymize(walk); });

  py::class_<PyDataset, std::shared_ptr<PyDataset>>(m, "Dataset")
      .def_static(
          "synth",
          [](std::size_t steps, std::uint64_t seed, double coupling, double noise) {
            SynthConfig cfg;
            cfg.T_total = steps;
            cfg.seed = seed;
            cfg.coupling = coupling;
            cfg.noise = noise;
            const auto desk = desk_complex();
            auto p = std::make_shared<PyDataset>();
            p->ds = synth(desk.complex, cfg);
            std::tie(p->ds.edge_feats, p->ds.tri_feats) = geometric_features(desk.complex, desk.positions);
            return p;
          },
          py::arg("steps") = 600, py::arg("seed") = 0, py::arg("coupling") = 0.5, py::arg("noise") = 0.02,
          "Synthetic signal on the built-in desk complex with geometric edge and triangle features.")
      .def_static("load", [](const std::string& dir) { return std::make_shared<PyDataset>(PyDataset{load_dataset(dir)}); })
      .def("save", [](const PyDataset& p, const std::string& dir) { save_dataset(dir, p.ds); })
      .def_property_readonly("complex", [](const PyDataset& p) { return p.ds.complex; })
      .def_property_readonly("signal", [](const PyDataset& p) { return to_numpy(p.ds.signal); })
      .def_property_readonly("edge_features", [](const PyDataset& p) { return to_numpy(p.ds.edge_feats); })
      .def_property_readonly("triangle_features", [](const PyDataset& p) { return to_numpy(p.ds.tri_feats); });

  m.def(
      "metrics",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& target, py::object mask) {
        const STTensor m = mask.is_none() ? STTensor{} : from_numpy(mask.cast<py::array_t<float, py::array::c_style | py::array::forcecast>>());
        return metrics_dict(metrics(from_numpy(pred), from_numpy(target), m));
      },
      py::arg("pred"), py::arg("target"), py::arg("mask") = py::none(),
      "MAE, RMSE and MRE (percent) over all cells, or over cells where mask is 1.");

  m.def(
      "train",
      [](const std::shared_ptr<PyDataset>& p, const std::string& model_json, const std::string& train_json,
         std::uint64_t seed) {
        const auto mc = model_config_from_json(parse_json(model_json));
        const auto tc = train_config_from_json(parse_json(train_json));
        TaskData data(p->ds, mc, tc);
        Model model(mc, p->ds.num_nodes(), seed);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(model, data, tc);
        }
        py::list curve;
        for (const auto& s : r.curve) {
          py::dict e;
          e["epoch"] = s.epoch;
          e["lr"] = s.lr;
          e["train_loss"] = s.train_loss;
          e["val_mae"] = s.val_mae;
          curve.append(e);
        }
        const auto kind = mc.task == Task::forecast ? Baseline::persistence : Baseline::mean;
        py::dict out;
        out["curve"] = curve;
        out["best_epoch"] = r.best_epoch;
        out["initial_train_mae"] = r.initial_train_mae;
        out["final_train_mae"] = r.final_train_mae;
        out["test"] = metrics_dict(evaluate(model, data, Split::test));
        out["baseline"] = metrics_dict(evaluate_baseline(data, Split::test, kind));
        out["parameters"] = model.params().scalar_count();
        return out;
      },
      py::arg("dataset"), py::arg("model_config") = "", py::arg("train_config") = "", py::arg("seed") = 0,
      "Trains on the dataset and returns the loss curve with test metrics for the model and the baseline. "
      "Configs are JSON objects; missing keys keep their defaults.");
}
