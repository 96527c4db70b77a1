// Copyright 2026 The fsc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Matrices cross the boundary as float64 numpy arrays
// (copied); ContractError maps to ValueError and IoError to OSError.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "fsc/error.hpp"
#include "fsc/experiment.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

fsc::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw fsc::ContractError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return fsc::Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const fsc::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

fsc::FeatureBatch to_batch(const Array& x, const std::vector<int>& y) { return {to_matrix(x), y}; }

py::dict to_dict(const fsc::LossBreakdown& loss) {
  py::dict d;
  d["cross_entropy"] = loss.cross_entropy;
  d["compactness"] = loss.compactness;
  d["total"] = loss.total;
  d["beta"] = loss.beta;
  return d;
}

py::dict to_dict(const fsc::LabeledDataset& data) {
  py::dict d;
  d["x"] = to_array(data.inputs);
  d["y"] = data.labels;
  d["mode"] = data.mode_ids;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fsc, m) {
  m.doc() = "Fixed sub-center classification head, baselines and experiment harness";

  py::register_exception<fsc::ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<fsc::IoError>(m, "IoError", PyExc_OSError);

  py::class_<fsc::SubCenterBank>(m, "SubCenterBank")
      .def_property_readonly("classes", &fsc::SubCenterBank::classes)
      .def_property_readonly("subcenters_per_class", &fsc::SubCenterBank::subcenters_per_class)
      .def_property_readonly("dim", &fsc::SubCenterBank::dim)
      .def_property_readonly("sigma2", &fsc::SubCenterBank::sigma2)
      .def_property_readonly("seed", &fsc::SubCenterBank::seed)
      .def_property_readonly("frozen", &fsc::SubCenterBank::frozen)
      .def_property_readonly("weights", [](const fsc::SubCenterBank& b) { return to_array(b.weights()); })
      .def_property_readonly("centers", [](const fsc::SubCenterBank& b) { return to_array(b.centers()); })
      .def("content_hash", &fsc::SubCenterBank::content_hash)
      .def("__repr__", [](const fsc::SubCenterBank& b) {
        return "SubCenterBank(c=" + std::to_string(b.classes()) +
               ", s=" + std::to_string(b.subcenters_per_class()) + ", d=" + std::to_string(b.dim()) +
               ", sigma2=" + fsc::format_double(b.sigma2()) + ")";
      });

  m.def("kaiming_uniform_bound", &fsc::kaiming_uniform_bound, py::arg("fan_in"));
  m.def(
      "init_centers",
      [](std::size_t c, std::size_t d, std::uint64_t seed) {
        fsc::RandomStream stream(seed);
        return to_array(fsc::init_centers(c, d, stream));
      },
      py::arg("c"), py::arg("d"), py::arg("seed"));
  m.def("make_bank", &fsc::make_bank, py::arg("c"), py::arg("s"), py::arg("d"),
        py::arg("sigma2") = 1e-3, py::arg("seed") = 0);

  m.def(
      "forward",
      [](const fsc::SubCenterBank& bank, const Array& x, const std::vector<int>& y,
         const std::string& rule) {
        const auto out = fsc::forward(bank, to_batch(x, y), fsc::parse_assignment_rule(rule));
        py::dict d;
        d["logits"] = to_array(out.logits);
        d["subclass_probs"] = to_array(out.subclass_probs);
        d["class_probs"] = to_array(out.class_probs);
        d["assignment"] = out.assignment;
        d["predictions"] = fsc::predict_classes(out);
        return d;
      },
      py::arg("bank"), py::arg("x"), py::arg("y") = std::vector<int>{},
      py::arg("rule") = "argmax_logit");
  m.def(
      "fsc_loss",
      [](const fsc::SubCenterBank& bank, const Array& x, const std::vector<int>& y, double beta,
         const std::string& rule) {
        return to_dict(fsc::fsc_loss(bank, to_batch(x, y), beta, fsc::parse_assignment_rule(rule)));
      },
      py::arg("bank"), py::arg("x"), py::arg("y"), py::arg("beta") = 1e-4,
      py::arg("rule") = "argmax_logit");
  m.def(
      "loss_grad_features",
      [](const fsc::SubCenterBank& bank, const Array& x, const std::vector<int>& y, double beta,
         const std::string& rule) {
        return to_array(
            fsc::loss_grad_features(bank, to_batch(x, y), beta, fsc::parse_assignment_rule(rule)));
      },
      py::arg("bank"), py::arg("x"), py::arg("y"), py::arg("beta") = 1e-4,
      py::arg("rule") = "argmax_logit");
  m.def(
      "dispersion_stats",
      [](const fsc::SubCenterBank& bank) {
        const auto s = fsc::dispersion_stats(bank);
        py::dict d;
        d["mean_pairwise_sq_dist"] = s.mean_pairwise_sq_dist;
        d["mean_pairwise_cosine"] = s.mean_pairwise_cosine;
        return d;
      },
      py::arg("bank"));

  m.def(
      "generate_mixture",
      [](const std::string& spec_json) {
        const auto spec = fsc::mixture_spec_from_json(nlohmann::json::parse(spec_json));
        const auto data = fsc::generate_mixture(spec);
        py::dict d;
        d["train"] = to_dict(data.train);
        d["test"] = to_dict(data.test);
        return d;
      },
      py::arg("spec_json") = "{}");

  m.def(
      "train",
      [](const std::string& config_json) {
        // Runs without writing artifacts; returns the test-split report as JSON.
        const auto config = fsc::experiment_config_from_json(nlohmann::json::parse(config_json));
        config.validate();
        std::string report;
        {
          py::gil_scoped_release release;
          const auto data = fsc::load_experiment_data(config);
          const auto result = fsc::train_model(config.train, data.train, data.classes);
          auto j = fsc::to_json(fsc::evaluate_model(result.model, data.test));
          j["bank_hash"] = result.model.head.bank().content_hash();
          j["final_loss"] = result.losses.empty() ? 0.0 : result.losses.back().loss.total;
          report = j.dump();
        }
        return report;
      },
      py::arg("config_json") = "{}");

  m.def(
      "recall_at_k",
      [](const Array& features, const std::vector<int>& labels, const std::vector<std::size_t>& ks,
         const std::string& distance) {
        if (distance != "cosine" && distance != "euclidean")
          throw fsc::ContractError("unknown distance '" + distance + "'");
        return fsc::recall_at_k(to_matrix(features), labels, ks,
                                distance == "cosine" ? fsc::RetrievalDistance::kCosine
                                                     : fsc::RetrievalDistance::kEuclidean);
      },
      py::arg("features"), py::arg("labels"), py::arg("ks"), py::arg("distance") = "cosine");
  m.def(
      "top1_accuracy",
      [](const std::vector<int>& predictions, const std::vector<int>& labels) {
        return fsc::top1_accuracy(predictions, labels);
      },
      py::arg("predictions"), py::arg("labels"));
}
