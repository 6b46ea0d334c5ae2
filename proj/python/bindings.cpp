// Copyright 2026 The CGBC Authors
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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "cgbc/classifier.hpp"
#include "cgbc/cli.hpp"
#include "cgbc/concept_synth.hpp"
#include "cgbc/diagnostics.hpp"
#include "cgbc/dpp.hpp"
#include "cgbc/embedding_store.hpp"
#include "cgbc/error.hpp"
#include "cgbc/fixtures.hpp"
#include "cgbc/llm_client.hpp"
#include "cgbc/neighborhoods.hpp"
#include "cgbc/simulator.hpp"
#include "cgbc/soft_trim.hpp"

namespace py = pybind11;
using namespace cgbc;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<float> rows_array(const EmbeddingContainer& c) {
  py::array_t<float> out({c.count(), c.dim()});
  std::copy(c.data().begin(), c.data().end(), out.mutable_data());
  return out;
}

EmbeddingContainer from_array(const std::string& role, const std::vector<std::string>& names,
                              const FloatArray& rows, bool normalized) {
  if (rows.ndim() != 2) throw std::invalid_argument("rows must be a 2-d array");
  std::vector<float> data(rows.data(), rows.data() + rows.size());
  return EmbeddingContainer(role_from_string(role), static_cast<std::size_t>(rows.shape(1)), names,
                            std::move(data), normalized);
}

AggregatorConfig make_config(const std::string& mode, double lambda, double slope) {
  AggregatorConfig cfg;
  cfg.mode = aggregator_mode_from_string(mode);
  cfg.lambda = lambda;
  cfg.slope = slope;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_cgbc, m) {
  m.doc() = "Concept-guided Bayesian zero-shot classification core";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  m.attr("CLIP_LOGIT_SCALE") = kClipLogitScale;

  py::class_<EmbeddingContainer>(m, "EmbeddingContainer")
      .def(py::init(&from_array), py::arg("role"), py::arg("names"), py::arg("rows"),
           py::arg("normalized") = true)
      .def_property_readonly("role", [](const EmbeddingContainer& c) { return std::string(to_string(c.role())); })
      .def_property_readonly("dim", &EmbeddingContainer::dim)
      .def_property_readonly("count", &EmbeddingContainer::count)
      .def_property_readonly("normalized", &EmbeddingContainer::normalized)
      .def_property_readonly("names", &EmbeddingContainer::names)
      .def_property_readonly("rows", &rows_array)
      .def("__len__", &EmbeddingContainer::count);

  m.def("load_container", [](const std::filesystem::path& p) { return load_container(p); }, py::arg("path"));
  m.def("save_container", [](const EmbeddingContainer& c, const std::filesystem::path& p) { return save_container(c, p); },
        py::arg("container"), py::arg("path"));
  m.def("cosine_sim", [](const EmbeddingContainer& a, const EmbeddingContainer& b) {
    const auto s = cosine_sim(a, b);
    py::array_t<float> out({s.rows, s.cols});
    std::copy(s.values.begin(), s.values.end(), out.mutable_data());
    return out;
  });

  m.def("build_neighborhoods", [](const EmbeddingContainer& classes, std::size_t h) {
    const auto t = build_neighborhoods(classes, h);
    py::dict out;
    for (std::size_t i = 0; i < t.class_names.size(); ++i) out[py::str(t.class_names[i])] = t.neighbor_names(i);
    return out;
  }, py::arg("classes"), py::arg("h") = kDefaultNeighborhoodSize);

  m.def("parse_concepts", [](const std::string& r) { return parse_concepts(r); }, py::arg("response"));
  m.def("render_prompt", [](const std::string& cls, const std::string& concept_text) {
    return render_prompt(cls, concept_text);
  });
  m.def("contrastive_prompt", [](const std::string& cls, const std::vector<std::string>& neighbors,
                                 std::size_t per_call) {
    const auto p = render_contrastive_prompt(cls, neighbors, per_call);
    return py::make_tuple(p.system, p.user);
  }, py::arg("class_name"), py::arg("neighbors"), py::arg("per_call") = kDefaultConceptsPerCall);
  m.def("request_digest", [](const std::string& model, const std::string& system, const std::string& user) {
    return request_digest({model, system, user, std::nullopt});
  });

  m.def("median", [](const DoubleArray& s) { return median(to_vector(s)); });
  m.def("soft_trim_weights", [](const DoubleArray& s, double lambda, double slope) {
    const auto v = to_vector(s);
    const double med = median(v);
    const double d = mad(v, med);
    return soft_trim_weights(v, med, d, estimate_rho(v, med, d, lambda), slope);
  }, py::arg("scores"), py::arg("lambda_") = 2.5, py::arg("slope") = kClipLogitScale);
  m.def("aggregate", [](const DoubleArray& s, const std::string& mode, double lambda, double slope) {
    const auto e = aggregate(to_vector(s), make_config(mode, lambda, slope));
    py::dict out;
    out["mu_hat"] = e.mu_hat;
    out["median"] = e.median;
    out["mad"] = e.mad;
    out["rho_raw"] = e.rho_raw;
    out["rho_hat"] = e.rho_hat;
    out["weights"] = e.weights;
    out["fallback"] = e.fallback;
    return out;
  }, py::arg("scores"), py::arg("mode") = "soft_trim", py::arg("lambda_") = 2.5,
     py::arg("slope") = kClipLogitScale);

  m.def("greedy_map", [](const DoubleArray& kernel, std::size_t size, double jitter) {
    if (kernel.ndim() != 2 || kernel.shape(0) != kernel.shape(1)) {
      throw std::invalid_argument("kernel must be a square matrix");
    }
    const auto n = static_cast<std::size_t>(kernel.shape(0));
    const auto sel = greedy_map(DppKernel::from_matrix(n, {kernel.data(), kernel.data() + n * n}, jitter), size);
    return py::make_tuple(sel.indices, sel.marginal_gains);
  }, py::arg("kernel"), py::arg("size"), py::arg("jitter") = kDefaultDppJitter);
  m.def("log_det", [](const DoubleArray& kernel, const std::vector<std::size_t>& subset) {
    const auto n = static_cast<std::size_t>(kernel.shape(0));
    return log_det(DppKernel::from_matrix(n, {kernel.data(), kernel.data() + kernel.size()}), subset);
  });

  m.def("classify", [](const EmbeddingContainer& images, const std::vector<EmbeddingContainer>& prompts,
                       const std::vector<std::string>& class_names, const std::string& mode,
                       const std::string& prob_mode, double lambda, double slope) {
    ClassPromptSet set{class_names, prompts};
    set.validate();
    ScoringOptions opt;
    opt.aggregator = make_config(mode, lambda, slope);
    opt.prob_mode = prob_mode_from_string(prob_mode);
    std::vector<std::size_t> predicted;
    py::array_t<double> scores({images.count(), set.num_classes()});
    auto* dst = scores.mutable_data();
    for (std::size_t n = 0; n < images.count(); ++n) {
      const auto r = score_image(images.names()[n], images.row(n), set, opt);
      predicted.push_back(r.predicted);
      std::copy(r.class_scores.begin(), r.class_scores.end(), dst + n * set.num_classes());
    }
    return py::make_tuple(predicted, scores);
  }, py::arg("images"), py::arg("prompts"), py::arg("class_names"), py::arg("mode") = "soft_trim",
     py::arg("prob_mode") = "affine", py::arg("lambda_") = 2.5, py::arg("slope") = kClipLogitScale);

  m.def("describe", [](const DoubleArray& s) {
    const auto r = describe(to_vector(s));
    py::dict out;
    out["n"] = r.n;
    out["mean"] = r.mean;
    out["std"] = r.std;
    out["skewness"] = r.skewness;
    out["excess_kurtosis"] = r.excess_kurtosis;
    out["skewed"] = r.skewed;
    out["heavy_tailed"] = r.heavy_tailed;
    out["degenerate"] = r.degenerate;
    out["qq_points"] = r.qq_points;
    return out;
  });

  m.def("make_synthetic", [](std::size_t k, std::size_t m_per_class, std::size_t n_images, std::size_t dim,
                             double margin, double noise_sigma, double prompt_sigma, double outlier_rate,
                             std::uint64_t seed) {
    SyntheticDatasetSpec spec{k, m_per_class, n_images, dim, margin, noise_sigma, prompt_sigma, outlier_rate, seed};
    auto ds = make_synthetic(spec);
    py::dict out;
    out["classes"] = ds.classes;
    out["prompts"] = ds.prompts.prompts;
    out["class_names"] = ds.prompts.class_names;
    out["planted"] = ds.planted;
    out["images"] = ds.images;
    out["labels"] = ds.labels;
    return out;
  }, py::arg("k") = 8, py::arg("m_per_class") = 16, py::arg("n_images") = 256, py::arg("dim") = 64,
     py::arg("margin") = 0.5, py::arg("noise_sigma") = 1.0, py::arg("prompt_sigma") = 0.5,
     py::arg("outlier_rate") = 0.0, py::arg("seed") = 0);

  m.def("theorem1_sweep", [](std::size_t trials, std::uint64_t seed) {
    sim::SweepConfig cfg;
    cfg.trials = trials;
    cfg.seed = seed;
    std::ostringstream csv;
    sim::write_sweep_csv(sim::run_theorem1_sweep(cfg), csv);
    return csv.str();
  }, py::arg("trials") = 100, py::arg("seed") = 0);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"cgbc"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}
