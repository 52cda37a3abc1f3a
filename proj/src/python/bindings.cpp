#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "desmine/balance.hpp"
#include "desmine/classify.hpp"
#include "desmine/corpus.hpp"
#include "desmine/error.hpp"
#include "desmine/evaluate.hpp"
#include "desmine/protocol.hpp"
#include "desmine/transfer.hpp"
#include "desmine/vectorize.hpp"

namespace py = pybind11;
using namespace desmine;

namespace {

FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m;
  m.dim = rows.empty() ? 0 : rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != m.dim) throw DataError("all feature rows must have the same length");
    m.rows.push_back(to_sparse(r));
  }
  return m;
}

std::vector<std::vector<double>> to_rows(const FeatureMatrix& m) {
  std::vector<std::vector<double>> out;
  for (const auto& r : m.rows) out.push_back(to_dense(r, m.dim));
  return out;
}

ProtocolSpec spec_from(const std::string& name_or_json) {
  if (!name_or_json.empty() && name_or_json.front() == '{') return parse_protocol_text(name_or_json);
  return load_protocol(name_or_json);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Design-discussion mining core";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<Discussion>(m, "Discussion")
      .def_readonly("id", &Discussion::id)
      .def_readonly("text", &Discussion::text)
      .def_property_readonly("label", [](const Discussion& d) { return static_cast<int>(d.label); })
      .def_readonly("source", &Discussion::source);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](std::string name, const std::vector<std::tuple<std::string, std::string, int>>& rows) {
             std::vector<Discussion> ds;
             for (const auto& [id, text, label] : rows) {
               if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
               ds.push_back({id, text, label ? Label::design : Label::non_design, name, ArtifactKind::other});
             }
             return Dataset(std::move(name), std::move(ds));
           }),
           py::arg("name"), py::arg("rows"))
      .def_property_readonly("name", &Dataset::name)
      .def("__len__", &Dataset::size)
      .def("__getitem__", [](const Dataset& d, std::size_t i) {
        if (i >= d.size()) throw py::index_error();
        return d[i];
      })
      .def("labels", &Dataset::labels)
      .def_property_readonly("design_count", &Dataset::design_count)
      .def_property_readonly("prevalence", &Dataset::prevalence);

  m.def("load_jsonl", &load_jsonl, py::arg("path"));
  m.def("parse_jsonl", &parse_jsonl, py::arg("content"), py::arg("name"));
  m.def("load_csv",
        [](const std::filesystem::path& p, std::string text, std::string label, std::string id) {
          return load_csv(p, CsvColumns{std::move(text), std::move(label), std::move(id)});
        },
        py::arg("path"), py::arg("text_col") = "text", py::arg("label_col") = "label", py::arg("id_col") = "id");

  m.def("clean", [](const std::string& text) { return clean(text, CleanOptions{}); }, py::arg("text"));
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("stats", [](const Dataset& d) {
    const auto s = stats(d, CleanOptions{});
    py::dict out;
    out["total"] = s.total;
    out["design"] = s.design;
    out["mean_length"] = s.mean_length;
    out["vocab_size"] = s.vocab_size;
    return out;
  });

  m.def("roc_auc",
        [](const std::vector<int>& labels, const std::vector<double>& scores) { return roc_auc(labels, scores); },
        py::arg("labels"), py::arg("scores"));
  m.def("evaluate",
        [](const std::vector<int>& labels, const std::vector<double>& scores, const std::vector<int>& predictions) {
          return to_json(evaluate_scores(labels, scores, predictions)).dump();
        },
        py::arg("labels"), py::arg("scores"), py::arg("predictions"));
  m.def("zeror_baseline", [](double p) { return to_json(zeror_baseline(p)).dump(); }, py::arg("prevalence"));

  m.def("stratified_folds",
        [](const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
          return stratified_folds(labels, k, seed).fold;
        },
        py::arg("labels"), py::arg("k"), py::arg("seed"));
  m.def("smote",
        [](const std::vector<std::vector<double>>& X, const std::vector<int>& y, std::size_t k_neighbors,
           double target_ratio, std::uint64_t seed) {
          auto r = smote(from_rows(X), y, SmoteParams{k_neighbors, target_ratio, seed});
          return py::make_tuple(to_rows(r.features), r.labels);
        },
        py::arg("X"), py::arg("y"), py::arg("k_neighbors") = 5, py::arg("target_ratio") = 1.0, py::arg("seed") = 0);

  m.def("fit_predict",
        [](const std::string& classifier_json, const std::vector<std::vector<double>>& X_train,
           const std::vector<int>& y_train, const std::vector<std::vector<double>>& X_test) {
          const auto spec = classifier_spec_from_json(nlohmann::json::parse(classifier_json), 0);
          const auto model = fit(spec, from_rows(X_train), y_train);
          auto X = from_rows(X_test);
          X.dim = model.feature_dim;
          return predict_scores(model, X);
        },
        py::arg("classifier"), py::arg("X_train"), py::arg("y_train"), py::arg("X_test"));

  m.def("preset_names", &preset_names);
  m.def("resolve_protocol", [](const std::string& p) { return to_json(spec_from(p)).dump(); }, py::arg("protocol"));
  m.def("render_dot", [](const std::string& p) { return render_dot(spec_from(p)); }, py::arg("protocol"));
  m.def("execute",
        [](const std::string& p, const Dataset& d) {
          py::gil_scoped_release release;
          return to_json(execute(spec_from(p), d)).dump();
        },
        py::arg("protocol"), py::arg("dataset"));
  m.def("transfer_csv",
        [](const std::string& p, const std::vector<Dataset>& datasets, std::uint64_t seed, const std::string& metric) {
          py::gil_scoped_release release;
          return export_csv(transfer_matrix(datasets, spec_from(p), seed), parse_metric(metric));
        },
        py::arg("protocol"), py::arg("datasets"), py::arg("seed"), py::arg("metric") = "roc_auc");
  m.attr("__version__") = version_string();
}
