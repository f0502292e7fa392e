#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nirx/analytics.hpp"
#include "nirx/embedding_store.hpp"
#include "nirx/errors.hpp"
#include "nirx/explorer_api.hpp"
#include "nirx/kernel_scoring.hpp"
#include "nirx/run_ingest.hpp"
#include "nirx/snapshot.hpp"

namespace py = pybind11;

namespace {

std::vector<std::string> terms_of(const std::vector<nirx::Token>& tokens) { return nirx::token_texts(tokens); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kernel-pooling re-ranking explorer core";

  // Translators run most-recent first, so the base class goes first.
  py::register_exception<nirx::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<nirx::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<nirx::BuildError>(m, "BuildError", PyExc_ValueError);
  py::register_exception<nirx::ContractViolation>(m, "ContractViolation", PyExc_ValueError);

  py::class_<nirx::Token>(m, "Token")
      .def_readonly("text", &nirx::Token::text)
      .def_readonly("begin", &nirx::Token::begin)
      .def_readonly("end", &nirx::Token::end)
      .def("__repr__", [](const nirx::Token& t) {
        return "Token(" + t.text + ", " + std::to_string(t.begin) + ", " + std::to_string(t.end) + ")";
      });
  m.def("tokenize", &nirx::tokenize, py::arg("text"));
  m.def("tokenize_terms", [](const std::string& text) { return terms_of(nirx::tokenize(text)); },
        py::arg("text"));

  py::class_<nirx::EmbeddingTable>(m, "EmbeddingTable")
      .def_property_readonly("dimension", &nirx::EmbeddingTable::dimension)
      .def("__len__", &nirx::EmbeddingTable::size)
      .def("__contains__", &nirx::EmbeddingTable::contains)
      .def_property_readonly("duplicate_count", &nirx::EmbeddingTable::duplicate_count)
      .def("lookup",
           [](const nirx::EmbeddingTable& t, const std::string& term) -> std::optional<std::vector<double>> {
             if (const auto* v = t.lookup(term)) return v->vector;
             return std::nullopt;
           })
      .def("dump", [](const nirx::EmbeddingTable& t) {
        std::ostringstream out;
        nirx::dump_embeddings(t, out);
        return out.str();
      });
  m.def("load_embeddings", [](const std::string& text) {
    std::istringstream in(text);
    return nirx::load_embeddings(in);
  }, py::arg("text"));
  m.def("load_embeddings_file", &nirx::load_embeddings_file, py::arg("path"));
  m.def("cosine", [](const std::vector<double>& u, const std::vector<double>& v) { return nirx::cosine(u, v); });

  py::class_<nirx::Kernel>(m, "Kernel")
      .def(py::init([](double mu, double sigma, double weight) { return nirx::Kernel{mu, sigma, weight}; }),
           py::arg("mu"), py::arg("sigma"), py::arg("weight") = 0.0)
      .def_readwrite("mu", &nirx::Kernel::mu)
      .def_readwrite("sigma", &nirx::Kernel::sigma)
      .def_readwrite("weight", &nirx::Kernel::weight);
  py::class_<nirx::KernelBank>(m, "KernelBank")
      .def(py::init([](std::vector<nirx::Kernel> kernels, double bias) {
             nirx::KernelBank b{std::move(kernels), bias};
             b.validate();
             return b;
           }),
           py::arg("kernels"), py::arg("bias") = 0.0)
      .def_readonly("kernels", &nirx::KernelBank::kernels)
      .def_readonly("bias", &nirx::KernelBank::bias);
  m.def("default_kernel_bank", &nirx::default_kernel_bank);
  m.def("load_kernel_bank", [](const std::string& text) {
    std::istringstream in(text);
    return nirx::load_kernel_bank(in);
  }, py::arg("text"));

  m.def("kernel_value", [](double u, const nirx::Kernel& k) { return nirx::kernel_value(u, k); });
  m.def("similarity_matrix",
        [](const std::vector<std::string>& q, const std::vector<std::string>& d, const nirx::EmbeddingTable& t) {
          const auto mat = nirx::build_similarity_matrix(q, d, t);
          std::vector<std::vector<double>> rows(mat.rows());
          for (std::size_t i = 0; i < mat.rows(); ++i)
            for (std::size_t j = 0; j < mat.cols(); ++j) rows[i].push_back(mat.at(i, j));
          return rows;
        });

  py::class_<nirx::ScoreBreakdown>(m, "ScoreBreakdown")
      .def_readonly("overall", &nirx::ScoreBreakdown::overall)
      .def_readonly("bias", &nirx::ScoreBreakdown::bias)
      .def_readonly("phi", &nirx::ScoreBreakdown::phi)
      .def_readonly("contribution", &nirx::ScoreBreakdown::contribution);
  py::class_<nirx::ScoredDocument>(m, "ScoredDocument")
      .def_readonly("doc_id", &nirx::ScoredDocument::doc_id)
      .def_readonly("rank", &nirx::ScoredDocument::rank)
      .def_readonly("baseline_rank", &nirx::ScoredDocument::baseline_rank)
      .def_readonly("breakdown", &nirx::ScoredDocument::breakdown);
  m.def("score_document",
        [](const std::vector<std::string>& q, const std::vector<std::string>& d, const nirx::EmbeddingTable& t,
           const nirx::KernelBank& b) { return nirx::score_document(q, d, t, b); });
  m.def(
      "rerank",
      [](const std::vector<std::string>& query,
         const std::vector<std::pair<std::string, std::vector<std::string>>>& candidates,
         const nirx::EmbeddingTable& table, const nirx::KernelBank& bank) {
        std::vector<nirx::Candidate> c;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          c.push_back({candidates[i].first, static_cast<int>(i + 1), candidates[i].second});
        }
        return nirx::rerank(query, c, table, bank);
      },
      py::arg("query"), py::arg("candidates"), py::arg("table"), py::arg("bank"),
      "Candidates are (doc_id, tokens) pairs in baseline order.");

  m.def("first_relevant_rank",
        [](const std::vector<std::string>& ranking, const nirx::Judgments& j, int threshold) {
          return nirx::first_relevant_rank(ranking, j, threshold);
        },
        py::arg("ranking"), py::arg("judgments"), py::arg("threshold") = 1);
  m.def("median_metric", [](const std::vector<std::optional<double>>& v) { return nirx::median_metric(v); });
  m.def("query_vector", [](const std::vector<std::string>& q, const nirx::EmbeddingTable& t) {
    return nirx::query_vector(q, t);
  });
  m.def("spherical_kmeans",
        [](const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed) {
          const auto r = nirx::spherical_kmeans(points, k, seed);
          return py::make_tuple(r.assignment, r.cost_history);
        },
        py::arg("points"), py::arg("k"), py::arg("seed"));

  py::class_<nirx::RunSnapshot, std::shared_ptr<nirx::RunSnapshot>>(m, "Snapshot")
      .def_property_readonly("query_count", [](const nirx::RunSnapshot& s) { return s.queries.size(); })
      .def_property_readonly("warnings", [](const nirx::RunSnapshot& s) { return s.warnings; })
      .def("save", [](const nirx::RunSnapshot& s, const std::string& path) { nirx::save_snapshot_file(s, path); })
      .def("diagnostics", [](const nirx::RunSnapshot& s) {
        return nirx::diagnostics_to_json(nirx::kernel_diagnostics(s));
      });
  m.def(
      "build_snapshot",
      [](const std::string& queries, const std::string& docs, const std::string& run, const std::string& qrels,
         const std::string& embeddings, const std::string& model_config, std::optional<std::size_t> clusters_k,
         std::uint64_t seed, int candidate_depth, const std::string& build_timestamp) {
        nirx::InputFiles f{queries, docs, run, qrels, embeddings, model_config, {}};
        nirx::BuildOptions o;
        o.clusters_k = clusters_k;
        o.seed = seed;
        o.candidate_depth = candidate_depth;
        o.build_timestamp = build_timestamp;
        py::gil_scoped_release release;
        return std::make_shared<nirx::RunSnapshot>(nirx::build_snapshot(f, o));
      },
      py::arg("queries"), py::arg("docs"), py::arg("run"), py::arg("qrels"), py::arg("embeddings"),
      py::arg("model_config"), py::arg("clusters_k") = std::nullopt, py::arg("seed") = 42,
      py::arg("candidate_depth") = 100, py::arg("build_timestamp") = "");
  m.def("load_snapshot", [](const std::string& path) {
    return std::make_shared<nirx::RunSnapshot>(nirx::load_snapshot_file(path));
  });

  py::class_<nirx::ExplorerApi>(m, "ExplorerApi")
      .def(py::init([](std::shared_ptr<nirx::RunSnapshot> s) {
             return std::make_unique<nirx::ExplorerApi>(std::shared_ptr<const nirx::RunSnapshot>(std::move(s)));
           }),
           py::arg("snapshot"))
      .def(
          "get",
          [](const nirx::ExplorerApi& api, const std::string& path, const nirx::QueryParams& params) {
            const auto r = api.get(path, params);
            return py::make_tuple(r.status, r.body);
          },
          py::arg("path"), py::arg("params") = nirx::QueryParams{},
          "Returns (status, json_body).");
}
