#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <Eigen/Dense>

#include "regir/corpus.hpp"
#include "regir/dense.hpp"
#include "regir/eval.hpp"
#include "regir/experiment.hpp"
#include "regir/fusion.hpp"
#include "regir/lexical.hpp"
#include "regir/neural/drmm.hpp"
#include "regir/neural/reranker.hpp"
#include "regir/synthetic.hpp"
#include "regir/temporal.hpp"
#include "regir/text.hpp"

namespace py = pybind11;
using namespace regir;

namespace {

using Pairs = std::vector<std::pair<std::string, double>>;

RankedList to_list(const Pairs& pairs, const std::string& query_id = {}) {
  RankedList l{query_id, {}};
  for (const auto& [d, s] : pairs) l.entries.push_back({d, s, ""});
  return l;
}

Pairs to_pairs(const RankedList& l) {
  Pairs out;
  for (const auto& e : l.entries) out.emplace_back(e.doc_id, e.score);
  return out;
}

RankedList ids_to_list(const std::vector<std::string>& ids) {
  RankedList l;
  double s = static_cast<double>(ids.size());
  for (const auto& d : ids) l.entries.push_back({d, s--, ""});
  return l;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "regir core bindings";
  m.attr("__version__") = std::string(version());

  py::register_exception<Error>(m, "RegirError", PyExc_RuntimeError);

  m.def("tokenize", &tokenize, py::arg("text"));

  py::class_<Collection>(m, "Collection")
      .def_static(
          "load", [](const std::filesystem::path& p, const std::string& tag) { return ingest_collection(p, parse_collection_tag(tag)); },
          py::arg("path"), py::arg("tag") = "EU")
      .def("__len__", &Collection::size)
      .def("__contains__", [](const Collection& c, const std::string& id) { return c.contains(id); })
      .def("year_of", [](const Collection& c, const std::string& id) { return c.year_of(id); })
      .def("ids", [](const Collection& c) {
        std::vector<std::string> ids;
        for (const auto& d : c) ids.push_back(d.doc_id);
        return ids;
      })
      .def("document", [](const Collection& c, const std::string& id) {
        const auto& d = c.at(id);
        py::dict out;
        out["doc_id"] = d.doc_id;
        out["title"] = d.title;
        out["body"] = d.body;
        out["year"] = d.year;
        return out;
      });

  py::class_<PostingsIndex>(m, "PostingsIndex")
      .def_static(
          "build",
          [](const Collection& pool, bool idf_filter) { return PostingsIndex::build(pool, StopwordList::english(), idf_filter); },
          py::arg("pool"), py::arg("idf_filter") = true)
      .def_static("load", &PostingsIndex::load)
      .def("save", &PostingsIndex::save)
      .def("__len__", &PostingsIndex::doc_count)
      .def_property_readonly("avg_len", &PostingsIndex::avg_len)
      .def("process", [](const PostingsIndex& ix, const std::string& text) { return ix.pipeline().process(text); })
      .def("idf", [](const PostingsIndex& ix, const std::string& term) { return ix.idf().idf(term); })
      .def(
          "search",
          [](const PostingsIndex& ix, const std::string& text, std::size_t k, double k1, double b) {
            Bm25Params p{k1, b};
            p.validate();
            py::gil_scoped_release release;
            return to_pairs(ix.search({"", ix.pipeline().process(text)}, p, k));
          },
          py::arg("text"), py::arg("k") = 100, py::arg("k1") = 1.2, py::arg("b") = 0.75)
      .def(
          "score",
          [](const PostingsIndex& ix, const std::string& text, const std::string& doc_id, double k1, double b) {
            return ix.score(ix.pipeline().process(text), doc_id, {k1, b});
          },
          py::arg("text"), py::arg("doc_id"), py::arg("k1") = 1.2, py::arg("b") = 0.75);

  m.def(
      "centroid",
      [](const TokenList& tokens, const std::map<std::string, std::vector<double>>& vectors,
         const std::vector<TokenList>& docs) {
        if (vectors.empty()) throw Error("centroid: no vectors");
        VectorTable t(vectors.begin()->second.size());
        for (const auto& [w, v] : vectors) t.add(w, std::span<const double>(v));
        IdfTable idf = IdfTable::build(docs, StopwordList{});
        return centroid(tokens, WordVectors(std::move(t)), idf);
      },
      py::arg("tokens"), py::arg("vectors"), py::arg("docs"));

  m.def(
      "knn_search",
      [](const std::vector<double>& query, const std::vector<std::string>& keys,
         const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& matrix, std::size_t k) {
        if (static_cast<std::size_t>(matrix.rows()) != keys.size()) throw Error("knn_search: keys/rows mismatch");
        VectorTable t(static_cast<std::size_t>(matrix.cols()));
        for (std::size_t i = 0; i < keys.size(); ++i)
          t.add(keys[i], std::span<const double>(matrix.row(static_cast<Eigen::Index>(i)).data(),
                                                 static_cast<std::size_t>(matrix.cols())));
        return to_pairs(knn_search(query, DocVectorStore(std::move(t), "python"), k));
      },
      py::arg("query"), py::arg("keys"), py::arg("matrix"), py::arg("k"));

  m.def("normalize_scores", [](const Pairs& l) { return to_pairs(normalize_scores(to_list(l))); });
  m.def(
      "fuse", [](const Pairs& a, const Pairs& b, double alpha, std::size_t k) {
        return to_pairs(fuse(normalize_scores(to_list(a)), normalize_scores(to_list(b)), alpha, k));
      },
      py::arg("a"), py::arg("b"), py::arg("alpha"), py::arg("k"));

  m.def(
      "recall_at_k", [](const std::vector<std::string>& ranked, const std::set<std::string>& rel, std::size_t k) {
        return recall_at_k(ids_to_list(ranked), rel, k);
      },
      py::arg("ranked"), py::arg("relevant"), py::arg("k"));
  m.def(
      "ndcg_at_k", [](const std::vector<std::string>& ranked, const std::set<std::string>& rel, std::size_t k) {
        return ndcg_at_k(ids_to_list(ranked), rel, k);
      },
      py::arg("ranked"), py::arg("relevant"), py::arg("k"));
  m.def(
      "r_precision", [](const std::vector<std::string>& ranked, const std::set<std::string>& rel) {
        return r_precision(ids_to_list(ranked), rel);
      },
      py::arg("ranked"), py::arg("relevant"));

  m.def("hinge_loss", &neural::hinge_loss, py::arg("rel_pos"), py::arg("rel_neg"));
  m.def("rel_score", &neural::rel_score, py::arg("s_r"), py::arg("s_p"), py::arg("w_r"), py::arg("w_p"));
  m.def(
      "similarity_histogram",
      [](const std::vector<double>& sims, int bins) {
        Eigen::RowVectorXd row = Eigen::Map<const Eigen::RowVectorXd>(sims.data(), static_cast<Eigen::Index>(sims.size()));
        Eigen::VectorXd h = neural::similarity_histogram(row, bins);
        return std::vector<double>(h.data(), h.data() + h.size());
      },
      py::arg("similarities"), py::arg("bins"));

  m.def(
      "apply_date_filter",
      [](int query_year, const Pairs& list, int max_years, const Collection& pool) {
        return to_pairs(apply_filter(query_year, to_list(list), max_years, pool));
      },
      py::arg("query_year"), py::arg("ranked"), py::arg("max_years"), py::arg("pool"));

  m.def(
      "evaluate_run",
      [](const std::filesystem::path& run, const std::filesystem::path& qrels) {
        auto report = evaluate(read_run(run), load_qrels(qrels, nullptr, nullptr));
        py::dict out;
        out["r_at_20"] = report.mean_r_at_20;
        out["ndcg_at_20"] = report.mean_ndcg_at_20;
        out["rp"] = report.mean_rp;
        out["queries"] = report.per_query.size();
        return out;
      },
      py::arg("run"), py::arg("qrels"));

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config) {
        RunManifest manifest;
        {
          py::gil_scoped_release release;
          manifest = run_experiment(ExperimentConfig::load(config));
        }
        py::dict out;
        out["hash"] = manifest.hash;
        out["version"] = manifest.version;
        out["outputs"] = manifest.outputs;
        return out;
      },
      py::arg("config"));

  m.def(
      "make_toy_dataset",
      [](const std::filesystem::path& dir, std::uint64_t seed) {
        synthetic::ToyOptions opt;
        opt.seed = seed;
        synthetic::write_toy_dataset(synthetic::make_toy_dataset(opt), dir);
      },
      py::arg("dir"), py::arg("seed") = 7);
}
