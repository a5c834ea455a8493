#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ctxmatch/dataio.hpp"
#include "ctxmatch/pipeline.hpp"
#include "ctxmatch/synth.hpp"

namespace py = pybind11;
using namespace ctxmatch;

namespace {

WeightMatrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows[0].size() : 0;
  std::vector<double> flat;
  flat.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("weight rows must all have the same length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return WeightMatrix(r, c, std::move(flat));
}

std::vector<std::size_t> nms_py(const std::vector<std::pair<BBox, double>>& dets, double threshold) {
  std::vector<ScoredBox> boxes;
  for (const auto& [box, score] : dets) boxes.push_back({box, score});
  return nms_indices(boxes, threshold);
}

}  // namespace

PYBIND11_MODULE(_ctxmatch, m) {
  m.doc() = "Context bipartite graph matching for person search.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_ValueError);

  py::class_<BBox>(m, "BBox")
      .def(py::init<double, double, double, double>(), py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"))
      .def_property_readonly("x1", &BBox::x1)
      .def_property_readonly("y1", &BBox::y1)
      .def_property_readonly("x2", &BBox::x2)
      .def_property_readonly("y2", &BBox::y2)
      .def("__eq__", [](const BBox& a, const BBox& b) { return a == b; })
      .def("__repr__", [](const BBox& b) {
        return "BBox(" + std::to_string(b.x1()) + ", " + std::to_string(b.y1()) + ", " + std::to_string(b.x2()) +
               ", " + std::to_string(b.y2()) + ")";
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"), "Intersection over union of two boxes.");
  m.def("nms", &nms_py, py::arg("detections"), py::arg("threshold"),
        "Greedy NMS over (box, score) pairs; returns kept indices by descending score.");
  m.def(
      "cosine_sim",
      [](std::vector<double> a, std::vector<double> b) {
        return cosine_sim(Embedding(std::move(a)), Embedding(std::move(b)));
      },
      py::arg("a"), py::arg("b"));

  py::class_<Matching>(m, "Matching")
      .def_property_readonly("edges",
                             [](const Matching& mt) {
                               std::vector<std::pair<std::size_t, std::size_t>> out;
                               for (const auto& e : mt.edges) out.emplace_back(e.row, e.col);
                               return out;
                             })
      .def_readonly("total_weight", &Matching::total_weight)
      .def_readonly("confidence", &Matching::confidence);

  m.def(
      "km_max_weight", [](const std::vector<std::vector<double>>& w) { return km_max_weight(to_matrix(w)); },
      py::arg("weights"), "Maximum-weight matching saturating the smaller side.");
  m.def(
      "brute_force_matching",
      [](const std::vector<std::vector<double>>& w) { return brute_force_matching(to_matrix(w)); },
      py::arg("weights"));

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("image_ids",
                             [](const Dataset& ds) {
                               std::vector<std::string> ids;
                               for (const auto& img : ds.images) ids.push_back(img.image_id);
                               return ids;
                             })
      .def_property_readonly("queries",
                             [](const Dataset& ds) {
                               std::vector<std::pair<std::string, std::size_t>> out;
                               for (const auto& q : ds.queries) out.emplace_back(q.image_id, q.person_index);
                               return out;
                             })
      .def_readonly("embedding_dim", &Dataset::embedding_dim)
      .def_readonly("metadata", &Dataset::metadata)
      .def("__len__", [](const Dataset& ds) { return ds.images.size(); });

  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("lookalike_fixture", &synth::lookalike_fixture, "Two-person look-alike scene with one gallery image.");
  m.def(
      "generate",
      [](std::size_t n_identities, std::size_t n_images, std::pair<std::size_t, std::size_t> group_size,
         std::size_t embedding_dim, double noise_sigma, std::size_t confusable_pairs, double confusable_angle,
         double cooccurrence, std::pair<std::size_t, std::size_t> detections_per_image, std::uint64_t seed) {
        synth::SynthParams p;
        p.n_identities = n_identities;
        p.n_images = n_images;
        p.group_size = {group_size.first, group_size.second};
        p.embedding_dim = embedding_dim;
        p.noise_sigma = noise_sigma;
        p.confusable_pairs = confusable_pairs;
        p.confusable_angle = confusable_angle;
        p.cooccurrence = cooccurrence;
        p.detections_per_image = {detections_per_image.first, detections_per_image.second};
        p.seed = seed;
        return synth::generate(p);
      },
      py::arg("n_identities") = 200, py::arg("n_images") = 500, py::arg("group_size") = std::pair{2, 3},
      py::arg("embedding_dim") = kDefaultEmbeddingDim, py::arg("noise_sigma") = 0.03,
      py::arg("confusable_pairs") = 0, py::arg("confusable_angle") = 0.25, py::arg("cooccurrence") = 1.0,
      py::arg("detections_per_image") = std::pair{3, 8}, py::arg("seed") = 0);

  py::class_<SearchResult>(m, "SearchResult")
      .def_readonly("image_id", &SearchResult::image_id)
      .def_property_readonly("person_index",
                             [](const SearchResult& r) -> std::optional<std::size_t> {
                               if (!r.matched) return std::nullopt;
                               return r.matched->index;
                             })
      .def_property_readonly("box",
                             [](const SearchResult& r) -> std::optional<BBox> {
                               if (!r.matched) return std::nullopt;
                               return r.matched->box;
                             })
      .def_readonly("similarity", &SearchResult::similarity)
      .def_readonly("revised", &SearchResult::revised);

  py::class_<QueryResults>(m, "QueryResults")
      .def_property_readonly("query", [](const QueryResults& q) { return std::pair{q.query.image_id, q.query.person_index}; })
      .def_readonly("results", &QueryResults::results)
      .def("ranked", [](const QueryResults& q) { return rank_results(q.results); });

  m.def(
      "search",
      [](const Dataset& ds, const std::string& mode, std::size_t k1, std::size_t k2, std::size_t threads) {
        py::gil_scoped_release release;
        return search_dataset(ds, parse_search_mode(mode), CbgmParams{k1, k2}, threads);
      },
      py::arg("dataset"), py::arg("mode") = "cbgm", py::arg("k1") = kSmallGalleryDefaults.k1,
      py::arg("k2") = kSmallGalleryDefaults.k2, py::arg("threads") = 1,
      "Runs every query of the dataset; one result per gallery image, in gallery order.");

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("map", &EvalReport::map)
      .def_readonly("cmc_k", &EvalReport::cmc_k)
      .def_readonly("cmc", &EvalReport::cmc)
      .def_readonly("detection_recall", &EvalReport::detection_recall)
      .def_readonly("detection_ap", &EvalReport::detection_ap)
      .def_readonly("per_query_ap", &EvalReport::per_query_ap)
      .def_readonly("iou_threshold", &EvalReport::iou_threshold)
      .def_property_readonly("top1", &EvalReport::top1);

  m.def(
      "evaluate",
      [](const Dataset& ds, const std::vector<QueryResults>& results, std::vector<std::size_t> cmc_k,
         double iou_threshold) { return evaluate_dataset(ds, results, cmc_k, iou_threshold); },
      py::arg("dataset"), py::arg("results"), py::arg("cmc_k") = std::vector<std::size_t>{1, 5, 10},
      py::arg("iou_threshold") = kDefaultIouThreshold);
}
