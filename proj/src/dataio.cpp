#include "ctxmatch/dataio.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ctxmatch {

using json = nlohmann::ordered_json;

DataError::DataError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

DataError::DataError(const std::string& message) : std::runtime_error(message) {}

std::size_t Dataset::image_index(const std::string& image_id) const {
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].image_id == image_id) return i;
  }
  throw std::out_of_range("dataset has no image '" + image_id + "'");
}

const Detection& Dataset::query_detection(std::size_t query) const {
  const Query& q = queries.at(query);
  return images[image_index(q.image_id)].detections.at(q.person_index);
}

std::vector<QueryTruth> query_truth(const std::vector<GalleryImage>& images,
                                    const std::map<std::string, std::vector<GtBox>>& per_image,
                                    const std::vector<Query>& queries) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < images.size(); ++i) index.emplace(images[i].image_id, i);

  std::vector<QueryTruth> out;
  for (const Query& q : queries) {
    QueryTruth qt;
    const auto it = index.find(q.image_id);
    if (it != index.end() && q.person_index < images[it->second].detections.size()) {
      const Detection& d = images[it->second].detections[q.person_index];
      qt.identity = d.identity;
      if (!qt.identity) {
        const auto gt = per_image.find(q.image_id);
        double best = kDefaultIouThreshold;
        if (gt != per_image.end()) {
          for (const auto& b : gt->second) {
            const double v = iou(d.box, b.box);
            if (v >= best) {
              best = v;
              qt.identity = b.identity;
            }
          }
        }
      }
    }
    if (qt.identity) {
      for (const auto& img : images) {
        if (img.image_id == q.image_id) continue;
        const auto gt = per_image.find(img.image_id);
        if (gt == per_image.end()) continue;
        for (const auto& b : gt->second) {
          if (b.identity == *qt.identity) {
            qt.gallery_images.push_back(img.image_id);
            break;
          }
        }
      }
    }
    out.push_back(std::move(qt));
  }
  return out;
}

void validate(const Dataset& ds) {
  std::set<std::string> ids;
  for (const auto& img : ds.images) {
    if (!ids.insert(img.image_id).second) throw DataError("duplicate image id '" + img.image_id + "'");
    for (std::size_t d = 0; d < img.detections.size(); ++d) {
      const auto& det = img.detections[d];
      if (det.embedding.dim() != ds.embedding_dim) {
        throw DataError("image '" + img.image_id + "' detection " + std::to_string(d) + ": embedding dimension " +
                        std::to_string(det.embedding.dim()) + " != " + std::to_string(ds.embedding_dim));
      }
      validate(det);
    }
    if (!ds.ground_truth.per_image.contains(img.image_id)) {
      throw DataError("image '" + img.image_id + "' has no ground-truth entry");
    }
  }
  for (std::size_t qi = 0; qi < ds.queries.size(); ++qi) {
    const Query& q = ds.queries[qi];
    if (!ids.contains(q.image_id)) {
      throw DataError("query " + std::to_string(qi) + " references unknown image '" + q.image_id + "'");
    }
    if (q.person_index >= ds.images[ds.image_index(q.image_id)].detections.size()) {
      throw DataError("query " + std::to_string(qi) + " person_index " + std::to_string(q.person_index) +
                      " out of range for image '" + q.image_id + "'");
    }
  }
  if (ds.ground_truth.per_query.size() != ds.queries.size()) {
    throw DataError("ground truth covers " + std::to_string(ds.ground_truth.per_query.size()) + " of " +
                    std::to_string(ds.queries.size()) + " queries");
  }
}

namespace {

BBox parse_box(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be an array [x1, y1, x2, y2]");
  return BBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

json box_json(const BBox& b) { return json::array({b.x1(), b.y1(), b.x2(), b.y2()}); }

const json& field(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + name + "'");
  return *it;
}

Detection parse_detection(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("detection must be an object");
  Detection d{parse_box(field(j, "box")), field(j, "score_first").get<double>(),
              field(j, "score_second").get<double>(),
              Embedding(field(j, "embedding").get<std::vector<double>>()), std::nullopt};
  if (const auto it = j.find("identity"); it != j.end() && !it->is_null()) d.identity = it->get<std::string>();
  validate(d);
  return d;
}

struct PendingQuery {
  Query query;
  std::size_t line;
};

}  // namespace

Dataset parse_dataset(std::istream& in, const std::string& source) {
  Dataset ds;
  std::optional<std::size_t> declared_dim;
  std::size_t meta_line = 0;
  std::vector<PendingQuery> pending;
  std::map<std::string, std::size_t> image_lines;

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(text);
      if (!rec.is_object()) throw std::invalid_argument("record must be a JSON object");
      const std::string kind = field(rec, "kind").get<std::string>();
      if (kind == "meta") {
        if (meta_line != 0) throw std::invalid_argument("duplicate meta record (first on line " + std::to_string(meta_line) + ")");
        meta_line = line;
        for (const auto& [key, value] : rec.items()) {
          if (key == "kind") continue;
          if (key == "embedding_dim") {
            const auto dim = value.get<long long>();
            if (dim < 1) throw std::invalid_argument("embedding_dim must be >= 1");
            declared_dim = static_cast<std::size_t>(dim);
          } else {
            ds.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
          }
        }
      } else if (kind == "image") {
        GalleryImage img{field(rec, "id").get<std::string>(), {}};
        if (!image_lines.emplace(img.image_id, line).second) {
          throw std::invalid_argument("duplicate image id '" + img.image_id + "' (first on line " +
                                      std::to_string(image_lines[img.image_id]) + ")");
        }
        const json& dets = field(rec, "detections");
        if (!dets.is_array()) throw std::invalid_argument("detections must be an array");
        for (std::size_t i = 0; i < dets.size(); ++i) {
          try {
            img.detections.push_back(parse_detection(dets[i]));
          } catch (const std::exception& e) {
            throw std::invalid_argument("detection " + std::to_string(i) + ": " + e.what());
          }
          const std::size_t dim = img.detections.back().embedding.dim();
          if (!declared_dim) declared_dim = dim;
          if (dim != *declared_dim) {
            throw std::invalid_argument("detection " + std::to_string(i) + ": embedding dimension " +
                                        std::to_string(dim) + " != " + std::to_string(*declared_dim));
          }
        }
        std::vector<GtBox> truth;
        if (const auto it = rec.find("ground_truth"); it != rec.end()) {
          for (const auto& g : *it) truth.push_back({parse_box(field(g, "box")), field(g, "identity").get<std::string>()});
        } else {
          for (const auto& d : img.detections) {
            if (d.identity) truth.push_back({d.box, *d.identity});
          }
        }
        ds.ground_truth.per_image[img.image_id] = std::move(truth);
        ds.images.push_back(std::move(img));
      } else if (kind == "query") {
        const auto idx = field(rec, "person_index").get<long long>();
        if (idx < 0) throw std::invalid_argument("person_index must be >= 0");
        pending.push_back({{field(rec, "image_id").get<std::string>(), static_cast<std::size_t>(idx)}, line});
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw DataError(source, line, e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError(source, line, e.what());
    }
  }

  for (const auto& pq : pending) {
    const auto it = image_lines.find(pq.query.image_id);
    if (it == image_lines.end()) throw DataError(source, pq.line, "query references unknown image '" + pq.query.image_id + "'");
    const auto& img = ds.images[ds.image_index(pq.query.image_id)];
    if (pq.query.person_index >= img.detections.size()) {
      throw DataError(source, pq.line, "person_index " + std::to_string(pq.query.person_index) +
                                           " out of range for image '" + pq.query.image_id + "' with " +
                                           std::to_string(img.detections.size()) + " detections");
    }
    ds.queries.push_back(pq.query);
  }
  if (declared_dim) ds.embedding_dim = *declared_dim;
  ds.ground_truth.per_query = query_truth(ds.images, ds.ground_truth.per_image, ds.queries);
  validate(ds);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, path.string());
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  json meta;
  meta["kind"] = "meta";
  meta["embedding_dim"] = ds.embedding_dim;
  for (const auto& [k, v] : ds.metadata) meta[k] = v;
  out << meta.dump() << '\n';
  for (const auto& img : ds.images) {
    json rec;
    rec["kind"] = "image";
    rec["id"] = img.image_id;
    json dets = json::array();
    for (const auto& d : img.detections) {
      json j;
      j["box"] = box_json(d.box);
      j["score_first"] = d.score_first;
      j["score_second"] = d.score_second;
      j["embedding"] = std::vector<double>(d.embedding.values().begin(), d.embedding.values().end());
      if (d.identity) j["identity"] = *d.identity;
      dets.push_back(std::move(j));
    }
    rec["detections"] = std::move(dets);
    json truth = json::array();
    if (const auto it = ds.ground_truth.per_image.find(img.image_id); it != ds.ground_truth.per_image.end()) {
      for (const auto& g : it->second) truth.push_back(json{{"box", box_json(g.box)}, {"identity", g.identity}});
    }
    rec["ground_truth"] = std::move(truth);
    out << rec.dump() << '\n';
  }
  for (const auto& q : ds.queries) {
    out << json{{"kind", "query"}, {"image_id", q.image_id}, {"person_index", q.person_index}}.dump() << '\n';
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_dataset(ds, out);
  if (!out.flush()) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset suppress_duplicates(const Dataset& ds, double first_threshold, double second_threshold) {
  Dataset out = ds;
  std::map<std::string, std::vector<std::optional<std::size_t>>> remap;
  for (auto& img : out.images) {
    const auto& dets = img.detections;
    std::vector<ScoredBox> first;
    for (const auto& d : dets) first.push_back({d.box, d.score_first});
    const auto after_first = nms_indices(first, first_threshold);
    std::vector<ScoredBox> second;
    for (std::size_t i : after_first) second.push_back({dets[i].box, dets[i].score_second});
    const auto after_second = nms_indices(second, second_threshold);

    // Keep survivors in their original order so indices stay monotone.
    std::vector<std::size_t> keep;
    for (std::size_t i : after_second) keep.push_back(after_first[i]);
    std::sort(keep.begin(), keep.end());

    auto& map = remap[img.image_id];
    map.assign(dets.size(), std::nullopt);
    std::vector<Detection> kept;
    for (std::size_t i : keep) {
      map[i] = kept.size();
      kept.push_back(dets[i]);
    }
    img.detections = std::move(kept);
  }
  for (std::size_t qi = 0; qi < out.queries.size(); ++qi) {
    Query& q = out.queries[qi];
    const auto& idx = remap.at(q.image_id)[q.person_index];
    if (!idx) {
      throw DataError("query " + std::to_string(qi) + " (image '" + q.image_id + "', person " +
                      std::to_string(q.person_index) + ") was removed by NMS");
    }
    q.person_index = *idx;
  }
  out.ground_truth.per_query = query_truth(out.images, out.ground_truth.per_image, out.queries);
  return out;
}

// ---------------------------------------------------------------------------
// Results

namespace {

json report_json(const EvalReport& r) {
  json j;
  j["kind"] = "report";
  j["protocol"] = kProtocolName;
  j["conventions"] = json{{"true_positive", "IoU >= iou_threshold with a box of the query identity"},
                          {"search_ap", kSearchApConvention},
                          {"detection_ap", kDetectionApConvention},
                          {"gallery", "all images except the query image"}};
  j["iou_threshold"] = r.iou_threshold;
  j["map"] = r.map;
  json cmc = json::array();
  for (std::size_t i = 0; i < r.cmc_k.size(); ++i) cmc.push_back(json{{"k", r.cmc_k[i]}, {"value", r.cmc[i]}});
  j["cmc"] = std::move(cmc);
  j["detection_recall"] = r.detection_recall;
  j["detection_ap"] = r.detection_ap;
  j["per_query_ap"] = r.per_query_ap;
  return j;
}

EvalReport parse_report(const json& j) {
  EvalReport r;
  r.iou_threshold = field(j, "iou_threshold").get<double>();
  r.map = field(j, "map").get<double>();
  for (const auto& c : field(j, "cmc")) {
    r.cmc_k.push_back(field(c, "k").get<std::size_t>());
    r.cmc.push_back(field(c, "value").get<double>());
  }
  r.detection_recall = field(j, "detection_recall").get<double>();
  r.detection_ap = field(j, "detection_ap").get<double>();
  r.per_query_ap = field(j, "per_query_ap").get<std::vector<double>>();
  return r;
}

}  // namespace

void write_results(const std::optional<EvalReport>& report, const std::vector<QueryResults>& results,
                   std::ostream& out) {
  json header;
  header["kind"] = "header";
  header["format"] = "ctxmatch-results/1";
  header["queries"] = results.size();
  out << header.dump() << '\n';
  if (report) out << report_json(*report).dump() << '\n';
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    const auto& qr = results[qi];
    json rec;
    rec["kind"] = "query_results";
    rec["query"] = qi;
    rec["image_id"] = qr.query.image_id;
    rec["person_index"] = qr.query.person_index;
    json list = json::array();
    auto emit = [&](const SearchResult& r) {
      json e;
      e["image_id"] = r.image_id;
      if (r.matched) {
        e["person_index"] = r.matched->index;
        e["box"] = box_json(r.matched->box);
        e["similarity"] = r.similarity;
        e["revised"] = r.revised;
      } else {
        e["person_index"] = nullptr;
      }
      list.push_back(std::move(e));
    };
    for (const auto& r : rank_results(qr.results)) emit(r);
    for (const auto& r : qr.results) {
      if (!r.has_candidates()) emit(r);
    }
    rec["results"] = std::move(list);
    out << rec.dump() << '\n';
  }
}

void save_results(const std::optional<EvalReport>& report, const std::vector<QueryResults>& results,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_results(report, results, out);
  if (!out.flush()) throw std::runtime_error("write failed for '" + path.string() + "'");
}

ResultsFile parse_results(std::istream& in, const std::string& source) {
  ResultsFile file;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(text);
      const std::string kind = field(rec, "kind").get<std::string>();
      if (kind == "header") {
        continue;
      } else if (kind == "report") {
        file.report = parse_report(rec);
      } else if (kind == "query_results") {
        QueryResults qr{{field(rec, "image_id").get<std::string>(), field(rec, "person_index").get<std::size_t>()}, {}};
        for (const auto& e : field(rec, "results")) {
          SearchResult r;
          r.image_id = field(e, "image_id").get<std::string>();
          const json& idx = field(e, "person_index");
          if (!idx.is_null()) {
            r.matched = MatchedPerson{idx.get<std::size_t>(), parse_box(field(e, "box"))};
            r.similarity = field(e, "similarity").get<double>();
            r.revised = field(e, "revised").get<bool>();
          }
          qr.results.push_back(std::move(r));
        }
        file.queries.push_back(std::move(qr));
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw DataError(source, line, e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError(source, line, e.what());
    }
  }
  return file;
}

ResultsFile load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open results '" + path.string() + "'");
  return parse_results(in, path.string());
}

}  // namespace ctxmatch
