#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxmatch/cbgm.hpp"
#include "ctxmatch/evaluation.hpp"
#include "ctxmatch/similarity.hpp"

namespace ctxmatch {

// Loader failure. what() starts with "<source>:<line>: " when a record is
// at fault.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& source, std::size_t line, const std::string& message);
  explicit DataError(const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

struct Dataset {
  std::vector<GalleryImage> images;
  GroundTruth ground_truth;
  std::vector<Query> queries;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::map<std::string, std::string> metadata;

  // Throws std::out_of_range for an unknown id.
  std::size_t image_index(const std::string& image_id) const;
  const Detection& query_detection(std::size_t query) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Builds the per-query part of the ground truth from the image annotations.
// A query takes the identity of its detection; unlabeled query detections
// fall back to the best annotated box of the query image at IoU >= 0.5.
std::vector<QueryTruth> query_truth(const std::vector<GalleryImage>& images,
                                    const std::map<std::string, std::vector<GtBox>>& per_image,
                                    const std::vector<Query>& queries);

// Checks every Dataset invariant; throws DataError naming the violated rule.
void validate(const Dataset& ds);

// Line-delimited JSON, one record per line, "kind" in {meta, image, query}.
Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& ds, std::ostream& out);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Applies greedy NMS per image: first-head scores at `first_threshold`, then
// second-head scores at `second_threshold`. Queries are remapped; a
// suppressed query detection is an error.
Dataset suppress_duplicates(const Dataset& ds, double first_threshold, double second_threshold);

struct QueryResults {
  Query query;
  std::vector<SearchResult> results;  // one per gallery image
  friend bool operator==(const QueryResults&, const QueryResults&) = default;
};

struct ResultsFile {
  std::optional<EvalReport> report;
  std::vector<QueryResults> queries;
};

// Report block (when present) followed by one ranked result list per query.
// Output is byte-stable for identical inputs.
void write_results(const std::optional<EvalReport>& report, const std::vector<QueryResults>& results,
                   std::ostream& out);
void save_results(const std::optional<EvalReport>& report, const std::vector<QueryResults>& results,
                  const std::filesystem::path& path);
ResultsFile parse_results(std::istream& in, const std::string& source = "<stream>");
ResultsFile load_results(const std::filesystem::path& path);

}  // namespace ctxmatch
