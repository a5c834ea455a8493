#pragma once

#include <cstddef>
#include <vector>

namespace ctxmatch {

// Dense row-major weights of a complete bipartite graph. Rows are the query
// side, columns the gallery side.
class WeightMatrix {
 public:
  // Throws std::invalid_argument for an empty shape, a size mismatch, or a
  // non-finite weight.
  WeightMatrix(std::size_t rows, std::size_t cols, std::vector<double> weights);
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return w_[r * cols_ + c]; }
  // Throws std::out_of_range.
  double at(std::size_t r, std::size_t c) const;
  // Throws std::invalid_argument on a non-finite value.
  void set(std::size_t r, std::size_t c, double value);

  WeightMatrix transposed() const;

 private:
  std::size_t rows_, cols_;
  std::vector<double> w_;
};

struct Edge {
  std::size_t row;
  std::size_t col;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Disjoint edges sorted by row, with the sum of their weights and the
// largest single weight.
struct Matching {
  std::vector<Edge> edges;
  double total_weight = 0.0;
  double confidence = 0.0;
};

double matching_weight(const std::vector<Edge>& edges, const WeightMatrix& w);
// Throws std::domain_error for an empty edge list (confidence undefined).
double matching_confidence(const std::vector<Edge>& edges, const WeightMatrix& w);

// Kuhn-Munkres, O(n^3) with n = max(rows, cols). Saturates the smaller side
// and maximizes the total weight. Any weight sign is accepted.
Matching km_max_weight(const WeightMatrix& w);

inline constexpr std::size_t kBruteForceMaxSide = 9;

// Exhaustive enumeration of injections of the smaller side into the larger
// one. Throws std::invalid_argument when min(rows, cols) > kBruteForceMaxSide.
Matching brute_force_matching(const WeightMatrix& w);

}  // namespace ctxmatch
