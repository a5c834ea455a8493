#include "ctxmatch/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace ctxmatch {

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, std::vector<double> weights)
    : rows_(rows), cols_(cols), w_(std::move(weights)) {
  if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("WeightMatrix: rows and cols must be >= 1");
  if (w_.size() != rows_ * cols_) throw std::invalid_argument("WeightMatrix: weight count does not match shape");
  for (double v : w_) {
    if (!std::isfinite(v)) throw std::invalid_argument("WeightMatrix: non-finite weight");
  }
}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, double fill)
    : WeightMatrix(rows, cols, std::vector<double>(rows * cols, fill)) {}

double WeightMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    throw std::out_of_range("WeightMatrix: index (" + std::to_string(r) + ", " + std::to_string(c) +
                            ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  return (*this)(r, c);
}

void WeightMatrix::set(std::size_t r, std::size_t c, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("WeightMatrix: non-finite weight");
  if (r >= rows_ || c >= cols_) throw std::out_of_range("WeightMatrix: index outside matrix");
  w_[r * cols_ + c] = value;
}

WeightMatrix WeightMatrix::transposed() const {
  std::vector<double> t(w_.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = (*this)(r, c);
  return WeightMatrix(cols_, rows_, std::move(t));
}

double matching_weight(const std::vector<Edge>& edges, const WeightMatrix& w) {
  double total = 0.0;
  for (const auto& e : edges) total += w.at(e.row, e.col);
  return total;
}

double matching_confidence(const std::vector<Edge>& edges, const WeightMatrix& w) {
  if (edges.empty()) throw std::domain_error("matching_confidence: undefined confidence for an empty matching");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : edges) best = std::max(best, w.at(e.row, e.col));
  return best;
}

namespace {

Matching finish(std::vector<Edge> edges, const WeightMatrix& w) {
  std::sort(edges.begin(), edges.end());
  Matching m;
  m.total_weight = matching_weight(edges, w);
  m.confidence = matching_confidence(edges, w);
  m.edges = std::move(edges);
  return m;
}

}  // namespace

Matching km_max_weight(const WeightMatrix& w) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  const std::size_t n = std::max(rows, cols);

  // Shift real weights to >= 0 and pad to n x n with a value strictly below
  // every shifted weight. Every perfect matching of the padded problem then
  // uses the same number of dummy cells, so its optimum restricted to real
  // cells is an optimal saturating matching of the original.
  double wmin = w(0, 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) wmin = std::min(wmin, w(r, c));
  constexpr double kDummy = -1.0;

  // Minimization over cost = -value, 1-based with a virtual column 0.
  std::vector<double> cost((n + 1) * (n + 1), 0.0);
  auto cost_at = [&](std::size_t i, std::size_t j) -> double& { return cost[i * (n + 1) + j]; };
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const bool real = i <= rows && j <= cols;
      cost_at(i, j) = real ? -(w(i - 1, j - 1) - wmin) : -kDummy;
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost_at(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Edge> edges;
  edges.reserve(std::min(rows, cols));
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i <= rows && j <= cols) edges.push_back({i - 1, j - 1});
  }
  return finish(std::move(edges), w);
}

Matching brute_force_matching(const WeightMatrix& w) {
  const bool by_rows = w.rows() <= w.cols();
  const std::size_t small = by_rows ? w.rows() : w.cols();
  const std::size_t large = by_rows ? w.cols() : w.rows();
  if (small > kBruteForceMaxSide) {
    throw std::invalid_argument("brute_force_matching: min(rows, cols) = " + std::to_string(small) +
                                " exceeds enumeration bound " + std::to_string(kBruteForceMaxSide));
  }
  auto weight = [&](std::size_t s, std::size_t l) { return by_rows ? w(s, l) : w(l, s); };

  std::vector<std::size_t> current(small), best(small);
  std::vector<char> taken(large, 0);
  double best_total = -std::numeric_limits<double>::infinity();

  std::function<void(std::size_t, double)> extend = [&](std::size_t depth, double total) {
    if (depth == small) {
      if (total > best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    for (std::size_t l = 0; l < large; ++l) {
      if (taken[l]) continue;
      taken[l] = 1;
      current[depth] = l;
      extend(depth + 1, total + weight(depth, l));
      taken[l] = 0;
    }
  };
  extend(0, 0.0);

  std::vector<Edge> edges;
  for (std::size_t s = 0; s < small; ++s) {
    edges.push_back(by_rows ? Edge{s, best[s]} : Edge{best[s], s});
  }
  return finish(std::move(edges), w);
}

}  // namespace ctxmatch
