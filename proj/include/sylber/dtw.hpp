#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/types.hpp"

namespace sylber::metrics {

struct DtwResult {
  /// Mean cosine similarity per step of the optimal path.
  double similarity = 0.0;
  double total_cost = 0.0;
  std::size_t path_length = 0;
};

namespace detail {

template <typename T>
std::vector<double> row_norms(const Matrix<T>& m, const char* which) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out[i] = vec::norm(m.row(i));
    if (out[i] == 0.0) fail(ErrorCode::ZeroNormFrame, std::string(which) + " frame " + std::to_string(i) + " has zero norm");
  }
  return out;
}

}  // namespace detail

/// DTW over steps (1,0), (0,1), (1,1) with per-cell cost 1 - cos(a_i, b_j).
/// Among minimum-cost paths the shortest wins. Returns the mean cosine
/// similarity along the chosen path, so a path of perfect matches scores
/// exactly 1 whatever its length.
template <typename A, typename B>
DtwResult dtw_align(const Matrix<A>& a, const Matrix<B>& b) {
  if (a.rows() == 0 || b.rows() == 0) fail(ErrorCode::InvalidArgument, "DTW needs non-empty sequences");
  if (a.cols() != b.cols()) {
    fail(ErrorCode::DimMismatch, "DTW inputs have dims " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()));
  }
  const auto na = detail::row_norms(a, "first");
  const auto nb = detail::row_norms(b, "second");
  const std::size_t n = a.rows(), m = b.rows();

  struct Cell {
    double cost;
    std::size_t len;
  };
  auto better = [](const Cell& x, const Cell& y) { return x.cost < y.cost || (x.cost == y.cost && x.len < y.len); };
  constexpr Cell kUnreachable{std::numeric_limits<double>::infinity(), 0};

  std::vector<Cell> prev(m, kUnreachable), cur(m, kUnreachable);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double step = 1.0 - vec::cosine(a.row(i), b.row(j), na[i], nb[j]);
      if (i == 0 && j == 0) {
        cur[j] = {step, 1};
        continue;
      }
      Cell best = kUnreachable;
      // diagonal first so it wins exact ties
      if (i > 0 && j > 0) best = prev[j - 1];
      if (i > 0 && better(prev[j], best)) best = prev[j];
      if (j > 0 && better(cur[j - 1], best)) best = cur[j - 1];
      cur[j] = {best.cost + step, best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell end = prev[m - 1];
  return {1.0 - end.cost / static_cast<double>(end.len), end.cost, end.len};
}

template <typename A, typename B>
double dtw_similarity(const Matrix<A>& a, const Matrix<B>& b) {
  return dtw_align(a, b).similarity;
}

inline double dtw_similarity(const FrameSequence& a, const FrameSequence& b) {
  return dtw_similarity(a.frames(), b.frames());
}

}  // namespace sylber::metrics
