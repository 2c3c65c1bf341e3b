#pragma once

// k-means codebooks over segment embeddings.
//
// Lloyd iterations from seeded k-means++ initialization. Distances and
// centroid sums are kept in double during training; the returned codebook is
// rounded to float. Everything runs on one thread so a given (points, k,
// seed) always yields the same bits.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/types.hpp"

namespace sylber {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  double rel_tol = 1e-6;
  /// Independent k-means++ restarts; the lowest final inertia wins.
  std::size_t restarts = 1;
};

struct KMeansResult {
  Codebook codebook;
  /// Inertia measured after each assignment step of the winning run.
  std::vector<double> inertia_history;
  std::vector<std::uint32_t> labels;
  /// Inertia of the returned codebook over the training points.
  double inertia = 0.0;
  /// Fewer than k distinct points: some centroids are duplicates.
  bool degenerate = false;
};

namespace detail {

/// Uniform double in [0, 1) built from the top 53 bits of the engine output,
/// so the sequence is identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

template <typename T>
std::pair<std::uint32_t, double> nearest(std::span<const T> x, const Matrix<double>& centroids) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = vec::squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return {best, best_d};
}

inline Matrix<double> kmeans_pp_init(const Matrix<float>& points, std::size_t k, std::mt19937_64& rng,
                                     bool& degenerate) {
  const std::size_t n = points.rows();
  Matrix<double> centroids(k, points.cols());
  auto copy_point = [&](std::size_t c, std::size_t p) {
    auto src = points.row(p);
    auto dst = centroids.row(c);
    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = src[d];
  };
  copy_point(0, uniform_index(rng, n));
  std::vector<double> d2(n);
  for (std::size_t p = 0; p < n; ++p) d2[p] = vec::squared_distance(points.row(p), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total <= 0.0) {
      degenerate = true;
      pick = uniform_index(rng, n);
    } else {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t p = 0; p < n; ++p) {
        acc += d2[p];
        if (acc > target && d2[p] > 0.0) {
          pick = p;
          break;
        }
      }
      while (d2[pick] <= 0.0 && pick > 0) --pick;
    }
    copy_point(c, pick);
    for (std::size_t p = 0; p < n; ++p) {
      d2[p] = std::min(d2[p], vec::squared_distance(points.row(p), centroids.row(c)));
    }
  }
  return centroids;
}

struct LloydRun {
  Matrix<double> centroids;
  std::vector<double> history;
  std::vector<std::uint32_t> labels;
  double inertia = 0.0;
};

inline LloydRun lloyd(const Matrix<float>& points, Matrix<double> centroids, const KMeansOptions& opt) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  const std::size_t dim = points.cols();
  LloydRun run;
  std::vector<std::uint32_t> labels(n);
  std::vector<double> dist(n);
  for (std::size_t it = 0;; ++it) {
    double inertia = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const auto [c, d] = nearest(points.row(p), centroids);
      labels[p] = c;
      dist[p] = d;
      inertia += d;
    }
    run.history.push_back(inertia);
    const bool converged =
        it > 0 && (inertia == 0.0 || (run.history[it - 1] - inertia) < opt.rel_tol * run.history[it - 1]);
    if (converged || inertia == 0.0 || it + 1 >= opt.max_iters) {
      run.inertia = inertia;
      break;
    }

    Matrix<double> sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      auto s = sums.row(labels[p]);
      auto x = points.row(p);
      for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
      ++counts[labels[p]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      auto dst = centroids.row(c);
      if (counts[c] > 0) {
        const double inv = 1.0 / static_cast<double>(counts[c]);
        auto s = sums.row(c);
        for (std::size_t d = 0; d < dim; ++d) dst[d] = s[d] * inv;
        continue;
      }
      // Empty cluster: reseed at the point farthest from its own centroid.
      std::size_t far = n;
      for (std::size_t p = 0; p < n; ++p) {
        if (!taken[p] && (far == n || dist[p] > dist[far])) far = p;
      }
      if (far == n) continue;
      taken[far] = true;
      dist[far] = 0.0;
      auto x = points.row(far);
      for (std::size_t d = 0; d < dim; ++d) dst[d] = x[d];
    }
  }
  run.centroids = std::move(centroids);
  run.labels = std::move(labels);
  return run;
}

}  // namespace detail

inline KMeansResult kmeans_train(const Matrix<float>& points, const KMeansOptions& opt) {
  if (opt.k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
  if (opt.max_iters == 0) fail(ErrorCode::InvalidArgument, "max_iters must be positive");
  if (!(opt.rel_tol > 0.0)) fail(ErrorCode::InvalidArgument, "rel_tol must be positive");
  if (points.cols() == 0) fail(ErrorCode::InvalidArgument, "points must have positive dimension");
  if (points.rows() < opt.k) {
    fail(ErrorCode::TooFewPoints, std::to_string(points.rows()) + " points cannot seed " + std::to_string(opt.k) +
                                      " clusters");
  }
  detail::require_finite(points.flat(), "training point");

  std::mt19937_64 rng(opt.seed);
  bool degenerate = false;
  detail::LloydRun best;
  bool have_best = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(opt.restarts, 1); ++r) {
    auto init = detail::kmeans_pp_init(points, opt.k, rng, degenerate);
    auto run = detail::lloyd(points, std::move(init), opt);
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }

  Matrix<float> rounded(opt.k, points.cols());
  for (std::size_t i = 0; i < rounded.size(); ++i) rounded.flat()[i] = static_cast<float>(best.centroids.flat()[i]);
  KMeansResult out{Codebook(std::move(rounded)), std::move(best.history), {}, 0.0, degenerate};
  out.labels.resize(points.rows());
  for (std::size_t p = 0; p < points.rows(); ++p) {
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < out.codebook.k(); ++c) {
      const double d = vec::squared_distance(points.row(p), out.codebook.centroid(c));
      if (d < best_d) {
        best_d = d;
        out.labels[p] = static_cast<std::uint32_t>(c);
      }
    }
    out.inertia += best_d;
  }
  return out;
}

/// Index of the closest centroid by squared Euclidean distance; ties go to
/// the lowest index.
template <typename T>
std::uint32_t nearest_token(std::span<const T> embedding, const Codebook& book) {
  if (embedding.size() != book.dim()) {
    fail(ErrorCode::DimMismatch, "embedding has dim " + std::to_string(embedding.size()) + ", codebook has " +
                                     std::to_string(book.dim()));
  }
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < book.k(); ++c) {
    const double d = vec::squared_distance(embedding, book.centroid(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

inline Segmentation assign_tokens(const Segmentation& seg, const Codebook& book) {
  std::vector<Segment> out = seg.segments();
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!out[j].embedding) {
      fail(ErrorCode::MissingEmbedding, seg.utterance_id() + ": segment " + std::to_string(j) + " has no embedding");
    }
    out[j].token_id = nearest_token(std::span<const float>(*out[j].embedding), book);
  }
  return Segmentation(std::move(out), seg.n_frames(), seg.frame_rate_hz(), seg.utterance_id());
}

/// Row t of the result is the centroid of tokens[t].
inline Matrix<float> restore_embeddings(std::span<const std::uint32_t> tokens, const Codebook& book) {
  Matrix<float> out(tokens.size(), book.dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= book.k()) {
      fail(ErrorCode::TokenOutOfRange, "token " + std::to_string(tokens[t]) + " at position " + std::to_string(t) +
                                           " exceeds vocabulary of " + std::to_string(book.k()));
    }
    auto src = book.centroid(tokens[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

}  // namespace sylber
