#pragma once

// Generators and brute-force oracles shared by the unit and acceptance tests.
// Oracles deliberately avoid the library's helpers and compute everything
// from the raw definitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sylber/sylber.hpp"

namespace sylber::testing {

inline std::filesystem::path source_dir() { return SYLBER_SOURCE_DIR; }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sylber_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---- Random data ------------------------------------------------------------

inline std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(g(rng));
  return v;
}

inline FrameSequence random_frames(std::mt19937_64& rng, std::size_t n, std::size_t dim, double scale = 1.0,
                                   float rate = 50.0f, const std::string& id = "utt") {
  std::vector<float> data;
  data.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = random_vector(rng, dim, scale);
    data.insert(data.end(), v.begin(), v.end());
  }
  return FrameSequence(dim, std::move(data), rate, id);
}

/// Unit vectors whose pairwise cosine is at most max_cos.
inline std::vector<std::vector<double>> spread_directions(std::mt19937_64& rng, std::size_t count, std::size_t dim,
                                                          double max_cos = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> dirs;
  while (dirs.size() < count) {
    std::vector<double> v(dim);
    double n2 = 0.0;
    for (auto& x : v) {
      x = g(rng);
      n2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v) x *= inv;
    bool ok = true;
    for (const auto& d : dirs) {
      double c = 0.0;
      for (std::size_t i = 0; i < dim; ++i) c += d[i] * v[i];
      if (c > max_cos) {
        ok = false;
        break;
      }
    }
    if (ok) dirs.push_back(std::move(v));
  }
  return dirs;
}

struct SyntheticUtterance {
  FrameSequence frames;
  Segmentation truth;
};

struct SyntheticShape {
  std::size_t min_segments = 20;
  std::size_t max_segments = 60;
  std::size_t min_len = 3;
  std::size_t max_len = 12;
  std::size_t dim = 32;
  std::size_t n_directions = 24;
  double amplitude = 10.0;
  double noise = 0.05;
  /// Probability of a silence gap before a segment.
  double gap_prob = 0.2;
  std::size_t max_gap = 6;
};

/// Piecewise-constant speech: each segment is amplitude * direction plus
/// Gaussian noise; adjacent segments never share a direction. Silence
/// frames are pure low-amplitude noise.
inline SyntheticUtterance synthetic_utterance(std::mt19937_64& rng, const SyntheticShape& shape,
                                              const std::string& id = "synthetic") {
  const auto dirs = spread_directions(rng, shape.n_directions, shape.dim);
  std::uniform_int_distribution<std::size_t> n_seg(shape.min_segments, shape.max_segments);
  std::uniform_int_distribution<std::size_t> len(shape.min_len, shape.max_len);
  std::uniform_int_distribution<std::size_t> gap_len(1, shape.max_gap);
  std::uniform_int_distribution<std::size_t> pick(0, dirs.size() - 1);
  std::bernoulli_distribution gap(shape.gap_prob);
  std::normal_distribution<double> noise(0.0, shape.noise);

  std::vector<float> data;
  std::vector<Segment> truth;
  std::size_t frame = 0;
  std::size_t prev_dir = dirs.size();
  auto push_frame = [&](const std::vector<double>* dir) {
    for (std::size_t d = 0; d < shape.dim; ++d) {
      const double base = dir ? shape.amplitude * (*dir)[d] : 0.0;
      data.push_back(static_cast<float>(base + noise(rng)));
    }
    ++frame;
  };
  const std::size_t count = n_seg(rng);
  for (std::size_t s = 0; s < count; ++s) {
    if (gap(rng)) {
      const std::size_t g = gap_len(rng);
      for (std::size_t i = 0; i < g; ++i) push_frame(nullptr);
      prev_dir = dirs.size();
    }
    std::size_t d = pick(rng);
    while (d == prev_dir) d = pick(rng);
    prev_dir = d;
    const std::size_t l = len(rng);
    const std::size_t start = frame;
    for (std::size_t i = 0; i < l; ++i) push_frame(&dirs[d]);
    truth.push_back({start, frame, std::nullopt, std::nullopt});
  }
  if (gap(rng)) {
    const std::size_t g = gap_len(rng);
    for (std::size_t i = 0; i < g; ++i) push_frame(nullptr);
  }
  FrameSequence seq(shape.dim, std::move(data), 50.0f, id);
  Segmentation seg(std::move(truth), frame, 50.0f, id);
  return {std::move(seq), std::move(seg)};
}

// ---- Segmentation oracle ---------------------------------------------------

/// Builds the full n x n cosine matrix and applies the merge rule to it.
inline std::vector<std::pair<std::size_t, std::size_t>> brute_force_agglomerate(const FrameSequence& seq,
                                                                                const std::vector<bool>& mask,
                                                                                double merge_threshold) {
  const std::size_t n = seq.n_frames();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (float v : seq.frame(i)) s += static_cast<double>(v) * v;
    norms[i] = std::sqrt(s);
  }
  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      auto a = seq.frame(i);
      auto b = seq.frame(j);
      for (std::size_t k = 0; k < seq.dim(); ++k) d += static_cast<double>(a[k]) * b[k];
      sim[i * n + j] = d / (norms[i] * norms[j]);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const bool split = i == 0 || !mask[i - 1] || sim[i * n + (i - 1)] < merge_threshold;
    if (split) {
      out.emplace_back(i, i + 1);
    } else {
      out.back().second = i + 1;
    }
  }
  return out;
}

inline std::vector<std::pair<std::size_t, std::size_t>> spans_of(const Segmentation& seg) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : seg.segments()) out.emplace_back(s.start_frame, s.end_frame);
  return out;
}

// ---- Calibration oracle ----------------------------------------------------

inline double gaussian_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

/// Grid point in (mu_n, mu_s] minimizing |pdf_n - pdf_s|.
inline double grid_search_threshold(double mu_n, double sd_n, double mu_s, double sd_s, double step = 1e-6) {
  double best_x = mu_s;
  double best = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<std::size_t>(std::ceil((mu_s - mu_n) / step));
  for (std::size_t i = 1; i <= steps; ++i) {
    const double x = std::min(mu_n + static_cast<double>(i) * step, mu_s);
    const double diff = std::abs(gaussian_pdf(x, mu_n, sd_n) - gaussian_pdf(x, mu_s, sd_s));
    if (diff < best) {
      best = diff;
      best_x = x;
    }
  }
  return best_x;
}

// ---- Clustering oracles ------------------------------------------------------

using DenseTable = std::vector<std::vector<std::uint64_t>>;

inline DenseTable random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::uint64_t max_count,
                               double zero_prob = 0.3) {
  std::uniform_int_distribution<std::uint64_t> count(1, max_count);
  std::bernoulli_distribution zero(zero_prob);
  DenseTable t(rows, std::vector<std::uint64_t>(cols, 0));
  for (auto& r : t) {
    for (auto& c : r) c = zero(rng) ? 0 : count(rng);
  }
  return t;
}

inline metrics::ContingencyTable to_contingency(const DenseTable& t) {
  metrics::ContingencyTable out;
  for (std::size_t c = 0; c < t.size(); ++c) {
    for (std::size_t l = 0; l < t[c].size(); ++l) out.add(c, l, t[c][l]);
  }
  return out;
}

inline double entropy_bits(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= c / total * std::log2(c / total);
  }
  return h;
}

/// I(C;S) = H(C) + H(S) - H(C,S).
inline double mi_oracle(const DenseTable& t) {
  std::vector<double> rows, cols, joint;
  cols.assign(t.empty() ? 0 : t[0].size(), 0.0);
  for (const auto& r : t) {
    double rs = 0.0;
    for (std::size_t l = 0; l < r.size(); ++l) {
      rs += static_cast<double>(r[l]);
      cols[l] += static_cast<double>(r[l]);
      joint.push_back(static_cast<double>(r[l]));
    }
    rows.push_back(rs);
  }
  return entropy_bits(rows) + entropy_bits(cols) - entropy_bits(joint);
}

/// (cluster purity, syllable purity) by direct scans.
inline std::pair<double, double> purity_oracle(const DenseTable& t) {
  double total = 0.0, cp = 0.0, sp = 0.0;
  const std::size_t cols = t.empty() ? 0 : t[0].size();
  for (const auto& r : t) {
    std::uint64_t m = 0;
    for (auto v : r) {
      m = std::max(m, v);
      total += static_cast<double>(v);
    }
    cp += static_cast<double>(m);
  }
  for (std::size_t l = 0; l < cols; ++l) {
    std::uint64_t m = 0;
    for (const auto& r : t) m = std::max(m, r[l]);
    sp += static_cast<double>(m);
  }
  return {cp / total, sp / total};
}

// ---- DTW oracle ------------------------------------------------------------

struct PathScore {
  double cost;
  std::size_t length;
};

/// Enumerates every monotone path over steps (1,0), (0,1), (1,1) and keeps
/// the lowest total 1 - cos, shortest on ties.
inline double dtw_exhaustive(const Matrix<double>& a, const Matrix<double>& b) {
  auto cosine = [&](std::size_t i, std::size_t j) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      d += a(i, k) * b(j, k);
      na += a(i, k) * a(i, k);
      nb += b(j, k) * b(j, k);
    }
    return d / std::sqrt(na * nb);
  };
  PathScore best{std::numeric_limits<double>::infinity(), 0};
  const std::size_t n = a.rows(), m = b.rows();
  auto walk = [&](auto&& self, std::size_t i, std::size_t j, double cost, std::size_t len) -> void {
    cost += 1.0 - cosine(i, j);
    ++len;
    if (i + 1 == n && j + 1 == m) {
      const double eps = 1e-12;
      if (cost < best.cost - eps || (std::abs(cost - best.cost) <= eps && len < best.length)) best = {cost, len};
      return;
    }
    if (i + 1 < n) self(self, i + 1, j, cost, len);
    if (j + 1 < m) self(self, i, j + 1, cost, len);
    if (i + 1 < n && j + 1 < m) self(self, i + 1, j + 1, cost, len);
  };
  walk(walk, 0, 0, 0.0, 0);
  return 1.0 - best.cost / static_cast<double>(best.length);
}

// ---- Codec adversarial sequences --------------------------------------------

/// Runs alternate between tokens and silence with lengths drawn from a mix of
/// the field-width edge cases and uniform values.
inline codec::FrameTokenSequence adversarial_tokens(std::mt19937_64& rng, std::uint32_t vocab) {
  static const std::size_t kEdges[] = {1, 7, 8, 15, 16, 17, 31, 32, 33};
  std::uniform_int_distribution<std::size_t> edge(0, std::size(kEdges) - 1);
  std::uniform_int_distribution<std::size_t> uniform(1, 40);
  std::uniform_int_distribution<std::size_t> runs(0, 30);
  std::uniform_int_distribution<std::uint32_t> tok(0, vocab - 1);
  std::bernoulli_distribution coin(0.5);
  auto run_len = [&] { return coin(rng) ? kEdges[edge(rng)] : uniform(rng); };

  codec::FrameTokenSequence seq{{}, 50.0f, vocab};
  const std::size_t n = runs(rng);
  if (coin(rng)) seq.symbols.insert(seq.symbols.end(), run_len(), codec::kSilence);
  for (std::size_t r = 0; r < n; ++r) {
    seq.symbols.insert(seq.symbols.end(), run_len(), static_cast<std::int32_t>(tok(rng)));
    if (coin(rng)) seq.symbols.insert(seq.symbols.end(), run_len(), codec::kSilence);
  }
  return seq;
}

}  // namespace sylber::testing
