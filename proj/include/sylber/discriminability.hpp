#pragma once

// Discriminability Index over interpolation continua between two words.
//
// For each interpolation step alpha the similarities to the left and right
// endpoints are turned into p(left | alpha) after subtracting each side's
// minimum similarity. The risk of a decision boundary q is the mean over the
// alpha grid of p(right) for alpha < q and p(left) for alpha >= q; the DI of
// a pair is the minimum risk. 0 is perfectly categorical, 0.25 is what linear
// X-shaped curves give, 0.5 is chance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sylber/dtw.hpp"
#include "sylber/error.hpp"
#include "sylber/io.hpp"
#include "sylber/segmenter.hpp"
#include "sylber/types.hpp"

namespace sylber::metrics {

struct SimilarityCurvePair {
  std::vector<double> alphas;
  std::vector<double> sim_left;
  std::vector<double> sim_right;

  std::size_t size() const noexcept { return alphas.size(); }

  void validate() const {
    if (alphas.size() < 3) fail(ErrorCode::InvalidArgument, "curve needs at least 3 interpolation steps");
    if (sim_left.size() != alphas.size() || sim_right.size() != alphas.size()) {
      fail(ErrorCode::LengthMismatch, "alpha grid and similarity curves differ in length");
    }
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (!std::isfinite(alphas[i]) || !std::isfinite(sim_left[i]) || !std::isfinite(sim_right[i])) {
        fail(ErrorCode::NonFiniteValue, "curve step " + std::to_string(i) + " is not finite");
      }
      if (alphas[i] < 0.0 || alphas[i] > 1.0) fail(ErrorCode::InvalidArgument, "alpha outside [0, 1]");
      if (i > 0 && !(alphas[i] > alphas[i - 1])) fail(ErrorCode::UnsortedEntries, "alphas must strictly increase");
    }
  }
};

/// n equidistant points on [0, 1].
inline std::vector<double> alpha_grid(std::size_t n) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "grid needs at least two points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// p(left | alpha) = (simL - offL) / ((simL - offL) + (simR - offR)), 0.5
/// when the denominator vanishes.
inline double di_probability(double sim_left, double sim_right, double offset_left, double offset_right) {
  const double l = sim_left - offset_left;
  const double r = sim_right - offset_right;
  const double denom = l + r;
  if (std::abs(denom) < 1e-12) return 0.5;
  return std::clamp(l / denom, 0.0, 1.0);
}

struct DiscriminabilityResult {
  double di = 0.0;
  double alpha_star = 0.0;
  std::vector<double> p_left;
};

inline DiscriminabilityResult discriminability(const SimilarityCurvePair& pair) {
  pair.validate();
  const auto [lmin, lmax] = std::minmax_element(pair.sim_left.begin(), pair.sim_left.end());
  const auto [rmin, rmax] = std::minmax_element(pair.sim_right.begin(), pair.sim_right.end());
  if (*lmin == *lmax || *rmin == *rmax) fail(ErrorCode::DegenerateCurve, "similarity curve is flat at its offset");
  const double off_l = *lmin, off_r = *rmin;

  const std::size_t n = pair.size();
  DiscriminabilityResult out;
  out.p_left.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.p_left[i] = di_probability(pair.sim_left[i], pair.sim_right[i], off_l, off_r);
  }

  // prefix_right[i] = sum_{t<i} p_right(t); suffix_left[i] = sum_{t>=i} p_left(t)
  std::vector<double> prefix_right(n + 1, 0.0), suffix_left(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix_right[i + 1] = prefix_right[i] + (1.0 - out.p_left[i]);
  for (std::size_t i = n; i-- > 0;) suffix_left[i] = suffix_left[i + 1] + out.p_left[i];

  std::vector<double> candidates(pair.alphas);
  candidates.push_back(0.0);
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  out.di = std::numeric_limits<double>::infinity();
  for (double q : candidates) {
    const auto split = static_cast<std::size_t>(std::lower_bound(pair.alphas.begin(), pair.alphas.end(), q) -
                                                pair.alphas.begin());
    const double risk = (prefix_right[split] + suffix_left[split]) / static_cast<double>(n);
    if (risk < out.di) {
      out.di = risk;
      out.alpha_star = q;
    }
  }
  return out;
}

/// Unweighted mean of per-pair DI.
inline double di_aggregate(std::span<const SimilarityCurvePair> pairs) {
  if (pairs.empty()) fail(ErrorCode::InvalidArgument, "DI needs at least one curve pair");
  double sum = 0.0;
  for (const auto& p : pairs) sum += discriminability(p).di;
  return sum / static_cast<double>(pairs.size());
}

// ---- Curve construction from embeddings ------------------------------------

enum class CurveMode { FrameWise, SyllableWise };

/// Mean of the frames that pass the norm gate.
inline std::vector<double> pooled_speech_embedding(const FrameSequence& seq, double norm_threshold) {
  const auto mask = speech_mask(seq, norm_threshold);
  std::vector<double> mean(seq.dim(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < seq.n_frames(); ++i) {
    if (!mask[i]) continue;
    auto f = seq.frame(i);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += f[d];
    ++count;
  }
  if (count == 0) {
    fail(ErrorCode::AllFramesGated, seq.utterance_id() + ": no frame passes the norm threshold");
  }
  for (auto& v : mean) v /= static_cast<double>(count);
  return mean;
}

/// Similarity of each continuum sample to the two endpoints. Syllable-wise
/// mode compares norm-gated mean-pooled vectors by cosine; frame-wise mode
/// compares whole frame sequences with DTW.
inline SimilarityCurvePair build_curve_pair(const FrameSequence& left, const FrameSequence& right,
                                            std::span<const FrameSequence> continuum, std::vector<double> alphas,
                                            CurveMode mode, const SegmenterConfig& cfg = {}) {
  if (continuum.size() != alphas.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(continuum.size()) + " continuum samples for " +
                                        std::to_string(alphas.size()) + " alphas");
  }
  SimilarityCurvePair pair;
  pair.alphas = std::move(alphas);
  if (mode == CurveMode::SyllableWise) {
    const auto pl = pooled_speech_embedding(left, cfg.norm_threshold);
    const auto pr = pooled_speech_embedding(right, cfg.norm_threshold);
    for (const auto& sample : continuum) {
      const auto ps = pooled_speech_embedding(sample, cfg.norm_threshold);
      const std::span<const double> s(ps);
      pair.sim_left.push_back(vec::cosine(std::span<const double>(pl), s));
      pair.sim_right.push_back(vec::cosine(std::span<const double>(pr), s));
    }
  } else {
    for (const auto& sample : continuum) {
      pair.sim_left.push_back(dtw_similarity(left, sample));
      pair.sim_right.push_back(dtw_similarity(right, sample));
    }
  }
  pair.validate();
  return pair;
}

// ---- Curve text format ------------------------------------------------------
// One step per line: alpha<TAB>sim_left<TAB>sim_right; '#' starts a comment.

inline SimilarityCurvePair parse_curve_pair(std::string_view text, const std::string& context = "curve") {
  SimilarityCurvePair pair;
  std::size_t line_no = 0;
  for (auto raw : io::detail::split(text, '\n')) {
    ++line_no;
    auto line = io::detail::strip_cr(raw);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    const auto fields = io::detail::split(line, '\t');
    const std::string where = context + ":" + std::to_string(line_no);
    if (fields.size() != 3) fail(ErrorCode::ParseError, where + ": expected 3 tab-separated fields");
    pair.alphas.push_back(io::detail::parse_number<double>(fields[0], where));
    pair.sim_left.push_back(io::detail::parse_number<double>(fields[1], where));
    pair.sim_right.push_back(io::detail::parse_number<double>(fields[2], where));
  }
  pair.validate();
  return pair;
}

inline std::string format_curve_pair(const SimilarityCurvePair& pair) {
  std::string out = "# alpha\tsim_left\tsim_right\n";
  for (std::size_t i = 0; i < pair.size(); ++i) {
    out += io::detail::format_number(pair.alphas[i]) + '\t' + io::detail::format_number(pair.sim_left[i]) + '\t' +
           io::detail::format_number(pair.sim_right[i]) + '\n';
  }
  return out;
}

inline SimilarityCurvePair read_curve_pair(const std::filesystem::path& path) {
  return parse_curve_pair(io::detail::read_file(path), path.string());
}

}  // namespace sylber::metrics
