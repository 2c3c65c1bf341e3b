#pragma once

// Linear-time greedy syllable segmentation over frame embeddings.
//
// Three passes: an L2-norm gate separates speech from non-speech, a single
// left-to-right sweep opens a new segment whenever adjacent-frame cosine
// similarity drops below the merge threshold, and a final pass re-places each
// boundary between touching segments inside the window spanned by the
// midpoints of its two neighbours.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/types.hpp"

namespace sylber {

struct SegmenterConfig {
  double norm_threshold = 3.09;
  double merge_threshold = 0.8;

  void validate() const {
    if (!(norm_threshold > 0.0) || !std::isfinite(norm_threshold)) {
      fail(ErrorCode::InvalidArgument, "norm threshold must be positive");
    }
    if (!(merge_threshold > -1.0 && merge_threshold <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "merge threshold must lie in (-1, 1]");
    }
  }
};

/// mask[i] is true when frame i has L2 norm at or above the threshold.
/// Zero-norm frames are never speech.
inline std::vector<bool> speech_mask(const FrameSequence& seq, double norm_threshold) {
  std::vector<bool> mask(seq.n_frames());
  for (std::size_t i = 0; i < seq.n_frames(); ++i) {
    const double n = vec::norm(seq.frame(i));
    mask[i] = n > 0.0 && n >= norm_threshold;
  }
  return mask;
}

namespace detail {

inline std::vector<double> segment_mean(const FrameSequence& seq, const Segment& s) {
  std::vector<double> mean(seq.dim(), 0.0);
  for (std::size_t i = s.start_frame; i < s.end_frame; ++i) {
    auto f = seq.frame(i);
    for (std::size_t d = 0; d < f.size(); ++d) mean[d] += f[d];
  }
  const double inv = 1.0 / static_cast<double>(s.length());
  for (auto& m : mean) m *= inv;
  return mean;
}

}  // namespace detail

/// Monotonic agglomeration: frame i opens a segment when it is speech and
/// either no segment is open or cos(frame_i, frame_{i-1}) < merge_threshold.
inline Segmentation greedy_agglomerate(const FrameSequence& seq, const std::vector<bool>& mask,
                                       double merge_threshold) {
  const std::size_t n = seq.n_frames();
  if (mask.size() != n) {
    fail(ErrorCode::LengthMismatch, "mask has " + std::to_string(mask.size()) + " entries for " + std::to_string(n) +
                                        " frames");
  }
  std::vector<Segment> segments;
  bool open = false;
  double prev_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) {
      open = false;
      continue;
    }
    const double cur_norm = vec::norm(seq.frame(i));
    if (cur_norm == 0.0) fail(ErrorCode::ZeroNormFrame, "speech frame " + std::to_string(i) + " has zero norm");
    if (!open || vec::cosine(seq.frame(i), seq.frame(i - 1), cur_norm, prev_norm) < merge_threshold) {
      segments.push_back(Segment{i, i + 1, std::nullopt, std::nullopt});
      open = true;
    } else {
      segments.back().end_frame = i + 1;
    }
    prev_norm = cur_norm;
  }
  return Segmentation(std::move(segments), n, seq.frame_rate_hz(), seq.utterance_id());
}

/// For every pair of touching segments (end of one equals start of the next),
/// moves their shared boundary b to the position in (mid_left, mid_right]
/// maximizing
///   sum_{i=mid_left}^{b-1} cos(frame_i, avg_left) + sum_{i=b}^{mid_right} cos(frame_i, avg_right)
/// where averages and midpoints come from the input segmentation. Ties go to
/// the earliest position. Segment count never changes and no segment empties.
inline Segmentation refine_boundaries(const FrameSequence& seq, const Segmentation& seg) {
  if (seg.size() < 2) return seg;
  if (seg.n_frames() != seq.n_frames()) {
    fail(ErrorCode::ShapeMismatch, "segmentation covers " + std::to_string(seg.n_frames()) + " frames, sequence has " +
                                       std::to_string(seq.n_frames()));
  }
  const auto& in = seg.segments();
  std::vector<std::vector<double>> averages;
  averages.reserve(in.size());
  std::vector<double> avg_norms;
  avg_norms.reserve(in.size());
  for (const auto& s : in) {
    averages.push_back(detail::segment_mean(seq, s));
    avg_norms.push_back(vec::norm(std::span<const double>(averages.back())));
  }

  std::vector<Segment> out = in;
  std::vector<double> to_left;
  std::vector<double> to_right;
  for (std::size_t k = 0; k + 1 < in.size(); ++k) {
    if (in[k].end_frame != in[k + 1].start_frame) continue;
    const std::size_t lo = in[k].midpoint();
    const std::size_t hi = in[k + 1].midpoint();
    const std::size_t width = hi - lo + 1;
    to_left.assign(width, 0.0);
    to_right.assign(width, 0.0);
    for (std::size_t i = lo; i <= hi; ++i) {
      auto f = seq.frame(i);
      const double fn = vec::norm(f);
      if (fn == 0.0) continue;
      const std::span<const double> l(averages[k]);
      const std::span<const double> r(averages[k + 1]);
      to_left[i - lo] = avg_norms[k] > 0.0 ? vec::cosine(f, l, fn, avg_norms[k]) : 0.0;
      to_right[i - lo] = avg_norms[k + 1] > 0.0 ? vec::cosine(f, r, fn, avg_norms[k + 1]) : 0.0;
    }
    // score(b) for b = lo+1: left takes frame lo, right takes lo+1..hi.
    double score = to_left[0];
    for (std::size_t t = 1; t < width; ++t) score += to_right[t];
    double best = score;
    std::size_t best_b = lo + 1;
    for (std::size_t b = lo + 2; b <= hi; ++b) {
      // frame b-1 switches from the right segment to the left one
      score += to_left[b - 1 - lo] - to_right[b - 1 - lo];
      if (score > best) {
        best = score;
        best_b = b;
      }
    }
    out[k].end_frame = best_b;
    out[k + 1].start_frame = best_b;
  }
  for (auto& s : out) s.embedding.reset();
  return Segmentation(std::move(out), seg.n_frames(), seg.frame_rate_hz(), seg.utterance_id());
}

/// Full pipeline: norm gate, agglomeration, boundary refinement.
inline Segmentation segment(const FrameSequence& seq, const SegmenterConfig& cfg = {}) {
  cfg.validate();
  const auto mask = speech_mask(seq, cfg.norm_threshold);
  const auto coarse = greedy_agglomerate(seq, mask, cfg.merge_threshold);
  return refine_boundaries(seq, coarse);
}

/// Each segment gets the mean of its frames as its embedding.
inline Segmentation with_segment_embeddings(const FrameSequence& seq, const Segmentation& seg) {
  std::vector<Segment> out = seg.segments();
  for (auto& s : out) {
    const auto mean = detail::segment_mean(seq, s);
    s.embedding = std::vector<float>(mean.begin(), mean.end());
  }
  return Segmentation(std::move(out), seg.n_frames(), seg.frame_rate_hz(), seg.utterance_id());
}

// ---- Norm threshold calibration ------------------------------------------

/// Point between the noise and signal means where the two Gaussian densities
/// are equal. Falls back to the midpoint for equal variances.
inline double calibrate_norm_threshold(const GaussianStats& signal, const GaussianStats& noise) {
  if (!(signal.std > 0.0) || !(noise.std > 0.0)) fail(ErrorCode::InvalidArgument, "standard deviations must be positive");
  if (!(signal.mean > noise.mean)) fail(ErrorCode::InvalidArgument, "signal mean must exceed noise mean");

  const double mn = noise.mean, sn = noise.std, ms = signal.mean, ss = signal.std;
  if (sn == ss) return 0.5 * (mn + ms);

  // f(x) = (x-mn)^2/(2 sn^2) + ln sn - (x-ms)^2/(2 ss^2) - ln ss = a x^2 + b x + c
  const double an = 1.0 / (2.0 * sn * sn);
  const double as = 1.0 / (2.0 * ss * ss);
  const double a = an - as;
  const double b = -2.0 * (an * mn - as * ms);
  const double c = an * mn * mn - as * ms * ms + std::log(sn) - std::log(ss);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) fail(ErrorCode::NoRootInRange, "density equality has no real solution");
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  double roots[2] = {q / a, q != 0.0 ? c / q : std::numeric_limits<double>::quiet_NaN()};

  auto f = [&](double x) { return a * x * x + b * x + c; };
  auto df = [&](double x) { return 2.0 * a * x + b; };
  for (double r : roots) {
    if (!std::isfinite(r)) continue;
    for (int it = 0; it < 3; ++it) {
      const double d = df(r);
      if (d == 0.0) break;
      r -= f(r) / d;
    }
    if (r > mn && r <= ms) return r;
  }
  fail(ErrorCode::NoRootInRange, "no density-equality point between noise mean " + std::to_string(mn) +
                                     " and signal mean " + std::to_string(ms));
}

/// EMA update of noise statistics from a batch of frame norms. Mean and
/// second moment are smoothed with the same decay. An accumulator with
/// count 0 is initialized from the batch directly.
inline GaussianStats update_noise_stats(const GaussianStats& current, std::span<const double> batch_norms,
                                        double decay) {
  if (batch_norms.empty()) fail(ErrorCode::EmptyBatch, "noise statistics need a non-empty batch");
  if (!(decay > 0.0 && decay < 1.0)) fail(ErrorCode::InvalidArgument, "decay must lie in (0, 1)");
  const auto batch = GaussianStats::from_samples(batch_norms);
  if (current.count == 0) return batch;

  const double mean = decay * current.mean + (1.0 - decay) * batch.mean;
  const double second = decay * (current.variance() + current.mean * current.mean) +
                        (1.0 - decay) * (batch.variance() + batch.mean * batch.mean);
  const double var = std::max(second - mean * mean, 0.0);
  GaussianStats out{mean, std::sqrt(var), current.count + batch_norms.size()};
  if (out.std <= 0.0) out.std = std::numeric_limits<double>::min();
  return out;
}

}  // namespace sylber
