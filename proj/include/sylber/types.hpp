#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/matrix.hpp"

namespace sylber {

namespace detail {

template <typename Range>
void require_finite(const Range& values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::NonFiniteValue, std::string(what) + " value " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace detail

/// Per-frame embeddings of one utterance at a fixed frame rate.
class FrameSequence {
 public:
  FrameSequence() = default;

  FrameSequence(Matrix<float> frames, float frame_rate_hz, std::string utterance_id = {})
      : frames_(std::move(frames)), frame_rate_hz_(frame_rate_hz), utterance_id_(std::move(utterance_id)) {
    if (!(frame_rate_hz_ > 0.0f) || !std::isfinite(frame_rate_hz_)) {
      fail(ErrorCode::InvalidArgument, "frame rate must be positive, got " + std::to_string(frame_rate_hz_));
    }
    if (frames_.cols() == 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
    detail::require_finite(frames_.flat(), "frame");
  }

  FrameSequence(std::size_t dim, std::vector<float> data, float frame_rate_hz, std::string utterance_id = {})
      : FrameSequence(make_matrix(dim, std::move(data)), frame_rate_hz, std::move(utterance_id)) {}

  std::size_t dim() const noexcept { return frames_.cols(); }
  std::size_t n_frames() const noexcept { return frames_.rows(); }
  float frame_rate_hz() const noexcept { return frame_rate_hz_; }
  const std::string& utterance_id() const noexcept { return utterance_id_; }
  const Matrix<float>& frames() const noexcept { return frames_; }
  std::span<const float> frame(std::size_t i) const noexcept { return frames_.row(i); }
  double duration_sec() const noexcept { return static_cast<double>(n_frames()) / frame_rate_hz_; }

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;

 private:
  static Matrix<float> make_matrix(std::size_t dim, std::vector<float> data) {
    if (dim == 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
    if (data.size() % dim != 0) {
      fail(ErrorCode::ShapeMismatch, std::to_string(data.size()) + " values is not a multiple of dim " +
                                         std::to_string(dim));
    }
    const std::size_t rows = data.size() / dim;
    return Matrix<float>(rows, dim, std::move(data));
  }

  Matrix<float> frames_;
  float frame_rate_hz_ = 50.0f;
  std::string utterance_id_;
};

/// Half-open frame span [start_frame, end_frame).
struct Segment {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::optional<std::vector<float>> embedding{};
  std::optional<std::uint32_t> token_id{};

  std::size_t length() const noexcept { return end_frame - start_frame; }
  std::size_t midpoint() const noexcept { return start_frame + length() / 2; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Ordered, non-overlapping segments over an utterance. Frames not covered by
/// any segment are non-speech.
class Segmentation {
 public:
  Segmentation() = default;

  Segmentation(std::vector<Segment> segments, std::size_t n_frames, float frame_rate_hz,
               std::string utterance_id = {})
      : segments_(std::move(segments)),
        n_frames_(n_frames),
        frame_rate_hz_(frame_rate_hz),
        utterance_id_(std::move(utterance_id)) {
    if (!(frame_rate_hz_ > 0.0f) || !std::isfinite(frame_rate_hz_)) {
      fail(ErrorCode::InvalidArgument, "frame rate must be positive");
    }
    for (std::size_t j = 0; j < segments_.size(); ++j) {
      const Segment& s = segments_[j];
      if (s.start_frame >= s.end_frame) {
        fail(ErrorCode::InvalidSpan, "segment " + std::to_string(j) + " has start " +
                                         std::to_string(s.start_frame) + " >= end " + std::to_string(s.end_frame));
      }
      if (s.end_frame > n_frames_) {
        fail(ErrorCode::InvalidSpan, "segment " + std::to_string(j) + " ends at " + std::to_string(s.end_frame) +
                                         " beyond " + std::to_string(n_frames_) + " frames");
      }
      if (s.embedding) detail::require_finite(std::span<const float>(*s.embedding), "segment embedding");
      if (j > 0) {
        const Segment& p = segments_[j - 1];
        if (s.start_frame < p.start_frame) {
          fail(ErrorCode::UnsortedEntries, "segment " + std::to_string(j) + " starts before its predecessor");
        }
        if (s.start_frame < p.end_frame) {
          fail(ErrorCode::OverlappingEntries, "segment " + std::to_string(j) + " overlaps its predecessor");
        }
      }
    }
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return segments_.size(); }
  bool empty() const noexcept { return segments_.empty(); }
  const Segment& operator[](std::size_t j) const noexcept { return segments_[j]; }
  std::size_t n_frames() const noexcept { return n_frames_; }
  float frame_rate_hz() const noexcept { return frame_rate_hz_; }
  const std::string& utterance_id() const noexcept { return utterance_id_; }
  double duration_sec() const noexcept { return static_cast<double>(n_frames_) / frame_rate_hz_; }
  double frame_to_sec(std::size_t frame) const noexcept { return static_cast<double>(frame) / frame_rate_hz_; }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::vector<Segment> segments_;
  std::size_t n_frames_ = 0;
  float frame_rate_hz_ = 50.0f;
  std::string utterance_id_;
};

struct AlignmentEntry {
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string label;

  friend bool operator==(const AlignmentEntry&, const AlignmentEntry&) = default;
};

/// Ground-truth labelled time spans (typically syllables).
class Alignment {
 public:
  Alignment() = default;

  explicit Alignment(std::vector<AlignmentEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t j = 0; j < entries_.size(); ++j) {
      const AlignmentEntry& e = entries_[j];
      if (!std::isfinite(e.start_sec) || !std::isfinite(e.end_sec)) {
        fail(ErrorCode::NonFiniteValue, "alignment entry " + std::to_string(j) + " has non-finite time");
      }
      if (!(e.start_sec < e.end_sec)) {
        fail(ErrorCode::InvalidSpan, "alignment entry " + std::to_string(j) + " has start >= end");
      }
      if (j > 0) {
        if (e.start_sec < entries_[j - 1].start_sec) {
          fail(ErrorCode::UnsortedEntries, "alignment entry " + std::to_string(j) + " is out of order");
        }
        if (e.start_sec < entries_[j - 1].end_sec) {
          fail(ErrorCode::OverlappingEntries, "alignment entry " + std::to_string(j) + " overlaps its predecessor");
        }
      }
    }
  }

  const std::vector<AlignmentEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const AlignmentEntry& operator[](std::size_t j) const noexcept { return entries_[j]; }

  friend bool operator==(const Alignment&, const Alignment&) = default;

 private:
  std::vector<AlignmentEntry> entries_;
};

/// k centroids of dimension dim; token id t maps to centroid row t.
class Codebook {
 public:
  Codebook() = default;

  explicit Codebook(Matrix<float> centroids) : centroids_(std::move(centroids)) {
    if (centroids_.rows() == 0) fail(ErrorCode::InvalidArgument, "codebook needs at least one centroid");
    if (centroids_.cols() == 0) fail(ErrorCode::InvalidArgument, "codebook dimension must be positive");
    detail::require_finite(centroids_.flat(), "centroid");
  }

  std::size_t k() const noexcept { return centroids_.rows(); }
  std::size_t dim() const noexcept { return centroids_.cols(); }
  std::span<const float> centroid(std::size_t t) const noexcept { return centroids_.row(t); }
  const Matrix<float>& centroids() const noexcept { return centroids_; }

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  Matrix<float> centroids_;
};

/// Flat model parameters (teacher or student weights).
class ParameterVector {
 public:
  ParameterVector() = default;

  explicit ParameterVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) fail(ErrorCode::InvalidArgument, "parameter vector must be non-empty");
    detail::require_finite(std::span<const double>(values_), "parameter");
  }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

struct GaussianStats {
  double mean = 0.0;
  double std = 1.0;
  std::uint64_t count = 0;

  double variance() const noexcept { return std * std; }

  /// Normal density at x.
  double density(double x) const noexcept {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const double z = (x - mean) / std;
    return kInvSqrt2Pi / std * std::exp(-0.5 * z * z);
  }

  static GaussianStats from_samples(std::span<const double> xs) {
    if (xs.empty()) fail(ErrorCode::EmptyBatch, "cannot estimate Gaussian from zero samples");
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size())), xs.size()};
  }
};

}  // namespace sylber
