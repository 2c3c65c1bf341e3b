#pragma once

// Self-segmentation distillation objective: student frames regress onto the
// teacher's segment-averaged features, non-speech frames regress onto zero.
// All accumulation is in double regardless of the storage type.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/types.hpp"

namespace sylber {

/// segment_of[i] is the index of the segment containing frame i, or -1.
struct AssignmentMap {
  std::vector<std::int64_t> segment_of;

  std::size_t size() const noexcept { return segment_of.size(); }
  std::int64_t operator[](std::size_t i) const noexcept { return segment_of[i]; }
  friend bool operator==(const AssignmentMap&, const AssignmentMap&) = default;
};

/// Segments may be given in any order but must not overlap.
inline AssignmentMap build_assignment(std::span<const Segment> segments, std::size_t n_frames) {
  AssignmentMap map{std::vector<std::int64_t>(n_frames, -1)};
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const auto& s = segments[j];
    if (s.start_frame >= s.end_frame || s.end_frame > n_frames) {
      fail(ErrorCode::InvalidSpan, "segment " + std::to_string(j) + " is empty or out of range");
    }
    for (std::size_t i = s.start_frame; i < s.end_frame; ++i) {
      if (map.segment_of[i] != -1) fail(ErrorCode::OverlappingEntries, "frame " + std::to_string(i) + " is covered twice");
      map.segment_of[i] = static_cast<std::int64_t>(j);
    }
  }
  return map;
}

inline AssignmentMap build_assignment(const Segmentation& seg) {
  return build_assignment(std::span<const Segment>(seg.segments()), seg.n_frames());
}

/// v_j: mean of the frames in [start_frame_j, end_frame_j), one row per segment.
template <typename T>
Matrix<double> segment_averages(const Matrix<T>& frames, std::span<const Segment> segments) {
  Matrix<double> out(segments.size(), frames.cols());
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const auto& s = segments[j];
    if (s.start_frame >= s.end_frame || s.end_frame > frames.rows()) {
      fail(ErrorCode::InvalidSpan, "segment " + std::to_string(j) + " is empty or out of range");
    }
    auto acc = out.row(j);
    for (std::size_t i = s.start_frame; i < s.end_frame; ++i) {
      auto f = frames.row(i);
      for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += static_cast<double>(f[d]);
    }
    const double inv = 1.0 / static_cast<double>(s.length());
    for (auto& v : acc) v *= inv;
  }
  return out;
}

inline Matrix<double> segment_averages(const FrameSequence& seq, const Segmentation& seg) {
  return segment_averages(seq.frames(), std::span<const Segment>(seg.segments()));
}

struct DistillLoss {
  double loss = 0.0;
  /// d loss / d student, same shape as the student matrix.
  Matrix<double> gradient;

  double mean_per_frame() const noexcept {
    return gradient.rows() == 0 ? 0.0 : loss / static_cast<double>(gradient.rows());
  }
};

/// loss = sum_i ||target_i - student_i||^2 with target_i the teacher average of
/// frame i's segment (zero for non-speech); gradient_i = 2 (student_i - target_i).
template <typename S, typename T>
DistillLoss seg_distill_loss(const Matrix<S>& student, const Matrix<T>& teacher, std::span<const Segment> segments) {
  if (student.rows() != teacher.rows() || student.cols() != teacher.cols()) {
    fail(ErrorCode::ShapeMismatch, "student is " + std::to_string(student.rows()) + "x" +
                                       std::to_string(student.cols()) + ", teacher is " +
                                       std::to_string(teacher.rows()) + "x" + std::to_string(teacher.cols()));
  }
  const auto assignment = build_assignment(segments, teacher.rows());
  const auto targets = segment_averages(teacher, segments);

  DistillLoss out{0.0, Matrix<double>(student.rows(), student.cols())};
  for (std::size_t i = 0; i < student.rows(); ++i) {
    auto z = student.row(i);
    auto g = out.gradient.row(i);
    const std::int64_t j = assignment[i];
    for (std::size_t d = 0; d < z.size(); ++d) {
      const double target = j >= 0 ? targets(static_cast<std::size_t>(j), d) : 0.0;
      const double diff = static_cast<double>(z[d]) - target;
      out.loss += diff * diff;
      g[d] = 2.0 * diff;
    }
  }
  return out;
}

inline DistillLoss seg_distill_loss(const FrameSequence& student, const FrameSequence& teacher,
                                    const Segmentation& seg) {
  return seg_distill_loss(student.frames(), teacher.frames(), std::span<const Segment>(seg.segments()));
}

/// out_i = decay * teacher_i + (1 - decay) * student_i
inline ParameterVector ema_update(const ParameterVector& teacher, const ParameterVector& student, double decay) {
  if (teacher.size() != student.size()) {
    fail(ErrorCode::LengthMismatch, "teacher has " + std::to_string(teacher.size()) + " parameters, student has " +
                                        std::to_string(student.size()));
  }
  if (!(decay > 0.0 && decay < 1.0)) fail(ErrorCode::InvalidArgument, "decay must lie in (0, 1)");
  std::vector<double> out(teacher.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decay * teacher[i] + (1.0 - decay) * student[i];
  return ParameterVector(std::move(out));
}

}  // namespace sylber
