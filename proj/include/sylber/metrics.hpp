#pragma once

// Syllable detection (boundary precision/recall/F1/R-value) and syllable
// discovery (purities, mutual information) scores.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/types.hpp"

namespace sylber::metrics {

inline constexpr double kDefaultToleranceSec = 0.05;
/// Slack on the tolerance comparison so frame-derived times that sit exactly
/// on the tolerance are not lost to rounding.
inline constexpr double kTimeEpsilon = 1e-9;

// ---- Boundary extraction ---------------------------------------------------

namespace detail {

inline std::vector<double> dedupe_sorted(std::vector<double> t) {
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double v : t) {
    if (out.empty() || v - out.back() > kTimeEpsilon) out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Segment starts and ends in seconds, without the utterance edges.
inline std::vector<double> boundaries_of(const Segmentation& seg) {
  std::vector<std::size_t> frames;
  for (const auto& s : seg.segments()) {
    frames.push_back(s.start_frame);
    frames.push_back(s.end_frame);
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  std::vector<double> out;
  for (auto f : frames) {
    if (f == 0 || f == seg.n_frames()) continue;
    out.push_back(seg.frame_to_sec(f));
  }
  return out;
}

/// Entry starts and ends in seconds, without t=0 and, when the utterance
/// duration is known, without its end.
inline std::vector<double> boundaries_of(const Alignment& alignment, std::optional<double> duration_sec = {}) {
  std::vector<double> t;
  for (const auto& e : alignment.entries()) {
    t.push_back(e.start_sec);
    t.push_back(e.end_sec);
  }
  std::vector<double> out;
  for (double v : detail::dedupe_sorted(std::move(t))) {
    if (v <= kTimeEpsilon) continue;
    if (duration_sec && v >= *duration_sec - kTimeEpsilon) continue;
    out.push_back(v);
  }
  return out;
}

// ---- Boundary scores -------------------------------------------------------

struct BoundaryCounts {
  std::size_t n_ref = 0;
  std::size_t n_hyp = 0;
  std::size_t n_matched = 0;

  BoundaryCounts& operator+=(const BoundaryCounts& o) noexcept {
    n_ref += o.n_ref;
    n_hyp += o.n_hyp;
    n_matched += o.n_matched;
    return *this;
  }
};

struct BoundaryMatchResult {
  std::size_t n_ref = 0;
  std::size_t n_hyp = 0;
  std::size_t n_matched = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double r_value = 0.0;
  /// Set when either side has no boundaries; scores then follow fixed
  /// conventions rather than the formulas.
  bool degenerate = false;
};

/// One-to-one matching: every (ref, hyp) pair within tolerance is a
/// candidate, and candidates are accepted greedily in increasing |dt|.
inline BoundaryCounts match_boundaries(std::span<const double> ref, std::span<const double> hyp,
                                       double tolerance_sec = kDefaultToleranceSec) {
  if (!std::is_sorted(ref.begin(), ref.end()) || !std::is_sorted(hyp.begin(), hyp.end())) {
    fail(ErrorCode::UnsortedEntries, "boundary lists must be sorted");
  }
  if (!(tolerance_sec >= 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be non-negative");
  const double tol = tolerance_sec + kTimeEpsilon;

  // (|dt|, earlier time, later time, ref index, hyp index); the first three
  // fields do not depend on which side is the reference.
  using Candidate = std::tuple<double, double, double, std::size_t, std::size_t>;
  std::vector<Candidate> candidates;
  std::size_t lo = 0;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    while (lo < hyp.size() && hyp[lo] < ref[r] - tol) ++lo;
    for (std::size_t h = lo; h < hyp.size() && hyp[h] <= ref[r] + tol; ++h) {
      candidates.emplace_back(std::abs(ref[r] - hyp[h]), std::min(ref[r], hyp[h]), std::max(ref[r], hyp[h]), r, h);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> ref_used(ref.size(), false);
  std::vector<bool> hyp_used(hyp.size(), false);
  BoundaryCounts counts{ref.size(), hyp.size(), 0};
  for (const auto& [dt, a, b, r, h] : candidates) {
    if (ref_used[r] || hyp_used[h]) continue;
    ref_used[r] = hyp_used[h] = true;
    ++counts.n_matched;
  }
  return counts;
}

/// Scores from (possibly corpus-pooled) counts.
///   precision = matched / n_hyp, recall = matched / n_ref
///   OS = n_hyp / n_ref - 1 (= recall / precision - 1)
///   r1 = sqrt((1 - recall)^2 + OS^2), r2 = (-OS + recall - 1) / sqrt(2)
///   R  = 1 - (|r1| + |r2|) / 2
inline BoundaryMatchResult score_boundaries(const BoundaryCounts& c) {
  BoundaryMatchResult out{c.n_ref, c.n_hyp, c.n_matched};
  if (c.n_ref == 0 || c.n_hyp == 0) {
    out.degenerate = true;
    if (c.n_ref == 0 && c.n_hyp == 0) {
      out.precision = out.recall = out.f1 = out.r_value = 1.0;
    }
    return out;
  }
  out.precision = static_cast<double>(c.n_matched) / static_cast<double>(c.n_hyp);
  out.recall = static_cast<double>(c.n_matched) / static_cast<double>(c.n_ref);
  const double pr = out.precision + out.recall;
  out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
  const double os = static_cast<double>(c.n_hyp) / static_cast<double>(c.n_ref) - 1.0;
  const double r1 = std::sqrt((1.0 - out.recall) * (1.0 - out.recall) + os * os);
  const double r2 = (-os + out.recall - 1.0) / std::sqrt(2.0);
  out.r_value = 1.0 - (std::abs(r1) + std::abs(r2)) / 2.0;
  return out;
}

inline BoundaryMatchResult boundary_metrics(std::span<const double> ref, std::span<const double> hyp,
                                            double tolerance_sec = kDefaultToleranceSec) {
  return score_boundaries(match_boundaries(ref, hyp, tolerance_sec));
}

// ---- Discovery scores ------------------------------------------------------

/// Sparse cluster x label count table.
class ContingencyTable {
 public:
  void add(std::size_t cluster, std::size_t label, std::uint64_t count = 1) {
    if (count == 0) return;
    cells_[{cluster, label}] += count;
    rows_[cluster] += count;
    cols_[label] += count;
    total_ += count;
  }

  std::uint64_t total() const noexcept { return total_; }
  const std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>& cells() const noexcept { return cells_; }
  const std::map<std::size_t, std::uint64_t>& cluster_totals() const noexcept { return rows_; }
  const std::map<std::size_t, std::uint64_t>& label_totals() const noexcept { return cols_; }

  /// sum_c max_l C[c][l] / N
  double cluster_purity() const {
    if (total_ == 0) return 0.0;
    std::map<std::size_t, std::uint64_t> best;
    for (const auto& [key, n] : cells_) best[key.first] = std::max(best[key.first], n);
    std::uint64_t sum = 0;
    for (const auto& [c, n] : best) sum += n;
    return static_cast<double>(sum) / static_cast<double>(total_);
  }

  /// sum_l max_c C[c][l] / N
  double syllable_purity() const {
    if (total_ == 0) return 0.0;
    std::map<std::size_t, std::uint64_t> best;
    for (const auto& [key, n] : cells_) best[key.second] = std::max(best[key.second], n);
    std::uint64_t sum = 0;
    for (const auto& [l, n] : best) sum += n;
    return static_cast<double>(sum) / static_cast<double>(total_);
  }

  /// sum p(c,l) log_base(p(c,l) / (p(c) p(l))); bits by default.
  double mutual_information(double base = 2.0) const {
    if (total_ == 0) return 0.0;
    const double n = static_cast<double>(total_);
    double mi = 0.0;
    for (const auto& [key, count] : cells_) {
      const double c = static_cast<double>(count);
      const double row = static_cast<double>(rows_.at(key.first));
      const double col = static_cast<double>(cols_.at(key.second));
      mi += c / n * std::log(c * n / (row * col));
    }
    return mi / std::log(base);
  }

 private:
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> cells_;
  std::map<std::size_t, std::uint64_t> rows_;
  std::map<std::size_t, std::uint64_t> cols_;
  std::uint64_t total_ = 0;
};

struct DiscoveryResult {
  double syllable_purity = 0.0;
  double cluster_purity = 0.0;
  double mutual_information = 0.0;
  std::size_t n_pairs = 0;
  /// Segments that overlap no reference syllable.
  std::size_t n_dropped = 0;
  std::size_t n_clusters = 0;
  std::size_t n_labels = 0;
};

/// Index of the alignment entry with the largest temporal overlap with
/// [start_sec, end_sec); ties go to the earlier entry.
inline std::optional<std::size_t> max_overlap_entry(const Alignment& alignment, double start_sec, double end_sec) {
  const auto& e = alignment.entries();
  auto it = std::lower_bound(e.begin(), e.end(), start_sec,
                             [](const AlignmentEntry& a, double t) { return a.end_sec <= t; });
  std::optional<std::size_t> best;
  double best_overlap = 0.0;
  for (; it != e.end() && it->start_sec < end_sec; ++it) {
    const double overlap = std::min(end_sec, it->end_sec) - std::max(start_sec, it->start_sec);
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = static_cast<std::size_t>(it - e.begin());
    }
  }
  return best;
}

struct DiscoveryInput {
  const Segmentation* hyp;
  const Alignment* ref;
};

/// Pairs each tokenized segment with its max-overlap reference syllable and
/// scores the resulting cluster/label contingency table.
inline DiscoveryResult discovery_metrics(std::span<const DiscoveryInput> utterances, double mi_base = 2.0) {
  ContingencyTable table;
  std::map<std::string, std::size_t> label_ids;
  DiscoveryResult out;
  for (const auto& u : utterances) {
    const Segmentation& seg = *u.hyp;
    for (std::size_t j = 0; j < seg.size(); ++j) {
      const auto& s = seg[j];
      if (!s.token_id) {
        fail(ErrorCode::MissingToken, seg.utterance_id() + ": segment " + std::to_string(j) + " has no token");
      }
      const auto hit = max_overlap_entry(*u.ref, seg.frame_to_sec(s.start_frame), seg.frame_to_sec(s.end_frame));
      if (!hit) {
        ++out.n_dropped;
        continue;
      }
      const auto& label = (*u.ref)[*hit].label;
      const auto [pos, inserted] = label_ids.emplace(label, label_ids.size());
      table.add(*s.token_id, pos->second);
    }
  }
  out.syllable_purity = table.syllable_purity();
  out.cluster_purity = table.cluster_purity();
  out.mutual_information = table.mutual_information(mi_base);
  out.n_pairs = table.total();
  out.n_clusters = table.cluster_totals().size();
  out.n_labels = table.label_totals().size();
  return out;
}

}  // namespace sylber::metrics
