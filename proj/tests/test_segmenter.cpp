#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace sylber;
namespace st = sylber::testing;

namespace {

FrameSequence from_rows(const std::vector<std::vector<float>>& rows) {
  std::vector<float> data;
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  return FrameSequence(rows.at(0).size(), std::move(data), 50.0f, "t");
}

std::vector<float> basis(std::size_t dim, std::size_t axis, float scale) {
  std::vector<float> v(dim, 0.0f);
  v[axis] = scale;
  return v;
}

using Spans = std::vector<std::pair<std::size_t, std::size_t>>;

}  // namespace

TEST(SpeechMask, NormGate) {
  const auto seq = from_rows({{3, 4}, {0.1f, 0.1f}});
  EXPECT_EQ(speech_mask(seq, 3.09), (std::vector<bool>{true, false}));
}

TEST(SpeechMask, ZeroFramesAreNeverSpeech) {
  const auto seq = from_rows({{0, 0}, {0, 0}, {0, 0}});
  EXPECT_EQ(speech_mask(seq, 3.09), std::vector<bool>(3, false));
  EXPECT_EQ(speech_mask(seq, 1e-300), std::vector<bool>(3, false));
}

TEST(SpeechMask, TinyThresholdPassesEverything) {
  std::mt19937_64 rng(1);
  const auto seq = st::random_frames(rng, 40, 5);
  EXPECT_EQ(speech_mask(seq, 0.0001), std::vector<bool>(40, true));
  EXPECT_TRUE(speech_mask(FrameSequence(Matrix<float>(0, 3), 50.0f), 3.09).empty());
}

TEST(GreedyAgglomerate, OrthogonalBlocks) {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 3; ++i) rows.push_back(basis(4, 0, 10));
  for (int i = 0; i < 3; ++i) rows.push_back(basis(4, 1, 10));
  const auto seq = from_rows(rows);
  const auto seg = greedy_agglomerate(seq, std::vector<bool>(6, true), 0.8);
  EXPECT_EQ(st::spans_of(seg), (Spans{{0, 3}, {3, 6}}));
}

TEST(GreedyAgglomerate, AllFalseMaskGivesNothing) {
  std::mt19937_64 rng(2);
  const auto seq = st::random_frames(rng, 10, 3);
  EXPECT_TRUE(greedy_agglomerate(seq, std::vector<bool>(10, false), 0.8).empty());
}

TEST(GreedyAgglomerate, MaskGapSplitsDespiteHighCosine) {
  const auto seq = from_rows({basis(2, 0, 10), basis(2, 0, 10), basis(2, 0, 0.01f), basis(2, 0, 10)});
  const auto seg = greedy_agglomerate(seq, {true, true, false, true}, 0.8);
  EXPECT_EQ(st::spans_of(seg), (Spans{{0, 2}, {3, 4}}));
}

TEST(GreedyAgglomerate, ZeroNormSpeechFrameIsAnError) {
  const auto seq = from_rows({{1, 0}, {0, 0}});
  try {
    greedy_agglomerate(seq, {true, true}, 0.8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroNormFrame);
  }
}

TEST(GreedyAgglomerate, MaskLengthMustMatch) {
  const auto seq = from_rows({{1, 0}, {0, 1}});
  EXPECT_THROW(greedy_agglomerate(seq, {true}, 0.8), Error);
}

TEST(GreedyAgglomerate, MatchesFullSimilarityMatrixOracle) {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<std::size_t> len(1, 200);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  std::uniform_real_distribution<double> thr(-0.5, 1.0);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = len(rng);
    const std::size_t d = dim(rng);
    // runs of a repeated direction with varying noise, some low-norm frames
    std::vector<float> data;
    std::vector<float> dir = st::random_vector(rng, d, 3.0);
    std::bernoulli_distribution new_dir(0.2);
    std::bernoulli_distribution quiet(0.1);
    std::normal_distribution<double> noise(0.0, trial % 3 == 0 ? 2.0 : 0.3);
    for (std::size_t i = 0; i < n; ++i) {
      if (new_dir(rng)) dir = st::random_vector(rng, d, 3.0);
      const double scale = quiet(rng) ? 0.1 : 1.0;
      for (std::size_t k = 0; k < d; ++k) data.push_back(static_cast<float>(scale * (dir[k] + noise(rng))));
    }
    const FrameSequence seq(d, std::move(data), 50.0f);
    const double norm_thr = 1.0;
    const double merge = thr(rng);
    const auto mask = speech_mask(seq, norm_thr);
    EXPECT_EQ(st::spans_of(greedy_agglomerate(seq, mask, merge)), st::brute_force_agglomerate(seq, mask, merge))
        << "trial " << trial;
  }
}

TEST(RefineBoundaries, FixedPointOnHomogeneousBlocks) {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back(basis(3, 0, 10));
  for (int i = 0; i < 5; ++i) rows.push_back(basis(3, 1, 10));
  const auto seq = from_rows(rows);
  const Segmentation seg({{0, 5}, {5, 10}}, 10, 50.0f, "t");
  EXPECT_EQ(refine_boundaries(seq, seg), seg);
}

TEST(RefineBoundaries, MovesMisplacedBoundary) {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back(basis(3, 0, 10));
  for (int i = 0; i < 5; ++i) rows.push_back(basis(3, 1, 10));
  const auto seq = from_rows(rows);
  const Segmentation seg({{0, 7}, {7, 10}}, 10, 50.0f, "t");
  const auto out = refine_boundaries(seq, seg);
  EXPECT_EQ(st::spans_of(out), (Spans{{0, 5}, {5, 10}}));
}

TEST(RefineBoundaries, MatchesExhaustiveScore) {
  // Independent evaluation of every candidate boundary for one touching pair.
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> len(1, 15);
    const std::size_t la = len(rng), lb = len(rng);
    const auto seq = st::random_frames(rng, la + lb, 4, 1.0);
    const Segmentation seg({{0, la}, {la, la + lb}}, la + lb, 50.0f, "t");
    auto mean = [&](std::size_t s, std::size_t e) {
      std::vector<double> m(4, 0.0);
      for (std::size_t i = s; i < e; ++i)
        for (std::size_t k = 0; k < 4; ++k) m[k] += seq.frame(i)[k] / static_cast<double>(e - s);
      return m;
    };
    auto cosine = [&](std::size_t i, const std::vector<double>& m) {
      double d = 0, a = 0, b = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        d += seq.frame(i)[k] * m[k];
        a += static_cast<double>(seq.frame(i)[k]) * seq.frame(i)[k];
        b += m[k] * m[k];
      }
      return d / std::sqrt(a * b);
    };
    const auto ml = mean(0, la), mr = mean(la, la + lb);
    const std::size_t lo = la / 2, hi = la + lb / 2;
    std::size_t best_b = 0;
    double best = -1e300;
    for (std::size_t b = lo + 1; b <= hi; ++b) {
      double s = 0.0;
      for (std::size_t i = lo; i < b; ++i) s += cosine(i, ml);
      for (std::size_t i = b; i <= hi; ++i) s += cosine(i, mr);
      if (s > best + 1e-12) {
        best = s;
        best_b = b;
      }
    }
    const auto out = refine_boundaries(seq, seg);
    EXPECT_EQ(out[0].end_frame, best_b) << "trial " << trial;
  }
}

TEST(RefineBoundaries, SilenceSeparatedSegmentsUntouched) {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 4; ++i) rows.push_back(basis(2, 0, 10));
  rows.push_back({0, 0});
  for (int i = 0; i < 4; ++i) rows.push_back(basis(2, 1, 10));
  const auto seq = from_rows(rows);
  const Segmentation seg({{0, 2}, {5, 9}}, 9, 50.0f, "t");
  EXPECT_EQ(refine_boundaries(seq, seg), seg);
}

TEST(RefineBoundaries, SingleOrEmptyUnchanged) {
  std::mt19937_64 rng(4);
  const auto seq = st::random_frames(rng, 8, 2);
  const Segmentation one({{1, 6}}, 8, 50.0f, "utt");
  const Segmentation none({}, 8, 50.0f, "utt");
  EXPECT_EQ(refine_boundaries(seq, one), one);
  EXPECT_EQ(refine_boundaries(seq, none), none);
}

TEST(RefineBoundaries, PreservesCountAndStaysBetweenMidpoints) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto seq = st::random_frames(rng, 60, 3);
    const auto coarse = greedy_agglomerate(seq, speech_mask(seq, 0.5), 0.3);
    const auto fine = refine_boundaries(seq, coarse);
    ASSERT_EQ(fine.size(), coarse.size());
    for (std::size_t k = 0; k + 1 < coarse.size(); ++k) {
      EXPECT_LT(fine[k].start_frame, fine[k].end_frame);
      if (coarse[k].end_frame != coarse[k + 1].start_frame) {
        EXPECT_EQ(fine[k].end_frame, coarse[k].end_frame);
        continue;
      }
      EXPECT_GE(fine[k].end_frame, coarse[k].midpoint());
      EXPECT_LE(fine[k].end_frame, coarse[k + 1].midpoint());
      EXPECT_EQ(fine[k].end_frame, fine[k + 1].start_frame);
    }
  }
}

TEST(Segment, FiveBlockSyntheticRecoversTruth) {
  std::mt19937_64 rng(2024);
  st::SyntheticShape shape;
  shape.min_segments = shape.max_segments = 5;
  shape.gap_prob = 0.0;
  shape.dim = 16;
  shape.n_directions = 5;
  const auto u = st::synthetic_utterance(rng, shape);
  const auto seg = segment(u.frames);
  EXPECT_EQ(st::spans_of(seg), st::spans_of(u.truth));
  // the coarse pass alone already agrees with the brute-force oracle
  const auto mask = speech_mask(u.frames, 3.09);
  EXPECT_EQ(st::brute_force_agglomerate(u.frames, mask, 0.8), st::spans_of(u.truth));
}

TEST(Segment, AllSilenceIsEmpty) {
  std::mt19937_64 rng(8);
  const auto seq = st::random_frames(rng, 30, 8, 0.01);
  EXPECT_TRUE(segment(seq).empty());
}

TEST(Segment, ScaleInvariantWithScaledThreshold) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = st::random_frames(rng, 120, 6, 1.5);
    for (float c : {0.25f, 4.0f, 32.0f}) {
      Matrix<float> m = seq.frames();
      for (auto& v : m.flat()) v *= c;
      const FrameSequence scaled(std::move(m), 50.0f);
      SegmenterConfig base{3.0, 0.4};
      SegmenterConfig sc{3.0 * c, 0.4};
      EXPECT_EQ(st::spans_of(segment(seq, base)), st::spans_of(segment(scaled, sc)))
          << "trial " << trial << " scale " << c;
    }
  }
}

TEST(SegmenterConfig, Validation) {
  EXPECT_NO_THROW(SegmenterConfig{}.validate());
  EXPECT_THROW((SegmenterConfig{0.0, 0.8}.validate()), Error);
  EXPECT_THROW((SegmenterConfig{3.09, 1.5}.validate()), Error);
  EXPECT_THROW((SegmenterConfig{3.09, -1.0}.validate()), Error);
}

TEST(WithSegmentEmbeddings, EmbeddingIsSegmentMean) {
  const auto seq = from_rows({{1, 1}, {3, 3}, {5, 9}});
  const auto seg = with_segment_embeddings(seq, Segmentation({{0, 2}, {2, 3}}, 3, 50.0f));
  EXPECT_EQ(*seg[0].embedding, (std::vector<float>{2, 2}));
  EXPECT_EQ(*seg[1].embedding, (std::vector<float>{5, 9}));
}

TEST(Calibration, EqualVarianceMidpoint) {
  EXPECT_EQ(calibrate_norm_threshold({5.0, 1.0, 10}, {1.0, 1.0, 10}), 3.0);
  EXPECT_EQ(calibrate_norm_threshold({7.25, 0.3, 10}, {0.5, 0.3, 10}), 3.875);
}

TEST(Calibration, UnequalVarianceMatchesGridSearch) {
  const double x = calibrate_norm_threshold({4.0, 2.0, 10}, {0.0, 1.0, 10});
  EXPECT_NEAR(x, 1.660, 5e-4);
  EXPECT_NEAR(x, st::grid_search_threshold(0.0, 1.0, 4.0, 2.0), 1e-5);
  EXPECT_NEAR(st::gaussian_pdf(x, 0.0, 1.0), st::gaussian_pdf(x, 4.0, 2.0), 1e-9 * st::gaussian_pdf(x, 0.0, 1.0));
}

TEST(Calibration, RandomCasesSatisfyDensityEquality) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), gap(0.5, 6.0), sd(0.2, 3.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double mn = mean(rng), ms = mn + gap(rng), sn = sd(rng), ss = sd(rng);
    try {
      const double x = calibrate_norm_threshold({ms, ss, 1}, {mn, sn, 1});
      ++solved;
      EXPECT_GT(x, mn);
      EXPECT_LE(x, ms);
      const double pn = st::gaussian_pdf(x, mn, sn), ps = st::gaussian_pdf(x, ms, ss);
      EXPECT_LT(std::abs(pn - ps), 1e-9 * std::max(pn, ps)) << mn << " " << sn << " " << ms << " " << ss;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoRootInRange);
      // confirm there really is no crossing on (mn, ms]
      const double d0 = st::gaussian_pdf(mn, mn, sn) - st::gaussian_pdf(mn, ms, ss);
      for (int i = 1; i <= 1000; ++i) {
        const double x = mn + (ms - mn) * i / 1000.0;
        const double d = st::gaussian_pdf(x, mn, sn) - st::gaussian_pdf(x, ms, ss);
        EXPECT_GT(d * d0, 0.0);
      }
    }
  }
  EXPECT_GT(solved, 150);
}

TEST(Calibration, ReportsMissingRoot) {
  // a very wide noise distribution dominates everywhere between the means
  try {
    calibrate_norm_threshold({1.0, 0.5, 1}, {0.0, 20.0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRootInRange);
  }
  EXPECT_THROW(calibrate_norm_threshold({0.0, 1.0, 1}, {1.0, 1.0, 1}), Error);
}

TEST(NoiseStats, FixedPointAndArithmetic) {
  const std::vector<double> twos{2.0, 2.0, 2.0};
  const GaussianStats at_two{2.0, 0.5, 100};
  const auto same = update_noise_stats(at_two, twos, 0.9999);
  EXPECT_DOUBLE_EQ(same.mean, 2.0);
  EXPECT_EQ(same.count, 103u);

  const auto half = update_noise_stats({0.0, 1.0, 5}, twos, 0.5);
  EXPECT_DOUBLE_EQ(half.mean, 1.0);
  // second moment: 0.5 * (1 + 0) + 0.5 * (0 + 4) = 2.5, variance 2.5 - 1 = 1.5
  EXPECT_NEAR(half.variance(), 1.5, 1e-12);
}

TEST(NoiseStats, EmptyBatchRejected) {
  try {
    update_noise_stats({}, std::vector<double>{}, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBatch);
  }
}

TEST(NoiseStats, ConvergesToBatchDistribution) {
  std::mt19937_64 rng(2718);
  std::normal_distribution<double> g(0.7, 0.2);
  GaussianStats s{5.0, 1.0, 1};
  for (int step = 0; step < 4000; ++step) {
    std::vector<double> batch(64);
    for (auto& x : batch) x = g(rng);
    s = update_noise_stats(s, batch, 0.99);
  }
  EXPECT_NEAR(s.mean, 0.7, 0.007);
  EXPECT_NEAR(s.std, 0.2, 0.01);
}
