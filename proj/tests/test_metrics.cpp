#include "scorefollow/metrics.hpp"

#include <gtest/gtest.h>

#include "scorefollow/rng.hpp"
#include "scorefollow/synth.hpp"

using namespace scorefollow;

namespace {

// trace whose tick i predicts `frames[i]`, one tick per frame at f_e = 96 Hz
// against 1/96 s frames (so tick i sees performance frame i - 1).
FollowTrace trace_of(const std::vector<std::int64_t>& frames,
                     PredictionSource source = PredictionSource::Model) {
    FollowTrace t;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        TraceEntry e;
        e.tick = i + 1;
        e.sim_time_s = static_cast<double>(i + 1) / 96.0;
        e.wall_latency_ms = 1.0;
        e.score_frame = frames[i];
        e.source = source;
        t.push_back(e);
    }
    return t;
}

WarpingPath identity_path(std::size_t n) {
    WarpingPath p;
    for (std::size_t i = 0; i < n; ++i) p.pairs.emplace_back(i, i);
    return p;
}

}  // namespace

TEST(AlignmentErrors, PerfectTraceIsAllZeros) {
    auto trace = trace_of({0, 1, 2, 3, 4});
    auto errors = alignment_errors(trace, identity_path(5), 1.0 / 96, 5);
    ASSERT_EQ(errors.size(), 5u);
    for (double e : errors) EXPECT_DOUBLE_EQ(e, 0.0);
}

TEST(AlignmentErrors, ConstantOffsetOf96FramesIsOneSecond) {
    std::vector<std::int64_t> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(i + 96);
    auto trace = trace_of(frames);
    auto errors = alignment_errors(trace, identity_path(200), 1.0 / 96, 200);
    for (double e : errors) EXPECT_NEAR(e, 1000.0, 1e-9);
}

TEST(AlignmentErrors, StabilizationExcludedByDefault) {
    auto trace = trace_of({0, 1, 2, 3, 4});
    trace[0].source = PredictionSource::Stabilizing;
    trace[1].source = PredictionSource::Stabilizing;
    EXPECT_EQ(alignment_errors(trace, identity_path(5), 1.0 / 96, 5).size(), 3u);
    EXPECT_EQ(alignment_errors(trace, identity_path(5), 1.0 / 96, 5, true).size(), 5u);
}

// Hand-built three-tick fixture with errors {10, 30, 60} ms; the expected
// numbers are frozen from independent arithmetic.
TEST(MisalignRate, HandComputedFixture) {
    std::vector<double> errors{10.0, 30.0, 60.0};

    auto s25 = misalign_rate(errors, 25.0);
    EXPECT_DOUBLE_EQ(s25.misalign_rate_pct, 66.66666666666667);
    EXPECT_DOUBLE_EQ(s25.mean_err_ms, 10.0);
    EXPECT_DOUBLE_EQ(s25.sd_err_ms, 0.0);

    auto s50 = misalign_rate(errors, 50.0);
    EXPECT_DOUBLE_EQ(s50.misalign_rate_pct, 33.333333333333336);
    EXPECT_DOUBLE_EQ(s50.mean_err_ms, 20.0);
    EXPECT_DOUBLE_EQ(s50.sd_err_ms, 10.0);

    auto s75 = misalign_rate(errors, 75.0);
    EXPECT_DOUBLE_EQ(s75.misalign_rate_pct, 0.0);
    EXPECT_DOUBLE_EQ(s75.mean_err_ms, 33.333333333333336);
    EXPECT_NEAR(s75.sd_err_ms, 20.548046676563253, 1e-12);
}

TEST(MisalignRate, MonotoneNonIncreasingOverThresholds) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> errors(static_cast<std::size_t>(rng.uniform_int(1, 60)));
        for (auto& e : errors) e = rng.uniform(0, 1200);
        double prev_rate = 100.0;
        double prev_mean = 0.0;
        for (double theta : default_thresholds_ms()) {
            auto s = misalign_rate(errors, theta);
            EXPECT_LE(s.misalign_rate_pct, prev_rate + 1e-12);
            prev_rate = s.misalign_rate_pct;
            if (s.mean_err_ms > 0) {
                EXPECT_GE(s.mean_err_ms, prev_mean - 1e-12);
                prev_mean = s.mean_err_ms;
            }
        }
    }
}

TEST(MisalignRate, EdgeErrors) {
    EXPECT_THROW(misalign_rate({}, 100.0), DataError);
    EXPECT_THROW(misalign_rate({1.0}, 0.0), ConfigError);
}

TEST(LatencyStats, SingleAndPair) {
    auto one = trace_of({0});
    one[0].wall_latency_ms = 4.0;
    auto [m1, s1] = latency_stats(one);
    EXPECT_DOUBLE_EQ(m1, 4.0);
    EXPECT_DOUBLE_EQ(s1, 0.0);

    auto two = trace_of({0, 1});
    two[0].wall_latency_ms = 4.0;
    two[1].wall_latency_ms = 10.0;
    auto [m2, s2] = latency_stats(two);
    EXPECT_DOUBLE_EQ(m2, 7.0);
    EXPECT_DOUBLE_EQ(s2, 3.0);

    EXPECT_THROW(latency_stats(FollowTrace{}), DataError);
}

TEST(Sweep, EmptyGridRejectedAndSinglePointWorks) {
    PatternPieceConfig piece;
    piece.n_chords = 60;
    Rng rng(3);
    auto roll = to_piano_roll(make_pattern_piece(piece, rng), piece.frame_duration);
    FollowerConfig cfg;
    cfg.c = 288;
    cfg.w = 96;
    EXPECT_THROW(sweep(SweepKind::TempoMismatch, {}, roll, roll, ModelParams::delta(), cfg),
                 ConfigError);
    auto pts = sweep(SweepKind::TempoMismatch, {1.0}, roll, roll, ModelParams::delta(), cfg);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_DOUBLE_EQ(pts[0].misalign_rate_pct, 0.0);
    EXPECT_EQ(serialize_sweep(pts), "grid_value,misalign_rate_pct\n1.0000,0.0000\n");
}

// Under a 20% tempo mismatch the misalign rate depends on the inference
// rate; the sweep must not be flat.
TEST(Sweep, InferenceRateChangesMisalignRateUnderMismatch) {
    PatternPieceConfig piece;
    piece.n_chords = 200;
    Rng rng(6);
    auto perf = to_piano_roll(make_pattern_piece(piece, rng), piece.frame_duration);
    auto score = tempo_rescale(perf, 1.2);
    FollowerConfig cfg;
    cfg.c = 288;
    cfg.w = 96;
    auto pts = sweep(SweepKind::InferenceRate, {2.0, 5.0, 10.0, 20.0}, score, perf,
                     ModelParams::delta(), cfg);
    ASSERT_EQ(pts.size(), 4u);
    double lo = pts[0].misalign_rate_pct, hi = pts[0].misalign_rate_pct;
    for (const auto& p : pts) {
        lo = std::min(lo, p.misalign_rate_pct);
        hi = std::max(hi, p.misalign_rate_pct);
    }
    EXPECT_GT(hi - lo, 5.0);
}

TEST(Evaluate, ReportShapeAndSerialization) {
    auto trace = trace_of({0, 1, 2, 3, 4, 5, 6, 7});
    auto report = evaluate(trace, identity_path(20), 1.0 / 96, 20);
    ASSERT_EQ(report.per_threshold.size(), default_thresholds_ms().size());
    for (const auto& s : report.per_threshold) EXPECT_DOUBLE_EQ(s.misalign_rate_pct, 0.0);
    auto csv = serialize_report(report);
    EXPECT_NE(csv.find("theta_ms,misalign_rate_pct,mean_err_ms,sd_err_ms"), std::string::npos);
    EXPECT_NE(csv.find("latency_ms,"), std::string::npos);
    // nine threshold rows + header + latency row + trailing newline
    EXPECT_EQ(split(csv, '\n').size(), 12u);
}
