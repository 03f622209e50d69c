#pragma once

// Alignment-error statistics against the DTW ground truth: misalign rate per
// threshold, aligned-event error mean/SD, tick latency stats, and the
// tempo-mismatch / inference-rate sweep drivers.

#include <cmath>
#include <string>
#include <vector>

#include "scorefollow/dtw.hpp"
#include "scorefollow/follower.hpp"
#include "scorefollow/piano_roll.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

inline const std::vector<double>& default_thresholds_ms() {
    static const std::vector<double> t{25, 50, 75, 100, 125, 300, 500, 750, 1000};
    return t;
}

struct ThresholdStats {
    double theta_ms = 0;
    double misalign_rate_pct = 0;
    double mean_err_ms = 0;  // over aligned events only
    double sd_err_ms = 0;    // population SD
};

struct EvalReport {
    std::vector<ThresholdStats> per_threshold;
    double latency_mean_ms = 0;
    double latency_sd_ms = 0;
};

// Per-tick absolute error in ms between the trace prediction and the warped
// ground truth. Stabilization-phase ticks are excluded unless requested.
inline std::vector<double> alignment_errors(const FollowTrace& trace, const WarpingPath& path,
                                            double frame_duration, std::size_t n_perf_frames,
                                            bool include_stabilization = false) {
    std::vector<double> errors;
    for (const auto& entry : trace) {
        if (!include_stabilization && entry.source == PredictionSource::Stabilizing) continue;
        std::size_t avail = frames_available(entry.sim_time_s, frame_duration);
        if (avail == 0) continue;
        std::size_t perf_frame = std::min(avail - 1, n_perf_frames - 1);
        auto truth = static_cast<double>(ground_truth_position(path, perf_frame));
        errors.push_back(std::abs(truth - static_cast<double>(entry.score_frame)) * frame_duration *
                         1000.0);
    }
    return errors;
}

inline ThresholdStats misalign_rate(const std::vector<double>& errors, double theta_ms) {
    if (theta_ms <= 0) throw ConfigError("misalign_rate: threshold must be positive");
    if (errors.empty()) throw DataError("misalign_rate: no errors to evaluate");
    ThresholdStats s;
    s.theta_ms = theta_ms;
    std::size_t misaligned = 0;
    double sum = 0;
    std::size_t aligned = 0;
    for (double e : errors) {
        if (e > theta_ms) {
            ++misaligned;
        } else {
            sum += e;
            ++aligned;
        }
    }
    s.misalign_rate_pct = 100.0 * static_cast<double>(misaligned) / static_cast<double>(errors.size());
    if (aligned > 0) {
        s.mean_err_ms = sum / static_cast<double>(aligned);
        double var = 0;
        for (double e : errors)
            if (e <= theta_ms) var += (e - s.mean_err_ms) * (e - s.mean_err_ms);
        s.sd_err_ms = std::sqrt(var / static_cast<double>(aligned));
    }
    return s;
}

inline std::pair<double, double> latency_stats(const FollowTrace& trace) {
    if (trace.empty()) throw DataError("latency_stats: empty trace");
    double sum = 0;
    for (const auto& t : trace) sum += t.wall_latency_ms;
    double mean = sum / static_cast<double>(trace.size());
    double var = 0;
    for (const auto& t : trace) var += (t.wall_latency_ms - mean) * (t.wall_latency_ms - mean);
    return {mean, std::sqrt(var / static_cast<double>(trace.size()))};
}

inline EvalReport evaluate(const FollowTrace& trace, const WarpingPath& path, double frame_duration,
                           std::size_t n_perf_frames,
                           const std::vector<double>& thresholds = default_thresholds_ms(),
                           bool include_stabilization = false) {
    auto errors = alignment_errors(trace, path, frame_duration, n_perf_frames, include_stabilization);
    if (errors.empty()) throw DataError("evaluate: no post-stabilization ticks");
    EvalReport report;
    for (double theta : thresholds) report.per_threshold.push_back(misalign_rate(errors, theta));
    auto [mu, sd] = latency_stats(trace);
    report.latency_mean_ms = mu;
    report.latency_sd_ms = sd;
    return report;
}

inline std::string serialize_report(const EvalReport& report) {
    std::string out = "theta_ms,misalign_rate_pct,mean_err_ms,sd_err_ms\n";
    for (const auto& s : report.per_threshold)
        out += format_fixed(s.theta_ms, 1) + "," + format_fixed(s.misalign_rate_pct, 4) + "," +
               format_fixed(s.mean_err_ms, 4) + "," + format_fixed(s.sd_err_ms, 4) + "\n";
    out += "latency_ms," + format_fixed(report.latency_mean_ms, 4) + "," +
           format_fixed(report.latency_sd_ms, 4) + ",\n";
    return out;
}

enum class SweepKind { TempoMismatch, InferenceRate };

struct SweepPoint {
    double grid_value = 0;
    double misalign_rate_pct = 0;  // at theta = 100 ms
};

// One full follow + evaluation per grid point. Tempo sweeps rescale the
// score; rate sweeps vary f_e.
inline std::vector<SweepPoint> sweep(SweepKind kind, const std::vector<double>& grid,
                                     const PianoRoll& score, const PianoRoll& performance,
                                     const ModelParams& params, const FollowerConfig& base_cfg) {
    if (grid.empty()) throw ConfigError("sweep: empty grid");
    std::vector<SweepPoint> points;
    for (double g : grid) {
        PianoRoll eval_score = score;
        FollowerConfig cfg = base_cfg;
        if (kind == SweepKind::TempoMismatch)
            eval_score = tempo_rescale(score, g);
        else
            cfg.f_e = g;
        FollowTrace trace = run_follow(eval_score, performance, params, cfg);
        WarpingPath path = dtw_align(performance, eval_score);
        auto errors = alignment_errors(trace, path, cfg.frame_duration, performance.frames());
        if (errors.empty()) throw DataError("sweep: no post-stabilization ticks at grid point");
        points.push_back({g, misalign_rate(errors, 100.0).misalign_rate_pct});
    }
    return points;
}

inline std::string serialize_sweep(const std::vector<SweepPoint>& points) {
    std::string out = "grid_value,misalign_rate_pct\n";
    for (const auto& p : points)
        out += format_fixed(p.grid_value, 4) + "," + format_fixed(p.misalign_rate_pct, 4) + "\n";
    return out;
}

}  // namespace scorefollow
