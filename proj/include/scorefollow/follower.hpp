#pragma once

// The heuristic score follower. Model output for the current context is
// smoothed and searched for prominent peaks; candidates are validated against
// a ring buffer of recent predictions via least-squares extrapolation, with
// mean/buffer fallbacks and a cap on consecutive buffer takeovers. The
// simulated loop runs at a fixed inference rate over prerecorded rolls.

#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "scorefollow/model.hpp"
#include "scorefollow/peaks.hpp"
#include "scorefollow/piano_roll.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

struct FollowerConfig {
    double f_e = 10.0;             // inference rate, Hz
    std::size_t w = 500;           // window frames
    std::size_t c = 1250;          // context frames
    std::size_t smooth_window = 5;
    std::size_t buffer_capacity = 20;
    std::size_t stabilization_count = 5;
    double prominence_min = 3.0;
    double lower_bound = -48.0;    // frames, relative validity window
    double upper_bound = 96.0;
    double rate_min = 0.5;
    double rate_max = 1.5;
    std::size_t max_consecutive_buffer = 5;
    double frame_duration = kDefaultFrameDuration;
    double context_anchor_ratio = 0.6;  // prediction sits this far into the context

    void validate() const {
        if (c <= w || w == 0) throw ConfigError("follower: need c > w > 0");
        if (buffer_capacity < stabilization_count)
            throw ConfigError("follower: buffer capacity below stabilization count");
        if (rate_min >= rate_max) throw ConfigError("follower: rate_min must be below rate_max");
        if (f_e <= 0 || frame_duration <= 0) throw ConfigError("follower: rates must be positive");
        if (smooth_window % 2 == 0) throw ConfigError("follower: smooth window must be odd");
    }
};

enum class PredictionSource { Model, Buffer, Mean, Stabilizing };

inline std::string to_string(PredictionSource s) {
    switch (s) {
        case PredictionSource::Model: return "model";
        case PredictionSource::Buffer: return "buffer";
        case PredictionSource::Mean: return "mean";
        case PredictionSource::Stabilizing: return "stabilizing";
    }
    return "?";
}

inline PredictionSource source_from_string(const std::string& s) {
    if (s == "model") return PredictionSource::Model;
    if (s == "buffer") return PredictionSource::Buffer;
    if (s == "mean") return PredictionSource::Mean;
    if (s == "stabilizing") return PredictionSource::Stabilizing;
    throw DataError("trace: unknown source '" + s + "'");
}

struct FollowerState {
    struct BufferEntry {
        std::size_t tick;
        double position;  // absolute score frames
    };
    std::deque<BufferEntry> buffer;  // FIFO, bounded by cfg.buffer_capacity
    std::size_t consecutive_buffer_uses = 0;
    std::optional<double> last_prediction;
    std::size_t context_anchor = 0;
};

struct TraceEntry {
    std::size_t tick = 0;
    double sim_time_s = 0;
    double wall_latency_ms = 0;
    std::int64_t score_frame = 0;
    PredictionSource source = PredictionSource::Stabilizing;
};

using FollowTrace = std::vector<TraceEntry>;

// OLS over the buffer contents, evaluated at `tick`.
inline double regress_extrapolate(const std::deque<FollowerState::BufferEntry>& buffer,
                                  std::size_t tick) {
    if (buffer.size() < 2) throw ConfigError("regress_extrapolate: need at least two entries");
    std::vector<double> x, y;
    x.reserve(buffer.size());
    y.reserve(buffer.size());
    for (const auto& b : buffer) {
        x.push_back(static_cast<double>(b.tick));
        y.push_back(b.position);
    }
    return ols_fit(x, y).at(static_cast<double>(tick));
}

inline double buffer_slope(const std::deque<FollowerState::BufferEntry>& buffer) {
    std::vector<double> x, y;
    x.reserve(buffer.size());
    y.reserve(buffer.size());
    for (const auto& b : buffer) {
        x.push_back(static_cast<double>(b.tick));
        y.push_back(b.position);
    }
    return ols_fit(x, y).slope;
}

// One decision step over the correlation vector for the current context.
// Emits the chosen absolute score frame and its source, and updates the
// buffer, takeover counter, and last prediction.
inline std::pair<double, PredictionSource> heuristic_step(FollowerState& state,
                                                          std::span<const double> correlation,
                                                          const FollowerConfig& cfg,
                                                          std::size_t tick,
                                                          std::size_t score_length) {
    auto smoothed = smooth(correlation, cfg.smooth_window);
    std::vector<Peak> candidates = find_peaks(smoothed, cfg.prominence_min);
    if (candidates.empty()) {
        // no significant peak: fall back to the highest smoothed value
        std::size_t best = static_cast<std::size_t>(
            std::max_element(smoothed.begin(), smoothed.end()) - smoothed.begin());
        candidates.push_back({best, 0.0});
    }
    auto absolute = [&](const Peak& p) {
        return static_cast<double>(state.context_anchor) + static_cast<double>(p.index);
    };

    double chosen = 0;
    PredictionSource source;
    if (state.buffer.size() < cfg.stabilization_count) {
        chosen = absolute(candidates.front());
        source = PredictionSource::Stabilizing;
    } else {
        double buffer_pred = regress_extrapolate(state.buffer, tick);
        double slope = buffer_slope(state.buffer);
        double last = state.last_prediction.value_or(buffer_pred);

        const Peak* accepted = nullptr;
        for (const auto& cand : candidates) {
            double q = absolute(cand);
            if (q < last + cfg.lower_bound) continue;
            double dev = q - buffer_pred;
            if (dev < cfg.lower_bound || dev > cfg.upper_bound) continue;
            if (slope <= 0.0) continue;  // no usable trend to compare rates against
            double rate = (q - last) / slope;
            if (rate < cfg.rate_min || rate > cfg.rate_max) continue;
            accepted = &cand;
            break;
        }
        if (accepted) {
            chosen = absolute(*accepted);
            source = PredictionSource::Model;
            state.consecutive_buffer_uses = 0;
        } else {
            double best_peak = absolute(candidates.front());
            double mean = (buffer_pred + best_peak) / 2.0;
            if (std::abs(mean - best_peak) <= cfg.upper_bound) {
                chosen = mean;
                source = PredictionSource::Mean;
            } else {
                chosen = buffer_pred;
                source = PredictionSource::Buffer;
            }
            ++state.consecutive_buffer_uses;
            if (state.consecutive_buffer_uses > cfg.max_consecutive_buffer) {
                // the model has disagreed for too long; trust it again
                chosen = best_peak;
                source = PredictionSource::Model;
                state.consecutive_buffer_uses = 0;
            }
        }
    }

    if (score_length > 0)
        chosen = std::clamp(chosen, 0.0, static_cast<double>(score_length - 1));
    else
        chosen = 0.0;
    state.buffer.push_back({tick, chosen});
    while (state.buffer.size() > cfg.buffer_capacity) state.buffer.pop_front();
    state.last_prediction = chosen;
    return {chosen, source};
}

// Keeps the context inside the score with the last prediction placed
// `context_anchor_ratio` of the way in.
inline std::size_t advance_context(const FollowerState& state, const FollowerConfig& cfg,
                                   std::size_t score_length) {
    if (!state.last_prediction) return state.context_anchor;
    if (score_length <= cfg.c) return 0;  // whole (padded) score is the context
    auto back = static_cast<std::int64_t>(std::floor(cfg.context_anchor_ratio * static_cast<double>(cfg.c)));
    std::int64_t anchor = static_cast<std::int64_t>(std::llround(*state.last_prediction)) - back;
    anchor = std::clamp<std::int64_t>(anchor, 0, static_cast<std::int64_t>(score_length - cfg.c));
    return static_cast<std::size_t>(anchor);
}

// Performance frames recorded by simulated time t.
inline std::size_t frames_available(double sim_time, double frame_duration) {
    double f = std::floor(sim_time / frame_duration + 1e-9);
    return f <= 0 ? 0 : static_cast<std::size_t>(f);
}

// Simulated fixed-rate following of a prerecorded performance against a
// score. Each tick sees the most recent w performance frames and the score
// slice at the current anchor; per-tick wall latency covers model forward
// plus the heuristics.
inline FollowTrace run_follow(const PianoRoll& score, const PianoRoll& performance,
                              const ModelParams& params, const FollowerConfig& cfg) {
    cfg.validate();
    if (std::abs(score.frame_duration() - performance.frame_duration()) > 1e-12)
        throw DataError("run_follow: score and performance frame durations differ");

    FollowerState state;
    FollowTrace trace;
    double perf_seconds = static_cast<double>(performance.frames()) * performance.frame_duration();
    auto ticks = static_cast<std::size_t>(std::ceil(perf_seconds * cfg.f_e - 1e-9));
    for (std::size_t tick = 1; tick <= ticks; ++tick) {
        double sim_time = static_cast<double>(tick) / cfg.f_e;
        std::size_t avail = std::min(performance.frames(), frames_available(sim_time, cfg.frame_duration));
        PianoRoll window = slice_roll(performance,
                                      static_cast<std::int64_t>(avail) - static_cast<std::int64_t>(cfg.w),
                                      cfg.w, /*pad=*/true);
        auto t0 = std::chrono::steady_clock::now();
        PianoRoll context = slice_roll(score, static_cast<std::int64_t>(state.context_anchor), cfg.c,
                                       /*pad=*/true);
        auto correlation = forward(context, window, params);
        auto [chosen, source] = heuristic_step(state, correlation, cfg, tick, score.frames());
        auto t1 = std::chrono::steady_clock::now();

        TraceEntry entry;
        entry.tick = tick;
        entry.sim_time_s = sim_time;
        entry.wall_latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        entry.score_frame = std::llround(chosen);
        entry.source = source;
        trace.push_back(entry);

        state.context_anchor = advance_context(state, cfg, score.frames());
    }
    return trace;
}

inline std::string serialize_trace(const FollowTrace& trace) {
    std::string out = "tick,sim_time_s,wall_latency_ms,score_frame,source\n";
    for (const auto& t : trace)
        out += std::to_string(t.tick) + "," + format_fixed(t.sim_time_s) + "," +
               format_fixed(t.wall_latency_ms, 3) + "," + std::to_string(t.score_frame) + "," +
               to_string(t.source) + "\n";
    return out;
}

inline FollowTrace parse_trace(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]) != "tick,sim_time_s,wall_latency_ms,score_frame,source")
        throw DataError("trace: missing or malformed header");
    FollowTrace trace;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 5) throw DataError("trace: bad row " + std::to_string(i + 1));
        TraceEntry e;
        e.tick = static_cast<std::size_t>(std::stoull(f[0]));
        e.sim_time_s = std::stod(f[1]);
        e.wall_latency_ms = std::stod(f[2]);
        e.score_frame = std::stoll(f[3]);
        e.source = source_from_string(trim(f[4]));
        trace.push_back(e);
    }
    return trace;
}

}  // namespace scorefollow
