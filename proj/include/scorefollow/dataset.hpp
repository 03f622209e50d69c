#pragma once

// Training-manifest generation and sample materialization. A manifest row
// records a (file, context_start, window_start) placement; rolls are rendered
// lazily so the dataset on disk stays a small CSV.
//
// Label convention, used identically by the matcher and the follower: the
// correlation lag axis has length c+w-1 and lag q corresponds to the window's
// right edge sitting at context-relative frame q. A window fully inside the
// context at offset s therefore carries label s + w - 1.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scorefollow/augment.hpp"
#include "scorefollow/midi.hpp"
#include "scorefollow/piano_roll.hpp"
#include "scorefollow/rng.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

struct ManifestRow {
    std::string midi_path;
    std::size_t context_start = 0;
    std::size_t window_start = 0;
    bool out_of_context = false;
};

struct SplitConfig {
    std::string split = "train";
    std::size_t n_split = 0;
    std::size_t c = 512;
    std::size_t w = 256;
    std::uint64_t seed = 0;
    double in_context_fraction = 0.9;  // remainder drawn fully outside the context
};

struct TrainingSample {
    PianoRoll context;
    PianoRoll window;
    std::optional<std::size_t> label;  // absent when out of context
    bool out_of_context = false;
};

inline bool spans_disjoint(std::size_t a_start, std::size_t a_len, std::size_t b_start,
                           std::size_t b_len) {
    return a_start + a_len <= b_start || b_start + b_len <= a_start;
}

// Caches parsed files and their rendered rolls across rows.
class RollCache {
public:
    explicit RollCache(double frame_duration = kDefaultFrameDuration) : fd_(frame_duration) {}

    double frame_duration() const { return fd_; }

    const MidiSequence& sequence(const std::string& path) {
        auto it = seqs_.find(path);
        if (it == seqs_.end()) it = seqs_.emplace(path, parse_smf_file(path)).first;
        return it->second;
    }
    const PianoRoll& roll(const std::string& path) {
        auto it = rolls_.find(path);
        if (it == rolls_.end()) it = rolls_.emplace(path, to_piano_roll(sequence(path), fd_)).first;
        return it->second;
    }

private:
    double fd_;
    std::map<std::string, MidiSequence> seqs_;
    std::map<std::string, PianoRoll> rolls_;
};

inline std::vector<ManifestRow> generate_manifest(const std::vector<std::string>& midi_paths,
                                                  const SplitConfig& cfg, RollCache& cache,
                                                  std::vector<std::string>* warnings = nullptr) {
    if (cfg.n_split == 0) throw ConfigError("manifest: n_split must be positive");
    if (cfg.c <= cfg.w || cfg.w == 0) throw ConfigError("manifest: need c > w > 0");

    struct Source {
        std::string path;
        std::size_t frames;
    };
    std::vector<Source> sources;
    for (const auto& path : midi_paths) {
        std::size_t frames = cache.roll(path).frames();
        if (frames < cfg.c) {
            if (warnings)
                warnings->push_back("manifest: '" + path + "' shorter than one context; skipped");
            continue;
        }
        sources.push_back({path, frames});
    }
    if (sources.empty()) throw DataError("manifest: no input file long enough for a context");

    Rng rng(mix_seed(cfg.seed, hash_string(cfg.split)));
    std::vector<ManifestRow> rows;
    rows.reserve(cfg.n_split);
    while (rows.size() < cfg.n_split) {
        const Source& src = sources[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(sources.size()) - 1))];
        std::size_t cs = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(src.frames - cfg.c)));
        std::size_t ws;
        if (rng.bernoulli(cfg.in_context_fraction)) {
            // window fully inside the context
            ws = cs + static_cast<std::size_t>(
                          rng.uniform_int(0, static_cast<std::int64_t>(cfg.c - cfg.w)));
        } else {
            // window fully outside the context but inside the roll; fall back
            // to in-context when the file leaves no room
            std::int64_t left_hi = static_cast<std::int64_t>(cs) - static_cast<std::int64_t>(cfg.w);
            std::int64_t right_lo = static_cast<std::int64_t>(cs + cfg.c);
            std::int64_t right_hi =
                static_cast<std::int64_t>(src.frames) - static_cast<std::int64_t>(cfg.w);
            std::int64_t n_left = std::max<std::int64_t>(0, left_hi + 1);
            std::int64_t n_right = std::max<std::int64_t>(0, right_hi - right_lo + 1);
            if (n_left + n_right == 0) {
                ws = cs + static_cast<std::size_t>(
                              rng.uniform_int(0, static_cast<std::int64_t>(cfg.c - cfg.w)));
            } else {
                std::int64_t pick = rng.uniform_int(0, n_left + n_right - 1);
                ws = static_cast<std::size_t>(pick < n_left ? pick : right_lo + (pick - n_left));
            }
        }
        rows.push_back({src.path, cs, ws, spans_disjoint(ws, cfg.w, cs, cfg.c)});
    }
    return rows;
}

inline std::string serialize_manifest(const std::vector<ManifestRow>& rows) {
    std::string out = "midi_path,context_start,window_start,out_of_context\n";
    for (const auto& r : rows)
        out += r.midi_path + "," + std::to_string(r.context_start) + "," +
               std::to_string(r.window_start) + "," + (r.out_of_context ? "true" : "false") + "\n";
    return out;
}

inline std::vector<ManifestRow> parse_manifest(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]) != "midi_path,context_start,window_start,out_of_context")
        throw DataError("manifest: missing or malformed header");
    std::vector<ManifestRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 4) throw DataError("manifest: bad row " + std::to_string(i + 1));
        rows.push_back({f[0], static_cast<std::size_t>(std::stoull(f[1])),
                        static_cast<std::size_t>(std::stoull(f[2])), trim(f[3]) == "true"});
    }
    return rows;
}

inline std::optional<std::size_t> label_for(const ManifestRow& row, std::size_t c, std::size_t w) {
    if (row.out_of_context) return std::nullopt;
    std::int64_t s = static_cast<std::int64_t>(row.window_start) -
                     static_cast<std::int64_t>(row.context_start);
    std::int64_t label = s + static_cast<std::int64_t>(w) - 1;
    if (label < 0 || label > static_cast<std::int64_t>(c + w - 2)) return std::nullopt;
    return static_cast<std::size_t>(label);
}

inline TrainingSample materialize(const ManifestRow& row, std::size_t c, std::size_t w,
                                  RollCache& cache) {
    const PianoRoll& roll = cache.roll(row.midi_path);
    TrainingSample s;
    s.context = slice_roll(roll, static_cast<std::int64_t>(row.context_start), c);
    s.window = slice_roll(roll, static_cast<std::int64_t>(row.window_start), w, /*pad=*/true);
    s.label = label_for(row, c, w);
    s.out_of_context = !s.label.has_value();
    return s;
}

// Re-renders the sample's window from the augmented sequence over the same
// frame span; the context and label are untouched.
inline TrainingSample materialize_augmented(const ManifestRow& row, std::size_t c, std::size_t w,
                                            RollCache& cache, const std::vector<AugmentSpec>& chain,
                                            Rng& rng) {
    TrainingSample s = materialize(row, c, w, cache);
    if (chain.empty()) return s;
    MidiSequence augmented = apply_chain(cache.sequence(row.midi_path), chain, rng);
    s.window = render_roll_span(augmented, cache.frame_duration(), row.window_start, w);
    return s;
}

}  // namespace scorefollow
