#pragma once

// Synthetic fixture material: chord-sequence pieces whose windows are
// (with overwhelming probability) unique within any context, which makes
// correlation ground truth unambiguous at desk scale.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "scorefollow/midi.hpp"
#include "scorefollow/piano_roll.hpp"
#include "scorefollow/rng.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

struct PatternPieceConfig {
    std::size_t n_chords = 200;
    std::size_t chord_frames = 8;   // frames per chord at frame_duration
    std::size_t polyphony = 3;      // distinct pitches per chord
    int pitch_lo = 40;
    int pitch_hi = 84;
    double frame_duration = kDefaultFrameDuration;
};

inline MidiSequence make_pattern_piece(const PatternPieceConfig& cfg, Rng& rng) {
    if (cfg.polyphony == 0 || cfg.pitch_hi - cfg.pitch_lo + 1 < static_cast<int>(cfg.polyphony))
        throw ConfigError("pattern piece: pitch range too narrow for polyphony");
    MidiSequence seq;
    double chord_len = static_cast<double>(cfg.chord_frames) * cfg.frame_duration;
    for (std::size_t i = 0; i < cfg.n_chords; ++i) {
        std::set<int> pitches;
        while (pitches.size() < cfg.polyphony)
            pitches.insert(static_cast<int>(rng.uniform_int(cfg.pitch_lo, cfg.pitch_hi)));
        double onset = static_cast<double>(i) * chord_len;
        for (int p : pitches) seq.notes.push_back({p, onset, chord_len, 80, 0});
    }
    seq.finalize();
    return seq;
}

// Writes n deterministic pattern pieces as format-0 MIDI files.
inline std::vector<std::string> write_corpus(const std::filesystem::path& dir, std::size_t n_files,
                                             const PatternPieceConfig& cfg, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < n_files; ++i) {
        Rng rng(mix_seed(seed, i, 0xc0de));
        MidiSequence seq = make_pattern_piece(cfg, rng);
        char name[32];
        std::snprintf(name, sizeof name, "piece_%03zu.mid", i);
        std::filesystem::path path = dir / name;
        write_file(path, write_smf0(seq));
        paths.push_back(path.string());
    }
    return paths;
}

}  // namespace scorefollow
