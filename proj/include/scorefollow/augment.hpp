#pragma once

// Randomized MIDI transforms that simulate performance imperfections:
// per-note pitch/onset/duration jitter, note dropout, and note insertion.
// Every transform is pure given an explicit rng stream.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "scorefollow/midi.hpp"
#include "scorefollow/piano_roll.hpp"
#include "scorefollow/rng.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

inline constexpr double kMinNoteDuration = 1.0 / 96.0;  // one frame

enum class AugmentKind { PitchShift, OnsetTimeShift, DurationShift, NoteDelete, NoteAdd };
enum class ShiftMode { Up, Down, Both };

struct AugmentSpec {
    AugmentKind kind = AugmentKind::PitchShift;
    double max_shift = 0.0;  // semitones for PitchShift, seconds for the time shifts
    ShiftMode mode = ShiftMode::Both;
    double probability = 0.0;  // per-note application chance
    std::pair<int, int> note_num_range{20, 120};
    std::pair<double, double> note_duration_range{0.5, 1.5};
    bool restrict_to_instrument_time = true;

    void validate() const {
        if (probability < 0 || probability > 1) throw ConfigError("augment probability outside [0,1]");
        if (max_shift < 0) throw ConfigError("augment max_shift must be non-negative");
        if (note_num_range.first > note_num_range.second ||
            note_duration_range.first > note_duration_range.second)
            throw ConfigError("augment range low exceeds high");
    }
};

namespace detail {

// mode=Both draws from the full interval including zero; Up/Down exclude it.
inline int pitch_delta(const AugmentSpec& spec, Rng& rng) {
    auto m = static_cast<std::int64_t>(spec.max_shift);
    if (m == 0) return 0;
    switch (spec.mode) {
        case ShiftMode::Up: return static_cast<int>(rng.uniform_int(1, m));
        case ShiftMode::Down: return static_cast<int>(rng.uniform_int(-m, -1));
        case ShiftMode::Both: return static_cast<int>(rng.uniform_int(-m, m));
    }
    return 0;
}

inline double time_delta(const AugmentSpec& spec, Rng& rng) {
    switch (spec.mode) {
        case ShiftMode::Up: return rng.uniform(0.0, spec.max_shift);
        case ShiftMode::Down: return -rng.uniform(0.0, spec.max_shift);
        case ShiftMode::Both: return rng.uniform(-spec.max_shift, spec.max_shift);
    }
    return 0.0;
}

}  // namespace detail

inline MidiSequence pitch_shift(const MidiSequence& seq, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    MidiSequence out = seq;
    for (auto& n : out.notes)
        if (rng.bernoulli(spec.probability))
            n.pitch = std::clamp(n.pitch + detail::pitch_delta(spec, rng), 0, 127);
    return out;
}

inline MidiSequence onset_time_shift(const MidiSequence& seq, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    MidiSequence out = seq;
    for (auto& n : out.notes)
        if (rng.bernoulli(spec.probability))
            n.onset = std::max(0.0, n.onset + detail::time_delta(spec, rng));
    out.finalize();
    return out;
}

inline MidiSequence duration_shift(const MidiSequence& seq, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    MidiSequence out = seq;
    for (auto& n : out.notes)
        if (rng.bernoulli(spec.probability))
            n.duration = std::max(kMinNoteDuration, n.duration + detail::time_delta(spec, rng));
    out.finalize();
    return out;
}

inline MidiSequence note_delete(const MidiSequence& seq, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    MidiSequence out;
    for (const auto& n : seq.notes)
        if (!rng.bernoulli(spec.probability)) out.notes.push_back(n);
    out.finalize();
    return out;
}

inline MidiSequence note_add(const MidiSequence& seq, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    if (seq.notes.empty()) return seq;  // no instrument time to insert into
    MidiSequence out = seq;
    std::size_t insertions = 0;
    for (std::size_t i = 0; i < seq.notes.size(); ++i)
        if (rng.bernoulli(spec.probability)) ++insertions;
    for (std::size_t i = 0; i < insertions; ++i) {
        NoteEvent n;
        n.pitch = static_cast<int>(rng.uniform_int(spec.note_num_range.first, spec.note_num_range.second));
        n.duration = rng.uniform(spec.note_duration_range.first, spec.note_duration_range.second);
        n.velocity = 64;
        double hi = spec.restrict_to_instrument_time ? std::max(0.0, seq.total_duration - n.duration)
                                                     : seq.total_duration;
        n.onset = rng.uniform(0.0, hi);
        out.notes.push_back(n);
    }
    out.finalize();
    return out;
}

inline MidiSequence apply_augment(const MidiSequence& seq, const AugmentSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case AugmentKind::PitchShift: return pitch_shift(seq, spec, rng);
        case AugmentKind::OnsetTimeShift: return onset_time_shift(seq, spec, rng);
        case AugmentKind::DurationShift: return duration_shift(seq, spec, rng);
        case AugmentKind::NoteDelete: return note_delete(seq, spec, rng);
        case AugmentKind::NoteAdd: return note_add(seq, spec, rng);
    }
    return seq;
}

// Applies the specs in order, threading one rng stream through the chain.
inline MidiSequence apply_chain(const MidiSequence& seq, const std::vector<AugmentSpec>& chain,
                                Rng& rng) {
    MidiSequence out = seq;
    for (const auto& spec : chain) out = apply_augment(out, spec, rng);
    return out;
}

// The default training chain: per-note probability 0.1 for all transforms,
// +-5 semitone transposition, +-0.5 s onset jitter, +-0.25 s duration jitter,
// dropout, and restricted insertion of pitches 20..120 lasting 0.5..1.5 s.
inline std::vector<AugmentSpec> default_chain() {
    std::vector<AugmentSpec> chain(5);
    chain[0] = {AugmentKind::PitchShift, 5.0, ShiftMode::Both, 0.1, {20, 120}, {0.5, 1.5}, true};
    chain[1] = {AugmentKind::OnsetTimeShift, 0.5, ShiftMode::Both, 0.1, {20, 120}, {0.5, 1.5}, true};
    chain[2] = {AugmentKind::DurationShift, 0.25, ShiftMode::Both, 0.1, {20, 120}, {0.5, 1.5}, true};
    chain[3] = {AugmentKind::NoteDelete, 0.0, ShiftMode::Both, 0.1, {20, 120}, {0.5, 1.5}, true};
    chain[4] = {AugmentKind::NoteAdd, 0.0, ShiftMode::Both, 0.1, {20, 120}, {0.5, 1.5}, true};
    return chain;
}

inline std::string to_string(AugmentKind kind) {
    switch (kind) {
        case AugmentKind::PitchShift: return "PitchShift";
        case AugmentKind::OnsetTimeShift: return "OnsetTimeShift";
        case AugmentKind::DurationShift: return "DurationShift";
        case AugmentKind::NoteDelete: return "NoteDelete";
        case AugmentKind::NoteAdd: return "NoteAdd";
    }
    return "?";
}

inline std::string to_string(ShiftMode mode) {
    switch (mode) {
        case ShiftMode::Up: return "up";
        case ShiftMode::Down: return "down";
        case ShiftMode::Both: return "both";
    }
    return "?";
}

// Chain config file: one [TransformName] section per transform, flat
// key = value lines (max_shift, mode, probability, note_num_range,
// note_duration_range, restrict_to_instrument_time).
inline std::vector<AugmentSpec> parse_chain_config(const std::string& text) {
    std::vector<AugmentSpec> chain;
    AugmentSpec* cur = nullptr;
    std::size_t lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            std::string name = trim(line.substr(1, line.size() - 2));
            AugmentSpec spec;
            if (name == "PitchShift") spec.kind = AugmentKind::PitchShift;
            else if (name == "OnsetTimeShift") spec.kind = AugmentKind::OnsetTimeShift;
            else if (name == "DurationShift") spec.kind = AugmentKind::DurationShift;
            else if (name == "NoteDelete") spec.kind = AugmentKind::NoteDelete;
            else if (name == "NoteAdd") spec.kind = AugmentKind::NoteAdd;
            else throw ConfigError("chain config: unknown transform '" + name + "'");
            chain.push_back(spec);
            cur = &chain.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos || cur == nullptr)
            throw ConfigError("chain config: bad line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "max_shift") cur->max_shift = std::stod(val);
        else if (key == "probability") cur->probability = std::stod(val);
        else if (key == "mode") {
            if (val == "up") cur->mode = ShiftMode::Up;
            else if (val == "down") cur->mode = ShiftMode::Down;
            else if (val == "both") cur->mode = ShiftMode::Both;
            else throw ConfigError("chain config: unknown mode '" + val + "'");
        } else if (key == "note_num_range") {
            auto parts = split(val, ',');
            if (parts.size() != 2) throw ConfigError("chain config: note_num_range wants 'lo,hi'");
            cur->note_num_range = {std::stoi(trim(parts[0])), std::stoi(trim(parts[1]))};
        } else if (key == "note_duration_range") {
            auto parts = split(val, ',');
            if (parts.size() != 2) throw ConfigError("chain config: note_duration_range wants 'lo,hi'");
            cur->note_duration_range = {std::stod(trim(parts[0])), std::stod(trim(parts[1]))};
        } else if (key == "restrict_to_instrument_time") {
            cur->restrict_to_instrument_time = (val == "true" || val == "1");
        } else {
            throw ConfigError("chain config: unknown key '" + key + "'");
        }
    }
    for (const auto& spec : chain) spec.validate();
    return chain;
}

inline std::string serialize_chain_config(const std::vector<AugmentSpec>& chain) {
    std::string out;
    for (const auto& spec : chain) {
        out += "[" + to_string(spec.kind) + "]\n";
        out += "probability = " + format_fixed(spec.probability, 4) + "\n";
        if (spec.kind == AugmentKind::PitchShift || spec.kind == AugmentKind::OnsetTimeShift ||
            spec.kind == AugmentKind::DurationShift) {
            out += "max_shift = " + format_fixed(spec.max_shift, 4) + "\n";
            out += "mode = " + to_string(spec.mode) + "\n";
        }
        if (spec.kind == AugmentKind::NoteAdd) {
            out += "note_num_range = " + std::to_string(spec.note_num_range.first) + "," +
                   std::to_string(spec.note_num_range.second) + "\n";
            out += "note_duration_range = " + format_fixed(spec.note_duration_range.first, 4) + "," +
                   format_fixed(spec.note_duration_range.second, 4) + "\n";
            out += std::string("restrict_to_instrument_time = ") +
                   (spec.restrict_to_instrument_time ? "true" : "false") + "\n";
        }
        out += "\n";
    }
    return out;
}

}  // namespace scorefollow
