#pragma once

// Binary piano rolls: 128 pitch rows by n fixed-duration frames. Columns are
// bit-packed (two 64-bit words per frame) so column Hamming distances and
// raw-roll correlations reduce to XOR/AND + popcount.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "scorefollow/midi.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

inline constexpr int kNumPitches = 128;
inline constexpr double kDefaultFrameDuration = 1.0 / 96.0;

class PianoRoll {
public:
    PianoRoll() = default;
    PianoRoll(std::size_t frames, double frame_duration)
        : frames_(frames), frame_duration_(frame_duration), bits_(2 * frames, 0) {}

    std::size_t frames() const { return frames_; }
    double frame_duration() const { return frame_duration_; }

    bool get(int pitch, std::size_t frame) const {
        return bits_[2 * frame + static_cast<std::size_t>(pitch) / 64] >> (pitch % 64) & 1u;
    }
    void set(int pitch, std::size_t frame, bool value = true) {
        std::uint64_t& w = bits_[2 * frame + static_cast<std::size_t>(pitch) / 64];
        std::uint64_t mask = 1ull << (pitch % 64);
        if (value)
            w |= mask;
        else
            w &= ~mask;
    }

    // Packed column words; column t occupies words [2t, 2t+1].
    const std::uint64_t* column(std::size_t frame) const { return &bits_[2 * frame]; }
    void assign_column(std::size_t frame, const std::uint64_t* words) {
        bits_[2 * frame] = words[0];
        bits_[2 * frame + 1] = words[1];
    }
    std::size_t popcount() const {
        std::size_t n = 0;
        for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    bool operator==(const PianoRoll& other) const {
        return frames_ == other.frames_ && frame_duration_ == other.frame_duration_ &&
               bits_ == other.bits_;
    }

private:
    std::size_t frames_ = 0;
    double frame_duration_ = kDefaultFrameDuration;
    std::vector<std::uint64_t> bits_;
};

namespace detail {
// First/last+1 frame whose start time lies in [onset, onset + duration).
inline std::size_t first_frame(double t, double fd) {
    double f = std::ceil(t / fd - 1e-9);
    return f <= 0 ? 0 : static_cast<std::size_t>(f);
}
}  // namespace detail

inline std::size_t frame_count(double duration, double fd) {
    double f = std::ceil(duration / fd - 1e-9);
    return f <= 0 ? 0 : static_cast<std::size_t>(f);
}

// Renders frames [span_start, span_start + span_len) of the sequence's roll.
// A note occupies frame t iff t * fd lies in [onset, onset + duration); all
// velocities collapse to 1.
inline PianoRoll render_roll_span(const MidiSequence& seq, double frame_duration,
                                  std::size_t span_start, std::size_t span_len) {
    if (frame_duration <= 0) throw ConfigError("frame_duration must be positive");
    PianoRoll roll(span_len, frame_duration);
    for (const auto& n : seq.notes) {
        std::size_t lo = detail::first_frame(n.onset, frame_duration);
        std::size_t hi = frame_count(n.onset + n.duration, frame_duration);  // exclusive
        lo = std::max(lo, span_start);
        hi = std::min(hi, span_start + span_len);
        for (std::size_t t = lo; t < hi; ++t) roll.set(n.pitch, t - span_start);
    }
    return roll;
}

inline PianoRoll to_piano_roll(const MidiSequence& seq, double frame_duration = kDefaultFrameDuration) {
    if (frame_duration <= 0) throw ConfigError("frame_duration must be positive");
    return render_roll_span(seq, frame_duration, 0, frame_count(seq.total_duration, frame_duration));
}

// Extracts 128 x length columns starting at `start` (which may be negative).
// Without `pad`, any out-of-range column is an error; with it, out-of-range
// columns are zero.
inline PianoRoll slice_roll(const PianoRoll& roll, std::int64_t start, std::size_t length,
                            bool pad = false) {
    if (!pad && (start < 0 || static_cast<std::uint64_t>(start) + length > roll.frames()))
        throw DataError("slice_roll: range out of bounds");
    PianoRoll out(length, roll.frame_duration());
    for (std::size_t j = 0; j < length; ++j) {
        std::int64_t src = start + static_cast<std::int64_t>(j);
        if (src < 0 || src >= static_cast<std::int64_t>(roll.frames())) continue;
        out.assign_column(j, roll.column(static_cast<std::size_t>(src)));
    }
    return out;
}

// P5 grayscale image, one pixel per cell, set cells white. Row 0 is pitch 127
// so higher notes appear at the top.
inline std::vector<std::uint8_t> render_pgm(const PianoRoll& roll) {
    std::string header = "P5\n" + std::to_string(roll.frames()) + " 128\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + kNumPitches * roll.frames());
    for (int row = 0; row < kNumPitches; ++row) {
        int pitch = 127 - row;
        for (std::size_t t = 0; t < roll.frames(); ++t)
            out.push_back(roll.get(pitch, t) ? 255 : 0);
    }
    return out;
}

// Flat binary roll file: magic "PROLL001", little-endian u32 frame count,
// u64 frame duration in nanoseconds, then 128*n cell bytes row-major.
inline constexpr char kRollMagic[8] = {'P', 'R', 'O', 'L', 'L', '0', '0', '1'};

inline std::vector<std::uint8_t> serialize_roll(const PianoRoll& roll) {
    std::vector<std::uint8_t> out(sizeof kRollMagic);
    std::memcpy(out.data(), kRollMagic, sizeof kRollMagic);
    auto le = [&](std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    le(roll.frames(), 4);
    le(static_cast<std::uint64_t>(std::llround(roll.frame_duration() * 1e9)), 8);
    for (int p = 0; p < kNumPitches; ++p)
        for (std::size_t t = 0; t < roll.frames(); ++t)
            out.push_back(roll.get(p, t) ? 1 : 0);
    return out;
}

inline PianoRoll deserialize_roll(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kRollMagic, sizeof kRollMagic) != 0)
        throw DataError("roll file: bad magic");
    auto le = [&](std::size_t off, int n) {
        std::uint64_t v = 0;
        for (int i = n - 1; i >= 0; --i) v = v << 8 | bytes[off + static_cast<std::size_t>(i)];
        return v;
    };
    std::size_t n = le(8, 4);
    double fd = static_cast<double>(le(12, 8)) / 1e9;
    if (bytes.size() != 20 + static_cast<std::size_t>(kNumPitches) * n)
        throw DataError("roll file: size mismatch");
    PianoRoll roll(n, fd);
    for (int p = 0; p < kNumPitches; ++p)
        for (std::size_t t = 0; t < n; ++t)
            if (bytes[20 + static_cast<std::size_t>(p) * n + t]) roll.set(p, t);
    return roll;
}

// Nearest-neighbour column resampling: output column t reads input column
// floor(t / factor); the frame count scales by `factor`.
inline PianoRoll tempo_rescale(const PianoRoll& roll, double factor) {
    if (factor <= 0) throw ConfigError("tempo factor must be positive");
    std::size_t n_out = static_cast<std::size_t>(std::floor(roll.frames() * factor + 0.5));
    PianoRoll out(n_out, roll.frame_duration());
    for (std::size_t t = 0; t < n_out; ++t) {
        auto src = static_cast<std::size_t>(std::floor(t / factor));
        if (src >= roll.frames()) src = roll.frames() - 1;
        out.assign_column(t, roll.column(src));
    }
    return out;
}

}  // namespace scorefollow
