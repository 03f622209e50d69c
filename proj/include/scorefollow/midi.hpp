#pragma once

// Standard MIDI File (format 0/1) parsing into second-resolved note events,
// plus a minimal format-0 writer used for synthesizing fixture corpora.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scorefollow/util.hpp"

namespace scorefollow {

struct NoteEvent {
    int pitch = 0;        // 0..127
    double onset = 0.0;   // seconds, >= 0
    double duration = 0.0;  // seconds, > 0
    int velocity = 0;     // 0..127
    int track = 0;
};

struct MidiSequence {
    std::vector<NoteEvent> notes;  // sorted non-decreasing by onset
    double total_duration = 0.0;

    void finalize() {
        std::stable_sort(notes.begin(), notes.end(),
                         [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });
        total_duration = 0.0;
        for (const auto& n : notes) total_duration = std::max(total_duration, n.onset + n.duration);
    }
};

namespace detail {

class ByteReader {
public:
    ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return n_ - pos_; }
    bool eof() const { return pos_ >= n_; }

    std::uint8_t u8() {
        if (pos_ >= n_) throw DataError("SMF: truncated data");
        return p_[pos_++];
    }
    std::uint8_t peek() const {
        if (pos_ >= n_) throw DataError("SMF: truncated data");
        return p_[pos_];
    }
    std::uint16_t u16() { return static_cast<std::uint16_t>(u8() << 8 | u8()); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | u8();
        return v;
    }
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            std::uint8_t b = u8();
            v = v << 7 | (b & 0x7f);
            if (!(b & 0x80)) return v;
        }
        throw DataError("SMF: variable-length quantity too long");
    }
    void skip(std::size_t n) {
        if (remaining() < n) throw DataError("SMF: truncated chunk");
        pos_ += n;
    }

private:
    const std::uint8_t* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

struct RawNote {
    int pitch;
    std::uint64_t on_tick;
    std::uint64_t off_tick;
    int velocity;
    int track;
};

// Piecewise-linear tick -> seconds map built from set-tempo events.
class TempoMap {
public:
    explicit TempoMap(std::map<std::uint64_t, std::uint32_t> changes, std::uint16_t division)
        : division_(division) {
        if (changes.find(0) == changes.end()) changes[0] = 500000;  // 120 BPM default
        double sec = 0.0;
        std::uint64_t prev_tick = 0;
        std::uint32_t prev_uspq = changes.begin()->second;
        for (const auto& [tick, uspq] : changes) {
            sec += ticks_to_sec(tick - prev_tick, prev_uspq);
            segments_.push_back({tick, sec, uspq});
            prev_tick = tick;
            prev_uspq = uspq;
        }
    }

    double seconds_at(std::uint64_t tick) const {
        const Segment* seg = &segments_.front();
        for (const auto& s : segments_) {
            if (s.tick > tick) break;
            seg = &s;
        }
        return seg->seconds + ticks_to_sec(tick - seg->tick, seg->uspq);
    }

private:
    struct Segment {
        std::uint64_t tick;
        double seconds;
        std::uint32_t uspq;
    };
    double ticks_to_sec(std::uint64_t dt, std::uint32_t uspq) const {
        return static_cast<double>(dt) * uspq / (1e6 * division_);
    }
    std::vector<Segment> segments_;
    std::uint16_t division_;
};

struct TrackScan {
    std::vector<RawNote> notes;
    std::map<std::uint64_t, std::uint32_t> tempo_changes;  // tick -> us per quarter
};

inline TrackScan scan_track(const std::uint8_t* data, std::size_t len, int track_index,
                            std::vector<std::string>* warnings) {
    TrackScan out;
    ByteReader r(data, len);
    std::uint64_t tick = 0;
    std::uint8_t running_status = 0;
    // Open note-ons keyed by (channel, pitch); closed first-on-first-off.
    std::map<std::pair<int, int>, std::deque<std::pair<std::uint64_t, int>>> open;

    auto close_note = [&](int channel, int pitch, std::uint64_t off_tick) {
        auto it = open.find({channel, pitch});
        if (it == open.end() || it->second.empty()) {
            if (warnings)
                warnings->push_back("SMF: note-off without matching note-on (track " +
                                    std::to_string(track_index) + ", pitch " + std::to_string(pitch) + ")");
            return;
        }
        auto [on_tick, vel] = it->second.front();
        it->second.pop_front();
        if (off_tick > on_tick)
            out.notes.push_back({pitch, on_tick, off_tick, vel, track_index});
        else if (warnings)
            warnings->push_back("SMF: zero-length note dropped (track " + std::to_string(track_index) +
                                ", pitch " + std::to_string(pitch) + ")");
    };

    bool end_of_track = false;
    while (!r.eof() && !end_of_track) {
        tick += r.vlq();
        std::uint8_t status = r.peek();
        if (status & 0x80) {
            r.u8();
            if (status < 0xf0) running_status = status;
        } else {
            if (running_status == 0) throw DataError("SMF: data byte without running status");
            status = running_status;
        }

        if (status == 0xff) {  // meta; cancels running status
            running_status = 0;
            std::uint8_t type = r.u8();
            std::uint32_t mlen = r.vlq();
            if (type == 0x51) {
                if (mlen != 3) throw DataError("SMF: malformed set-tempo event");
                std::uint32_t uspq = 0;
                for (int i = 0; i < 3; ++i) uspq = uspq << 8 | r.u8();
                out.tempo_changes[tick] = uspq;
            } else if (type == 0x2f) {
                r.skip(mlen);
                end_of_track = true;
            } else {
                r.skip(mlen);
            }
        } else if (status == 0xf0 || status == 0xf7) {  // sysex: skipped, cancels running status
            running_status = 0;
            r.skip(r.vlq());
        } else {
            int channel = status & 0x0f;
            switch (status & 0xf0) {
                case 0x80: {
                    int pitch = r.u8() & 0x7f;
                    r.u8();
                    close_note(channel, pitch, tick);
                    break;
                }
                case 0x90: {
                    int pitch = r.u8() & 0x7f;
                    int vel = r.u8() & 0x7f;
                    if (vel == 0)
                        close_note(channel, pitch, tick);  // velocity 0 == note-off
                    else
                        open[{channel, pitch}].push_back({tick, vel});
                    break;
                }
                case 0xa0:
                case 0xb0:
                case 0xe0:
                    r.u8();
                    r.u8();
                    break;
                case 0xc0:
                case 0xd0:
                    r.u8();
                    break;
                default:
                    throw DataError("SMF: unsupported status byte");
            }
        }
    }

    for (auto& [key, stack] : open) {
        while (!stack.empty()) {
            if (warnings)
                warnings->push_back("SMF: unterminated note closed at end of track " +
                                    std::to_string(track_index) + " (pitch " + std::to_string(key.second) + ")");
            auto [on_tick, vel] = stack.front();
            stack.pop_front();
            if (tick > on_tick) out.notes.push_back({key.second, on_tick, tick, vel, track_index});
        }
    }
    return out;
}

}  // namespace detail

// Parses a Standard MIDI File (format 0 or 1). Non-fatal anomalies are
// appended to `warnings` when provided.
inline MidiSequence parse_smf(std::span<const std::uint8_t> bytes,
                              std::vector<std::string>* warnings = nullptr) {
    detail::ByteReader r(bytes.data(), bytes.size());
    if (bytes.size() < 14) throw DataError("SMF: file too short for header");
    if (r.u32() != 0x4d546864u) throw DataError("SMF: missing MThd header");
    std::uint32_t hlen = r.u32();
    if (hlen < 6) throw DataError("SMF: malformed header length");
    std::uint16_t format = r.u16();
    std::uint16_t ntrks = r.u16();
    std::uint16_t division = r.u16();
    r.skip(hlen - 6);
    if (format == 2) throw DataError("SMF: format 2 files are unsupported");
    if (format > 2) throw DataError("SMF: unknown format");
    if (division & 0x8000) throw DataError("SMF: SMPTE time division is unsupported");
    if (division == 0) throw DataError("SMF: zero time division");

    std::vector<detail::TrackScan> scans;
    int track_index = 0;
    while (track_index < ntrks && r.remaining() > 0) {
        if (r.remaining() < 8) throw DataError("SMF: truncated chunk header");
        std::uint32_t type = r.u32();
        std::uint32_t clen = r.u32();
        if (clen > r.remaining()) throw DataError("SMF: truncated chunk");
        if (type == 0x4d54726bu) {  // MTrk
            scans.push_back(detail::scan_track(bytes.data() + r.pos(), clen, track_index, warnings));
            ++track_index;
        }
        // Unknown chunk types are skipped per the SMF spec.
        r.skip(clen);
    }
    if (track_index < ntrks) throw DataError("SMF: fewer tracks than header declares");

    std::map<std::uint64_t, std::uint32_t> tempo;
    for (const auto& s : scans)
        for (const auto& [tick, uspq] : s.tempo_changes) tempo[tick] = uspq;
    detail::TempoMap map(std::move(tempo), division);

    MidiSequence seq;
    for (const auto& s : scans) {
        for (const auto& rn : s.notes) {
            double on = map.seconds_at(rn.on_tick);
            double off = map.seconds_at(rn.off_tick);
            if (off <= on) continue;
            seq.notes.push_back({rn.pitch, on, off - on, rn.velocity, rn.track});
        }
    }
    seq.finalize();
    return seq;
}

inline MidiSequence parse_smf_file(const std::filesystem::path& path,
                                   std::vector<std::string>* warnings = nullptr) {
    auto bytes = read_file(path);
    return parse_smf(bytes, warnings);
}

// Minimal single-track (format 0) writer at a fixed tempo. Sufficient for
// emitting synthesized corpora; not a general-purpose MIDI writer.
inline std::vector<std::uint8_t> write_smf0(const MidiSequence& seq, std::uint16_t division = 480,
                                            std::uint32_t us_per_quarter = 500000) {
    struct Ev {
        std::uint64_t tick;
        int order;  // offs before ons at the same tick
        std::uint8_t status, d1, d2;
    };
    std::vector<Ev> evs;
    auto to_tick = [&](double sec) {
        return static_cast<std::uint64_t>(std::llround(sec * 1e6 * division / us_per_quarter));
    };
    for (const auto& n : seq.notes) {
        std::uint64_t on = to_tick(n.onset);
        std::uint64_t off = to_tick(n.onset + n.duration);
        if (off <= on) off = on + 1;
        int vel = std::clamp(n.velocity, 1, 127);
        evs.push_back({on, 1, 0x90, static_cast<std::uint8_t>(n.pitch), static_cast<std::uint8_t>(vel)});
        evs.push_back({off, 0, 0x80, static_cast<std::uint8_t>(n.pitch), 64});
    }
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
        return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
    });

    std::vector<std::uint8_t> trk;
    auto vlq = [&](std::uint64_t v) {
        std::uint8_t tmp[5];
        int n = 0;
        do {
            tmp[n++] = static_cast<std::uint8_t>(v & 0x7f);
            v >>= 7;
        } while (v);
        while (n--) trk.push_back(static_cast<std::uint8_t>(tmp[n] | (n ? 0x80 : 0)));
    };
    // set tempo at tick 0
    vlq(0);
    trk.insert(trk.end(), {0xff, 0x51, 0x03, static_cast<std::uint8_t>(us_per_quarter >> 16),
                           static_cast<std::uint8_t>(us_per_quarter >> 8),
                           static_cast<std::uint8_t>(us_per_quarter)});
    std::uint64_t prev = 0;
    for (const auto& e : evs) {
        vlq(e.tick - prev);
        prev = e.tick;
        trk.push_back(e.status);
        trk.push_back(e.d1);
        trk.push_back(e.d2);
    }
    vlq(0);
    trk.insert(trk.end(), {0xff, 0x2f, 0x00});

    std::vector<std::uint8_t> out;
    auto be16 = [&](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    auto be32 = [&](std::uint32_t v) {
        for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    be32(6);
    be16(0);
    be16(1);
    be16(division);
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    be32(static_cast<std::uint32_t>(trk.size()));
    out.insert(out.end(), trk.begin(), trk.end());
    return out;
}

}  // namespace scorefollow
