#pragma once

// Hand-rolled SMF byte construction for parser fixtures, independent of the
// library's writer.

#include <cstdint>
#include <vector>

namespace smf_builder {

using Bytes = std::vector<std::uint8_t>;

inline void be16(Bytes& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}
inline void be32(Bytes& b, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void vlq(Bytes& b, std::uint32_t v) {
    std::uint8_t tmp[5];
    int n = 0;
    do {
        tmp[n++] = static_cast<std::uint8_t>(v & 0x7f);
        v >>= 7;
    } while (v);
    while (n--) b.push_back(static_cast<std::uint8_t>(tmp[n] | (n ? 0x80 : 0)));
}

inline Bytes header(std::uint16_t format, std::uint16_t ntrks, std::uint16_t division) {
    Bytes b{'M', 'T', 'h', 'd'};
    be32(b, 6);
    be16(b, format);
    be16(b, ntrks);
    be16(b, division);
    return b;
}

class Track {
public:
    Track& delta(std::uint32_t ticks) {
        vlq(events_, ticks);
        return *this;
    }
    Track& note_on(int pitch, int vel, int channel = 0) {
        events_.push_back(static_cast<std::uint8_t>(0x90 | channel));
        events_.push_back(static_cast<std::uint8_t>(pitch));
        events_.push_back(static_cast<std::uint8_t>(vel));
        return *this;
    }
    Track& note_off(int pitch, int channel = 0) {
        events_.push_back(static_cast<std::uint8_t>(0x80 | channel));
        events_.push_back(static_cast<std::uint8_t>(pitch));
        events_.push_back(64);
        return *this;
    }
    // raw data bytes, e.g. for running-status fixtures
    Track& raw(std::initializer_list<std::uint8_t> bytes) {
        events_.insert(events_.end(), bytes);
        return *this;
    }
    Track& tempo(std::uint32_t us_per_quarter) {
        events_.insert(events_.end(), {0xff, 0x51, 0x03});
        events_.push_back(static_cast<std::uint8_t>(us_per_quarter >> 16));
        events_.push_back(static_cast<std::uint8_t>(us_per_quarter >> 8));
        events_.push_back(static_cast<std::uint8_t>(us_per_quarter));
        return *this;
    }
    Track& end() {
        events_.insert(events_.end(), {0xff, 0x2f, 0x00});
        ended_ = true;
        return *this;
    }

    Bytes bytes() const {
        Bytes b{'M', 'T', 'r', 'k'};
        Bytes ev = events_;
        if (!ended_) {
            vlq(ev, 0);
            ev.insert(ev.end(), {0xff, 0x2f, 0x00});
        }
        be32(b, static_cast<std::uint32_t>(ev.size()));
        b.insert(b.end(), ev.begin(), ev.end());
        return b;
    }

private:
    Bytes events_;
    bool ended_ = false;
};

inline Bytes file(std::uint16_t format, std::uint16_t division, const std::vector<Track>& tracks) {
    Bytes b = header(format, static_cast<std::uint16_t>(tracks.size()), division);
    for (const auto& t : tracks) {
        Bytes tb = t.bytes();
        b.insert(b.end(), tb.begin(), tb.end());
    }
    return b;
}

}  // namespace smf_builder
