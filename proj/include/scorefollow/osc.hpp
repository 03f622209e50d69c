#pragma once

// OSC 1.0 message encoding and fire-and-forget UDP streaming of follow
// traces: /sf/position carries the predicted score time in seconds,
// /sf/tempo_dev the performer's advance rate as a ratio of the score's.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "scorefollow/follower.hpp"
#include "scorefollow/peaks.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

using OscArg = std::variant<std::int32_t, float, std::string>;

struct OscMessage {
    std::string address;  // must start with '/'
    std::vector<OscArg> args;
};

namespace detail {
inline void pad_string(std::vector<std::uint8_t>& out, const std::string& s) {
    out.insert(out.end(), s.begin(), s.end());
    out.push_back(0);  // terminator
    while (out.size() % 4 != 0) out.push_back(0);
}
inline void be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
}  // namespace detail

// Big-endian OSC 1.0 packet: padded address, padded ",..."-type tags, args.
inline std::vector<std::uint8_t> encode(const OscMessage& msg) {
    if (msg.address.empty() || msg.address[0] != '/')
        throw ConfigError("osc: address must start with '/'");
    std::vector<std::uint8_t> out;
    detail::pad_string(out, msg.address);
    std::string tags = ",";
    for (const auto& arg : msg.args) {
        if (std::holds_alternative<std::int32_t>(arg)) tags += 'i';
        else if (std::holds_alternative<float>(arg)) tags += 'f';
        else tags += 's';
    }
    detail::pad_string(out, tags);
    for (const auto& arg : msg.args) {
        if (const auto* i = std::get_if<std::int32_t>(&arg)) {
            detail::be32(out, static_cast<std::uint32_t>(*i));
        } else if (const auto* f = std::get_if<float>(&arg)) {
            std::uint32_t bits;
            std::memcpy(&bits, f, 4);
            detail::be32(out, bits);
        } else {
            detail::pad_string(out, std::get<std::string>(arg));
        }
    }
    return out;
}

class UdpSender {
public:
    UdpSender(const std::string& host, std::uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0) throw DataError("osc: cannot create UDP socket");
        std::memset(&dest_, 0, sizeof dest_);
        dest_.sin_family = AF_INET;
        dest_.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &dest_.sin_addr) != 1) {
            ::close(fd_);
            throw ConfigError("osc: invalid IPv4 host '" + host + "'");
        }
    }
    ~UdpSender() {
        if (fd_ >= 0) ::close(fd_);
    }
    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;

    void send(const std::vector<std::uint8_t>& packet) const {
        ::sendto(fd_, packet.data(), packet.size(), 0,
                 reinterpret_cast<const sockaddr*>(&dest_), sizeof dest_);
    }

private:
    int fd_ = -1;
    sockaddr_in dest_{};
};

// Optional address remapping: text lines "internal_address external_address".
inline std::map<std::string, std::string> parse_remap(const std::string& text) {
    std::map<std::string, std::string> remap;
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto sp = line.find_first_of(" \t");
        if (sp == std::string::npos) throw ConfigError("osc remap: bad line '" + line + "'");
        remap[trim(line.substr(0, sp))] = trim(line.substr(sp + 1));
    }
    return remap;
}

// Two datagrams per trace entry, in trace order. The tempo deviation is the
// least-squares slope over the trailing predictions divided by the expected
// frames-per-tick at score tempo; entries without enough history emit 1.
inline std::size_t stream_trace(const FollowTrace& trace, const std::string& host,
                                std::uint16_t port, double frame_duration, double f_e,
                                std::size_t buffer_capacity = 20,
                                const std::map<std::string, std::string>& remap = {}) {
    UdpSender sender(host, port);
    auto addr = [&](const std::string& a) {
        auto it = remap.find(a);
        return it == remap.end() ? a : it->second;
    };
    double expected_frames_per_tick = 1.0 / (f_e * frame_duration);
    std::size_t sent = 0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& entry = trace[i];
        double seconds = static_cast<double>(entry.score_frame) * frame_duration;
        sender.send(encode({addr("/sf/position"), {static_cast<float>(seconds)}}));
        ++sent;

        double tempo_dev = 1.0;
        std::size_t lo = i + 1 > buffer_capacity ? i + 1 - buffer_capacity : 0;
        xs.clear();
        ys.clear();
        for (std::size_t j = lo; j <= i; ++j) {
            xs.push_back(static_cast<double>(trace[j].tick));
            ys.push_back(static_cast<double>(trace[j].score_frame));
        }
        if (xs.size() >= 2) tempo_dev = ols_fit(xs, ys).slope / expected_frames_per_tick;
        sender.send(encode({addr("/sf/tempo_dev"), {static_cast<float>(tempo_dev)}}));
        ++sent;
    }
    return sent;
}

}  // namespace scorefollow
