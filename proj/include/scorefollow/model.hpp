#pragma once

// The dual-encoder correlation matcher. Each encoder is a single 1-D
// convolution over the 128 pitch channels (stride 1, zero padding k//2)
// followed by ReLU; the encoded window is cross-correlated against the
// encoded context, yielding one score per window placement. Training treats
// the c+w-1 placements as classes under softmax cross-entropy, so forward,
// loss, and the exact analytic gradients live together here.
//
// Weight layout is input-major: weights[(ch * k + tap) * e + out_channel].
// Latent activations are channel-major: values[channel * frames + t].

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <span>
#include <vector>

#include "scorefollow/piano_roll.hpp"
#include "scorefollow/rng.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

struct LatentRoll {
    std::size_t channels = 0;
    std::size_t frames = 0;
    std::vector<double> v;  // channel-major

    LatentRoll() = default;
    LatentRoll(std::size_t ch, std::size_t n) : channels(ch), frames(n), v(ch * n, 0.0) {}
    double& at(std::size_t ch, std::size_t t) { return v[ch * frames + t]; }
    double at(std::size_t ch, std::size_t t) const { return v[ch * frames + t]; }
};

struct ModelParams {
    std::size_t e = 64;  // latent channels
    std::size_t k = 3;   // kernel width
    std::vector<double> ctx_weights, ctx_bias;  // context encoder
    std::vector<double> win_weights, win_bias;  // window encoder

    std::size_t param_count() const { return 2 * (kNumPitches * k * e + e); }

    static ModelParams zeros(std::size_t e, std::size_t k) {
        ModelParams p;
        p.e = e;
        p.k = k;
        p.ctx_weights.assign(kNumPitches * k * e, 0.0);
        p.win_weights.assign(kNumPitches * k * e, 0.0);
        p.ctx_bias.assign(e, 0.0);
        p.win_bias.assign(e, 0.0);
        return p;
    }

    // Uniform +-1/sqrt(128*k) weights, zero bias.
    static ModelParams init(std::size_t e, std::size_t k, Rng& rng) {
        ModelParams p = zeros(e, k);
        double bound = 1.0 / std::sqrt(static_cast<double>(kNumPitches) * k);
        for (auto& w : p.ctx_weights) w = rng.uniform(-bound, bound);
        for (auto& w : p.win_weights) w = rng.uniform(-bound, bound);
        return p;
    }

    // Identity-like encoders: e = 128 channels, each kernel a unit tap at its
    // own pitch row and the centre tap, so latents equal the raw roll and the
    // matcher reduces to raw binary cross-correlation.
    static ModelParams delta(std::size_t k = 3) {
        ModelParams p = zeros(kNumPitches, k);
        for (std::size_t ch = 0; ch < kNumPitches; ++ch) {
            std::size_t centre = k / 2;
            p.ctx_weights[(ch * k + centre) * p.e + ch] = 1.0;
            p.win_weights[(ch * k + centre) * p.e + ch] = 1.0;
        }
        return p;
    }
};

// out[i][j] = bias[i] + sum_ch sum_d w[ch][d][i] * in[ch][j + d - k//2],
// out-of-range input treated as zero. Binary-roll input: only set cells
// contribute, so iterate those.
inline LatentRoll conv1d_forward(const PianoRoll& roll, std::span<const double> weights,
                                 std::span<const double> bias, std::size_t e, std::size_t k) {
    if (weights.size() != kNumPitches * k * e || bias.size() != e)
        throw ConfigError("conv1d: weight/bias dimensions do not match");
    std::size_t n = roll.frames();
    LatentRoll out(e, n);
    for (std::size_t i = 0; i < e; ++i)
        std::fill_n(out.v.begin() + i * n, n, bias[i]);
    std::int64_t off = static_cast<std::int64_t>(k / 2);
    for (std::size_t t = 0; t < n; ++t) {
        const std::uint64_t* col = roll.column(t);
        for (int word = 0; word < 2; ++word) {
            std::uint64_t bitsleft = col[word];
            while (bitsleft) {
                int ch = word * 64 + std::countr_zero(bitsleft);
                bitsleft &= bitsleft - 1;
                for (std::size_t d = 0; d < k; ++d) {
                    std::int64_t j = static_cast<std::int64_t>(t) + off - static_cast<std::int64_t>(d);
                    if (j < 0 || j >= static_cast<std::int64_t>(n)) continue;
                    const double* w = &weights[(static_cast<std::size_t>(ch) * k + d) * e];
                    double* o = &out.v[static_cast<std::size_t>(j)];
                    for (std::size_t i = 0; i < e; ++i) o[i * n] += w[i];
                }
            }
        }
    }
    return out;
}

// Dense variant for already-encoded (real-valued) inputs.
inline LatentRoll conv1d_forward(const LatentRoll& in, std::span<const double> weights,
                                 std::span<const double> bias, std::size_t e, std::size_t k) {
    if (weights.size() != in.channels * k * e || bias.size() != e)
        throw ConfigError("conv1d: weight/bias dimensions do not match");
    std::size_t n = in.frames;
    LatentRoll out(e, n);
    for (std::size_t i = 0; i < e; ++i)
        std::fill_n(out.v.begin() + i * n, n, bias[i]);
    std::int64_t koff = static_cast<std::int64_t>(k / 2);
    for (std::size_t ch = 0; ch < in.channels; ++ch) {
        for (std::size_t d = 0; d < k; ++d) {
            std::int64_t shift = static_cast<std::int64_t>(d) - koff;  // input index = j + shift
            std::size_t j_lo = static_cast<std::size_t>(std::max<std::int64_t>(0, -shift));
            std::size_t j_hi = static_cast<std::size_t>(
                std::clamp<std::int64_t>(static_cast<std::int64_t>(n) - shift, 0,
                                         static_cast<std::int64_t>(n)));
            const double* src = &in.v[ch * n];
            for (std::size_t i = 0; i < e; ++i) {
                double w = weights[(ch * k + d) * e + i];
                double* o = &out.v[i * n];
                for (std::size_t j = j_lo; j < j_hi; ++j)
                    o[j] += w * src[j + static_cast<std::size_t>(shift)];
            }
        }
    }
    return out;
}

inline LatentRoll relu(const LatentRoll& x) {
    LatentRoll out = x;
    for (auto& v : out.v) v = std::max(0.0, v);
    return out;
}

// P'[lag] = sum_i sum_j wp[i][j] * cpad[i][lag + j] where cpad is cp padded
// with w-1 zero columns on each side; lag runs over [0, c+w-1).
inline std::vector<double> cross_correlate(const LatentRoll& cp, const LatentRoll& wp) {
    if (cp.channels != wp.channels) throw ConfigError("cross_correlate: channel mismatch");
    std::size_t c = cp.frames, w = wp.frames;
    if (w == 0 || c == 0) throw ConfigError("cross_correlate: empty input");
    std::size_t len = c + w - 1;
    std::size_t npad = c + 2 * (w - 1);
    std::vector<double> padded(npad, 0.0);
    std::vector<double> out(len, 0.0);
    for (std::size_t i = 0; i < cp.channels; ++i) {
        std::fill(padded.begin(), padded.end(), 0.0);
        std::copy_n(&cp.v[i * c], c, padded.begin() + static_cast<std::ptrdiff_t>(w - 1));
        const double* wrow = &wp.v[i * w];
        for (std::size_t j = 0; j < w; ++j) {
            double a = wrow[j];
            if (a == 0.0) continue;
            const double* src = &padded[j];
            for (std::size_t lag = 0; lag < len; ++lag) out[lag] += a * src[lag];
        }
    }
    return out;
}

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    LatentRoll ctx_pre, ctx_act;  // context encoder pre-activation / post-ReLU
    LatentRoll win_pre, win_act;
    std::vector<double> correlation;
};

inline ForwardCache forward_cached(const PianoRoll& context, const PianoRoll& window,
                                   const ModelParams& p) {
    ForwardCache f;
    f.ctx_pre = conv1d_forward(context, p.ctx_weights, p.ctx_bias, p.e, p.k);
    f.ctx_act = relu(f.ctx_pre);
    f.win_pre = conv1d_forward(window, p.win_weights, p.win_bias, p.e, p.k);
    f.win_act = relu(f.win_pre);
    f.correlation = cross_correlate(f.ctx_act, f.win_act);
    return f;
}

inline std::vector<double> forward(const PianoRoll& context, const PianoRoll& window,
                                   const ModelParams& p) {
    return forward_cached(context, window, p).correlation;
}

inline std::vector<double> softmax(std::span<const double> v) {
    double mx = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sum += out[i] = std::exp(v[i] - mx);
    for (auto& x : out) x /= sum;
    return out;
}

// Categorical cross-entropy -log softmax(P')[label], max-subtracted.
inline double loss(std::span<const double> correlation, std::size_t label) {
    if (label >= correlation.size()) throw ConfigError("loss: label out of range");
    double mx = *std::max_element(correlation.begin(), correlation.end());
    double sum = 0.0;
    for (double v : correlation) sum += std::exp(v - mx);
    return std::log(sum) + mx - correlation[label];
}

// Index of the maximum; ties break to the lowest index.
inline std::size_t predict(std::span<const double> correlation) {
    if (correlation.empty()) throw ConfigError("predict: empty vector");
    return static_cast<std::size_t>(
        std::max_element(correlation.begin(), correlation.end()) - correlation.begin());
}

// Raw binary cross-correlation of the unencoded rolls (the training
// baseline): popcount of column intersections, argmax with the same tie rule.
inline std::vector<std::uint32_t> baseline_correlation(const PianoRoll& context,
                                                       const PianoRoll& window) {
    std::size_t c = context.frames(), w = window.frames();
    if (c == 0 || w == 0) throw ConfigError("baseline: empty roll");
    std::size_t len = c + w - 1;
    std::vector<std::uint32_t> out(len, 0);
    for (std::size_t lag = 0; lag < len; ++lag) {
        // window column j overlaps context column lag + j - (w-1)
        std::uint32_t acc = 0;
        for (std::size_t j = 0; j < w; ++j) {
            std::int64_t m = static_cast<std::int64_t>(lag + j) - static_cast<std::int64_t>(w - 1);
            if (m < 0 || m >= static_cast<std::int64_t>(c)) continue;
            const std::uint64_t* a = window.column(j);
            const std::uint64_t* b = context.column(static_cast<std::size_t>(m));
            acc += static_cast<std::uint32_t>(std::popcount(a[0] & b[0]) + std::popcount(a[1] & b[1]));
        }
        out[lag] = acc;
    }
    return out;
}

inline std::size_t baseline_predict(const PianoRoll& context, const PianoRoll& window) {
    auto corr = baseline_correlation(context, window);
    return static_cast<std::size_t>(std::max_element(corr.begin(), corr.end()) - corr.begin());
}

struct Gradients {
    std::vector<double> ctx_weights, ctx_bias, win_weights, win_bias;

    static Gradients zeros(const ModelParams& p) {
        Gradients g;
        g.ctx_weights.assign(p.ctx_weights.size(), 0.0);
        g.ctx_bias.assign(p.ctx_bias.size(), 0.0);
        g.win_weights.assign(p.win_weights.size(), 0.0);
        g.win_bias.assign(p.win_bias.size(), 0.0);
        return g;
    }
    void accumulate(const Gradients& o) {
        for (std::size_t i = 0; i < ctx_weights.size(); ++i) ctx_weights[i] += o.ctx_weights[i];
        for (std::size_t i = 0; i < ctx_bias.size(); ++i) ctx_bias[i] += o.ctx_bias[i];
        for (std::size_t i = 0; i < win_weights.size(); ++i) win_weights[i] += o.win_weights[i];
        for (std::size_t i = 0; i < win_bias.size(); ++i) win_bias[i] += o.win_bias[i];
    }
    void scale(double s) {
        for (auto& v : ctx_weights) v *= s;
        for (auto& v : ctx_bias) v *= s;
        for (auto& v : win_weights) v *= s;
        for (auto& v : win_bias) v *= s;
    }
};

namespace detail {

// Accumulates the binary-input convolution's weight/bias gradients from the
// upstream gradient d_pre (w.r.t. the pre-activation).
inline void conv1d_backward_params(const PianoRoll& input, const LatentRoll& d_pre, std::size_t e,
                                   std::size_t k, std::vector<double>& d_weights,
                                   std::vector<double>& d_bias) {
    std::size_t n = input.frames();
    std::int64_t off = static_cast<std::int64_t>(k / 2);
    for (std::size_t i = 0; i < e; ++i)
        d_bias[i] += std::accumulate(&d_pre.v[i * n], &d_pre.v[i * n] + n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const std::uint64_t* col = input.column(t);
        for (int word = 0; word < 2; ++word) {
            std::uint64_t bitsleft = col[word];
            while (bitsleft) {
                int ch = word * 64 + std::countr_zero(bitsleft);
                bitsleft &= bitsleft - 1;
                for (std::size_t d = 0; d < k; ++d) {
                    std::int64_t j = static_cast<std::int64_t>(t) + off - static_cast<std::int64_t>(d);
                    if (j < 0 || j >= static_cast<std::int64_t>(n)) continue;
                    double* gw = &d_weights[(static_cast<std::size_t>(ch) * k + d) * e];
                    const double* gp = &d_pre.v[static_cast<std::size_t>(j)];
                    for (std::size_t i = 0; i < e; ++i) gw[i] += gp[i * n];
                }
            }
        }
    }
}

}  // namespace detail

// Exact gradients of loss(forward(C, W), label) w.r.t. both encoders'
// weights and biases. The gradient through the cross-correlation is itself a
// correlation: d wp[i][j] = sum_lag dP[lag] * cpad[i][lag+j] and
// d cpad[i][m] = sum_lag dP[lag] * wp[i][m-lag].
inline Gradients backward(const PianoRoll& context, const PianoRoll& window, const ModelParams& p,
                          std::size_t label, const ForwardCache& f, double* loss_out = nullptr) {
    std::size_t c = f.ctx_act.frames, w = f.win_act.frames;
    std::size_t len = c + w - 1;
    if (label >= len) throw ConfigError("backward: label out of range");
    if (loss_out) *loss_out = loss(f.correlation, label);

    std::vector<double> d_corr = softmax(f.correlation);
    d_corr[label] -= 1.0;

    LatentRoll d_win_act(p.e, w);
    LatentRoll d_ctx_act(p.e, c);
    std::size_t npad = c + 2 * (w - 1);
    std::vector<double> padded(npad), d_padded(npad);
    for (std::size_t i = 0; i < p.e; ++i) {
        std::fill(padded.begin(), padded.end(), 0.0);
        std::fill(d_padded.begin(), d_padded.end(), 0.0);
        std::copy_n(&f.ctx_act.v[i * c], c, padded.begin() + static_cast<std::ptrdiff_t>(w - 1));
        const double* wrow = &f.win_act.v[i * w];
        for (std::size_t j = 0; j < w; ++j) {
            double acc = 0.0;
            const double* src = &padded[j];
            double* dst = &d_padded[j];
            double a = wrow[j];
            for (std::size_t lag = 0; lag < len; ++lag) {
                acc += d_corr[lag] * src[lag];
                dst[lag] += d_corr[lag] * a;
            }
            d_win_act.v[i * w + j] = acc;
        }
        std::copy_n(d_padded.begin() + static_cast<std::ptrdiff_t>(w - 1), c, &d_ctx_act.v[i * c]);
    }

    // ReLU masks
    for (std::size_t idx = 0; idx < d_ctx_act.v.size(); ++idx)
        if (f.ctx_pre.v[idx] <= 0.0) d_ctx_act.v[idx] = 0.0;
    for (std::size_t idx = 0; idx < d_win_act.v.size(); ++idx)
        if (f.win_pre.v[idx] <= 0.0) d_win_act.v[idx] = 0.0;

    Gradients g = Gradients::zeros(p);
    detail::conv1d_backward_params(context, d_ctx_act, p.e, p.k, g.ctx_weights, g.ctx_bias);
    detail::conv1d_backward_params(window, d_win_act, p.e, p.k, g.win_weights, g.win_bias);
    return g;
}

inline Gradients backward(const PianoRoll& context, const PianoRoll& window, const ModelParams& p,
                          std::size_t label, double* loss_out = nullptr) {
    return backward(context, window, p, label, forward_cached(context, window, p), loss_out);
}

// Checkpoint: magic "TYKE0001", little-endian u32 e and k, then f32 arrays in
// field order (context weights as [out][pitch][tap], context bias, window
// weights, window bias).
inline constexpr char kCheckpointMagic[8] = {'T', 'Y', 'K', 'E', '0', '0', '0', '1'};

inline std::vector<std::uint8_t> serialize_params(const ModelParams& p) {
    std::vector<std::uint8_t> out(sizeof kCheckpointMagic);
    std::memcpy(out.data(), kCheckpointMagic, sizeof kCheckpointMagic);
    auto le32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto f32 = [&](double v) {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        le32(bits);
    };
    le32(static_cast<std::uint32_t>(p.e));
    le32(static_cast<std::uint32_t>(p.k));
    auto weights = [&](const std::vector<double>& w) {
        for (std::size_t i = 0; i < p.e; ++i)
            for (std::size_t ch = 0; ch < kNumPitches; ++ch)
                for (std::size_t d = 0; d < p.k; ++d) f32(w[(ch * p.k + d) * p.e + i]);
    };
    weights(p.ctx_weights);
    for (double b : p.ctx_bias) f32(b);
    weights(p.win_weights);
    for (double b : p.win_bias) f32(b);
    return out;
}

inline ModelParams deserialize_params(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw DataError("checkpoint: bad magic");
    std::size_t pos = 8;
    auto le32 = [&]() {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = v << 8 | bytes[pos + static_cast<std::size_t>(i)];
        pos += 4;
        return v;
    };
    std::size_t e = le32(), k = le32();
    ModelParams p = ModelParams::zeros(e, k);
    if (bytes.size() != 16 + 4 * p.param_count()) throw DataError("checkpoint: size mismatch");
    auto f32 = [&]() {
        std::uint32_t bits = le32();
        float f;
        std::memcpy(&f, &bits, 4);
        return static_cast<double>(f);
    };
    auto weights = [&](std::vector<double>& w) {
        for (std::size_t i = 0; i < e; ++i)
            for (std::size_t ch = 0; ch < kNumPitches; ++ch)
                for (std::size_t d = 0; d < k; ++d) w[(ch * k + d) * e + i] = f32();
    };
    weights(p.ctx_weights);
    for (auto& b : p.ctx_bias) b = f32();
    weights(p.win_weights);
    for (auto& b : p.win_bias) b = f32();
    return p;
}

}  // namespace scorefollow
