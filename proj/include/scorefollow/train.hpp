#pragma once

// Training loop: shuffled mini-batches of manifest rows, windows augmented on
// the fly in MIDI domain, AdamW updates under the cosine schedule, per-epoch
// metrics, and best-validation-accuracy checkpoint selection.

#include <algorithm>
#include <string>
#include <vector>

#include "scorefollow/augment.hpp"
#include "scorefollow/dataset.hpp"
#include "scorefollow/model.hpp"
#include "scorefollow/optimizer.hpp"
#include "scorefollow/rng.hpp"

namespace scorefollow {

struct TrainConfig {
    double lr = 5e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double min_lr = 1e-6;
    std::size_t quarter_cycle_epochs = 10;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    std::size_t train_per_epoch = 500;  // 0 = one pass over the manifest
    std::size_t val_per_epoch = 50;     // 0 = the whole validation manifest
    std::size_t e = 64;
    std::size_t k = 3;
    std::size_t c = 512;
    std::size_t w = 256;
    double frame_duration = kDefaultFrameDuration;
    std::uint64_t seed = 0;
    bool augment_validation = true;  // validation windows see the same imperfection model

    void validate() const {
        if (epochs == 0) throw ConfigError("train: epochs must be positive");
        if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
        if (c <= w || w < k) throw ConfigError("train: need c > w >= k");
        if (min_lr > lr) throw ConfigError("train: min_lr exceeds lr");
        if (lr <= 0 || frame_duration <= 0) throw ConfigError("train: rates must be positive");
    }
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0, val_loss = 0;
    double train_acc = 0, val_acc = 0, val_bacc = 0;
};

struct TrainResult {
    ModelParams best_params;
    std::size_t best_epoch = 0;
    double best_val_acc = 0;
    std::vector<EpochMetrics> history;
};

inline std::string serialize_metrics(const std::vector<EpochMetrics>& history) {
    std::string out = "epoch,train_loss,val_loss,train_acc,val_acc,val_bacc\n";
    for (const auto& m : history)
        out += std::to_string(m.epoch) + "," + format_fixed(m.train_loss) + "," +
               format_fixed(m.val_loss) + "," + format_fixed(m.train_acc) + "," +
               format_fixed(m.val_acc) + "," + format_fixed(m.val_bacc) + "\n";
    return out;
}

namespace detail {

// Deterministic per-sample stream regardless of batch partitioning.
inline Rng sample_rng(std::uint64_t seed, std::size_t epoch, std::size_t index, std::uint64_t salt) {
    return Rng(mix_seed(seed ^ salt, epoch + 1, index + 1));
}

// Rows drawn for one epoch: a shuffled pass when per_epoch matches the
// manifest size (or is 0), otherwise uniform draws with replacement.
inline std::vector<std::size_t> epoch_rows(std::size_t manifest_size, std::size_t per_epoch,
                                           Rng& rng) {
    std::vector<std::size_t> idx;
    if (per_epoch == 0 || per_epoch == manifest_size) {
        idx.resize(manifest_size);
        for (std::size_t i = 0; i < manifest_size; ++i) idx[i] = i;
        for (std::size_t i = manifest_size; i > 1; --i)
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(
                                      rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    } else {
        idx.reserve(per_epoch);
        for (std::size_t i = 0; i < per_epoch; ++i)
            idx.push_back(static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(manifest_size) - 1)));
    }
    return idx;
}

}  // namespace detail

inline TrainResult train(const std::vector<ManifestRow>& train_rows,
                         const std::vector<ManifestRow>& val_rows, const TrainConfig& cfg,
                         const std::vector<AugmentSpec>& chain, RollCache& cache) {
    cfg.validate();
    if (train_rows.empty()) throw DataError("train: empty training split");
    if (val_rows.empty()) throw DataError("train: empty validation split");

    Rng init_rng(mix_seed(cfg.seed, 0xa11ce));
    ModelParams params = ModelParams::init(cfg.e, cfg.k, init_rng);
    AdamWConfig opt{cfg.lr, cfg.weight_decay, cfg.beta1, cfg.beta2, 1e-8};
    CosineSchedule sched{cfg.lr, cfg.min_lr, cfg.quarter_cycle_epochs};
    AdamWState st_cw(params.ctx_weights.size()), st_cb(params.ctx_bias.size());
    AdamWState st_ww(params.win_weights.size()), st_wb(params.win_bias.size());

    TrainResult result;
    result.best_params = params;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr_now = sched.at(epoch);
        Rng order_rng(mix_seed(cfg.seed, epoch, 0x0d0e));
        auto rows = detail::epoch_rows(train_rows.size(), cfg.train_per_epoch, order_rng);

        double loss_sum = 0;
        std::size_t loss_count = 0, correct = 0;
        std::size_t pos = 0;
        while (pos < rows.size()) {
            std::size_t batch_end = std::min(rows.size(), pos + cfg.batch_size);
            Gradients acc = Gradients::zeros(params);
            std::size_t batch_labeled = 0;
            for (std::size_t b = pos; b < batch_end; ++b) {
                const ManifestRow& row = train_rows[rows[b]];
                Rng rng = detail::sample_rng(cfg.seed, epoch, b, 0x7421);
                TrainingSample s = materialize_augmented(row, cfg.c, cfg.w, cache, chain, rng);
                if (!s.label) continue;  // out-of-context rows carry no class
                ForwardCache f = forward_cached(s.context, s.window, params);
                double l = 0;
                Gradients g = backward(s.context, s.window, params, *s.label, f, &l);
                acc.accumulate(g);
                loss_sum += l;
                ++loss_count;
                ++batch_labeled;
                if (predict(f.correlation) == *s.label) ++correct;
            }
            if (batch_labeled > 0) {
                acc.scale(1.0 / static_cast<double>(batch_labeled));
                adamw_step(params.ctx_weights, acc.ctx_weights, st_cw, opt, lr_now);
                adamw_step(params.ctx_bias, acc.ctx_bias, st_cb, opt, lr_now);
                adamw_step(params.win_weights, acc.win_weights, st_ww, opt, lr_now);
                adamw_step(params.win_bias, acc.win_bias, st_wb, opt, lr_now);
            }
            pos = batch_end;
        }

        // validation pass: model accuracy/loss plus the raw-roll baseline
        Rng val_order(mix_seed(cfg.seed, epoch, 0x7a1));
        auto vrows = detail::epoch_rows(val_rows.size(), cfg.val_per_epoch, val_order);
        double val_loss_sum = 0;
        std::size_t val_count = 0, val_correct = 0, base_correct = 0;
        for (std::size_t b = 0; b < vrows.size(); ++b) {
            const ManifestRow& row = val_rows[vrows[b]];
            Rng rng = detail::sample_rng(cfg.seed, epoch, b, 0x9137);
            TrainingSample s = cfg.augment_validation
                                   ? materialize_augmented(row, cfg.c, cfg.w, cache, chain, rng)
                                   : materialize(row, cfg.c, cfg.w, cache);
            if (!s.label) continue;
            auto corr = forward(s.context, s.window, params);
            val_loss_sum += loss(corr, *s.label);
            ++val_count;
            if (predict(corr) == *s.label) ++val_correct;
            if (baseline_predict(s.context, s.window) == *s.label) ++base_correct;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        m.train_acc = loss_count ? static_cast<double>(correct) / static_cast<double>(loss_count) : 0.0;
        m.val_loss = val_count ? val_loss_sum / static_cast<double>(val_count) : 0.0;
        m.val_acc = val_count ? static_cast<double>(val_correct) / static_cast<double>(val_count) : 0.0;
        m.val_bacc = val_count ? static_cast<double>(base_correct) / static_cast<double>(val_count) : 0.0;
        result.history.push_back(m);

        if (result.history.size() == 1 || m.val_acc > result.best_val_acc) {
            result.best_val_acc = m.val_acc;
            result.best_epoch = epoch;
            result.best_params = params;
        }
    }
    return result;
}

}  // namespace scorefollow
