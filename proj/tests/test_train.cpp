#include "scorefollow/train.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "scorefollow/synth.hpp"

using namespace scorefollow;
namespace fs = std::filesystem;

namespace {

struct TempCorpus {
    fs::path dir;
    std::vector<std::string> paths;

    explicit TempCorpus(std::size_t n_files, std::size_t n_chords, std::uint64_t seed) {
        dir = fs::temp_directory_path() /
              ("sftr_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        PatternPieceConfig cfg;
        cfg.n_chords = n_chords;
        paths = write_corpus(dir, n_files, cfg, seed);
    }
    ~TempCorpus() { fs::remove_all(dir); }

    static std::size_t& counter() {
        static std::size_t c = 0;
        return c;
    }
};

TrainConfig smoke_config() {
    TrainConfig cfg;
    cfg.e = 8;
    cfg.k = 3;
    cfg.c = 96;
    cfg.w = 32;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.train_per_epoch = 0;  // one pass
    cfg.val_per_epoch = 0;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST(Train, OverfitsFiftyCopiesOfOneSample) {
    TempCorpus corpus(1, 40, 11);
    RollCache cache;
    std::vector<ManifestRow> train_rows(50, ManifestRow{corpus.paths[0], 16, 40, false});
    std::vector<ManifestRow> val_rows(8, ManifestRow{corpus.paths[0], 16, 40, false});
    TrainConfig cfg = smoke_config();
    cfg.epochs = 50;
    cfg.batch_size = 10;
    cfg.lr = 2e-3;
    auto result = train(train_rows, val_rows, cfg, {}, cache);
    double best_train_acc = 0;
    for (const auto& m : result.history) best_train_acc = std::max(best_train_acc, m.train_acc);
    EXPECT_DOUBLE_EQ(best_train_acc, 1.0);
    EXPECT_DOUBLE_EQ(result.best_val_acc, 1.0);
}

TEST(Train, UntrainedModelOnUnrelatedDataIsNearChance) {
    // windows from one piece, contexts from another: no true placement
    TempCorpus corpus(2, 80, 12);
    RollCache cache;
    std::size_t c = 96, w = 32;
    Rng rng(13);
    ModelParams params = ModelParams::init(8, 3, rng);
    std::size_t correct = 0, total = 200;
    for (std::size_t i = 0; i < total; ++i) {
        auto ctx_start = static_cast<std::int64_t>(rng.uniform_int(0, 500));
        auto win_start = static_cast<std::int64_t>(rng.uniform_int(0, 500));
        auto context = slice_roll(cache.roll(corpus.paths[0]), ctx_start, c, true);
        auto window = slice_roll(cache.roll(corpus.paths[1]), win_start, w, true);
        auto label = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(c + w) - 2));
        if (predict(forward(context, window, params)) == label) ++correct;
    }
    // chance is 1/(c+w-1) ~ 0.8%; allow a generous margin
    EXPECT_LT(static_cast<double>(correct) / static_cast<double>(total), 0.1);
}

TEST(Train, MetricsHistoryDeterministicUnderSeed) {
    TempCorpus corpus(2, 60, 14);
    RollCache cache;
    SplitConfig tr{"train", 24, 96, 32, 7, 0.9};
    SplitConfig va{"validation", 8, 96, 32, 8, 1.0};
    auto train_rows = generate_manifest(corpus.paths, tr, cache);
    auto val_rows = generate_manifest(corpus.paths, va, cache);
    TrainConfig cfg = smoke_config();
    auto chain = default_chain();
    auto a = train(train_rows, val_rows, cfg, chain, cache);
    auto b = train(train_rows, val_rows, cfg, chain, cache);
    EXPECT_EQ(serialize_metrics(a.history), serialize_metrics(b.history));
    EXPECT_EQ(serialize_params(a.best_params), serialize_params(b.best_params));

    cfg.seed = 6;
    auto c = train(train_rows, val_rows, cfg, chain, cache);
    EXPECT_NE(serialize_metrics(a.history), serialize_metrics(c.history));
}

TEST(Train, MetricsCsvShape) {
    std::vector<EpochMetrics> history{{0, 1.5, 1.6, 0.5, 0.4, 0.3}, {1, 1.2, 1.3, 0.7, 0.6, 0.3}};
    auto csv = serialize_metrics(history);
    auto lines = split(csv, '\n');
    ASSERT_EQ(lines.size(), 4u);  // header + 2 rows + trailing empty
    EXPECT_EQ(lines[0], "epoch,train_loss,val_loss,train_acc,val_acc,val_bacc");
    EXPECT_EQ(lines[1], "0,1.500000,1.600000,0.500000,0.400000,0.300000");
}

TEST(Train, RejectsBadConfigAndEmptySplits) {
    TempCorpus corpus(1, 60, 15);
    RollCache cache;
    std::vector<ManifestRow> rows{{corpus.paths[0], 0, 0, false}};
    TrainConfig cfg = smoke_config();
    cfg.epochs = 0;
    EXPECT_THROW(train(rows, rows, cfg, {}, cache), ConfigError);
    cfg = smoke_config();
    EXPECT_THROW(train({}, rows, cfg, {}, cache), DataError);
    EXPECT_THROW(train(rows, {}, cfg, {}, cache), DataError);
}

TEST(Train, OutOfContextRowsAreSkippedInLossButTolerated) {
    TempCorpus corpus(1, 80, 16);
    RollCache cache;
    std::vector<ManifestRow> rows;
    for (int i = 0; i < 12; ++i) rows.push_back({corpus.paths[0], 16, 48, false});
    for (int i = 0; i < 4; ++i) rows.push_back({corpus.paths[0], 0, 400, true});
    TrainConfig cfg = smoke_config();
    auto result = train(rows, rows, cfg, {}, cache);
    ASSERT_EQ(result.history.size(), cfg.epochs);
    for (const auto& m : result.history) {
        EXPECT_GE(m.val_acc, 0.0);
        EXPECT_LE(m.val_acc, 1.0);
    }
}
