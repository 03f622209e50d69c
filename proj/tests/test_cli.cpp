// End-to-end checks of the command-line binary: exit codes, file products,
// determinism under fixed seeds, and the OSC streaming path.

#include <gtest/gtest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "scorefollow/dataset.hpp"
#include "scorefollow/follower.hpp"
#include "scorefollow/util.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using scorefollow::split;

namespace {

const char* kCli = SCOREFOLLOW_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sfcli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = "") const { return (path / sub).string(); }

    static std::size_t& counter() {
        static std::size_t c = 0;
        return c;
    }
};

int run(const std::string& args) {
    std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    auto bytes = scorefollow::read_file(p);
    return std::string(bytes.begin(), bytes.end());
}

// shared fixture corpus + manifests, built once
struct Workspace {
    TempDir dir;
    std::string corpus, train_csv, val_csv;

    Workspace() {
        corpus = dir.str("corpus");
        EXPECT_EQ(run("gen-corpus --out-dir " + corpus +
                      " --files 3 --chords 120 --seed 7"),
                  0);
        EXPECT_EQ(run("dataset --midi-dir " + corpus + " --out-dir " + dir.str("ds") +
                      " --split train --n 24 --c 96 --w 32 --seed 1"),
                  0);
        EXPECT_EQ(run("dataset --midi-dir " + corpus + " --out-dir " + dir.str("ds") +
                      " --split validation --n 8 --c 96 --w 32 --seed 2"),
                  0);
        train_csv = dir.str("ds/train.csv");
        val_csv = dir.str("ds/validation.csv");
    }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("train --help"), 0);
}

TEST(Cli, UnknownFlagsAndMissingSubcommandExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("dataset --bogus 3"), 2);
}

TEST(Cli, DatasetGoldenDeterminism) {
    auto& ws = workspace();
    TempDir out;
    ASSERT_EQ(run("dataset --midi-dir " + ws.corpus + " --out-dir " + out.str("a") +
                  " --split train --n 24 --c 96 --w 32 --seed 1"),
              0);
    auto a = slurp(out.str("a") + "/train.csv");
    EXPECT_EQ(a, slurp(ws.train_csv));
    auto lines = split(a, '\n');
    EXPECT_EQ(lines[0], "midi_path,context_start,window_start,out_of_context");
    ASSERT_EQ(lines.size(), 26u);  // header + 24 rows + trailing
    EXPECT_TRUE(fs::exists(out.str("a") + "/config_echo.txt"));

    // frozen golden rows for this corpus (paths reduced to basenames)
    const char* golden[24] = {
        "piece_001.mid,10,50,false",   "piece_002.mid,573,591,false",
        "piece_001.mid,612,642,false", "piece_002.mid,236,271,false",
        "piece_000.mid,843,893,false", "piece_001.mid,364,104,true",
        "piece_001.mid,233,296,false", "piece_001.mid,135,180,false",
        "piece_002.mid,115,160,false", "piece_001.mid,806,814,false",
        "piece_002.mid,31,66,false",   "piece_000.mid,679,691,false",
        "piece_000.mid,11,31,false",   "piece_001.mid,625,672,false",
        "piece_001.mid,523,561,false", "piece_001.mid,800,825,false",
        "piece_002.mid,649,688,false", "piece_001.mid,811,818,false",
        "piece_001.mid,604,617,false", "piece_002.mid,775,123,true",
        "piece_001.mid,432,450,false", "piece_000.mid,236,250,false",
        "piece_001.mid,135,152,false", "piece_000.mid,186,203,false",
    };
    for (std::size_t i = 0; i < 24; ++i) {
        auto cols = split(lines[i + 1], ',');
        ASSERT_EQ(cols.size(), 4u);
        std::string reduced = fs::path(cols[0]).filename().string() + "," + cols[1] + "," +
                              cols[2] + "," + cols[3];
        EXPECT_EQ(reduced, golden[i]) << "row " << i;
    }
}

TEST(Cli, DatasetWithNoInputsExitsThree) {
    TempDir out;
    fs::create_directories(out.str("empty"));
    EXPECT_EQ(run("dataset --midi-dir " + out.str("empty") + " --out-dir " + out.str("ds") +
                  " --split train --n 4 --c 96 --w 32"),
              3);
}

TEST(Cli, TrainSmokeProducesCheckpointAndMetrics) {
    auto& ws = workspace();
    TempDir out;
    std::string cmd = "train --train-manifest " + ws.train_csv + " --val-manifest " + ws.val_csv +
                      " --out-dir " + out.str("t1") +
                      " --epochs 2 --batch-size 8 --e 4 --c 96 --w 32 --train-per-epoch 0"
                      " --val-per-epoch 0 --seed 3";
    ASSERT_EQ(run(cmd), 0);
    EXPECT_TRUE(fs::exists(out.str("t1") + "/checkpoint.tyke"));
    auto metrics = slurp(out.str("t1") + "/metrics.csv");
    EXPECT_EQ(split(metrics, '\n').size(), 4u);  // header + 2 epochs + trailing

    // byte-identical under the same seed
    std::string cmd2 = "train --train-manifest " + ws.train_csv + " --val-manifest " + ws.val_csv +
                       " --out-dir " + out.str("t2") +
                       " --epochs 2 --batch-size 8 --e 4 --c 96 --w 32 --train-per-epoch 0"
                       " --val-per-epoch 0 --seed 3";
    ASSERT_EQ(run(cmd2), 0);
    EXPECT_EQ(metrics, slurp(out.str("t2") + "/metrics.csv"));
    EXPECT_EQ(slurp(out.str("t1") + "/checkpoint.tyke"), slurp(out.str("t2") + "/checkpoint.tyke"));
}

TEST(Cli, TrainRejectsZeroEpochsAndMissingManifest) {
    auto& ws = workspace();
    TempDir out;
    EXPECT_EQ(run("train --train-manifest " + ws.train_csv + " --val-manifest " + ws.val_csv +
                  " --out-dir " + out.str() + " --epochs 0 --c 96 --w 32"),
              2);
    EXPECT_EQ(run("train --train-manifest /nonexistent.csv --val-manifest " + ws.val_csv +
                  " --out-dir " + out.str() + " --epochs 1 --c 96 --w 32"),
              3);
}

TEST(Cli, FollowSelfWithDeltaThenEvalIsClean) {
    auto& ws = workspace();
    TempDir out;
    std::string piece = ws.corpus + "/piece_000.mid";
    ASSERT_EQ(run("follow --delta --score " + piece + " --performance " + piece + " --out-dir " +
                  out.str("f") + " --c 288 --w 96"),
              0);
    auto trace = scorefollow::parse_trace(slurp(out.str("f") + "/trace.csv"));
    EXPECT_GT(trace.size(), 50u);

    ASSERT_EQ(run("eval --trace " + out.str("f") + "/trace.csv --score " + piece +
                  " --performance " + piece + " --out-dir " + out.str("e")),
              0);
    auto report = slurp(out.str("e") + "/report.csv");
    auto lines = split(report, '\n');
    ASSERT_EQ(lines.size(), 12u);
    // perfect self-follow: zero misalign rate at every threshold
    for (std::size_t i = 1; i <= 9; ++i) {
        auto cols = split(lines[i], ',');
        ASSERT_EQ(cols.size(), 4u);
        EXPECT_EQ(cols[1], "0.0000") << lines[i];
        EXPECT_EQ(cols[2], "0.0000") << lines[i];
    }

    // threshold list override shrinks the table
    ASSERT_EQ(run("eval --trace " + out.str("f") + "/trace.csv --score " + piece +
                  " --performance " + piece + " --out-dir " + out.str("e2") +
                  " --thresholds 50,100"),
              0);
    auto lines2 = split(slurp(out.str("e2") + "/report.csv"), '\n');
    ASSERT_EQ(lines2.size(), 5u);  // header + 2 thresholds + latency + trailing
    EXPECT_EQ(split(lines2[1], ',')[0], "50.0");
    EXPECT_EQ(split(lines2[2], ',')[0], "100.0");
}

TEST(Cli, FollowMissingCheckpointExitsThree) {
    auto& ws = workspace();
    TempDir out;
    std::string piece = ws.corpus + "/piece_000.mid";
    EXPECT_EQ(run("follow --checkpoint /nonexistent.tyke --score " + piece + " --performance " +
                  piece + " --out-dir " + out.str()),
              3);
    // neither checkpoint nor --delta is a config error
    EXPECT_EQ(run("follow --score " + piece + " --performance " + piece + " --out-dir " + out.str()),
              2);
}

TEST(Cli, FollowStreamsOscDatagrams) {
    auto& ws = workspace();
    TempDir out;
    std::string piece = ws.corpus + "/piece_000.mid";

    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    ASSERT_GE(fd, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    int rcvbuf = 1 << 20;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);

    ASSERT_EQ(run("follow --delta --score " + piece + " --performance " + piece + " --out-dir " +
                  out.str("f") + " --c 288 --w 96 --osc-host 127.0.0.1 --osc-port " +
                  std::to_string(ntohs(addr.sin_port))),
              0);
    auto trace = scorefollow::parse_trace(slurp(out.str("f") + "/trace.csv"));

    timeval tv{1, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    std::size_t received = 0;
    std::vector<std::uint8_t> buf(512);
    while (true) {
        ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
        if (n < 0) break;
        ++received;
        buf.resize(static_cast<std::size_t>(n));
        auto decoded = oracles::decode_osc(buf);
        EXPECT_TRUE(decoded.address == "/sf/position" || decoded.address == "/sf/tempo_dev");
        buf.resize(512);
    }
    ::close(fd);
    EXPECT_EQ(received, 2 * trace.size());
}

TEST(Cli, SweepSinglePointTempo) {
    auto& ws = workspace();
    TempDir out;
    std::string piece = ws.corpus + "/piece_001.mid";
    ASSERT_EQ(run("sweep --experiment tempo --grid 1.0 --delta --score " + piece +
                  " --performance " + piece + " --out-dir " + out.str("s") + " --c 288 --w 96"),
              0);
    auto lines = split(slurp(out.str("s") + "/sweep.csv"), '\n');
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "grid_value,misalign_rate_pct");
    EXPECT_EQ(lines[1], "1.0000,0.0000");

    EXPECT_EQ(run("sweep --experiment bogus --grid 1.0 --delta --score " + piece +
                  " --performance " + piece + " --out-dir " + out.str("s2")),
              2);
}

TEST(Cli, AblateTwoVariantSmoke) {
    auto& ws = workspace();
    TempDir out;
    std::string piece = ws.corpus + "/piece_002.mid";
    ASSERT_EQ(run("ablate --train-manifest " + ws.train_csv + " --val-manifest " + ws.val_csv +
                  " --score " + piece + " --performance " + piece + " --out-dir " + out.str("a") +
                  " --variants 2 --epochs 1 --batch-size 8 --e 4 --train-c 96 --train-w 32"
                  " --train-per-epoch 0 --val-per-epoch 0 --c 288 --w 96 --seed 4"),
              0);
    auto lines = split(slurp(out.str("a") + "/ablation_summary.csv"), '\n');
    ASSERT_EQ(lines.size(), 4u);  // header + 2 variants + trailing
    EXPECT_EQ(lines[0], "variant,misalign_rate_pct_at_100ms,mean_err_ms,sd_err_ms");
    EXPECT_EQ(split(lines[1], ',')[0], "all_five");
    EXPECT_EQ(split(lines[2], ',')[0], "drop_through_NoteAdd");
    EXPECT_TRUE(fs::exists(out.str("a") + "/variant_0_report.csv"));
    EXPECT_TRUE(fs::exists(out.str("a") + "/variant_1_report.csv"));

    EXPECT_EQ(run("ablate --train-manifest " + ws.train_csv + " --val-manifest " + ws.val_csv +
                  " --score " + piece + " --performance " + piece + " --out-dir " + out.str("z") +
                  " --variants 0"),
              2);
}

TEST(Cli, AugmentPreviewIdentityAndSeededDeterminism) {
    auto& ws = workspace();
    TempDir out;
    std::string piece = ws.corpus + "/piece_000.mid";

    // zero-probability chain: both images identical
    std::string chain = out.str("p0.chain");
    scorefollow::write_file(chain, std::string("[PitchShift]\nprobability = 0\nmax_shift = 5\n"));
    ASSERT_EQ(run("augment-preview --midi " + piece + " --chain " + chain + " --out-dir " +
                  out.str("p0")),
              0);
    EXPECT_EQ(slurp(out.str("p0") + "/original.pgm"), slurp(out.str("p0") + "/augmented.pgm"));

    // seeded default chain: deterministic across runs, differs from original
    ASSERT_EQ(run("augment-preview --midi " + piece + " --out-dir " + out.str("p1") + " --seed 9"), 0);
    ASSERT_EQ(run("augment-preview --midi " + piece + " --out-dir " + out.str("p2") + " --seed 9"), 0);
    EXPECT_EQ(slurp(out.str("p1") + "/augmented.pgm"), slurp(out.str("p2") + "/augmented.pgm"));
    EXPECT_NE(slurp(out.str("p1") + "/augmented.pgm"), slurp(out.str("p1") + "/original.pgm"));

    EXPECT_EQ(run("augment-preview --midi /nonexistent.mid --out-dir " + out.str("p3")), 3);
}
