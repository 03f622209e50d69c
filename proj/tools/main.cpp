// Command-line front end for the score-following toolkit: corpus synthesis,
// manifest generation, training, simulated following, evaluation, parameter
// sweeps, the augmentation ablation harness, and augmentation previews.
//
// Exit codes: 0 success, 2 usage/config error, 3 data/runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "scorefollow/augment.hpp"
#include "scorefollow/dataset.hpp"
#include "scorefollow/follower.hpp"
#include "scorefollow/metrics.hpp"
#include "scorefollow/midi.hpp"
#include "scorefollow/model.hpp"
#include "scorefollow/osc.hpp"
#include "scorefollow/piano_roll.hpp"
#include "scorefollow/synth.hpp"
#include "scorefollow/train.hpp"
#include "scorefollow/util.hpp"

namespace fs = std::filesystem;
using namespace scorefollow;

namespace {

using Echo = std::map<std::string, std::string>;

void write_echo(const fs::path& out_dir, const std::string& command, const Echo& echo) {
    fs::create_directories(out_dir);
    std::string text = "command=" + command + "\n";
    for (const auto& [k, v] : echo) text += k + "=" + v + "\n";
    write_file(out_dir / "config_echo.txt", text);
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> grid;
    for (const auto& tok : split(csv, ','))
        if (!trim(tok).empty()) grid.push_back(std::stod(trim(tok)));
    if (grid.empty()) throw ConfigError("empty grid/threshold list");
    return grid;
}

std::vector<std::string> collect_midi_paths(const std::vector<std::string>& files,
                                            const std::string& dir) {
    std::vector<std::string> paths = files;
    if (!dir.empty()) {
        if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".mid" || entry.path().extension() == ".midi")
                paths.push_back(entry.path().string());
        std::sort(paths.begin(), paths.end());
    }
    if (paths.empty()) throw DataError("no MIDI inputs given");
    return paths;
}

std::vector<AugmentSpec> load_chain(const std::string& chain_path, bool no_augment) {
    if (no_augment) return {};
    if (chain_path.empty()) return default_chain();
    auto bytes = read_file(chain_path);
    return parse_chain_config(std::string(bytes.begin(), bytes.end()));
}

ModelParams load_model(const std::string& checkpoint, bool delta) {
    if (delta) return ModelParams::delta();
    if (checkpoint.empty()) throw ConfigError("need --checkpoint or --delta");
    return deserialize_params(read_file(checkpoint));
}

struct FollowerFlags {
    FollowerConfig cfg;
    double tempo_factor = 1.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--fe", cfg.f_e, "inference rate in Hz");
        cmd->add_option("--c", cfg.c, "context frames");
        cmd->add_option("--w", cfg.w, "window frames");
        cmd->add_option("--frame-duration", cfg.frame_duration, "seconds per roll frame");
        cmd->add_option("--smooth-window", cfg.smooth_window, "moving average width");
        cmd->add_option("--buffer-capacity", cfg.buffer_capacity, "prediction ring buffer size");
        cmd->add_option("--stabilization", cfg.stabilization_count, "stabilization tick count");
        cmd->add_option("--prominence", cfg.prominence_min, "peak prominence threshold");
        cmd->add_option("--lower-bound", cfg.lower_bound, "validity window lower bound (frames)");
        cmd->add_option("--upper-bound", cfg.upper_bound, "validity window upper bound (frames)");
        cmd->add_option("--rate-min", cfg.rate_min, "minimum advance rate vs buffer trend");
        cmd->add_option("--rate-max", cfg.rate_max, "maximum advance rate vs buffer trend");
        cmd->add_option("--max-buffer", cfg.max_consecutive_buffer,
                        "max consecutive buffer predictions");
        cmd->add_option("--anchor-ratio", cfg.context_anchor_ratio,
                        "where the last prediction sits inside the context");
        cmd->add_option("--tempo-factor", tempo_factor, "rescale the score columns by this factor");
    }

    void echo_into(Echo& e) const {
        e["fe"] = format_fixed(cfg.f_e, 3);
        e["c"] = std::to_string(cfg.c);
        e["w"] = std::to_string(cfg.w);
        e["frame_duration"] = format_fixed(cfg.frame_duration, 9);
        e["smooth_window"] = std::to_string(cfg.smooth_window);
        e["buffer_capacity"] = std::to_string(cfg.buffer_capacity);
        e["stabilization"] = std::to_string(cfg.stabilization_count);
        e["prominence"] = format_fixed(cfg.prominence_min, 3);
        e["lower_bound"] = format_fixed(cfg.lower_bound, 3);
        e["upper_bound"] = format_fixed(cfg.upper_bound, 3);
        e["rate_min"] = format_fixed(cfg.rate_min, 3);
        e["rate_max"] = format_fixed(cfg.rate_max, 3);
        e["max_buffer"] = std::to_string(cfg.max_consecutive_buffer);
        e["anchor_ratio"] = format_fixed(cfg.context_anchor_ratio, 3);
        e["tempo_factor"] = format_fixed(tempo_factor, 4);
    }
};

// ---- gen-corpus ----------------------------------------------------------

int cmd_gen_corpus(const std::string& out_dir, std::size_t files, PatternPieceConfig cfg,
                   std::uint64_t seed) {
    auto paths = write_corpus(out_dir, files, cfg, seed);
    Echo echo{{"files", std::to_string(files)},
              {"chords", std::to_string(cfg.n_chords)},
              {"chord_frames", std::to_string(cfg.chord_frames)},
              {"polyphony", std::to_string(cfg.polyphony)},
              {"pitch_lo", std::to_string(cfg.pitch_lo)},
              {"pitch_hi", std::to_string(cfg.pitch_hi)},
              {"frame_duration", format_fixed(cfg.frame_duration, 9)},
              {"seed", std::to_string(seed)}};
    write_echo(out_dir, "gen-corpus", echo);
    std::cout << "wrote " << paths.size() << " MIDI files to " << out_dir << "\n";
    return 0;
}

// ---- dataset ---------------------------------------------------------------

int cmd_dataset(const std::vector<std::string>& files, const std::string& midi_dir,
                const std::string& out_dir, SplitConfig cfg, double frame_duration) {
    auto paths = collect_midi_paths(files, midi_dir);
    RollCache cache(frame_duration);
    std::vector<std::string> warnings;
    auto rows = generate_manifest(paths, cfg, cache, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    fs::create_directories(out_dir);
    fs::path out = fs::path(out_dir) / (cfg.split + ".csv");
    write_file(out, serialize_manifest(rows));
    Echo echo{{"split", cfg.split},
              {"n", std::to_string(cfg.n_split)},
              {"c", std::to_string(cfg.c)},
              {"w", std::to_string(cfg.w)},
              {"seed", std::to_string(cfg.seed)},
              {"in_context_fraction", format_fixed(cfg.in_context_fraction, 4)},
              {"frame_duration", format_fixed(frame_duration, 9)},
              {"inputs", std::to_string(paths.size())}};
    write_echo(out_dir, "dataset", echo);
    std::cout << "wrote " << rows.size() << " rows to " << out.string() << "\n";
    return 0;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const std::string& train_manifest, const std::string& val_manifest,
              const std::string& chain_path, bool no_augment, bool no_augment_validation,
              const std::string& out_dir, TrainConfig cfg) {
    auto bytes = read_file(train_manifest);
    auto train_rows = parse_manifest(std::string(bytes.begin(), bytes.end()));
    bytes = read_file(val_manifest);
    auto val_rows = parse_manifest(std::string(bytes.begin(), bytes.end()));
    auto chain = load_chain(chain_path, no_augment);
    cfg.augment_validation = !no_augment_validation;

    RollCache cache(cfg.frame_duration);
    auto result = train(train_rows, val_rows, cfg, chain, cache);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "checkpoint.tyke", serialize_params(result.best_params));
    write_file(fs::path(out_dir) / "metrics.csv", serialize_metrics(result.history));

    Echo echo{{"train_manifest", train_manifest},
              {"val_manifest", val_manifest},
              {"chain", no_augment ? "(none)" : (chain_path.empty() ? "(default)" : chain_path)},
              {"epochs", std::to_string(cfg.epochs)},
              {"batch_size", std::to_string(cfg.batch_size)},
              {"lr", format_fixed(cfg.lr, 8)},
              {"weight_decay", format_fixed(cfg.weight_decay, 8)},
              {"min_lr", format_fixed(cfg.min_lr, 8)},
              {"quarter_cycle", std::to_string(cfg.quarter_cycle_epochs)},
              {"train_per_epoch", std::to_string(cfg.train_per_epoch)},
              {"val_per_epoch", std::to_string(cfg.val_per_epoch)},
              {"e", std::to_string(cfg.e)},
              {"k", std::to_string(cfg.k)},
              {"c", std::to_string(cfg.c)},
              {"w", std::to_string(cfg.w)},
              {"frame_duration", format_fixed(cfg.frame_duration, 9)},
              {"seed", std::to_string(cfg.seed)},
              {"augment_validation", cfg.augment_validation ? "true" : "false"}};
    write_echo(out_dir, "train", echo);

    for (const auto& m : result.history)
        std::cout << "epoch " << m.epoch << " train_loss " << format_fixed(m.train_loss, 4)
                  << " val_loss " << format_fixed(m.val_loss, 4) << " train_acc "
                  << format_fixed(m.train_acc, 4) << " val_acc " << format_fixed(m.val_acc, 4)
                  << " val_bacc " << format_fixed(m.val_bacc, 4) << "\n";
    std::cout << "best epoch " << result.best_epoch << " (val_acc "
              << format_fixed(result.best_val_acc, 4) << "), checkpoint written to " << out_dir
              << "\n";
    return 0;
}

// ---- follow ----------------------------------------------------------------

int cmd_follow(const std::string& checkpoint, bool delta, const std::string& score_path,
               const std::string& perf_path, const std::string& out_dir, FollowerFlags flags,
               const std::string& osc_host, std::uint16_t osc_port, const std::string& remap_path) {
    ModelParams params = load_model(checkpoint, delta);
    RollCache cache(flags.cfg.frame_duration);
    PianoRoll score = cache.roll(score_path);
    if (flags.tempo_factor != 1.0) score = tempo_rescale(score, flags.tempo_factor);
    const PianoRoll& perf = cache.roll(perf_path);

    auto trace = run_follow(score, perf, params, flags.cfg);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "trace.csv", serialize_trace(trace));

    if (!osc_host.empty()) {
        std::map<std::string, std::string> remap;
        if (!remap_path.empty()) {
            auto bytes = read_file(remap_path);
            remap = parse_remap(std::string(bytes.begin(), bytes.end()));
        }
        auto sent = stream_trace(trace, osc_host, osc_port, flags.cfg.frame_duration, flags.cfg.f_e,
                                 flags.cfg.buffer_capacity, remap);
        std::cout << "streamed " << sent << " OSC datagrams to " << osc_host << ":" << osc_port
                  << "\n";
    }

    Echo echo{{"checkpoint", delta ? "(delta)" : checkpoint},
              {"score", score_path},
              {"performance", perf_path},
              {"osc_host", osc_host.empty() ? "(off)" : osc_host},
              {"osc_port", std::to_string(osc_port)}};
    flags.echo_into(echo);
    write_echo(out_dir, "follow", echo);
    std::cout << "wrote " << trace.size() << " trace rows to " << out_dir << "\n";
    return 0;
}

// ---- eval ------------------------------------------------------------------

int cmd_eval(const std::string& trace_path, const std::string& score_path,
             const std::string& perf_path, const std::string& out_dir, double frame_duration,
             double tempo_factor, const std::string& thresholds_csv, bool include_stabilization) {
    auto bytes = read_file(trace_path);
    auto trace = parse_trace(std::string(bytes.begin(), bytes.end()));
    RollCache cache(frame_duration);
    PianoRoll score = cache.roll(score_path);
    if (tempo_factor != 1.0) score = tempo_rescale(score, tempo_factor);
    const PianoRoll& perf = cache.roll(perf_path);

    auto path = dtw_align(perf, score);
    auto thresholds = thresholds_csv.empty() ? default_thresholds_ms() : parse_grid(thresholds_csv);
    auto report = evaluate(trace, path, frame_duration, perf.frames(), thresholds,
                           include_stabilization);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "report.csv", serialize_report(report));

    Echo echo{{"trace", trace_path},
              {"score", score_path},
              {"performance", perf_path},
              {"frame_duration", format_fixed(frame_duration, 9)},
              {"tempo_factor", format_fixed(tempo_factor, 4)},
              {"include_stabilization", include_stabilization ? "true" : "false"}};
    write_echo(out_dir, "eval", echo);
    std::cout << serialize_report(report);
    return 0;
}

// ---- sweep -----------------------------------------------------------------

int cmd_sweep(const std::string& experiment, const std::string& grid_csv,
              const std::string& checkpoint, bool delta, const std::string& score_path,
              const std::string& perf_path, const std::string& out_dir, FollowerFlags flags) {
    SweepKind kind;
    if (experiment == "tempo")
        kind = SweepKind::TempoMismatch;
    else if (experiment == "fe")
        kind = SweepKind::InferenceRate;
    else
        throw ConfigError("unknown experiment '" + experiment + "' (want tempo|fe)");
    auto grid = parse_grid(grid_csv);
    ModelParams params = load_model(checkpoint, delta);
    RollCache cache(flags.cfg.frame_duration);
    auto points = sweep(kind, grid, cache.roll(score_path), cache.roll(perf_path), params, flags.cfg);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "sweep.csv", serialize_sweep(points));

    Echo echo{{"experiment", experiment},
              {"grid", grid_csv},
              {"checkpoint", delta ? "(delta)" : checkpoint},
              {"score", score_path},
              {"performance", perf_path}};
    flags.echo_into(echo);
    write_echo(out_dir, "sweep", echo);
    std::cout << serialize_sweep(points);
    return 0;
}

// ---- ablate ----------------------------------------------------------------

int cmd_ablate(const std::string& train_manifest, const std::string& val_manifest,
               const std::string& score_path, const std::string& perf_path,
               const std::string& out_dir, TrainConfig cfg, FollowerFlags flags,
               std::size_t variants) {
    if (variants < 1 || variants > 6) throw ConfigError("ablate: --variants must be in 1..6");
    auto bytes = read_file(train_manifest);
    auto train_rows = parse_manifest(std::string(bytes.begin(), bytes.end()));
    bytes = read_file(val_manifest);
    auto val_rows = parse_manifest(std::string(bytes.begin(), bytes.end()));

    // The full chain, then progressively disabling NoteAdd, NoteDelete,
    // DurationShift, OnsetTimeShift, and finally PitchShift (no augmentation).
    const AugmentKind drop_order[5] = {AugmentKind::NoteAdd, AugmentKind::NoteDelete,
                                       AugmentKind::DurationShift, AugmentKind::OnsetTimeShift,
                                       AugmentKind::PitchShift};
    RollCache cache(cfg.frame_duration);
    PianoRoll score = cache.roll(score_path);
    if (flags.tempo_factor != 1.0) score = tempo_rescale(score, flags.tempo_factor);
    const PianoRoll& perf = cache.roll(perf_path);
    WarpingPath path = dtw_align(perf, score);

    fs::create_directories(out_dir);
    std::string summary = "variant,misalign_rate_pct_at_100ms,mean_err_ms,sd_err_ms\n";
    for (std::size_t v = 0; v < variants; ++v) {
        auto chain = default_chain();
        for (std::size_t d = 0; d < v && d < 5; ++d) {
            auto dropped = drop_order[d];
            std::erase_if(chain, [&](const AugmentSpec& s) { return s.kind == dropped; });
        }
        std::string name = v == 0 ? "all_five" : "drop_through_" + to_string(drop_order[v - 1]);
        auto result = train(train_rows, val_rows, cfg, chain, cache);
        auto trace = run_follow(score, perf, result.best_params, flags.cfg);
        auto report = evaluate(trace, path, flags.cfg.frame_duration, perf.frames());

        const ThresholdStats* at100 = nullptr;
        for (const auto& s : report.per_threshold)
            if (s.theta_ms == 100.0) at100 = &s;
        if (!at100) throw ConfigError("ablate: default thresholds lack 100 ms");
        summary += name + "," + format_fixed(at100->misalign_rate_pct, 4) + "," +
                   format_fixed(at100->mean_err_ms, 4) + "," + format_fixed(at100->sd_err_ms, 4) +
                   "\n";
        write_file(fs::path(out_dir) / ("variant_" + std::to_string(v) + "_report.csv"),
                   serialize_report(report));
        write_file(fs::path(out_dir) / ("variant_" + std::to_string(v) + "_metrics.csv"),
                   serialize_metrics(result.history));
        std::cout << "variant " << v << " (" << name << "): r_e@100ms "
                  << format_fixed(at100->misalign_rate_pct, 2) << "%\n";
    }
    write_file(fs::path(out_dir) / "ablation_summary.csv", summary);

    Echo echo{{"train_manifest", train_manifest},
              {"val_manifest", val_manifest},
              {"score", score_path},
              {"performance", perf_path},
              {"variants", std::to_string(variants)},
              {"epochs", std::to_string(cfg.epochs)},
              {"seed", std::to_string(cfg.seed)}};
    flags.echo_into(echo);
    write_echo(out_dir, "ablate", echo);
    return 0;
}

// ---- augment-preview -------------------------------------------------------

int cmd_augment_preview(const std::string& midi_path, const std::string& chain_path,
                        const std::string& out_dir, double frame_duration, std::uint64_t seed) {
    auto seq = parse_smf_file(midi_path);
    auto chain = load_chain(chain_path, false);
    Rng rng(seed);
    auto augmented = apply_chain(seq, chain, rng);

    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "original.pgm", render_pgm(to_piano_roll(seq, frame_duration)));
    write_file(fs::path(out_dir) / "augmented.pgm",
               render_pgm(to_piano_roll(augmented, frame_duration)));

    Echo echo{{"midi", midi_path},
              {"chain", chain_path.empty() ? "(default)" : chain_path},
              {"frame_duration", format_fixed(frame_duration, 9)},
              {"seed", std::to_string(seed)}};
    write_echo(out_dir, "augment-preview", echo);
    std::cout << "wrote original.pgm and augmented.pgm to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piano-roll score following toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    // gen-corpus
    {
        auto* cmd = app.add_subcommand("gen-corpus", "synthesize a deterministic MIDI corpus");
        auto out_dir = std::make_shared<std::string>("out/corpus");
        auto files = std::make_shared<std::size_t>(8);
        auto cfg = std::make_shared<PatternPieceConfig>();
        auto seed = std::make_shared<std::uint64_t>(0);
        cmd->add_option("--out-dir", *out_dir, "output directory");
        cmd->add_option("--files", *files, "number of pieces");
        cmd->add_option("--chords", cfg->n_chords, "chords per piece");
        cmd->add_option("--chord-frames", cfg->chord_frames, "frames per chord");
        cmd->add_option("--polyphony", cfg->polyphony, "pitches per chord");
        cmd->add_option("--pitch-lo", cfg->pitch_lo, "lowest pitch");
        cmd->add_option("--pitch-hi", cfg->pitch_hi, "highest pitch");
        cmd->add_option("--frame-duration", cfg->frame_duration, "seconds per frame");
        cmd->add_option("--seed", *seed, "rng seed");
        cmd->callback([=, &rc] { rc = cmd_gen_corpus(*out_dir, *files, *cfg, *seed); });
    }

    // dataset
    {
        auto* cmd = app.add_subcommand("dataset", "generate a training manifest CSV");
        auto files = std::make_shared<std::vector<std::string>>();
        auto midi_dir = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>("out");
        auto cfg = std::make_shared<SplitConfig>();
        auto fd = std::make_shared<double>(kDefaultFrameDuration);
        cmd->add_option("--midi", *files, "MIDI input files");
        cmd->add_option("--midi-dir", *midi_dir, "directory of MIDI inputs");
        cmd->add_option("--out-dir", *out_dir, "output directory");
        cmd->add_option("--split", cfg->split, "split name (names the CSV)");
        cmd->add_option("--n", cfg->n_split, "rows to generate")->default_val(500);
        cmd->add_option("--c", cfg->c, "context frames");
        cmd->add_option("--w", cfg->w, "window frames");
        cmd->add_option("--seed", cfg->seed, "rng seed");
        cmd->add_option("--in-context-fraction", cfg->in_context_fraction,
                        "probability of an in-context window");
        cmd->add_option("--frame-duration", *fd, "seconds per frame");
        cmd->callback([=, &rc] { rc = cmd_dataset(*files, *midi_dir, *out_dir, *cfg, *fd); });
    }

    // train
    {
        auto* cmd = app.add_subcommand("train", "train the matcher on a manifest");
        auto train_manifest = std::make_shared<std::string>();
        auto val_manifest = std::make_shared<std::string>();
        auto chain_path = std::make_shared<std::string>();
        auto no_augment = std::make_shared<bool>(false);
        auto no_augment_val = std::make_shared<bool>(false);
        auto out_dir = std::make_shared<std::string>("out");
        auto cfg = std::make_shared<TrainConfig>();
        cmd->add_option("--train-manifest", *train_manifest, "training manifest CSV")->required();
        cmd->add_option("--val-manifest", *val_manifest, "validation manifest CSV")->required();
        cmd->add_option("--chain", *chain_path, "augment chain config (default: built-in)");
        cmd->add_flag("--no-augment", *no_augment, "disable augmentation entirely");
        cmd->add_flag("--no-augment-validation", *no_augment_val,
                      "evaluate validation windows without augmentation");
        cmd->add_option("--out-dir", *out_dir, "output directory");
        cmd->add_option("--epochs", cfg->epochs, "training epochs");
        cmd->add_option("--batch-size", cfg->batch_size, "samples per optimizer step");
        cmd->add_option("--lr", cfg->lr, "learning rate");
        cmd->add_option("--weight-decay", cfg->weight_decay, "decoupled weight decay");
        cmd->add_option("--min-lr", cfg->min_lr, "cosine schedule floor");
        cmd->add_option("--quarter-cycle", cfg->quarter_cycle_epochs, "cosine quarter cycle epochs");
        cmd->add_option("--train-per-epoch", cfg->train_per_epoch,
                        "training samples per epoch (0 = whole manifest)");
        cmd->add_option("--val-per-epoch", cfg->val_per_epoch,
                        "validation samples per epoch (0 = whole manifest)");
        cmd->add_option("--e", cfg->e, "latent channels");
        cmd->add_option("--k", cfg->k, "kernel width");
        cmd->add_option("--c", cfg->c, "context frames");
        cmd->add_option("--w", cfg->w, "window frames");
        cmd->add_option("--frame-duration", cfg->frame_duration, "seconds per frame");
        cmd->add_option("--seed", cfg->seed, "rng seed");
        cmd->callback([=, &rc] {
            rc = cmd_train(*train_manifest, *val_manifest, *chain_path, *no_augment,
                           *no_augment_val, *out_dir, *cfg);
        });
    }

    // follow
    {
        auto* cmd = app.add_subcommand("follow", "simulate real-time following of a performance");
        auto checkpoint = std::make_shared<std::string>();
        auto delta = std::make_shared<bool>(false);
        auto score = std::make_shared<std::string>();
        auto perf = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>("out");
        auto flags = std::make_shared<FollowerFlags>();
        auto osc_host = std::make_shared<std::string>();
        auto osc_port = std::make_shared<std::uint16_t>(9000);
        auto remap = std::make_shared<std::string>();
        cmd->add_option("--checkpoint", *checkpoint, "trained checkpoint file");
        cmd->add_flag("--delta", *delta, "use identity-delta encoders instead of a checkpoint");
        cmd->add_option("--score", *score, "score MIDI")->required();
        cmd->add_option("--performance", *perf, "performance MIDI")->required();
        cmd->add_option("--out-dir", *out_dir, "output directory");
        flags->add_to(cmd);
        cmd->add_option("--osc-host", *osc_host, "stream the trace to this UDP host");
        cmd->add_option("--osc-port", *osc_port, "OSC UDP port");
        cmd->add_option("--osc-remap", *remap, "address remap file");
        cmd->callback([=, &rc] {
            rc = cmd_follow(*checkpoint, *delta, *score, *perf, *out_dir, *flags, *osc_host,
                            *osc_port, *remap);
        });
    }

    // eval
    {
        auto* cmd = app.add_subcommand("eval", "score a follow trace against DTW ground truth");
        auto trace = std::make_shared<std::string>();
        auto score = std::make_shared<std::string>();
        auto perf = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>("out");
        auto fd = std::make_shared<double>(kDefaultFrameDuration);
        auto tempo_factor = std::make_shared<double>(1.0);
        auto thresholds = std::make_shared<std::string>();
        auto include_stab = std::make_shared<bool>(false);
        cmd->add_option("--trace", *trace, "trace CSV from the follow command")->required();
        cmd->add_option("--score", *score, "score MIDI")->required();
        cmd->add_option("--performance", *perf, "performance MIDI")->required();
        cmd->add_option("--out-dir", *out_dir, "output directory");
        cmd->add_option("--frame-duration", *fd, "seconds per frame");
        cmd->add_option("--tempo-factor", *tempo_factor, "score rescale used during follow");
        cmd->add_option("--thresholds", *thresholds, "comma-separated thresholds in ms");
        cmd->add_flag("--include-stabilization", *include_stab,
                      "include stabilization ticks in the statistics");
        cmd->callback([=, &rc] {
            rc = cmd_eval(*trace, *score, *perf, *out_dir, *fd, *tempo_factor, *thresholds,
                          *include_stab);
        });
    }

    // sweep
    {
        auto* cmd = app.add_subcommand("sweep", "misalign-rate sweeps over tempo factor or f_e");
        auto experiment = std::make_shared<std::string>("tempo");
        auto grid = std::make_shared<std::string>();
        auto checkpoint = std::make_shared<std::string>();
        auto delta = std::make_shared<bool>(false);
        auto score = std::make_shared<std::string>();
        auto perf = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>("out");
        auto flags = std::make_shared<FollowerFlags>();
        cmd->add_option("--experiment", *experiment, "tempo or fe");
        cmd->add_option("--grid", *grid, "comma-separated grid values")->required();
        cmd->add_option("--checkpoint", *checkpoint, "trained checkpoint file");
        cmd->add_flag("--delta", *delta, "use identity-delta encoders");
        cmd->add_option("--score", *score, "score MIDI")->required();
        cmd->add_option("--performance", *perf, "performance MIDI")->required();
        cmd->add_option("--out-dir", *out_dir, "output directory");
        flags->add_to(cmd);
        cmd->callback([=, &rc] {
            rc = cmd_sweep(*experiment, *grid, *checkpoint, *delta, *score, *perf, *out_dir,
                           *flags);
        });
    }

    // ablate
    {
        auto* cmd = app.add_subcommand("ablate",
                                       "train and evaluate variants that progressively drop "
                                       "augmentations");
        auto train_manifest = std::make_shared<std::string>();
        auto val_manifest = std::make_shared<std::string>();
        auto score = std::make_shared<std::string>();
        auto perf = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>("out");
        auto cfg = std::make_shared<TrainConfig>();
        auto flags = std::make_shared<FollowerFlags>();
        auto variants = std::make_shared<std::size_t>(6);
        cfg->epochs = 25;
        cmd->add_option("--train-manifest", *train_manifest, "training manifest CSV")->required();
        cmd->add_option("--val-manifest", *val_manifest, "validation manifest CSV")->required();
        cmd->add_option("--score", *score, "score MIDI for evaluation")->required();
        cmd->add_option("--performance", *perf, "performance MIDI for evaluation")->required();
        cmd->add_option("--out-dir", *out_dir, "output directory");
        cmd->add_option("--variants", *variants, "number of ablation rows (1..6)");
        cmd->add_option("--epochs", cfg->epochs, "training epochs per variant");
        cmd->add_option("--batch-size", cfg->batch_size, "samples per optimizer step");
        cmd->add_option("--lr", cfg->lr, "learning rate");
        cmd->add_option("--train-per-epoch", cfg->train_per_epoch,
                        "training samples per epoch (0 = whole manifest)");
        cmd->add_option("--val-per-epoch", cfg->val_per_epoch,
                        "validation samples per epoch (0 = whole manifest)");
        cmd->add_option("--e", cfg->e, "latent channels");
        cmd->add_option("--k", cfg->k, "kernel width");
        cmd->add_option("--train-c", cfg->c, "training context frames");
        cmd->add_option("--train-w", cfg->w, "training window frames");
        cmd->add_option("--seed", cfg->seed, "rng seed");
        flags->add_to(cmd);
        cmd->callback([=, &rc] {
            cfg->frame_duration = flags->cfg.frame_duration;
            rc = cmd_ablate(*train_manifest, *val_manifest, *score, *perf, *out_dir, *cfg, *flags,
                            *variants);
        });
    }

    // augment-preview
    {
        auto* cmd = app.add_subcommand("augment-preview",
                                       "render original and augmented piano-roll images");
        auto midi = std::make_shared<std::string>();
        auto chain = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>("out");
        auto fd = std::make_shared<double>(kDefaultFrameDuration);
        auto seed = std::make_shared<std::uint64_t>(0);
        cmd->add_option("--midi", *midi, "input MIDI file")->required();
        cmd->add_option("--chain", *chain, "augment chain config (default: built-in)");
        cmd->add_option("--out-dir", *out_dir, "output directory");
        cmd->add_option("--frame-duration", *fd, "seconds per frame");
        cmd->add_option("--seed", *seed, "rng seed");
        cmd->callback([=, &rc] { rc = cmd_augment_preview(*midi, *chain, *out_dir, *fd, *seed); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}
