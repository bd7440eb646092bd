// dsvr — degradation-sensing video restoration command line.
//
// Subcommands:
//   dsvr degrade  --in <frames> --out <dir> [--qp N] [--scale N] [--seed N]
//   dsvr train    --data <manifest> --out <run_dir> --stage {1,2,finetune} ...
//   dsvr restore  --in <frames> --ckpt <file> --out <dir> [--dump-dfm]
//   dsvr eval     --task <name> --data <manifest> --out <dir> ...
//
// Configuration precedence: JSON config file < environment < command-line
// flags. The fully resolved configuration is written to <out>/resolved.json
// before the expensive work starts. Exit codes: 0 success, 1 runtime
// failure, 2 usage or configuration error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsvr/eval/experiments.hpp"
#include "dsvr/media/clip.hpp"
#include "dsvr/media/codec.hpp"
#include "dsvr/media/image.hpp"
#include "dsvr/media/manifest.hpp"
#include "dsvr/media/synthesize.hpp"
#include "dsvr/model/pipeline.hpp"
#include "dsvr/sense/sensing.hpp"
#include "dsvr/train/config.hpp"
#include "dsvr/train/trainer.hpp"
#include "dsvr/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsvr;

namespace {

/// Configuration and usage problems: reported on stderr, exit code 2.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Everything a subcommand may need, merged from config file, environment
/// and flags.
struct RunConfig {
    train::TrainingConfig training;
    model::ModelConfig model;
    std::string data, out, checkpoint, stage1_ckpt, ablated_ckpt;
    std::optional<std::uint64_t> seed;  // set once any channel supplies one
};

void apply_model_json(model::ModelConfig& cfg, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "channels") {
            cfg.channels = value.get<int>();
        } else if (key == "dmm_blocks") {
            cfg.dmm_blocks = value.get<int>();
        } else if (key == "recon_blocks") {
            cfg.recon_blocks = value.get<int>();
        } else if (key == "scale") {
            cfg.scale = value.get<int>();
        } else if (key == "window") {
            cfg.window = value.get<int>();
        } else if (key == "dfm_enabled") {
            cfg.dfm_enabled = value.get<bool>();
        } else {
            throw UsageError("config: unknown key 'model." + key + "'");
        }
    }
}

void apply_paths_json(RunConfig& run, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "data") {
            run.data = value.get<std::string>();
        } else if (key == "out") {
            run.out = value.get<std::string>();
        } else if (key == "checkpoint") {
            run.checkpoint = value.get<std::string>();
        } else if (key == "stage1") {
            run.stage1_ckpt = value.get<std::string>();
        } else if (key == "ablated") {
            run.ablated_ckpt = value.get<std::string>();
        } else if (key == "resume") {
            run.training.resume_from = value.get<std::string>();
        } else {
            throw UsageError("config: unknown key 'paths." + key + "'");
        }
    }
}

RunConfig load_config_file(const std::string& path) {
    RunConfig run;
    if (path.empty()) return run;
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw UsageError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "training") {
            try {
                run.training = train::TrainingConfig::from_json(value);
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("config: ") + e.what());
            }
        } else if (key == "model") {
            apply_model_json(run.model, value);
        } else if (key == "paths") {
            apply_paths_json(run, value);
        } else if (key == "seed") {
            run.seed = value.get<std::uint64_t>();
        } else {
            throw UsageError("config: unknown key '" + key + "'");
        }
    }
    return run;
}

/// Environment layer: sits between the config file and explicit flags.
void apply_environment(RunConfig& run) {
    if (const char* env = std::getenv("DSVR_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') {
            throw UsageError(std::string("DSVR_SEED is not an integer: '") + env + "'");
        }
        run.seed = v;
    }
}

media::CodecTool require_codec() {
    try {
        return media::CodecTool::locate();
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());  // missing tooling is a configuration error
    }
}

void write_resolved(const fs::path& out_dir, const json& resolved) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "resolved.json", std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write resolved.json under '" + out_dir.string() + "'");
    }
    out << resolved.dump(2) << '\n';
}

json paths_json(const RunConfig& run) {
    json j;
    if (!run.data.empty()) j["data"] = run.data;
    if (!run.out.empty()) j["out"] = run.out;
    if (!run.checkpoint.empty()) j["checkpoint"] = run.checkpoint;
    if (!run.stage1_ckpt.empty()) j["stage1"] = run.stage1_ckpt;
    if (!run.ablated_ckpt.empty()) j["ablated"] = run.ablated_ckpt;
    if (!run.training.resume_from.empty()) j["resume"] = run.training.resume_from;
    return j;
}

media::DatasetManifest load_manifest(const std::string& data) {
    if (data.empty()) throw UsageError("--data is required (dataset manifest)");
    fs::path path = data;
    if (fs::is_directory(path)) path /= "manifest.json";
    if (!fs::exists(path)) throw UsageError("dataset manifest not found: '" + path.string() + "'");
    return media::DatasetManifest::load(path.string());
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw UsageError(what + " is required");
    if (!fs::exists(path)) throw UsageError(what + " not found: '" + path + "'");
}

// ---------------------------------------------------------------------------
// degrade

int run_degrade(const RunConfig& run, int qp, double fps,
                const std::vector<double>& fractions) {
    if (run.data.empty()) throw UsageError("--in is required (directory of source frames)");
    if (run.out.empty()) throw UsageError("--out is required");
    if (fractions.size() != 3) {
        throw UsageError("--fractions expects three values (train, val, test)");
    }
    const fs::path in_dir = run.data;
    if (!fs::is_directory(in_dir)) {
        throw UsageError("--in is not a directory: '" + in_dir.string() + "'");
    }

    // A clip is a directory of PNG frames; --in may be one clip or a
    // directory of clips. Scan order is sorted for reproducibility.
    const auto has_png = [](const fs::path& dir) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".png") return true;
        }
        return false;
    };
    std::vector<std::string> clip_dirs;
    if (has_png(in_dir)) {
        clip_dirs.push_back(in_dir.string());
    } else {
        for (const auto& entry : fs::directory_iterator(in_dir)) {
            if (entry.is_directory() && has_png(entry.path())) {
                clip_dirs.push_back(entry.path().string());
            }
        }
        std::sort(clip_dirs.begin(), clip_dirs.end());
    }
    if (clip_dirs.empty()) {
        throw UsageError("no PNG frame directories found under '" + in_dir.string() + "'");
    }

    const auto codec = require_codec();
    const std::uint64_t seed = run.seed.value_or(0);
    json resolved = {{"command", "degrade"},
                     {"seed", seed},
                     {"qp", qp},
                     {"scale", run.model.scale},
                     {"fps", fps},
                     {"fractions", fractions},
                     {"paths", paths_json(run)},
                     {"encoder_version", codec.version()}};
    write_resolved(run.out, resolved);

    std::vector<media::LabeledClip> clips;
    for (const auto& dir : clip_dirs) {
        media::LabeledClip clip;
        clip.id = fs::path(dir).filename().string();
        clip.frames = media::read_frames(dir, fps);
        clip.frames.source_id = clip.id;
        clips.push_back(std::move(clip));
    }
    const media::SplitFractions sf{fractions[0], fractions[1], fractions[2]};
    const auto manifest =
        media::synthesize_dataset(clips, run.out, run.model.scale, qp, sf, seed, codec);
    std::printf("degraded %zu clip(s) at qp %d, scale %d -> %s\n", manifest.clips.size(), qp,
                run.model.scale, (fs::path(run.out) / "manifest.json").string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// train

int run_train(RunConfig& run) {
    if (run.out.empty()) throw UsageError("--out is required (run directory)");
    if (run.seed) run.training.seed = *run.seed;
    try {
        run.training.validate();
        if (run.training.stage != train::Stage::kStage1) run.model.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (run.training.stage == train::Stage::kStage2 && run.stage1_ckpt.empty()) {
        throw UsageError("training stage 2 requires --stage1-ckpt (stage-1 sensing weights)");
    }
    if (run.training.stage == train::Stage::kFinetune && run.checkpoint.empty()) {
        throw UsageError("finetuning requires --ckpt (restoration checkpoint to adapt)");
    }
    if (!run.stage1_ckpt.empty()) require_file(run.stage1_ckpt, "--stage1-ckpt");
    if (!run.checkpoint.empty()) require_file(run.checkpoint, "--ckpt");
    if (!run.training.resume_from.empty()) require_file(run.training.resume_from, "--resume");
    const auto manifest = load_manifest(run.data);

    json resolved = {{"command", "train"},
                     {"seed", run.training.seed},
                     {"training", run.training.to_json()},
                     {"paths", paths_json(run)}};
    if (run.training.stage != train::Stage::kStage1) resolved["model"] = run.model.to_json();
    write_resolved(run.out, resolved);

    train::StageResult result;
    switch (run.training.stage) {
        case train::Stage::kStage1:
            result = train::train_stage1(manifest, run.training, run.out);
            break;
        case train::Stage::kStage2:
            result = train::train_stage2(manifest, run.stage1_ckpt, run.model, run.training,
                                         run.out);
            break;
        case train::Stage::kFinetune:
            result = train::finetune(manifest, run.checkpoint, run.training, run.out);
            break;
    }
    std::printf("trained stage %s: final loss %.6g",
                train::stage_name(run.training.stage).c_str(), result.final_loss);
    if (std::isfinite(result.final_psnr)) {
        std::printf(", validation psnr %.3f dB ssim %.4f", result.final_psnr, result.final_ssim);
    }
    std::printf("\ncheckpoint: %s\n", result.checkpoint_path.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// restore

int run_restore(const RunConfig& run, bool dump_dfm, double fps) {
    if (run.data.empty()) throw UsageError("--in is required (directory of degraded frames)");
    if (run.out.empty()) throw UsageError("--out is required");
    require_file(run.checkpoint, "--ckpt");

    auto loaded = model::load_model(run.checkpoint);
    const auto clip = media::read_frames(run.data, fps);

    json resolved = {{"command", "restore"},
                     {"paths", paths_json(run)},
                     {"model", loaded.config.to_json()},
                     {"dump_dfm", dump_dfm},
                     {"frames", clip.frame_count()}};
    write_resolved(run.out, resolved);

    std::vector<nn::Tensor4<float>> x_frames;
    x_frames.reserve(clip.frames.size());
    for (const auto& frame : clip.frames) x_frames.push_back(media::image_to_tensor(frame));
    const bool want_dfm = dump_dfm && loaded.config.dfm_enabled;
    const auto restored = model::restore_clip(loaded.params, loaded.config, x_frames, want_dfm);

    const fs::path frames_dir = fs::path(run.out) / "frames";
    fs::create_directories(frames_dir);
    char name[32];
    for (std::size_t t = 0; t < restored.frames.size(); ++t) {
        std::snprintf(name, sizeof(name), "%06zu.png", t);
        media::write_png((frames_dir / name).string(), media::tensor_to_image(restored.frames[t]));
    }
    if (want_dfm) {
        const fs::path dfm_dir = fs::path(run.out) / "dfm";
        fs::create_directories(dfm_dir);
        for (std::size_t t = 0; t < restored.dfm.size(); ++t) {
            std::snprintf(name, sizeof(name), "%06zu.png", t);
            sense::write_dfm_png((dfm_dir / name).string(), restored.dfm[t]);
        }
    } else if (dump_dfm) {
        std::fprintf(stderr,
                     "note: checkpoint has the degradation path disabled; no maps written\n");
    }
    std::printf("restored %d frame(s) -> %s\n", clip.frame_count(), frames_dir.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval

std::vector<std::pair<int, std::string>> parse_depth_entries(
    const std::vector<std::string>& raw) {
    std::vector<std::pair<int, std::string>> entries;
    for (const auto& item : raw) {
        const auto sep = item.find('=');
        if (sep == std::string::npos || sep == 0 || sep + 1 == item.size()) {
            throw UsageError("--entry expects <n>=<checkpoint>, got '" + item + "'");
        }
        int n = 0;
        try {
            n = std::stoi(item.substr(0, sep));
        } catch (const std::exception&) {
            throw UsageError("--entry expects an integer depth, got '" + item + "'");
        }
        entries.emplace_back(n, item.substr(sep + 1));
    }
    return entries;
}

json report_json(const eval::MetricsReport& report) {
    json clips = json::array();
    for (const auto& c : report.clips) {
        clips.push_back({{"clip_id", c.clip_id}, {"psnr_db", c.psnr}, {"ssim", c.ssim}});
    }
    return {{"mean_psnr_db", report.mean_psnr},
            {"mean_ssim", report.mean_ssim},
            {"clips", clips},
            {"meta", report.meta}};
}

int run_eval(const RunConfig& run, const std::string& task, const std::string& split,
             const std::vector<int>& qps, const std::vector<std::string>& raw_entries,
             int corr_patch) {
    static const std::vector<std::string> kTasks = {"metrics", "qp-sweep", "n-sweep", "ablation",
                                                    "dfm-corr"};
    if (std::find(kTasks.begin(), kTasks.end(), task) == kTasks.end()) {
        std::string all;
        for (const auto& t : kTasks) all += (all.empty() ? "" : ", ") + t;
        throw UsageError("unknown eval task '" + task + "' (valid tasks: " + all + ")");
    }
    if (run.out.empty()) throw UsageError("--out is required");
    const auto manifest = load_manifest(run.data);
    const fs::path out = run.out;

    json resolved = {{"command", "eval"},
                     {"task", task},
                     {"split", split},
                     {"paths", paths_json(run)}};
    if (run.seed) resolved["seed"] = *run.seed;

    if (task == "metrics") {
        require_file(run.checkpoint, "--ckpt");
        write_resolved(out, resolved);
        const auto report = eval::evaluate_checkpoint(run.checkpoint, manifest, split);
        eval::write_metrics_csv((out / "metrics.csv").string(), report);
        eval::write_summary_json((out / "summary.json").string(), report_json(report));
        std::printf("metrics over %zu clip(s): psnr %.3f dB, ssim %.4f\n", report.clips.size(),
                    report.mean_psnr, report.mean_ssim);
    } else if (task == "qp-sweep") {
        require_file(run.checkpoint, "--ckpt");
        if (qps.empty()) throw UsageError("--qps is required for the qp sweep");
        const auto codec = require_codec();
        resolved["qps"] = qps;
        write_resolved(out, resolved);
        const auto rows = eval::run_qp_sweep(run.checkpoint, manifest, split, qps,
                                             (out / "work").string(), codec);
        eval::write_sweep_csv((out / "sweep.csv").string(), "qp", rows);
        json jr = json::array();
        for (const auto& r : rows) jr.push_back({{"qp", r.value}, {"psnr_db", r.psnr}});
        eval::write_summary_json((out / "summary.json").string(), {{"task", task}, {"rows", jr}});
        for (const auto& r : rows) std::printf("qp %d: psnr %.3f dB\n", r.value, r.psnr);
    } else if (task == "n-sweep") {
        const auto entries = parse_depth_entries(raw_entries);
        if (entries.empty()) throw UsageError("--entry is required for the depth sweep");
        for (const auto& [n, path] : entries) require_file(path, "--entry checkpoint");
        write_resolved(out, resolved);
        const auto rows = eval::run_n_sweep(entries, manifest, split);
        eval::write_sweep_csv((out / "sweep.csv").string(), "n", rows);
        json jr = json::array();
        for (const auto& r : rows) jr.push_back({{"n", r.value}, {"psnr_db", r.psnr}});
        eval::write_summary_json((out / "summary.json").string(), {{"task", task}, {"rows", jr}});
        for (const auto& r : rows) std::printf("n %d: psnr %.3f dB\n", r.value, r.psnr);
    } else if (task == "ablation") {
        require_file(run.checkpoint, "--ckpt");
        require_file(run.ablated_ckpt, "--ablated-ckpt");
        write_resolved(out, resolved);
        const auto report = eval::run_ablation(run.checkpoint, run.ablated_ckpt, manifest, split);
        eval::write_metrics_csv((out / "metrics_with.csv").string(), report.with_dfm);
        eval::write_metrics_csv((out / "metrics_without.csv").string(), report.without_dfm);
        eval::write_summary_json((out / "summary.json").string(),
                                 {{"task", task},
                                  {"delta_psnr_db", report.delta_psnr},
                                  {"delta_ssim", report.delta_ssim},
                                  {"with", report_json(report.with_dfm)},
                                  {"without", report_json(report.without_dfm)}});
        std::printf("ablation delta: %+.3f dB psnr, %+.4f ssim\n", report.delta_psnr,
                    report.delta_ssim);
    } else {  // dfm-corr
        require_file(run.checkpoint, "--ckpt");
        if (corr_patch < 1) throw UsageError("--patch must be at least 1");
        resolved["patch"] = corr_patch;
        write_resolved(out, resolved);
        const auto record = eval::dfm_correlation(run.checkpoint, manifest, split, corr_patch);
        eval::write_corr_csv((out / "corr.csv").string(), record);
        eval::write_summary_json((out / "summary.json").string(),
                                 {{"task", task},
                                  {"pearson_r", record.r},
                                  {"degenerate", record.degenerate},
                                  {"pairs", record.pairs.size()},
                                  {"patch", record.patch}});
        std::printf("degradation/error correlation: r %.4f over %zu pair(s)\n", record.r,
                    record.pairs.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dsvr — degradation-sensing compressed-video restoration"};
    app.set_version_flag("--version", dsvr::version());
    app.require_subcommand(1);

    std::string config_path;
    std::string seed_str;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (lowest precedence)");
        cmd->add_option("--seed", seed_str, "random seed (overrides DSVR_SEED and the file)");
        cmd->add_option("--out", "output directory")->required(false);
        cmd->add_option("--data", "dataset manifest (file or directory)");
    };

    auto* degrade = app.add_subcommand("degrade", "encode source frames into a dataset");
    degrade->add_option("--in", "source frame directory (one clip or a directory of clips)");
    int qp = 32;
    double fps = 30.0;
    std::vector<double> fractions = {0.8, 0.1, 0.1};
    int scale = 2;
    degrade->add_option("--qp", qp, "constant quantization parameter");
    degrade->add_option("--scale", scale, "spatial downscale factor");
    degrade->add_option("--fps", fps, "frame rate for encoding");
    degrade->add_option("--fractions", fractions, "train/val/test split fractions")
        ->expected(3);
    add_common(degrade);

    auto* trainc = app.add_subcommand("train", "run a training stage");
    std::string stage_str;
    trainc->add_option("--stage", stage_str, "training stage: 1, 2 or finetune");
    trainc->add_option("--stage1-ckpt", "stage-1 sensing checkpoint (stage 2)");
    trainc->add_option("--ckpt", "restoration checkpoint to adapt (finetune)");
    trainc->add_option("--resume", "checkpoint to resume the current stage from");
    int iters = 0, batch = 0, patch = 0, ckpt_every = -1, eval_every = -1;
    double lr = 0.0;
    trainc->add_option("--iters", iters, "training iterations");
    trainc->add_option("--batch", batch, "batch size");
    trainc->add_option("--patch-size", patch, "low-resolution patch size");
    trainc->add_option("--lr", lr, "learning rate");
    trainc->add_option("--ckpt-every", ckpt_every, "checkpoint cadence in steps");
    trainc->add_option("--eval-every", eval_every, "validation cadence in steps");
    trainc->add_flag("--no-augment", "disable flip/rotation augmentation");
    trainc->add_flag("--cosine-lr", "cosine-anneal the learning rate");
    trainc->add_flag("--unfreeze-sensing", "jointly adapt the sensing pair (stage 2/finetune)");
    int channels = 0, dmm_blocks = 0, recon_blocks = 0;
    trainc->add_option("--channels", channels, "feature channels");
    trainc->add_option("--temporal-blocks", dmm_blocks, "temporal modulation blocks");
    trainc->add_option("--recon-blocks", recon_blocks, "reconstruction blocks");
    trainc->add_flag("--no-dfm", "train the ablation arm without degradation maps");
    add_common(trainc);

    auto* restore = app.add_subcommand("restore", "restore a degraded clip");
    restore->add_option("--in", "directory of degraded frames");
    restore->add_option("--ckpt", "restoration checkpoint");
    restore->add_option("--fps", fps, "frame rate of the input clip");
    restore->add_flag("--dump-dfm", "also write degradation maps as grayscale PNGs");
    add_common(restore);

    auto* evalc = app.add_subcommand("eval", "run an evaluation task");
    std::string task, split = "test";
    std::vector<int> qps;
    std::vector<std::string> entries;
    int corr_patch = 16;
    evalc->add_option("--task", task, "metrics | qp-sweep | n-sweep | ablation | dfm-corr");
    evalc->add_option("--split", split, "manifest split to evaluate");
    evalc->add_option("--ckpt", "checkpoint to evaluate");
    evalc->add_option("--ablated-ckpt", "checkpoint of the ablated arm");
    evalc->add_option("--qps", qps, "QP values for the sweep");
    evalc->add_option("--entry", entries, "depth sweep entry <n>=<checkpoint> (repeatable)");
    evalc->add_option("--patch", corr_patch, "correlation patch size");
    add_common(evalc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 2;
    }

    try {
        RunConfig run = load_config_file(config_path);
        apply_environment(run);
        CLI::App* cmd = app.get_subcommands().front();
        auto flag = [&](const char* name) { return cmd->count(name) > 0; };
        auto opt_str = [&](const char* name) -> std::string {
            return cmd->get_option(name)->as<std::string>();
        };
        if (!seed_str.empty()) {
            try {
                run.seed = std::stoull(seed_str);
            } catch (const std::exception&) {
                throw UsageError("--seed expects an unsigned integer, got '" + seed_str + "'");
            }
        }
        if (flag("--out")) run.out = opt_str("--out");
        if (flag("--data")) run.data = opt_str("--data");

        if (cmd == degrade) {
            if (flag("--in")) run.data = opt_str("--in");
            if (flag("--scale")) run.model.scale = scale;
            return run_degrade(run, qp, fps, fractions);
        }
        if (cmd == trainc) {
            if (flag("--stage")) run.training.stage = train::stage_from_string(stage_str);
            if (flag("--stage1-ckpt")) run.stage1_ckpt = opt_str("--stage1-ckpt");
            if (flag("--ckpt")) run.checkpoint = opt_str("--ckpt");
            if (flag("--resume")) run.training.resume_from = opt_str("--resume");
            if (flag("--iters")) run.training.iterations = iters;
            if (flag("--batch")) run.training.batch_size = batch;
            if (flag("--patch-size")) run.training.patch_size = patch;
            if (flag("--lr")) run.training.lr = lr;
            if (flag("--ckpt-every")) run.training.checkpoint_cadence = ckpt_every;
            if (flag("--eval-every")) run.training.eval_cadence = eval_every;
            if (flag("--no-augment")) run.training.augment = false;
            if (flag("--cosine-lr")) run.training.cosine_lr = true;
            if (flag("--unfreeze-sensing")) run.training.unfreeze_sensing = true;
            if (flag("--channels")) run.model.channels = channels;
            if (flag("--temporal-blocks")) run.model.dmm_blocks = dmm_blocks;
            if (flag("--recon-blocks")) run.model.recon_blocks = recon_blocks;
            if (flag("--no-dfm")) run.model.dfm_enabled = false;
            return run_train(run);
        }
        if (cmd == restore) {
            if (flag("--in")) run.data = opt_str("--in");
            if (flag("--ckpt")) run.checkpoint = opt_str("--ckpt");
            return run_restore(run, restore->count("--dump-dfm") > 0, fps);
        }
        // eval
        if (flag("--ckpt")) run.checkpoint = opt_str("--ckpt");
        if (flag("--ablated-ckpt")) run.ablated_ckpt = opt_str("--ablated-ckpt");
        return run_eval(run, task, split, qps, entries, corr_patch);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "dsvr: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "dsvr: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "dsvr: %s\n", e.what());
        return 1;
    }
}
