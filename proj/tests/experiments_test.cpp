#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsvr/eval/experiments.hpp"
#include "dsvr/media/synthesize.hpp"
#include "dsvr/train/config.hpp"
#include "dsvr/train/trainer.hpp"
#include "toy_clip.hpp"

namespace fs = std::filesystem;
using namespace dsvr;

namespace {

model::ModelConfig small_model(int channels, int dmm, bool dfm) {
    model::ModelConfig cfg;
    cfg.channels = channels;
    cfg.dmm_blocks = dmm;
    cfg.recon_blocks = 1;
    cfg.scale = 2;
    cfg.dfm_enabled = dfm;
    return cfg;
}

/// Dataset plus a family of short training runs the experiment entry points
/// need: a degradation-aware arm, its ablated twin, depth and budget
/// variants. Built once per process.
struct Fixture {
    fs::path root;
    media::DatasetManifest manifest;
    std::string ckpt_with;      // dfm on,  8 channels, depth 1, 10 steps
    std::string ckpt_without;   // dfm off, otherwise identical
    std::string ckpt_depth2;    // dfm on,  depth 2
    std::string ckpt_wide;      // dfm on,  12 channels
    std::string ckpt_short;     // dfm off, 5-step budget
};

const Fixture& fixture() {
    static const Fixture fx = [] {
        Fixture f;
        f.root = fs::temp_directory_path() / "dsvr_experiments_fixture";
        fs::remove_all(f.root);
        const auto codec = media::CodecTool::locate();
        std::vector<media::LabeledClip> clips;
        clips.push_back({"tr_a", testutil::make_toy_clip(8, 32, 32, 11), "train"});
        clips.push_back({"tr_b", testutil::make_toy_clip(8, 32, 32, 12), "train"});
        clips.push_back({"te_a", testutil::make_toy_clip(8, 32, 32, 13), "test"});
        f.manifest = media::synthesize_dataset(clips, f.root.string(), 2, 30,
                                               media::SplitFractions{}, 9, codec);

        train::TrainingConfig c1;
        c1.stage = train::Stage::kStage1;
        c1.iterations = 10;
        c1.batch_size = 2;
        c1.patch_size = 16;
        c1.seed = 4;
        const auto s1 = train::train_stage1(f.manifest, c1, (f.root / "s1").string());

        train::TrainingConfig c2 = c1;
        c2.stage = train::Stage::kStage2;
        auto run2 = [&](const char* name, const model::ModelConfig& mc,
                        const train::TrainingConfig& cfg) {
            return train::train_stage2(f.manifest, s1.checkpoint_path, mc, cfg,
                                       (f.root / name).string())
                .checkpoint_path;
        };
        f.ckpt_with = run2("arm_with", small_model(8, 1, true), c2);
        f.ckpt_without = run2("arm_without", small_model(8, 1, false), c2);
        f.ckpt_depth2 = run2("arm_depth2", small_model(8, 2, true), c2);
        f.ckpt_wide = run2("arm_wide", small_model(12, 1, true), c2);
        train::TrainingConfig c2s = c2;
        c2s.iterations = 5;
        f.ckpt_short = run2("arm_short", small_model(8, 1, false), c2s);
        return f;
    }();
    return fx;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("evaluate_checkpoint: per-clip rows, aggregates and provenance") {
    const auto& f = fixture();
    const auto report = eval::evaluate_checkpoint(f.ckpt_with, f.manifest, "test");
    REQUIRE(report.clips.size() == 1);
    CHECK(report.clips[0].clip_id == "te_a");
    CHECK(std::isfinite(report.clips[0].psnr));
    CHECK(report.clips[0].psnr > 5.0);
    CHECK(report.clips[0].ssim >= -1.0);
    CHECK(report.clips[0].ssim <= 1.0);
    CHECK(report.mean_psnr == report.clips[0].psnr);
    CHECK(report.meta.at("split") == "test");
    CHECK(report.meta.at("checkpoint") == f.ckpt_with);
    CHECK(report.meta.at("model").at("channels") == 8);

    const auto train_report = eval::evaluate_checkpoint(f.ckpt_with, f.manifest, "train");
    CHECK(train_report.clips.size() == 2);

    // Identical inputs yield bit-identical reports.
    const auto again = eval::evaluate_checkpoint(f.ckpt_with, f.manifest, "test");
    CHECK(again.mean_psnr == report.mean_psnr);
    CHECK(again.mean_ssim == report.mean_ssim);
}

TEST_CASE("evaluate_checkpoint: guards") {
    const auto& f = fixture();
    CHECK_THROWS_WITH_AS(eval::evaluate_checkpoint(f.ckpt_with, f.manifest, "val"),
                         doctest::Contains("has no clips"), std::invalid_argument);
    auto wrong = f.manifest;
    wrong.scale = 4;
    CHECK_THROWS_WITH_AS(eval::evaluate_checkpoint(f.ckpt_with, wrong, "test"),
                         doctest::Contains("scale"), std::invalid_argument);
}

TEST_CASE("bicubic_baseline: finite reference scores") {
    const auto& f = fixture();
    const auto report = eval::bicubic_baseline(f.manifest, "test");
    REQUIRE(report.clips.size() == 1);
    CHECK(report.mean_psnr > 15.0);
    CHECK(report.mean_psnr < 60.0);
    CHECK(report.meta.at("checkpoint") == "bicubic");
}

TEST_CASE("run_qp_sweep: single QP reproduces the plain evaluation") {
    const auto& f = fixture();
    const auto rows = eval::run_qp_sweep(f.ckpt_with, f.manifest, "test", {30},
                                         (f.root / "sweep_one").string(),
                                         media::CodecTool::locate());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].value == 30);
    // Re-encoding the ground truth at the dataset QP with the same encoder
    // rebuilds identical degraded inputs, so the sweep row must equal the
    // straight evaluation exactly.
    const auto plain = eval::evaluate_checkpoint(f.ckpt_with, f.manifest, "test");
    CHECK(rows[0].psnr == plain.mean_psnr);

    CHECK_THROWS_WITH_AS(eval::run_qp_sweep(f.ckpt_with, f.manifest, "test", {},
                                            (f.root / "sweep_none").string(),
                                            media::CodecTool::locate()),
                         doctest::Contains("no QP values"), std::invalid_argument);
}

TEST_CASE("run_qp_sweep: one row per requested QP") {
    const auto& f = fixture();
    const auto rows = eval::run_qp_sweep(f.ckpt_with, f.manifest, "test", {24, 36},
                                         (f.root / "sweep_two").string(),
                                         media::CodecTool::locate());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == 24);
    CHECK(rows[1].value == 36);
    CHECK(std::isfinite(rows[0].psnr));
    CHECK(std::isfinite(rows[1].psnr));
}

TEST_CASE("run_ablation: paired evaluation and config validation") {
    const auto& f = fixture();
    const auto report = eval::run_ablation(f.ckpt_with, f.ckpt_without, f.manifest, "test");
    CHECK(report.with_dfm.clips.size() == 1);
    CHECK(report.without_dfm.clips.size() == 1);
    CHECK(report.delta_psnr ==
          report.with_dfm.mean_psnr - report.without_dfm.mean_psnr);

    // Identical-arm control: the delta collapses to exactly zero.
    const auto control = eval::run_ablation(f.ckpt_with, f.ckpt_with, f.manifest, "test");
    CHECK(control.delta_psnr == 0.0);
    CHECK(control.delta_ssim == 0.0);

    CHECK_THROWS_WITH_AS(eval::run_ablation(f.ckpt_with, f.ckpt_wide, f.manifest, "test"),
                         doctest::Contains("more than the degradation-map switch"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(eval::run_ablation(f.ckpt_without, f.ckpt_with, f.manifest, "test"),
                         doctest::Contains("degradation-aware"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(eval::run_ablation(f.ckpt_with, f.ckpt_short, f.manifest, "test"),
                         doctest::Contains("budgets or seeds"), std::invalid_argument);
}

TEST_CASE("run_n_sweep: one row per depth with config checks") {
    const auto& f = fixture();
    const auto rows = eval::run_n_sweep({{1, f.ckpt_with}, {2, f.ckpt_depth2}}, f.manifest,
                                        "test");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == 1);
    CHECK(rows[1].value == 2);
    CHECK(std::isfinite(rows[0].psnr));

    CHECK_THROWS_WITH_AS(eval::run_n_sweep({{3, f.ckpt_with}}, f.manifest, "test"),
                         doctest::Contains("was trained with"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(eval::run_n_sweep({{1, f.ckpt_with}, {1, f.ckpt_wide}}, f.manifest,
                                           "test"),
                         doctest::Contains("more than the temporal depth"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(eval::run_n_sweep({}, f.manifest, "test"),
                         doctest::Contains("no checkpoints"), std::invalid_argument);
}

TEST_CASE("dfm_correlation: pooled patch pairs over a split") {
    const auto& f = fixture();
    const auto record = eval::dfm_correlation(f.ckpt_with, f.manifest, "test", 4);
    // One test clip, 8 frames, 16x16 maps tiled 4x4 -> 16 pairs per frame.
    CHECK(record.grid_w == 4);
    CHECK(record.grid_h == 4);
    CHECK(record.pairs.size() == 8u * 16u);
    CHECK(record.r >= -1.0);
    CHECK(record.r <= 1.0);
    CHECK_FALSE(record.degenerate);

    CHECK_THROWS_WITH_AS(eval::dfm_correlation(f.ckpt_without, f.manifest, "test", 4),
                         doctest::Contains("disabled"), std::invalid_argument);
}

TEST_CASE("csv and summary writers: fixed schemas") {
    const auto& f = fixture();
    const fs::path dir = f.root / "reports";
    fs::create_directories(dir);

    eval::MetricsReport report;
    report.clips = {{"a", 30.25, 0.9}, {"b", 28.5, 0.8}};
    report.mean_psnr = 29.375;
    report.mean_ssim = 0.85;
    eval::write_metrics_csv((dir / "metrics.csv").string(), report);
    const auto metrics = slurp(dir / "metrics.csv");
    CHECK(metrics == "clip_id,psnr_db,ssim\na,30.25,0.9\nb,28.5,0.8\n");

    eval::write_sweep_csv((dir / "sweep.csv").string(), "qp", {{23, 33.5}, {28, 32.0}});
    const auto sweep = slurp(dir / "sweep.csv");
    CHECK(sweep == "qp,psnr_db\n23,33.5\n28,32\n");

    eval::CorrelationRecord record;
    record.pairs = {{0, 0, 0.25, 0.5}, {1, 0, 0.125, 0.25}};
    eval::write_corr_csv((dir / "corr.csv").string(), record);
    const auto corr = slurp(dir / "corr.csv");
    CHECK(corr == "patch_x,patch_y,dfm_mean,err_mean\n0,0,0.25,0.5\n1,0,0.125,0.25\n");

    eval::write_summary_json((dir / "summary.json").string(),
                             {{"mean_psnr", 29.375}, {"clips", 2}});
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("mean_psnr") == 29.375);
    CHECK(summary.at("clips") == 2);
}
