#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "dsvr/eval/metrics.hpp"
#include "dsvr/media/synthesize.hpp"
#include "dsvr/model/pipeline.hpp"
#include "dsvr/nn/checkpoint.hpp"
#include "dsvr/train/config.hpp"
#include "dsvr/train/dataset.hpp"
#include "dsvr/train/trainer.hpp"
#include "toy_clip.hpp"

namespace fs = std::filesystem;
using namespace dsvr;
using train::Stage;
using train::StageResult;
using train::TrainingConfig;
using train::TrainLog;
using train::TrainLogRow;

namespace {

struct ToyData {
    fs::path root;
    media::DatasetManifest manifest;
};

// Shared on-disk dataset: two 8-frame training clips and one test clip,
// 32x32 originals, scale 2, QP 30. Built once per test process.
const ToyData& toy_data() {
    static const ToyData data = [] {
        const fs::path root = fs::temp_directory_path() / "dsvr_train_fixture";
        fs::remove_all(root);
        const auto codec = media::CodecTool::locate();
        std::vector<media::LabeledClip> clips;
        clips.push_back({"clip_a", testutil::make_toy_clip(8, 32, 32, 1), "train"});
        clips.push_back({"clip_b", testutil::make_toy_clip(8, 32, 32, 2), "train"});
        clips.push_back({"clip_c", testutil::make_toy_clip(8, 32, 32, 3), "test"});
        auto manifest =
            media::synthesize_dataset(clips, root.string(), 2, 30, media::SplitFractions{}, 9,
                                      codec);
        return ToyData{root, manifest};
    }();
    return data;
}

fs::path run_dir(const std::string& name) {
    const fs::path dir = toy_data().root / "runs" / name;
    fs::remove_all(dir);
    return dir;
}

TrainingConfig quick_stage1(int iterations, std::uint64_t seed) {
    TrainingConfig cfg;
    cfg.stage = Stage::kStage1;
    cfg.iterations = iterations;
    cfg.batch_size = 2;
    cfg.patch_size = 16;
    cfg.seed = seed;
    return cfg;
}

TrainingConfig quick_stage2(int iterations, std::uint64_t seed) {
    TrainingConfig cfg = quick_stage1(iterations, seed);
    cfg.stage = Stage::kStage2;
    return cfg;
}

model::ModelConfig tiny_model(bool dfm = true) {
    model::ModelConfig cfg;
    cfg.channels = 8;
    cfg.dmm_blocks = 1;
    cfg.recon_blocks = 1;
    cfg.scale = 2;
    cfg.dfm_enabled = dfm;
    return cfg;
}

// One short stage-1 run shared by the stage-2 cases.
const StageResult& shared_stage1() {
    static const StageResult result =
        train::train_stage1(toy_data().manifest, quick_stage1(20, 42),
                            run_dir("stage1_shared").string());
    return result;
}

bool tensors_equal(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("training config: json round trip, strictness and validation") {
    TrainingConfig cfg;
    cfg.stage = Stage::kFinetune;
    cfg.iterations = 321;
    cfg.batch_size = 4;
    cfg.patch_size = 24;
    cfg.lr = 1e-3;
    cfg.seed = 99;
    cfg.augment = false;
    cfg.checkpoint_cadence = 50;
    cfg.eval_cadence = 10;
    cfg.resume_from = "x.ckpt";
    const auto j = cfg.to_json();
    const TrainingConfig back = TrainingConfig::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.stage == Stage::kFinetune);
    CHECK(back.iterations == 321);

    auto bad = j;
    bad["warmup"] = 10;
    CHECK_THROWS_WITH_AS(TrainingConfig::from_json(bad), doctest::Contains("unknown key"),
                         std::invalid_argument);

    CHECK(TrainingConfig::from_json({{"stage", 2}}).stage == Stage::kStage2);
    CHECK(TrainingConfig::from_json({{"stage", "finetune"}}).stage == Stage::kFinetune);
    CHECK_THROWS_AS(TrainingConfig::from_json({{"stage", "3"}}), std::invalid_argument);
    CHECK_THROWS_WITH_AS(TrainingConfig::from_json({{"iterations", 0}}),
                         doctest::Contains("iterations"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(TrainingConfig::from_json({{"patch_size", 4}}),
                         doctest::Contains("patch_size"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(TrainingConfig::from_json({{"lr", 0.0}}), doctest::Contains("lr"),
                         std::invalid_argument);
}

TEST_CASE("train log: monotone steps and csv round trip") {
    TrainLog log;
    TrainLogRow r1;
    r1.step = 1;
    r1.loss = 0.5;
    r1.wall_ms = 3;
    log.append(r1);
    TrainLogRow r2;
    r2.step = 2;
    r2.loss = 0.25;
    r2.psnr = 31.5;
    r2.ssim = 0.91;
    r2.wall_ms = 7;
    log.append(r2);

    TrainLogRow dup;
    dup.step = 2;
    CHECK_THROWS_WITH_AS(log.append(dup), doctest::Contains("strictly increasing"),
                         std::invalid_argument);

    const fs::path path = fs::temp_directory_path() / "dsvr_trainlog_test.csv";
    log.save_csv(path.string());
    const TrainLog back = TrainLog::load_csv(path.string());
    REQUIRE(back.rows().size() == 2);
    CHECK(back.rows()[0].step == 1);
    CHECK(back.rows()[0].loss == 0.5);
    CHECK(std::isnan(back.rows()[0].psnr));
    CHECK(back.rows()[1].psnr == 31.5);
    CHECK(back.rows()[1].wall_ms == 7);
}

TEST_CASE("sample_batch: shapes, window layout and determinism") {
    const auto data = train::load_split(toy_data().manifest, "train");
    REQUIRE(data.clips.size() == 2);
    CHECK(data.total_frames() == 16);

    nn::Rng rng_a(nn::Rng::derive(5, 1, 1));
    const auto batch = train::sample_batch(data, 3, 16, rng_a, true);
    CHECK(batch.x_window.shape() == (std::array<int, 4>{15, 3, 16, 16}));
    CHECK(batch.x_0.shape() == (std::array<int, 4>{3, 3, 16, 16}));
    CHECK(batch.z_mid.shape() == (std::array<int, 4>{3, 3, 16, 16}));
    CHECK(batch.y.shape() == (std::array<int, 4>{3, 3, 32, 32}));

    // Window rows 0/2/4 of each sample mirror the x_m2 / x_0 / x_p2 views.
    const std::size_t plane = 3u * 16 * 16;
    for (int i = 0; i < 3; ++i) {
        CHECK(std::memcmp(batch.x_window.data() + (5 * i + 0) * plane,
                          batch.x_m2.data() + i * plane, plane * sizeof(float)) == 0);
        CHECK(std::memcmp(batch.x_window.data() + (5 * i + 2) * plane,
                          batch.x_0.data() + i * plane, plane * sizeof(float)) == 0);
        CHECK(std::memcmp(batch.x_window.data() + (5 * i + 4) * plane,
                          batch.x_p2.data() + i * plane, plane * sizeof(float)) == 0);
    }

    nn::Rng rng_b(nn::Rng::derive(5, 1, 1));
    const auto batch2 = train::sample_batch(data, 3, 16, rng_b, true);
    CHECK(tensors_equal(batch.x_window, batch2.x_window));
    CHECK(tensors_equal(batch.y, batch2.y));

    nn::Rng rng_c(nn::Rng::derive(5, 1, 2));
    const auto batch3 = train::sample_batch(data, 3, 16, rng_c, true);
    CHECK_FALSE(tensors_equal(batch.x_window, batch3.x_window));

    nn::Rng rng_d(1);
    CHECK_THROWS_WITH_AS(train::sample_batch(data, 2, 64, rng_d, false),
                         doctest::Contains("smaller than patch"), std::invalid_argument);
}

TEST_CASE("stage 1: smoke run writes the run layout and sane losses") {
    TrainingConfig cfg = quick_stage1(12, 7);
    cfg.checkpoint_cadence = 6;
    cfg.eval_cadence = 6;
    const fs::path dir = run_dir("stage1_smoke");
    const StageResult res = train::train_stage1(toy_data().manifest, cfg, dir.string());

    REQUIRE(res.log.rows().size() == 12);
    CHECK(res.log.rows().front().loss < 1.0);  // [0,1] data: initialization bound
    for (const auto& row : res.log.rows()) CHECK(std::isfinite(row.loss));
    CHECK(std::isfinite(res.log.rows()[5].psnr));   // eval at step 6
    CHECK(std::isfinite(res.log.rows()[11].ssim));  // eval at the final step
    CHECK(std::isnan(res.log.rows()[0].psnr));

    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "ckpt" / "step_000006.ckpt"));
    CHECK(fs::exists(dir / "ckpt" / "final.ckpt"));
    CHECK(fs::exists(dir / "logs" / "train.csv"));

    const auto ck = nn::load_checkpoint(res.checkpoint_path);
    CHECK(ck.params.contains("fb1.enc1.w"));
    CHECK(ck.params.contains("fb2.out.b"));
    CHECK(ck.has_optimizer);
    CHECK(ck.step == 12);

    const TrainLog csv = TrainLog::load_csv((dir / "logs" / "train.csv").string());
    REQUIRE(csv.rows().size() == 12);
    CHECK(csv.rows()[3].loss == doctest::Approx(res.log.rows()[3].loss).epsilon(1e-7));
}

TEST_CASE("stage 1: fixed seed reproduces the loss curve bitwise") {
    const TrainingConfig cfg = quick_stage1(8, 21);
    const auto a = train::train_stage1(toy_data().manifest, cfg, run_dir("s1_det_a").string());
    const auto b = train::train_stage1(toy_data().manifest, cfg, run_dir("s1_det_b").string());
    REQUIRE(a.log.rows().size() == b.log.rows().size());
    for (std::size_t i = 0; i < a.log.rows().size(); ++i) {
        CHECK(a.log.rows()[i].loss == b.log.rows()[i].loss);
    }
    const auto c = train::train_stage1(toy_data().manifest, quick_stage1(8, 22),
                                       run_dir("s1_det_c").string());
    CHECK(a.log.rows().back().loss != c.log.rows().back().loss);
}

TEST_CASE("stage 1: missing bicubic references are rejected") {
    auto manifest = toy_data().manifest;
    manifest.clips[0].z_dir.clear();
    CHECK_THROWS_WITH_AS(
        train::train_stage1(manifest, quick_stage1(2, 1), run_dir("s1_noz").string()),
        doctest::Contains("bicubic reference"), std::invalid_argument);
}

TEST_CASE("stage 2: trains, freezes the sensing pair and logs csv") {
    const auto& s1 = shared_stage1();
    TrainingConfig cfg = quick_stage2(10, 5);
    cfg.eval_cadence = 5;
    const fs::path dir = run_dir("stage2_smoke");
    const StageResult res =
        train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(), cfg,
                            dir.string());

    REQUIRE(res.log.rows().size() == 10);
    for (const auto& row : res.log.rows()) CHECK(std::isfinite(row.loss));
    CHECK(std::isfinite(res.final_psnr));

    // Freeze contract: sensing weights bit-identical to the stage-1 result
    // and marked non-trainable in the checkpoint.
    const auto ck1 = nn::load_checkpoint(s1.checkpoint_path);
    const auto ck2 = nn::load_checkpoint(res.checkpoint_path);
    for (const auto& name : ck1.params.names()) {
        REQUIRE(ck2.params.contains(name));
        CHECK(tensors_equal(ck1.params.at(name)->value, ck2.params.at(name)->value));
        CHECK_FALSE(ck2.params.trainable(name));
    }
    CHECK(ck2.params.contains("feam.enc1.w"));
    CHECK(ck2.config.at("model").at("channels") == 8);
}

TEST_CASE("stage 2: degradation maps disabled still trains") {
    const auto& s1 = shared_stage1();
    const StageResult res =
        train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(false),
                            quick_stage2(4, 5), run_dir("stage2_nodfm").string());
    CHECK(res.log.rows().size() == 4);
    CHECK(std::isfinite(res.final_loss));
}

TEST_CASE("stage 2: checkpoints without sensing weights are rejected") {
    nn::ParamSet<float> junk;
    junk.add("something.w", nn::Tensor4<float>(1, 1, 1, 1));
    const fs::path path = toy_data().root / "junk.ckpt";
    nn::save_checkpoint(path.string(), junk, nullptr, {});
    CHECK_THROWS_WITH_AS(
        train::train_stage2(toy_data().manifest, path.string(), tiny_model(),
                            quick_stage2(2, 1), run_dir("s2_junk").string()),
        doctest::Contains("sensing"), std::invalid_argument);
    CHECK_THROWS_AS(train::train_stage2(toy_data().manifest, "/nonexistent.ckpt", tiny_model(),
                                        quick_stage2(2, 1), run_dir("s2_missing").string()),
                    std::runtime_error);
}

TEST_CASE("stage 2: model scale must match the dataset scale") {
    const auto& s1 = shared_stage1();
    auto mcfg = tiny_model();
    mcfg.scale = 4;
    CHECK_THROWS_WITH_AS(
        train::train_stage2(toy_data().manifest, s1.checkpoint_path, mcfg, quick_stage2(2, 1),
                            run_dir("s2_scale").string()),
        doctest::Contains("scale"), std::invalid_argument);
}

TEST_CASE("stage 2: same seed reproduces losses and metrics bitwise") {
    const auto& s1 = shared_stage1();
    TrainingConfig cfg = quick_stage2(6, 77);
    cfg.eval_cadence = 3;
    const auto a = train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(),
                                       cfg, run_dir("s2_det_a").string());
    const auto b = train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(),
                                       cfg, run_dir("s2_det_b").string());
    REQUIRE(a.log.rows().size() == b.log.rows().size());
    for (std::size_t i = 0; i < a.log.rows().size(); ++i) {
        CHECK(a.log.rows()[i].loss == b.log.rows()[i].loss);
        const bool both_nan =
            std::isnan(a.log.rows()[i].psnr) && std::isnan(b.log.rows()[i].psnr);
        CHECK((both_nan || a.log.rows()[i].psnr == b.log.rows()[i].psnr));
    }
}

TEST_CASE("stage 2: interrupted runs resume to the identical trajectory") {
    const auto& s1 = shared_stage1();
    TrainingConfig cfg = quick_stage2(12, 31);
    cfg.checkpoint_cadence = 6;
    const fs::path dir_a = run_dir("s2_resume_full");
    const auto full = train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(),
                                          cfg, dir_a.string());

    TrainingConfig cfg_resume = cfg;
    cfg_resume.resume_from = (dir_a / "ckpt" / "step_000006.ckpt").string();
    const auto resumed =
        train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(), cfg_resume,
                            run_dir("s2_resume_part").string());

    REQUIRE(resumed.log.rows().size() == 6);  // steps 7..12
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(resumed.log.rows()[i].step == full.log.rows()[i + 6].step);
        CHECK(resumed.log.rows()[i].loss == full.log.rows()[i + 6].loss);
    }
    const auto ck_full = nn::load_checkpoint(full.checkpoint_path);
    const auto ck_res = nn::load_checkpoint(resumed.checkpoint_path);
    for (const auto& name : ck_full.params.names()) {
        CHECK(tensors_equal(ck_full.params.at(name)->value, ck_res.params.at(name)->value));
    }
}

TEST_CASE("finetune: epoch-0 baseline, epoch evals and guards") {
    const auto& s1 = shared_stage1();
    const auto s2 = train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(),
                                        quick_stage2(6, 3), run_dir("ft_base").string());

    TrainingConfig cfg;
    cfg.stage = Stage::kFinetune;
    cfg.batch_size = 4;
    cfg.patch_size = 16;
    cfg.seed = 13;
    const int epoch = train::steps_per_epoch(toy_data().manifest, cfg);
    CHECK(epoch == 4);  // 16 train frames / batch 4
    cfg.iterations = epoch;

    const StageResult res =
        train::finetune(toy_data().manifest, s2.checkpoint_path, cfg, run_dir("ft_run").string());
    REQUIRE(res.log.rows().size() == static_cast<std::size_t>(epoch) + 1);
    CHECK(res.log.rows().front().step == 0);
    CHECK(std::isnan(res.log.rows().front().loss));
    CHECK(std::isfinite(res.log.rows().front().psnr));  // pre-finetune baseline
    CHECK(std::isfinite(res.log.rows().back().psnr));   // epoch boundary eval

    // Finetuning demands a restoration checkpoint, not a stage-1 one.
    CHECK_THROWS_WITH_AS(
        train::finetune(toy_data().manifest, s1.checkpoint_path, cfg, run_dir("ft_bad").string()),
        doctest::Contains("model config"), std::invalid_argument);

    // Scale mismatch between checkpoint and data is rejected.
    auto manifest4 = toy_data().manifest;
    manifest4.scale = 4;
    CHECK_THROWS_WITH_AS(
        train::finetune(manifest4, s2.checkpoint_path, cfg, run_dir("ft_scale").string()),
        doctest::Contains("scale"), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves the validation loss") {
    const auto& s1 = shared_stage1();
    const auto s2 = train::train_stage2(toy_data().manifest, s1.checkpoint_path, tiny_model(),
                                        quick_stage2(5, 8), run_dir("rt_run").string());
    const auto test_split = train::load_split(toy_data().manifest, "test");

    auto loaded = model::load_model(s2.checkpoint_path);
    const double loss_a = train::validation_loss(loaded.params, loaded.config, test_split);

    const fs::path copy = toy_data().root / "rt_copy.ckpt";
    nn::save_checkpoint(copy.string(), loaded.params, nullptr, loaded.ckpt_config);
    auto reloaded = model::load_model(copy.string());
    const double loss_b = train::validation_loss(reloaded.params, reloaded.config, test_split);
    CHECK(std::abs(loss_a - loss_b) < 1e-6);
    CHECK(loss_a == loss_b);  // float32 buffers round-trip exactly
}

namespace {

// Noise-free drifting sinusoid pattern: content a converged model can fit
// almost exactly, unlike the textured toy clips.
media::FrameClip make_smooth_clip(int frames, int size) {
    media::FrameClip clip;
    clip.fps = 30.0;
    clip.source_id = "smooth";
    for (int t = 0; t < frames; ++t) {
        media::Image img(size, size);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double u = 2.0 * 3.14159265358979 * (x + 2.0 * t) / size;
                const double v = 2.0 * 3.14159265358979 * (y - 1.5 * t) / size;
                const double a = 0.5 + 0.35 * std::sin(u) * std::cos(0.5 * v);
                const double b = 0.5 + 0.35 * std::cos(0.5 * u + 1.0) * std::sin(v);
                const double c = 0.5 + 0.3 * std::sin(0.7 * u + 0.4 * v + 0.3 * t);
                img.at(y, x, 0) = static_cast<std::uint8_t>(std::lround(255.0 * a));
                img.at(y, x, 1) = static_cast<std::uint8_t>(std::lround(255.0 * b));
                img.at(y, x, 2) = static_cast<std::uint8_t>(std::lround(255.0 * c));
            }
        }
        clip.frames.push_back(img);
    }
    return clip;
}

}  // namespace

TEST_CASE("single-clip training without augmentation overfits past 45 dB") {
    const fs::path root = fs::temp_directory_path() / "dsvr_memorize_fixture";
    fs::remove_all(root);
    const auto codec = media::CodecTool::locate();
    std::vector<media::LabeledClip> clips;
    clips.push_back({"only", make_smooth_clip(6, 32), "train"});
    const auto manifest =
        media::synthesize_dataset(clips, root.string(), 2, 12, media::SplitFractions{}, 3, codec);

    train::TrainingConfig c1;
    c1.stage = Stage::kStage1;
    c1.iterations = 200;
    c1.batch_size = 4;
    c1.patch_size = 16;
    c1.lr = 2e-3;
    c1.cosine_lr = true;
    c1.seed = 4;
    const auto s1 = train::train_stage1(manifest, c1, (root / "s1").string());

    model::ModelConfig mc;
    mc.channels = 24;
    mc.dmm_blocks = 2;
    mc.recon_blocks = 2;
    mc.scale = 2;
    mc.dfm_enabled = false;
    train::TrainingConfig c2 = c1;
    c2.stage = Stage::kStage2;
    c2.iterations = 2500;
    c2.augment = false;
    const auto s2 = train::train_stage2(manifest, s1.checkpoint_path, mc, c2,
                                        (root / "s2").string());

    const auto data = train::load_split(manifest, "train");
    auto loaded = model::load_model(s2.checkpoint_path);
    double mean_psnr = 0.0;
    int count = 0;
    for (const auto& clip : data.clips) {
        const auto restored = model::restore_clip(loaded.params, loaded.config, clip.x);
        for (std::size_t t = 0; t < clip.y.size(); ++t) {
            mean_psnr += eval::psnr(restored.frames[t], clip.y[t]);
            ++count;
        }
    }
    mean_psnr /= count;
    INFO("training-set psnr after memorization run: ", mean_psnr);
    CHECK(mean_psnr > 45.0);
}

TEST_CASE("stage 1: loss drops substantially on a short run") {
    TrainingConfig cfg = quick_stage1(300, 11);
    cfg.batch_size = 2;
    const auto res =
        train::train_stage1(toy_data().manifest, cfg, run_dir("s1_descent").string());
    const auto& rows = res.log.rows();
    double first = 0, last = 0;
    for (int i = 0; i < 25; ++i) {
        first += rows[static_cast<std::size_t>(i)].loss;
        last += rows[rows.size() - 1 - static_cast<std::size_t>(i)].loss;
    }
    INFO("first-25 mean ", first / 25, " last-25 mean ", last / 25);
    CHECK(last < 0.7 * first);
}
