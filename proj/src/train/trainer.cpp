#include "dsvr/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dsvr/eval/metrics.hpp"
#include "dsvr/model/pipeline.hpp"
#include "dsvr/nn/checkpoint.hpp"
#include "dsvr/nn/ops.hpp"
#include "dsvr/nn/optim.hpp"
#include "dsvr/sense/sensing.hpp"

namespace dsvr::train {

namespace {

// RNG sub-stream tags: parameter initialization and per-step batch sampling.
constexpr std::uint64_t kStreamInit = 0x494e4954ULL;
constexpr std::uint64_t kStreamSample = 0x53414d50ULL;

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

nlohmann::json dataset_meta(const media::DatasetManifest& m) {
    return nlohmann::json{{"scale", m.scale},
                          {"qp", m.qp},
                          {"encoder_version", m.encoder_version},
                          {"manifest_seed", m.seed}};
}

struct RunDirs {
    std::filesystem::path root, ckpt, logs;
};

RunDirs prepare_run_dir(const std::string& run_dir, const nlohmann::json& config) {
    RunDirs dirs{run_dir, std::filesystem::path(run_dir) / "ckpt",
                 std::filesystem::path(run_dir) / "logs"};
    std::filesystem::create_directories(dirs.ckpt);
    std::filesystem::create_directories(dirs.logs);
    std::ofstream out(dirs.root / "config.json", std::ios::trunc);
    if (!out) throw std::runtime_error("trainer: cannot write config.json in '" + run_dir + "'");
    out << config.dump(2) << '\n';
    return dirs;
}

std::string step_ckpt_name(long long step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "step_%06lld.ckpt", step);
    return buf;
}

void save_run_checkpoint(const RunDirs& dirs, const std::string& name,
                         const nn::ParamSet<float>& params, const nn::Adam<float>& opt,
                         const nlohmann::json& config) {
    nn::save_checkpoint((dirs.ckpt / name).string(), params, &opt, config);
    nn::save_checkpoint((dirs.ckpt / "last.ckpt").string(), params, &opt, config);
}

// Validation clips: the val split when populated, otherwise the test split.
LoadedDataset load_eval_split(const media::DatasetManifest& manifest) {
    LoadedDataset data = load_split(manifest, "val");
    if (data.empty()) data = load_split(manifest, "test");
    return data;
}

double learning_rate(const TrainingConfig& cfg, long long step) {
    if (!cfg.cosine_lr) return cfg.lr;
    const double frac = static_cast<double>(step - 1) / static_cast<double>(cfg.iterations);
    return cfg.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

// Mean of the three interpolation L1 terms against the bicubic targets.
nn::VarPtr<float> interpolation_loss(nn::ParamSet<float>& params, const PatchBatch& batch) {
    auto est = sense::estimate_reference(params, nn::Var<float>::constant(batch.x_m2),
                                         nn::Var<float>::constant(batch.x_0),
                                         nn::Var<float>::constant(batch.x_p2));
    auto l_prev = nn::l1_loss(est.z_prev, nn::Var<float>::constant(batch.z_prev));
    auto l_mid = nn::l1_loss(est.z_mid, nn::Var<float>::constant(batch.z_mid));
    auto l_next = nn::l1_loss(est.z_next, nn::Var<float>::constant(batch.z_next));
    return nn::mul_scalar(nn::add(nn::add(l_prev, l_mid), l_next), 1.0f / 3.0f);
}

struct ValMetrics {
    double psnr = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
};

// Stage-1 validation: full-frame interpolated reference vs the bicubic z.
ValMetrics validate_stage1(nn::ParamSet<float>& params, const LoadedDataset& data) {
    if (data.empty()) return {};
    nn::NoGradGuard guard;
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& clip : data.clips) {
        double cp = 0.0, cs = 0.0;
        const int frames = clip.frame_count();
        for (int t = 0; t < frames; ++t) {
            const auto idx = media::window_indices(t, frames);
            auto est = sense::estimate_reference(
                params, nn::Var<float>::constant(clip.x[static_cast<std::size_t>(idx[0])]),
                nn::Var<float>::constant(clip.x[static_cast<std::size_t>(idx[2])]),
                nn::Var<float>::constant(clip.x[static_cast<std::size_t>(idx[4])]));
            cp += eval::psnr(est.z_mid->value, clip.z[static_cast<std::size_t>(t)]);
            cs += eval::ssim(est.z_mid->value, clip.z[static_cast<std::size_t>(t)]);
        }
        psnr_sum += cp / frames;
        ssim_sum += cs / frames;
    }
    const double n = static_cast<double>(data.clips.size());
    return {psnr_sum / n, ssim_sum / n, true};
}

// Stage-2 validation: restored clip vs the high-resolution ground truth.
ValMetrics validate_stage2(nn::ParamSet<float>& params, const model::ModelConfig& mcfg,
                           const LoadedDataset& data) {
    if (data.empty()) return {};
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& clip : data.clips) {
        const auto restored = model::restore_clip(params, mcfg, clip.x);
        double cp = 0.0, cs = 0.0;
        const int frames = clip.frame_count();
        for (int t = 0; t < frames; ++t) {
            cp += eval::psnr(restored.frames[static_cast<std::size_t>(t)],
                             clip.y[static_cast<std::size_t>(t)]);
            cs += eval::ssim(restored.frames[static_cast<std::size_t>(t)],
                             clip.y[static_cast<std::size_t>(t)]);
        }
        psnr_sum += cp / frames;
        ssim_sum += cs / frames;
    }
    const double n = static_cast<double>(data.clips.size());
    return {psnr_sum / n, ssim_sum / n, true};
}

void apply_metrics(TrainLogRow& row, const ValMetrics& vm, StageResult& result) {
    if (!vm.valid) return;
    row.psnr = vm.psnr;
    row.ssim = vm.ssim;
    result.final_psnr = vm.psnr;
    result.final_ssim = vm.ssim;
}

}  // namespace

int steps_per_epoch(const media::DatasetManifest& manifest, const TrainingConfig& cfg) {
    long long frames = 0;
    for (const auto& entry : manifest.split("train")) frames += entry.frame_count;
    if (frames == 0) return 1;
    return static_cast<int>((frames + cfg.batch_size - 1) / cfg.batch_size);
}

double validation_loss(nn::ParamSet<float>& params, const model::ModelConfig& mcfg,
                       const LoadedDataset& data) {
    if (data.empty()) throw std::invalid_argument("validation_loss: empty dataset");
    nn::NoGradGuard guard;
    double total = 0.0;
    long long frames = 0;
    for (const auto& clip : data.clips) {
        const auto restored = model::restore_clip(params, mcfg, clip.x);
        for (std::size_t t = 0; t < restored.frames.size(); ++t) {
            auto pred = nn::Var<float>::constant(restored.frames[t]);
            auto target = nn::Var<float>::constant(clip.y[t]);
            total += static_cast<double>(
                nn::charbonnier_loss(pred, target, 1e-3f)->value.data()[0]);
            ++frames;
        }
    }
    return total / static_cast<double>(frames);
}

StageResult train_stage1(const media::DatasetManifest& manifest, const TrainingConfig& cfg,
                         const std::string& run_dir) {
    cfg.validate();
    if (cfg.stage != Stage::kStage1) {
        throw std::invalid_argument("train_stage1: config stage is not 1");
    }
    for (const auto& entry : manifest.split("train")) {
        if (entry.z_dir.empty()) {
            throw std::invalid_argument("train_stage1: clip '" + entry.id +
                                        "' has no bicubic reference frames (z)");
        }
    }
    const LoadedDataset data = load_split(manifest, "train");
    if (data.empty()) throw std::invalid_argument("train_stage1: train split is empty");
    const LoadedDataset val = cfg.eval_cadence > 0 ? load_eval_split(manifest) : LoadedDataset{};

    nn::Rng init_rng(nn::Rng::derive(cfg.seed, kStreamInit));
    nn::ParamSet<float> params;
    sense::add_sensing_params(params, init_rng);
    nn::Adam<float> opt(nn::Adam<float>::Config{static_cast<float>(cfg.lr)});
    if (!cfg.resume_from.empty()) {
        nn::CheckpointContents ck = nn::load_checkpoint(cfg.resume_from);
        nn::load_into(params, ck.params);
        if (ck.has_optimizer) opt = nn::restore_optimizer(ck);
    }

    const nlohmann::json ckpt_cfg = {{"stage", stage_name(cfg.stage)},
                                     {"training", cfg.to_json()},
                                     {"dataset", dataset_meta(manifest)}};
    const RunDirs dirs = prepare_run_dir(run_dir, ckpt_cfg);
    const auto start = Clock::now();

    StageResult result;
    for (long long step = opt.step_count() + 1; step <= cfg.iterations; ++step) {
        nn::Rng rng(nn::Rng::derive(cfg.seed, kStreamSample, static_cast<std::uint64_t>(step)));
        const PatchBatch batch = sample_batch(data, cfg.batch_size, cfg.patch_size, rng,
                                              cfg.augment);
        params.zero_grad();
        auto loss = interpolation_loss(params, batch);
        const double loss_v = static_cast<double>(loss->value.data()[0]);
        if (!std::isfinite(loss_v)) {
            throw std::runtime_error("train_stage1: non-finite loss at step " +
                                     std::to_string(step));
        }
        loss->backward();
        opt.set_lr(static_cast<float>(learning_rate(cfg, step)));
        opt.step(params);

        TrainLogRow row;
        row.step = step;
        row.loss = loss_v;
        row.wall_ms = elapsed_ms(start);
        if (cfg.eval_cadence > 0 && (step % cfg.eval_cadence == 0 || step == cfg.iterations)) {
            apply_metrics(row, validate_stage1(params, val), result);
        }
        result.log.append(row);
        result.final_loss = loss_v;
        if (cfg.checkpoint_cadence > 0 && step % cfg.checkpoint_cadence == 0) {
            save_run_checkpoint(dirs, step_ckpt_name(step), params, opt, ckpt_cfg);
        }
    }

    save_run_checkpoint(dirs, "final.ckpt", params, opt, ckpt_cfg);
    result.checkpoint_path = (dirs.ckpt / "final.ckpt").string();
    result.log.save_csv((dirs.logs / "train.csv").string());
    return result;
}

namespace {

// Shared stage-2 / finetune optimization loop. `epoch_eval` adds the epoch
// boundary evaluation schedule (with a step-0 baseline) used by finetuning.
StageResult run_stage2_loop(const media::DatasetManifest& manifest,
                            const model::ModelConfig& mcfg, const TrainingConfig& cfg,
                            nn::ParamSet<float>& params, nn::Adam<float>& opt,
                            const nlohmann::json& ckpt_cfg, const std::string& run_dir,
                            bool epoch_eval) {
    if (mcfg.scale != manifest.scale) {
        throw std::invalid_argument("trainer: model scale " + std::to_string(mcfg.scale) +
                                    " does not match dataset scale " +
                                    std::to_string(manifest.scale));
    }
    const LoadedDataset data = load_split(manifest, "train");
    if (data.empty()) throw std::invalid_argument("trainer: train split is empty");
    const bool wants_eval = cfg.eval_cadence > 0 || epoch_eval;
    const LoadedDataset val = wants_eval ? load_eval_split(manifest) : LoadedDataset{};
    const int epoch_steps = steps_per_epoch(manifest, cfg);

    const RunDirs dirs = prepare_run_dir(run_dir, ckpt_cfg);
    const auto start = Clock::now();

    StageResult result;
    if (epoch_eval && opt.step_count() == 0) {
        TrainLogRow row;
        row.step = 0;
        row.wall_ms = elapsed_ms(start);
        apply_metrics(row, validate_stage2(params, mcfg, val), result);
        result.log.append(row);
    }

    for (long long step = opt.step_count() + 1; step <= cfg.iterations; ++step) {
        nn::Rng rng(nn::Rng::derive(cfg.seed, kStreamSample, static_cast<std::uint64_t>(step)));
        const PatchBatch batch = sample_batch(data, cfg.batch_size, cfg.patch_size, rng,
                                              cfg.augment);

        // Degradation maps come from the current sensing weights but carry no
        // gradient tape; stage separation is structural.
        nn::Tensor4<float> e;
        const nn::Tensor4<float>* e_ptr = nullptr;
        if (mcfg.dfm_enabled) {
            nn::NoGradGuard guard;
            auto est = sense::estimate_reference(params, nn::Var<float>::constant(batch.x_m2),
                                                 nn::Var<float>::constant(batch.x_0),
                                                 nn::Var<float>::constant(batch.x_p2));
            e = sense::compute_dfm<float>(est.z_mid->value, batch.x_0);
            e_ptr = &e;
        }

        params.zero_grad();
        auto y_hat = model::restore_frame<float>(params, mcfg, batch.x_window, e_ptr);
        auto loss = nn::charbonnier_loss(y_hat, nn::Var<float>::constant(batch.y), 1e-3f);
        if (cfg.unfreeze_sensing) {
            loss = nn::add(loss, interpolation_loss(params, batch));
        }
        const double loss_v = static_cast<double>(loss->value.data()[0]);
        if (!std::isfinite(loss_v)) {
            throw std::runtime_error("trainer: non-finite loss at step " + std::to_string(step));
        }
        loss->backward();
        opt.set_lr(static_cast<float>(learning_rate(cfg, step)));
        opt.step(params);

        TrainLogRow row;
        row.step = step;
        row.loss = loss_v;
        row.wall_ms = elapsed_ms(start);
        const bool cadence_hit =
            cfg.eval_cadence > 0 && (step % cfg.eval_cadence == 0 || step == cfg.iterations);
        const bool epoch_hit =
            epoch_eval && (step % epoch_steps == 0 || step == cfg.iterations);
        if (cadence_hit || epoch_hit) {
            apply_metrics(row, validate_stage2(params, mcfg, val), result);
        }
        result.log.append(row);
        result.final_loss = loss_v;
        if (cfg.checkpoint_cadence > 0 && step % cfg.checkpoint_cadence == 0) {
            save_run_checkpoint(dirs, step_ckpt_name(step), params, opt, ckpt_cfg);
        }
    }

    save_run_checkpoint(dirs, "final.ckpt", params, opt, ckpt_cfg);
    result.checkpoint_path = (dirs.ckpt / "final.ckpt").string();
    result.log.save_csv((dirs.logs / "train.csv").string());
    return result;
}

}  // namespace

StageResult train_stage2(const media::DatasetManifest& manifest, const std::string& stage1_ckpt,
                         const model::ModelConfig& mcfg, const TrainingConfig& cfg,
                         const std::string& run_dir) {
    cfg.validate();
    mcfg.validate();
    if (cfg.stage != Stage::kStage2) {
        throw std::invalid_argument("train_stage2: config stage is not 2");
    }

    nn::Rng init_rng(nn::Rng::derive(cfg.seed, kStreamInit));
    nn::ParamSet<float> params;
    sense::add_sensing_params(params, init_rng);
    model::add_model_params(params, mcfg, init_rng);

    nn::CheckpointContents ck1 = nn::load_checkpoint(stage1_ckpt);
    if (!ck1.params.contains("fb1.enc1.w") || !ck1.params.contains("fb2.enc1.w")) {
        throw std::invalid_argument("train_stage2: '" + stage1_ckpt +
                                    "' does not contain the stage-1 sensing weights");
    }
    nn::load_into(params, ck1.params);
    if (!cfg.unfreeze_sensing) {
        params.set_trainable_prefix(sense::kFB1Prefix, false);
        params.set_trainable_prefix(sense::kFB2Prefix, false);
    }

    nn::Adam<float> opt(nn::Adam<float>::Config{static_cast<float>(cfg.lr)});
    if (!cfg.resume_from.empty()) {
        nn::CheckpointContents ck = nn::load_checkpoint(cfg.resume_from);
        nn::load_into(params, ck.params);
        if (ck.has_optimizer) opt = nn::restore_optimizer(ck);
    }

    const nlohmann::json ckpt_cfg = {{"stage", stage_name(cfg.stage)},
                                     {"training", cfg.to_json()},
                                     {"model", mcfg.to_json()},
                                     {"dataset", dataset_meta(manifest)}};
    return run_stage2_loop(manifest, mcfg, cfg, params, opt, ckpt_cfg, run_dir,
                           /*epoch_eval=*/false);
}

StageResult finetune(const media::DatasetManifest& manifest, const std::string& model_ckpt,
                     const TrainingConfig& cfg, const std::string& run_dir) {
    cfg.validate();
    if (cfg.stage != Stage::kFinetune) {
        throw std::invalid_argument("finetune: config stage is not finetune");
    }
    model::LoadedModel loaded = model::load_model(model_ckpt);
    if (loaded.config.scale != manifest.scale) {
        throw std::invalid_argument("finetune: checkpoint model scale " +
                                    std::to_string(loaded.config.scale) +
                                    " does not match dataset scale " +
                                    std::to_string(manifest.scale));
    }
    if (!cfg.unfreeze_sensing) {
        loaded.params.set_trainable_prefix(sense::kFB1Prefix, false);
        loaded.params.set_trainable_prefix(sense::kFB2Prefix, false);
    } else {
        loaded.params.set_trainable_prefix(sense::kFB1Prefix, true);
        loaded.params.set_trainable_prefix(sense::kFB2Prefix, true);
    }

    // Fresh optimizer: the new domain starts its own moment estimates.
    nn::Adam<float> opt(nn::Adam<float>::Config{static_cast<float>(cfg.lr)});
    if (!cfg.resume_from.empty()) {
        nn::CheckpointContents ck = nn::load_checkpoint(cfg.resume_from);
        nn::load_into(loaded.params, ck.params);
        if (ck.has_optimizer) opt = nn::restore_optimizer(ck);
    }

    const nlohmann::json ckpt_cfg = {{"stage", stage_name(cfg.stage)},
                                     {"training", cfg.to_json()},
                                     {"model", loaded.config.to_json()},
                                     {"dataset", dataset_meta(manifest)},
                                     {"finetuned_from", model_ckpt}};
    return run_stage2_loop(manifest, loaded.config, cfg, loaded.params, opt, ckpt_cfg, run_dir,
                           /*epoch_eval=*/true);
}

}  // namespace dsvr::train
