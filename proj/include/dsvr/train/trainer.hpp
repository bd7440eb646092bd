#pragma once

#include <string>

#include "dsvr/media/manifest.hpp"
#include "dsvr/model/restoration.hpp"
#include "dsvr/nn/params.hpp"
#include "dsvr/train/config.hpp"
#include "dsvr/train/dataset.hpp"

namespace dsvr::train {

/// Outcome of one training run. The final checkpoint always exists; PSNR and
/// SSIM are NaN when the run never evaluated (no validation clips or
/// eval_cadence = 0).
struct StageResult {
    std::string checkpoint_path;
    TrainLog log;
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    double final_psnr = std::numeric_limits<double>::quiet_NaN();
    double final_ssim = std::numeric_limits<double>::quiet_NaN();
};

/// Stage 1: fits the interpolation pair (fb1/fb2) by minimizing the mean
/// absolute error of the three interpolated references against the bicubic
/// targets. Writes the run directory layout {config.json, ckpt/, logs/}.
StageResult train_stage1(const media::DatasetManifest& manifest, const TrainingConfig& cfg,
                         const std::string& run_dir);

/// Stage 2: loads the sensing pair from a stage-1 checkpoint, freezes it
/// (unless cfg.unfreeze_sensing), and trains the restoration network with
/// the Charbonnier loss. Degradation maps are computed per batch window with
/// the current sensing weights, outside the gradient tape.
StageResult train_stage2(const media::DatasetManifest& manifest, const std::string& stage1_ckpt,
                         const model::ModelConfig& mcfg, const TrainingConfig& cfg,
                         const std::string& run_dir);

/// Fine-tuning: continues stage-2 optimization from a trained model
/// checkpoint on a new degradation domain, logging validation PSNR at epoch
/// boundaries, including the step-0 pre-finetune baseline. Rejects data whose
/// scale differs from the checkpoint's model scale.
StageResult finetune(const media::DatasetManifest& manifest, const std::string& model_ckpt,
                     const TrainingConfig& cfg, const std::string& run_dir);

/// Steps that constitute one epoch: ceil(total train-split frames / batch).
int steps_per_epoch(const media::DatasetManifest& manifest, const TrainingConfig& cfg);

/// Deterministic full-frame Charbonnier loss of a restoration model over a
/// dataset (inference path, including the degradation maps when enabled).
double validation_loss(nn::ParamSet<float>& params, const model::ModelConfig& mcfg,
                       const LoadedDataset& data);

}  // namespace dsvr::train
