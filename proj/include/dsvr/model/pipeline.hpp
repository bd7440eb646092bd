#pragma once

#include <vector>

#include "dsvr/model/restoration.hpp"
#include "dsvr/nn/params.hpp"
#include "dsvr/nn/tensor.hpp"

namespace dsvr::model {

/// Full-clip restoration output. `dfm` is populated (one (1,3,h,w) map per
/// frame) when requested and the degradation path is enabled.
struct ClipRestoration {
    std::vector<nn::Tensor4<float>> frames;  ///< restored (1, 3, scale*h, scale*w)
    std::vector<nn::Tensor4<float>> dfm;     ///< per-frame degradation maps (optional)
};

/// Restores every frame of a degraded clip. `params` must hold the sensing
/// nets (fb1./fb2.) alongside the restoration weights when cfg.dfm_enabled;
/// degradation maps are computed per frame from the full-resolution estimate.
/// Runs without building gradient tapes.
ClipRestoration restore_clip(nn::ParamSet<float>& params, const ModelConfig& cfg,
                             const std::vector<nn::Tensor4<float>>& x_frames,
                             bool keep_dfm = false);

/// Registers the sensing pair (fb1./fb2.) followed by the restoration
/// parameters — the full parameter registry a stage-2 checkpoint stores.
nn::ParamSet<float> make_full_params(const ModelConfig& cfg, std::uint64_t seed);

/// A restoration checkpoint rehydrated into a usable parameter set.
struct LoadedModel {
    nn::ParamSet<float> params;
    ModelConfig config;
    nlohmann::json ckpt_config;  ///< full config block embedded in the checkpoint
};

/// Loads a checkpoint that embeds a model config (stage-2 or finetune output)
/// and fills a freshly registered parameter set with its weights. Rejects
/// checkpoints without a model section (e.g. stage-1 sensing checkpoints).
LoadedModel load_model(const std::string& ckpt_path);

}  // namespace dsvr::model
