#include "dsvr/model/pipeline.hpp"

#include <stdexcept>

#include "dsvr/media/patches.hpp"
#include "dsvr/nn/checkpoint.hpp"
#include "dsvr/sense/sensing.hpp"

namespace dsvr::model {

ClipRestoration restore_clip(nn::ParamSet<float>& params, const ModelConfig& cfg,
                             const std::vector<nn::Tensor4<float>>& x_frames, bool keep_dfm) {
    cfg.validate();
    const int frames = static_cast<int>(x_frames.size());
    if (frames < 1) throw std::invalid_argument("restore_clip: empty clip");
    const int h = x_frames.front().h();
    const int w = x_frames.front().w();
    for (const auto& f : x_frames) {
        if (!(f.n() == 1 && f.c() == 3 && f.h() == h && f.w() == w)) {
            throw std::invalid_argument("restore_clip: inconsistent frame shape " + f.shape_str());
        }
    }

    nn::NoGradGuard guard;
    ClipRestoration out;
    out.frames.reserve(x_frames.size());
    for (int t = 0; t < frames; ++t) {
        const auto idx = media::window_indices(t, frames);
        nn::Tensor4<float> window(cfg.window, 3, h, w);
        const std::size_t plane = static_cast<std::size_t>(3) * h * w;
        for (int k = 0; k < cfg.window; ++k) {
            std::copy_n(x_frames[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])].data(),
                        plane, window.data() + static_cast<std::size_t>(k) * plane);
        }

        nn::Tensor4<float> e;
        const nn::Tensor4<float>* e_ptr = nullptr;
        if (cfg.dfm_enabled) {
            auto x_m2 = nn::Var<float>::constant(x_frames[static_cast<std::size_t>(idx[0])]);
            auto x_0 = nn::Var<float>::constant(x_frames[static_cast<std::size_t>(idx[2])]);
            auto x_p2 = nn::Var<float>::constant(x_frames[static_cast<std::size_t>(idx[4])]);
            auto est = sense::estimate_reference<float>(params, x_m2, x_0, x_p2);
            e = sense::compute_dfm<float>(est.z_mid->value, x_frames[static_cast<std::size_t>(t)]);
            e_ptr = &e;
            if (keep_dfm) out.dfm.push_back(e);
        }
        auto y = restore_frame<float>(params, cfg, window, e_ptr);
        out.frames.push_back(y->value);
    }
    return out;
}

nn::ParamSet<float> make_full_params(const ModelConfig& cfg, std::uint64_t seed) {
    nn::Rng rng(nn::Rng::derive(seed, 0x494e4954ULL /* init stream */));
    nn::ParamSet<float> params;
    sense::add_sensing_params(params, rng);
    add_model_params(params, cfg, rng);
    return params;
}

LoadedModel load_model(const std::string& ckpt_path) {
    nn::CheckpointContents ck = nn::load_checkpoint(ckpt_path);
    if (!ck.config.contains("model")) {
        throw std::invalid_argument("load_model: checkpoint '" + ckpt_path +
                                    "' does not embed a model config (expected a stage-2 or "
                                    "finetune checkpoint)");
    }
    ModelConfig cfg = ModelConfig::from_json(ck.config.at("model"));
    LoadedModel out{make_full_params(cfg, 0), cfg, ck.config};
    nn::load_into(out.params, ck.params);
    return out;
}

}  // namespace dsvr::model
