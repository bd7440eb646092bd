#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsvr/nn/ops.hpp"
#include "dsvr/nn/params.hpp"

namespace dsvr::model {

/// LReLU slope shared by every activation in the restoration network.
inline constexpr double kSlope = 0.1;

/// Hyper-parameters of the restoration network. Defaults are the full-size
/// configuration; tests shrink channels/depths for speed.
struct ModelConfig {
    int channels = 64;      ///< C: feature width of FEAM/backbone/reconstruction
    int dmm_blocks = 10;    ///< n: modulation blocks (and modulated backbone additions)
    int recon_blocks = 8;   ///< N: residual blocks in the reconstruction tail
    int scale = 2;          ///< upscaling factor, 2 or 4
    int window = 5;         ///< temporal window length
    bool dfm_enabled = true;

    void validate() const {
        if (dmm_blocks < 1) throw std::invalid_argument("ModelConfig: dmm_blocks must be >= 1");
        if (recon_blocks < 1) {
            throw std::invalid_argument("ModelConfig: recon_blocks must be >= 1");
        }
        if (channels < 8) throw std::invalid_argument("ModelConfig: channels must be >= 8");
        if (scale != 2 && scale != 4) throw std::invalid_argument("ModelConfig: scale must be 2 or 4");
        if (window != 5) throw std::invalid_argument("ModelConfig: window must be 5");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"channels", channels},   {"dmm_blocks", dmm_blocks},
                              {"recon_blocks", recon_blocks}, {"scale", scale},
                              {"window", window},       {"dfm_enabled", dfm_enabled}};
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig cfg;
        cfg.channels = j.at("channels").get<int>();
        cfg.dmm_blocks = j.at("dmm_blocks").get<int>();
        cfg.recon_blocks = j.at("recon_blocks").get<int>();
        cfg.scale = j.at("scale").get<int>();
        cfg.window = j.at("window").get<int>();
        cfg.dfm_enabled = j.at("dfm_enabled").get<bool>();
        cfg.validate();
        return cfg;
    }

    bool operator==(const ModelConfig&) const = default;
};

/// Registers all restoration-network parameters:
///   feam.*  shared per-frame encoder + 1x1 window fusion
///   dmm.*   n cascaded conv+LReLU blocks producing the modulation maps
///   bb.*    n+1 backbone convolutions
///   rec.*   N residual blocks, pre-upsample conv, pixel-shuffle stage(s)
template <typename T>
void add_model_params(nn::ParamSet<T>& p, const ModelConfig& cfg, nn::Rng& rng) {
    cfg.validate();
    const int C = cfg.channels;
    p.add("feam.enc1.w", nn::conv_weight_init<T>(C, 3, 3, rng));
    p.add("feam.enc1.b", nn::bias_init<T>(C));
    p.add("feam.enc2.w", nn::conv_weight_init<T>(C, C, 3, rng));
    p.add("feam.enc2.b", nn::bias_init<T>(C));
    p.add("feam.fuse.w", nn::conv_weight_init<T>(C, cfg.window * C, 1, rng));
    p.add("feam.fuse.b", nn::bias_init<T>(C));

    for (int i = 1; i <= cfg.dmm_blocks; ++i) {
        const std::string base = "dmm.block" + std::to_string(i);
        p.add(base + ".w", nn::conv_weight_init<T>(C, i == 1 ? 3 : C, 3, rng));
        p.add(base + ".b", nn::bias_init<T>(C));
    }
    for (int i = 0; i <= cfg.dmm_blocks; ++i) {
        const std::string base = "bb.conv" + std::to_string(i);
        p.add(base + ".w", nn::conv_weight_init<T>(C, C, 3, rng));
        p.add(base + ".b", nn::bias_init<T>(C));
    }
    for (int j = 1; j <= cfg.recon_blocks; ++j) {
        const std::string base = "rec.res" + std::to_string(j);
        p.add(base + ".w1", nn::conv_weight_init<T>(C, C, 3, rng));
        p.add(base + ".b1", nn::bias_init<T>(C));
        p.add(base + ".w2", nn::Tensor4<T>(C, C, 3, 3));  // zero: block starts as identity
        p.add(base + ".b2", nn::bias_init<T>(C));
    }
    p.add("rec.conv1.w", nn::conv_weight_init<T>(C, C, 3, rng));
    p.add("rec.conv1.b", nn::bias_init<T>(C));
    if (cfg.scale == 4) {
        p.add("rec.up1.w", nn::conv_weight_init<T>(4 * C, C, 3, rng));
        p.add("rec.up1.b", nn::bias_init<T>(4 * C));
    }
    p.add("rec.out.w", nn::conv_weight_init<T>(12, C, 3, rng));
    p.add("rec.out.b", nn::bias_init<T>(12));
}

/// Fuses a stack of temporal windows into per-window feature maps.
/// `window` holds B windows of cfg.window RGB frames stacked along the batch
/// axis: (window*B, 3, h, w) -> (B, C, h, w). The per-frame encoder shares
/// weights across frames; frame features are re-laid-out along channels and
/// merged by a 1x1 convolution.
template <typename T>
nn::VarPtr<T> feam_fuse(nn::ParamSet<T>& p, const ModelConfig& cfg, const nn::VarPtr<T>& window) {
    const auto& s = window->value.shape();
    if (s[0] % cfg.window != 0) {
        throw std::invalid_argument("feam_fuse: batch " + std::to_string(s[0]) +
                                    " is not a multiple of the window size " +
                                    std::to_string(cfg.window));
    }
    if (s[1] != 3) throw std::invalid_argument("feam_fuse: frames must have 3 channels");
    const int b = s[0] / cfg.window;
    const auto slope = static_cast<T>(kSlope);
    auto h1 = nn::leaky_relu<T>(
        nn::conv2d<T>(window, p.at("feam.enc1.w"), p.at("feam.enc1.b"), 1, 1), slope);
    auto h2 = nn::leaky_relu<T>(
        nn::conv2d<T>(h1, p.at("feam.enc2.w"), p.at("feam.enc2.b"), 1, 1), slope);
    // Frames of one window are contiguous along the batch axis, so the stack
    // (window*B, C, h, w) reinterprets directly as (B, window*C, h, w).
    auto stacked = nn::reshape<T>(h2, b, cfg.window * cfg.channels, s[2], s[3]);
    return nn::leaky_relu<T>(
        nn::conv2d<T>(stacked, p.at("feam.fuse.w"), p.at("feam.fuse.b"), 1, 0), slope);
}

/// Runs the modulation cascade on a degradation map e (B, 3, h, w) and
/// returns the n per-depth modulation maps (each (B, C, h, w)).
template <typename T>
std::vector<nn::VarPtr<T>> dmm_extract(nn::ParamSet<T>& p, const ModelConfig& cfg,
                                       const nn::VarPtr<T>& e) {
    if (e->value.c() != 3) {
        throw std::invalid_argument("dmm_extract: degradation map must have 3 channels");
    }
    const auto slope = static_cast<T>(kSlope);
    std::vector<nn::VarPtr<T>> betas;
    betas.reserve(cfg.dmm_blocks);
    auto h = e;
    for (int i = 1; i <= cfg.dmm_blocks; ++i) {
        const std::string base = "dmm.block" + std::to_string(i);
        h = nn::leaky_relu<T>(nn::conv2d<T>(h, p.at(base + ".w"), p.at(base + ".b"), 1, 1),
                              slope);
        betas.push_back(h);
    }
    return betas;
}

/// Feature backbone with depthwise additive modulation:
///   f^{i+1} = LReLU(Conv_i(f^i)) + beta^i,  i = 0..n,  beta^0 = 0.
template <typename T>
nn::VarPtr<T> modulated_backbone(nn::ParamSet<T>& p, const ModelConfig& cfg,
                                 const nn::VarPtr<T>& f0,
                                 const std::vector<nn::VarPtr<T>>& betas) {
    if (static_cast<int>(betas.size()) != cfg.dmm_blocks) {
        throw std::invalid_argument("modulated_backbone: expected " +
                                    std::to_string(cfg.dmm_blocks) + " modulation maps, got " +
                                    std::to_string(betas.size()));
    }
    const auto slope = static_cast<T>(kSlope);
    auto f = f0;
    for (int i = 0; i <= cfg.dmm_blocks; ++i) {
        const std::string base = "bb.conv" + std::to_string(i);
        f = nn::leaky_relu<T>(nn::conv2d<T>(f, p.at(base + ".w"), p.at(base + ".b"), 1, 1),
                              slope);
        if (i >= 1) f = nn::add<T>(f, betas[static_cast<std::size_t>(i) - 1]);
    }
    return f;
}

/// Reconstruction tail: N residual blocks, a pre-upsample convolution, then
/// pixel-shuffle upscaling to RGB. Scale 4 uses two cascaded x2 stages with a
/// convolution between them. (B, C, h, w) -> (B, 3, scale*h, scale*w).
template <typename T>
nn::VarPtr<T> reconstruct(nn::ParamSet<T>& p, const ModelConfig& cfg, const nn::VarPtr<T>& f) {
    const auto slope = static_cast<T>(kSlope);
    auto h = f;
    for (int j = 1; j <= cfg.recon_blocks; ++j) {
        const std::string base = "rec.res" + std::to_string(j);
        h = nn::residual_block<T>(h, p.at(base + ".w1"), p.at(base + ".b1"),
                                  p.at(base + ".w2"), p.at(base + ".b2"), slope);
    }
    h = nn::leaky_relu<T>(nn::conv2d<T>(h, p.at("rec.conv1.w"), p.at("rec.conv1.b"), 1, 1),
                          slope);
    if (cfg.scale == 4) {
        h = nn::conv2d<T>(h, p.at("rec.up1.w"), p.at("rec.up1.b"), 1, 1);
        h = nn::leaky_relu<T>(nn::pixel_shuffle<T>(h, 2), slope);
    }
    h = nn::conv2d<T>(h, p.at("rec.out.w"), p.at("rec.out.b"), 1, 1);
    return nn::pixel_shuffle<T>(h, 2);
}

/// End-to-end restoration of B temporal windows.
///   x_window: (window*B, 3, h, w) degraded frames, windows stacked along batch
///   e:        (B, 3, h, w) degradation maps, or nullptr
/// When dfm_enabled is false or e is null, a zero map is substituted, which is
/// exactly the disabled path (bit-identical to passing an all-zero e).
/// Returns (B, 3, scale*h, scale*w).
template <typename T>
nn::VarPtr<T> restore_frame(nn::ParamSet<T>& p, const ModelConfig& cfg,
                            const nn::Tensor4<T>& x_window, const nn::Tensor4<T>* e) {
    cfg.validate();
    const auto& s = x_window.shape();
    if (s[0] % cfg.window != 0 || s[1] != 3) {
        throw std::invalid_argument("restore_frame: window stack must be (window*B, 3, h, w), got " +
                                    x_window.shape_str());
    }
    const int b = s[0] / cfg.window;
    nn::Tensor4<T> e_used(b, 3, s[2], s[3]);  // zeros unless a live map is supplied
    if (cfg.dfm_enabled && e != nullptr) {
        if (!(e->n() == b && e->c() == 3 && e->h() == s[2] && e->w() == s[3])) {
            throw std::invalid_argument("restore_frame: degradation map shape " + e->shape_str() +
                                        " does not match windows " + x_window.shape_str());
        }
        e_used = *e;
    }
    auto win = nn::Var<T>::constant(x_window);
    auto ev = nn::Var<T>::constant(std::move(e_used));
    auto f0 = feam_fuse<T>(p, cfg, win);
    auto betas = dmm_extract<T>(p, cfg, ev);
    auto f = modulated_backbone<T>(p, cfg, f0, betas);
    return reconstruct<T>(p, cfg, f);
}

}  // namespace dsvr::model
