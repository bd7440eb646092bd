#pragma once

#include <string>

#include "dsvr/nn/ops.hpp"
#include "dsvr/nn/params.hpp"

namespace dsvr::sense {

/// Parameter prefixes of the two interpolation networks.
inline constexpr const char* kFB1Prefix = "fb1.";
inline constexpr const char* kFB2Prefix = "fb2.";

/// Registers one interpolation net under `prefix`: a 3-level encoder-decoder
/// with an additive skip, channels 6 -> 32 -> 64 -> 32 -> 3. Both nets map two
/// stacked RGB frames to one RGB frame at the same resolution.
template <typename T>
void add_interp_net_params(nn::ParamSet<T>& params, const std::string& prefix, nn::Rng& rng) {
    params.add(prefix + "enc1.w", nn::conv_weight_init<T>(32, 6, 3, rng));
    params.add(prefix + "enc1.b", nn::bias_init<T>(32));
    params.add(prefix + "enc2.w", nn::conv_weight_init<T>(64, 32, 3, rng));
    params.add(prefix + "enc2.b", nn::bias_init<T>(64));
    params.add(prefix + "mid.w", nn::conv_weight_init<T>(64, 64, 3, rng));
    params.add(prefix + "mid.b", nn::bias_init<T>(64));
    params.add(prefix + "dec1.w", nn::conv_weight_init<T>(32, 64, 3, rng));
    params.add(prefix + "dec1.b", nn::bias_init<T>(32));
    params.add(prefix + "out.w", nn::conv_weight_init<T>(3, 32, 3, rng));
    params.add(prefix + "out.b", nn::bias_init<T>(3));
}

/// Registers both F_B1 and F_B2.
template <typename T>
void add_sensing_params(nn::ParamSet<T>& params, nn::Rng& rng) {
    add_interp_net_params(params, kFB1Prefix, rng);
    add_interp_net_params(params, kFB2Prefix, rng);
}

/// Midpoint-frame interpolation: stacks frames a and b along channels and runs
/// the encoder-decoder under `prefix`. Any resolution is accepted; inputs are
/// replicate-padded to a multiple of 4 internally and cropped back.
template <typename T>
nn::VarPtr<T> interpolate_pair(nn::ParamSet<T>& params, const std::string& prefix,
                               const nn::VarPtr<T>& a, const nn::VarPtr<T>& b,
                               T slope = static_cast<T>(0.1)) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument("interpolate_pair: resolution mismatch " +
                                    a->value.shape_str() + " vs " + b->value.shape_str());
    }
    if (a->value.c() != 3) {
        throw std::invalid_argument("interpolate_pair: frames must have 3 channels");
    }
    const int h = a->value.h();
    const int w = a->value.w();
    const int pad_h = (4 - h % 4) % 4;
    const int pad_w = (4 - w % 4) % 4;

    auto x = nn::concat_channels<T>({a, b});
    if (pad_h || pad_w) x = nn::pad_replicate<T>(x, 0, pad_h, 0, pad_w);

    auto e1 = nn::leaky_relu<T>(
        nn::conv2d<T>(x, params.at(prefix + "enc1.w"), params.at(prefix + "enc1.b"), 1, 1), slope);
    auto e2 = nn::leaky_relu<T>(
        nn::conv2d<T>(e1, params.at(prefix + "enc2.w"), params.at(prefix + "enc2.b"), 2, 1), slope);
    auto m = nn::leaky_relu<T>(
        nn::conv2d<T>(e2, params.at(prefix + "mid.w"), params.at(prefix + "mid.b"), 1, 1), slope);
    auto u = nn::upsample_nearest2x<T>(m);
    auto d1 = nn::leaky_relu<T>(
        nn::conv2d<T>(u, params.at(prefix + "dec1.w"), params.at(prefix + "dec1.b"), 1, 1), slope);
    d1 = nn::add<T>(d1, e1);  // skip connection at full resolution
    auto out = nn::conv2d<T>(d1, params.at(prefix + "out.w"), params.at(prefix + "out.b"), 1, 1);
    if (pad_h || pad_w) out = nn::crop<T>(out, 0, 0, h, w);
    return out;
}

/// The three estimated reference frames around t.
template <typename T>
struct ReferenceEstimate {
    nn::VarPtr<T> z_prev;  ///< z-hat_{t-1} = F_B1(x_{t-2}, x_t)
    nn::VarPtr<T> z_mid;   ///< z-hat_t     = F_B2(z-hat_{t-1}, z-hat_{t+1})
    nn::VarPtr<T> z_next;  ///< z-hat_{t+1} = F_B1(x_{t+2}, x_t)
};

/// Composition of the interpolation pair: F_B1 is shared between the two
/// outer estimates (argument order as given above), F_B2 merges them.
template <typename T>
ReferenceEstimate<T> estimate_reference(nn::ParamSet<T>& params, const nn::VarPtr<T>& x_m2,
                                        const nn::VarPtr<T>& x_0, const nn::VarPtr<T>& x_p2,
                                        T slope = static_cast<T>(0.1)) {
    ReferenceEstimate<T> est;
    est.z_prev = interpolate_pair<T>(params, kFB1Prefix, x_m2, x_0, slope);
    est.z_next = interpolate_pair<T>(params, kFB1Prefix, x_p2, x_0, slope);
    est.z_mid = interpolate_pair<T>(params, kFB2Prefix, est.z_prev, est.z_next, slope);
    return est;
}

/// Degradation feature map: e = log(|z_hat - x| + 1) / S with
/// S = max over the frame (all channels) of the log residual; e = 0 when the
/// residual vanishes. Computed per batch element on [0,1] intensities.
template <typename T>
nn::Tensor4<T> compute_dfm(const nn::Tensor4<T>& z_hat, const nn::Tensor4<T>& x) {
    if (!z_hat.same_shape(x)) {
        throw std::invalid_argument("compute_dfm: shape mismatch " + z_hat.shape_str() + " vs " +
                                    x.shape_str());
    }
    nn::Tensor4<T> e(z_hat.n(), z_hat.c(), z_hat.h(), z_hat.w());
    const std::size_t per_frame = e.numel() / static_cast<std::size_t>(e.n());
    for (int n = 0; n < e.n(); ++n) {
        const std::size_t off = static_cast<std::size_t>(n) * per_frame;
        double s = 0.0;
        for (std::size_t i = 0; i < per_frame; ++i) {
            const double r = std::abs(static_cast<double>(z_hat.data()[off + i]) -
                                      static_cast<double>(x.data()[off + i]));
            const double v = std::log1p(r);
            e.data()[off + i] = static_cast<T>(v);
            if (v > s) s = v;
        }
        if (s == 0.0) continue;  // zero residual -> e stays identically zero
        for (std::size_t i = 0; i < per_frame; ++i) {
            e.data()[off + i] = static_cast<T>(static_cast<double>(e.data()[off + i]) / s);
        }
    }
    return e;
}

/// Writes a DFM as an 8-bit grayscale PNG (max over channels, scaled by 255).
void write_dfm_png(const std::string& path, const nn::Tensor4<float>& e, int batch_index = 0);

}  // namespace dsvr::sense
