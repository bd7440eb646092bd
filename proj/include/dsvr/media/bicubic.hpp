#pragma once

#include "dsvr/media/image.hpp"

namespace dsvr::media {

/// Keys bicubic kernel weight, a = -0.5.
double bicubic_weight(double t);

/// Separable bicubic resampling of a single float plane (edge-clamped).
void bicubic_resize_plane(const float* src, int sh, int sw, float* dst, int dh, int dw);

/// 8-bit RGB resize; output clamped to [0, 255] and rounded.
Image bicubic_resize(const Image& img, int out_h, int out_w);

/// Float tensor resize, per channel, any batch.
nn::Tensor4<float> bicubic_resize(const nn::Tensor4<float>& t, int out_h, int out_w);

}  // namespace dsvr::media
