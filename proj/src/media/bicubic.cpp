#include "dsvr/media/bicubic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dsvr::media {

double bicubic_weight(double t) {
    constexpr double a = -0.5;
    const double x = std::abs(t);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

struct Taps {
    int idx[4];
    float w[4];
};

/// Precomputed 4-tap filter per output coordinate, center-aligned mapping
/// src = (dst + 0.5) * (in/out) - 0.5, edge-clamped.
std::vector<Taps> make_taps(int in_size, int out_size) {
    std::vector<Taps> taps(out_size);
    const double ratio = static_cast<double>(in_size) / out_size;
    for (int d = 0; d < out_size; ++d) {
        const double src = (d + 0.5) * ratio - 0.5;
        const int base = static_cast<int>(std::floor(src));
        const double frac = src - base;
        for (int k = 0; k < 4; ++k) {
            taps[d].idx[k] = std::clamp(base - 1 + k, 0, in_size - 1);
            taps[d].w[k] = static_cast<float>(bicubic_weight(frac - (k - 1)));
        }
    }
    return taps;
}

}  // namespace

void bicubic_resize_plane(const float* src, int sh, int sw, float* dst, int dh, int dw) {
    if (sh == dh && sw == dw) {
        std::copy(src, src + static_cast<std::size_t>(sh) * sw, dst);
        return;
    }
    const auto hx = make_taps(sw, dw);
    const auto hy = make_taps(sh, dh);

    // Horizontal pass into (sh, dw), then vertical into (dh, dw).
    std::vector<float> tmp(static_cast<std::size_t>(sh) * dw);
    for (int y = 0; y < sh; ++y) {
        const float* srow = src + static_cast<std::size_t>(y) * sw;
        float* trow = tmp.data() + static_cast<std::size_t>(y) * dw;
        for (int x = 0; x < dw; ++x) {
            const Taps& t = hx[x];
            trow[x] = t.w[0] * srow[t.idx[0]] + t.w[1] * srow[t.idx[1]] +
                      t.w[2] * srow[t.idx[2]] + t.w[3] * srow[t.idx[3]];
        }
    }
    for (int y = 0; y < dh; ++y) {
        const Taps& t = hy[y];
        const float* r0 = tmp.data() + static_cast<std::size_t>(t.idx[0]) * dw;
        const float* r1 = tmp.data() + static_cast<std::size_t>(t.idx[1]) * dw;
        const float* r2 = tmp.data() + static_cast<std::size_t>(t.idx[2]) * dw;
        const float* r3 = tmp.data() + static_cast<std::size_t>(t.idx[3]) * dw;
        float* drow = dst + static_cast<std::size_t>(y) * dw;
        for (int x = 0; x < dw; ++x) {
            drow[x] = t.w[0] * r0[x] + t.w[1] * r1[x] + t.w[2] * r2[x] + t.w[3] * r3[x];
        }
    }
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic_resize: bad output dims");
    std::vector<float> src(static_cast<std::size_t>(img.h) * img.w);
    std::vector<float> dst(static_cast<std::size_t>(out_h) * out_w);
    Image out(out_h, out_w);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < img.h; ++y) {
            for (int x = 0; x < img.w; ++x) {
                src[static_cast<std::size_t>(y) * img.w + x] = static_cast<float>(img.at(y, x, c));
            }
        }
        bicubic_resize_plane(src.data(), img.h, img.w, dst.data(), out_h, out_w);
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                const float v = std::clamp(dst[static_cast<std::size_t>(y) * out_w + x], 0.f, 255.f);
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return out;
}

nn::Tensor4<float> bicubic_resize(const nn::Tensor4<float>& t, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic_resize: bad output dims");
    nn::Tensor4<float> out(t.n(), t.c(), out_h, out_w);
    for (int n = 0; n < t.n(); ++n) {
        for (int c = 0; c < t.c(); ++c) {
            bicubic_resize_plane(t.data() + t.index(n, c, 0, 0), t.h(), t.w(),
                                 out.data() + out.index(n, c, 0, 0), out_h, out_w);
        }
    }
    return out;
}

}  // namespace dsvr::media
