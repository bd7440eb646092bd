#include "dsvr/eval/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dsvr/media/bicubic.hpp"

namespace dsvr::eval {

double psnr(const media::Image& a, const media::Image& b) {
    if (!a.same_size(b)) {
        throw std::invalid_argument("psnr: size mismatch (" + std::to_string(a.w) + "x" +
                                    std::to_string(a.h) + " vs " + std::to_string(b.w) + "x" +
                                    std::to_string(b.h) + ")");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b) {
    return psnr(media::tensor_to_image(a), media::tensor_to_image(b));
}

namespace {

// 11-tap Gaussian, sigma = 1.5, normalized to sum 1.
std::array<double, 11> gaussian_window() {
    std::array<double, 11> w{};
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = static_cast<double>(i - 5);
        w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// BT.601 luma plane of an 8-bit RGB image, kept in [0, 255].
std::vector<double> luma_plane(const media::Image& img) {
    std::vector<double> y(static_cast<std::size_t>(img.h) * img.w);
    for (int r = 0; r < img.h; ++r) {
        for (int c = 0; c < img.w; ++c) {
            y[static_cast<std::size_t>(r) * img.w + c] = 0.299 * img.at(r, c, 0) +
                                                         0.587 * img.at(r, c, 1) +
                                                         0.114 * img.at(r, c, 2);
        }
    }
    return y;
}

// Separable Gaussian filter, valid region only: output is (h-10) x (w-10).
std::vector<double> gauss_valid(const std::vector<double>& src, int h, int w) {
    const auto win = gaussian_window();
    const int ow = w - 10;
    const int oh = h - 10;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += win[k] * src[static_cast<std::size_t>(r) * w + c + k];
            tmp[static_cast<std::size_t>(r) * ow + c] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += win[k] * tmp[static_cast<std::size_t>(r + k) * ow + c];
            out[static_cast<std::size_t>(r) * ow + c] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const media::Image& a, const media::Image& b) {
    if (!a.same_size(b)) {
        throw std::invalid_argument("ssim: size mismatch (" + std::to_string(a.w) + "x" +
                                    std::to_string(a.h) + " vs " + std::to_string(b.w) + "x" +
                                    std::to_string(b.h) + ")");
    }
    if (a.h < 11 || a.w < 11) {
        throw std::invalid_argument("ssim: image " + std::to_string(a.w) + "x" +
                                    std::to_string(a.h) + " is smaller than the 11x11 window");
    }
    const auto x = luma_plane(a);
    const auto y = luma_plane(b);
    const int h = a.h;
    const int w = a.w;
    const std::size_t count = x.size();

    std::vector<double> xx(count), yy(count), xy(count);
    for (std::size_t i = 0; i < count; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mu_x = gauss_valid(x, h, w);
    const auto mu_y = gauss_valid(y, h, w);
    const auto m_xx = gauss_valid(xx, h, w);
    const auto m_yy = gauss_valid(yy, h, w);
    const auto m_xy = gauss_valid(xy, h, w);

    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double var_x = m_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = m_yy[i] - mu_y[i] * mu_y[i];
        const double cov = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

double ssim(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b) {
    return ssim(media::tensor_to_image(a), media::tensor_to_image(b));
}

double pearson(const std::vector<CorrPair>& pairs, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (pairs.size() < 2) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double mx = 0.0, my = 0.0;
    for (const auto& p : pairs) {
        mx += p.dfm_mean;
        my += p.err_mean;
    }
    mx /= static_cast<double>(pairs.size());
    my /= static_cast<double>(pairs.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& p : pairs) {
        const double dx = p.dfm_mean - mx;
        const double dy = p.err_mean - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

nn::Tensor4<float> abs_error_map(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("abs_error_map: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    nn::Tensor4<float> out(a.n(), 1, a.h(), a.w());
    const std::size_t plane = static_cast<std::size_t>(a.h()) * a.w();
    for (int n = 0; n < a.n(); ++n) {
        for (int c = 0; c < a.c(); ++c) {
            const float* pa = a.data() + (static_cast<std::size_t>(n) * a.c() + c) * plane;
            const float* pb = b.data() + (static_cast<std::size_t>(n) * a.c() + c) * plane;
            float* po = out.data() + static_cast<std::size_t>(n) * plane;
            for (std::size_t i = 0; i < plane; ++i) po[i] += std::abs(pa[i] - pb[i]);
        }
    }
    const float inv = 1.0f / static_cast<float>(a.c());
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] *= inv;
    return out;
}

namespace {

// Channel-mean plane of (1, C, H, W) as (1, 1, H, W).
nn::Tensor4<float> channel_mean(const nn::Tensor4<float>& t) {
    nn::Tensor4<float> out(1, 1, t.h(), t.w());
    const std::size_t plane = static_cast<std::size_t>(t.h()) * t.w();
    for (int c = 0; c < t.c(); ++c) {
        const float* src = t.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) out.data()[i] += src[i];
    }
    const float inv = 1.0f / static_cast<float>(t.c());
    for (std::size_t i = 0; i < plane; ++i) out.data()[i] *= inv;
    return out;
}

}  // namespace

CorrelationRecord dfm_error_correlation(const nn::Tensor4<float>& dfm,
                                        const nn::Tensor4<float>& err, int patch) {
    if (dfm.n() != 1 || err.n() != 1) {
        throw std::invalid_argument("dfm_error_correlation: expected single-frame maps");
    }
    if (patch < 1) throw std::invalid_argument("dfm_error_correlation: patch must be >= 1");
    if (patch > dfm.h() || patch > dfm.w()) {
        throw std::invalid_argument("dfm_error_correlation: patch " + std::to_string(patch) +
                                    " larger than map " + std::to_string(dfm.w()) + "x" +
                                    std::to_string(dfm.h()));
    }
    nn::Tensor4<float> d = channel_mean(dfm);
    nn::Tensor4<float> e = channel_mean(err);
    if (e.h() != d.h() || e.w() != d.w()) {
        e = media::bicubic_resize(e, d.h(), d.w());
    }

    CorrelationRecord rec;
    rec.patch = patch;
    rec.grid_h = d.h() / patch;
    rec.grid_w = d.w() / patch;
    const int w = d.w();
    for (int ty = 0; ty < rec.grid_h; ++ty) {
        for (int tx = 0; tx < rec.grid_w; ++tx) {
            double sd = 0.0, se = 0.0;
            for (int r = 0; r < patch; ++r) {
                const float* pd = d.data() + static_cast<std::size_t>(ty * patch + r) * w + tx * patch;
                const float* pe = e.data() + static_cast<std::size_t>(ty * patch + r) * w + tx * patch;
                for (int c = 0; c < patch; ++c) {
                    sd += pd[c];
                    se += pe[c];
                }
            }
            const double inv = 1.0 / (static_cast<double>(patch) * patch);
            rec.pairs.push_back(CorrPair{tx, ty, sd * inv, se * inv});
        }
    }
    rec.r = pearson(rec.pairs, &rec.degenerate);
    return rec;
}

}  // namespace dsvr::eval
