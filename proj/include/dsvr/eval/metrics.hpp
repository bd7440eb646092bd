#pragma once

#include <vector>

#include "dsvr/media/image.hpp"
#include "dsvr/nn/tensor.hpp"

namespace dsvr::eval {

/// Peak-255 PSNR over all RGB samples: 10*log10(255^2 / MSE). Returns
/// +infinity when the images are identical (MSE = 0); that is the "infinite"
/// flag. Throws on a size mismatch.
double psnr(const media::Image& a, const media::Image& b);

/// Tensor convenience overload: quantizes both [0,1] float tensors to 8-bit
/// (round, clamp) and compares with the image-domain convention above.
/// Tensors must be (1, 3, H, W).
double psnr(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b);

/// Mean local SSIM over the BT.601 luma plane: 11-tap Gaussian window
/// (sigma = 1.5), K1 = 0.01, K2 = 0.03, L = 255, weighted moments, averaged
/// over valid window positions only. Throws when either dimension is smaller
/// than the window.
double ssim(const media::Image& a, const media::Image& b);
double ssim(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b);

/// One tile of the DFM-vs-error comparison grid.
struct CorrPair {
    int patch_x = 0;      ///< tile column index
    int patch_y = 0;      ///< tile row index
    double dfm_mean = 0;  ///< mean DFM value inside the tile
    double err_mean = 0;  ///< mean restoration error inside the tile
};

/// Patch-grid correlation between a degradation map and a restoration error
/// map, plus the Pearson coefficient over the tile means.
struct CorrelationRecord {
    int patch = 0;
    int grid_w = 0;  ///< tiles per row (floor(w / patch))
    int grid_h = 0;  ///< tiles per column
    std::vector<CorrPair> pairs;
    double r = 0.0;
    bool degenerate = false;  ///< a zero-variance side made r undefined; reported as 0
};

/// Pearson correlation over (dfm_mean, err_mean) pairs. Fewer than two pairs
/// or a zero-variance side is degenerate: r = 0 and *degenerate = true.
double pearson(const std::vector<CorrPair>& pairs, bool* degenerate = nullptr);

/// Tiles `dfm` (N=1, any channel count; channels are averaged) and `err`
/// into patch x patch cells and correlates the per-tile means. `err` may be
/// given at a higher resolution (e.g. |y - y_hat| at output scale); it is
/// bicubically downscaled to the DFM resolution first. Throws when `patch`
/// exceeds the DFM dimensions.
CorrelationRecord dfm_error_correlation(const nn::Tensor4<float>& dfm,
                                        const nn::Tensor4<float>& err, int patch);

/// Mean |a - b| over channels as a single-channel (1, 1, H, W) map.
nn::Tensor4<float> abs_error_map(const nn::Tensor4<float>& a, const nn::Tensor4<float>& b);

}  // namespace dsvr::eval
