#pragma once

#include <vector>

#include "dsvr/media/manifest.hpp"
#include "dsvr/nn/rng.hpp"
#include "dsvr/nn/tensor.hpp"

namespace dsvr::media {

/// Decoded clip triple as float tensors in [0, 1], one (1, 3, H, W) per frame.
struct ClipTensors {
    std::vector<nn::Tensor4<float>> y;  ///< ground truth, high resolution
    std::vector<nn::Tensor4<float>> x;  ///< degraded, low resolution
    std::vector<nn::Tensor4<float>> z;  ///< bicubic reference, low resolution
    int scale = 2;

    int frame_count() const { return static_cast<int>(x.size()); }
    int lr_height() const { return x.empty() ? 0 : x.front().h(); }
    int lr_width() const { return x.empty() ? 0 : x.front().w(); }
};

/// Reads the PNG trees referenced by a manifest entry into tensors.
ClipTensors load_triple(const ManifestEntry& entry, int scale);

/// Crop origin and augmentation flags; sufficient to replay a sample exactly.
struct PatchGeometry {
    int t = 0;       ///< center frame index
    int oy = 0;      ///< crop origin row, input (low-res) coordinates
    int ox = 0;      ///< crop origin column, input coordinates
    bool hflip = false;
    int rot90 = 0;   ///< quarter-turns counter-clockwise, in {0,1,2,3}
};

/// One training sample: 5-frame input window, center-frame target, and the
/// bicubic reference frames for the interpolation loss.
struct PatchSample {
    nn::Tensor4<float> x_window;  ///< (5, 3, p, p), frames t-2..t+2 clamped
    nn::Tensor4<float> y_target;  ///< (1, 3, p*scale, p*scale), frame t
    nn::Tensor4<float> z_frames;  ///< (3, 3, p, p), frames t-1, t, t+1 clamped
    PatchGeometry geometry;
};

/// Horizontal flip (reverses the width axis).
nn::Tensor4<float> hflip_tensor(const nn::Tensor4<float>& t);

/// Rotates each plane by `quarters` * 90 degrees counter-clockwise.
nn::Tensor4<float> rot90_tensor(const nn::Tensor4<float>& t, int quarters);

/// Applies flip-then-rotate to every tensor of the sample and records the
/// flags in its geometry.
void apply_augmentation(PatchSample& sample, bool hflip, int rot90);

/// Draws crop origin and augmentation flags. The RNG is always advanced by the
/// same number of draws regardless of `augment`, so crop selection does not
/// depend on whether augmentation is enabled.
PatchGeometry draw_patch_geometry(const ClipTensors& clip, int t, int patch, nn::Rng& rng,
                                  bool augment);

/// Deterministically extracts the sample described by `geometry`.
PatchSample extract_patch(const ClipTensors& clip, const PatchGeometry& geometry, int patch);

/// draw_patch_geometry + extract_patch.
PatchSample sample_patch(const ClipTensors& clip, int t, int patch, nn::Rng& rng, bool augment);

/// The 5 clamped window indices {t-2..t+2} for a clip of `frame_count` frames.
std::array<int, 5> window_indices(int t, int frame_count);

}  // namespace dsvr::media
