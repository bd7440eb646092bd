#pragma once

#include <string>
#include <vector>

#include "dsvr/media/manifest.hpp"
#include "dsvr/media/patches.hpp"
#include "dsvr/nn/rng.hpp"
#include "dsvr/nn/tensor.hpp"

namespace dsvr::train {

/// All clips of one manifest split, decoded once and kept in memory for the
/// duration of a run (desk-scale datasets fit comfortably).
struct LoadedDataset {
    std::vector<media::ClipTensors> clips;
    std::vector<std::string> ids;
    int scale = 2;

    bool empty() const { return clips.empty(); }
    long long total_frames() const;
};

LoadedDataset load_split(const media::DatasetManifest& manifest, const std::string& split);

/// One training batch. Window rows of a sample are contiguous in x_window
/// ((window*B, 3, p, p) with sample i in rows [5i, 5i+5)); the auxiliary
/// views x_m2/x_0/x_p2 are the window's outer and center frames, z_* the
/// bicubic interpolation targets, and y the high-resolution center target.
struct PatchBatch {
    nn::Tensor4<float> x_window;
    nn::Tensor4<float> x_m2, x_0, x_p2;
    nn::Tensor4<float> z_prev, z_mid, z_next;
    nn::Tensor4<float> y;
};

/// Draws `batch` patch samples (uniform clip, uniform center frame, random
/// crop and augmentation) and stacks them. Consumes a fixed number of RNG
/// draws per sample, so batches are reproducible from the RNG seed alone.
PatchBatch sample_batch(const LoadedDataset& data, int batch, int patch, nn::Rng& rng,
                        bool augment);

}  // namespace dsvr::train
