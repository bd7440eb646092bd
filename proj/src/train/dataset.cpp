#include "dsvr/train/dataset.hpp"

#include <cstring>
#include <stdexcept>

namespace dsvr::train {

long long LoadedDataset::total_frames() const {
    long long total = 0;
    for (const auto& c : clips) total += c.frame_count();
    return total;
}

LoadedDataset load_split(const media::DatasetManifest& manifest, const std::string& split) {
    manifest.validate();
    LoadedDataset data;
    data.scale = manifest.scale;
    for (const auto& entry : manifest.split(split)) {
        data.clips.push_back(media::load_triple(entry, manifest.scale));
        data.ids.push_back(entry.id);
    }
    return data;
}

namespace {

// Copies row `src_row` of `src` into row `dst_row` of `dst` (same C, H, W).
void copy_row(nn::Tensor4<float>& dst, int dst_row, const nn::Tensor4<float>& src, int src_row) {
    const std::size_t plane = static_cast<std::size_t>(src.c()) * src.h() * src.w();
    std::memcpy(dst.data() + dst_row * plane, src.data() + src_row * plane,
                plane * sizeof(float));
}

}  // namespace

PatchBatch sample_batch(const LoadedDataset& data, int batch, int patch, nn::Rng& rng,
                        bool augment) {
    if (data.empty()) throw std::invalid_argument("sample_batch: dataset split is empty");
    if (batch < 1) throw std::invalid_argument("sample_batch: batch must be >= 1");
    for (std::size_t i = 0; i < data.clips.size(); ++i) {
        const auto& c = data.clips[i];
        if (c.lr_height() < patch || c.lr_width() < patch) {
            throw std::invalid_argument("sample_batch: clip '" + data.ids[i] + "' (" +
                                        std::to_string(c.lr_width()) + "x" +
                                        std::to_string(c.lr_height()) +
                                        ") is smaller than patch " + std::to_string(patch));
        }
    }

    const int s = data.scale;
    PatchBatch b{nn::Tensor4<float>(5 * batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch, patch),
                 nn::Tensor4<float>(batch, 3, patch * s, patch * s)};

    for (int i = 0; i < batch; ++i) {
        const int clip_idx = rng.uniform_int(static_cast<int>(data.clips.size()));
        const auto& clip = data.clips[clip_idx];
        const int t = rng.uniform_int(clip.frame_count());
        const media::PatchSample sample = media::sample_patch(clip, t, patch, rng, augment);

        for (int f = 0; f < 5; ++f) copy_row(b.x_window, 5 * i + f, sample.x_window, f);
        copy_row(b.x_m2, i, sample.x_window, 0);
        copy_row(b.x_0, i, sample.x_window, 2);
        copy_row(b.x_p2, i, sample.x_window, 4);
        copy_row(b.z_prev, i, sample.z_frames, 0);
        copy_row(b.z_mid, i, sample.z_frames, 1);
        copy_row(b.z_next, i, sample.z_frames, 2);
        copy_row(b.y, i, sample.y_target, 0);
    }
    return b;
}

}  // namespace dsvr::train
