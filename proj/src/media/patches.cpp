#include "dsvr/media/patches.hpp"

#include <stdexcept>

#include "dsvr/media/clip.hpp"

namespace dsvr::media {
namespace {

void copy_plane_crop(const nn::Tensor4<float>& src, int n, nn::Tensor4<float>& dst, int dn, int oy,
                     int ox, int p) {
    const int c_count = src.c();
    for (int c = 0; c < c_count; ++c) {
        for (int y = 0; y < p; ++y) {
            const float* s = &src.at(n, c, oy + y, ox);
            float* d = &dst.at(dn, c, y, 0);
            std::copy(s, s + p, d);
        }
    }
}

}  // namespace

std::array<int, 5> window_indices(int t, int frame_count) {
    std::array<int, 5> idx{};
    for (int k = 0; k < 5; ++k) idx[static_cast<std::size_t>(k)] = clamp_frame_index(t - 2 + k, frame_count);
    return idx;
}

ClipTensors load_triple(const ManifestEntry& entry, int scale) {
    const FrameClip yc = read_frames(entry.y_dir);
    const FrameClip xc = read_frames(entry.x_dir);
    const FrameClip zc = read_frames(entry.z_dir);
    if (xc.frame_count() != yc.frame_count() || zc.frame_count() != yc.frame_count()) {
        throw std::runtime_error("clip '" + entry.id + "' has mismatched frame counts across y/x/z");
    }
    if (xc.width() != zc.width() || xc.height() != zc.height()) {
        throw std::runtime_error("clip '" + entry.id + "' has mismatched x/z resolution");
    }
    if (xc.width() * scale != yc.width() || xc.height() * scale != yc.height()) {
        throw std::runtime_error("clip '" + entry.id + "' resolution does not match scale " +
                                 std::to_string(scale));
    }
    ClipTensors out;
    out.scale = scale;
    out.y.reserve(static_cast<std::size_t>(yc.frame_count()));
    out.x.reserve(static_cast<std::size_t>(xc.frame_count()));
    out.z.reserve(static_cast<std::size_t>(zc.frame_count()));
    for (const auto& f : yc.frames) out.y.push_back(image_to_tensor(f));
    for (const auto& f : xc.frames) out.x.push_back(image_to_tensor(f));
    for (const auto& f : zc.frames) out.z.push_back(image_to_tensor(f));
    return out;
}

nn::Tensor4<float> hflip_tensor(const nn::Tensor4<float>& t) {
    const auto [n_count, c_count, h, w] = t.shape();
    nn::Tensor4<float> out(n_count, c_count, h, w);
    for (int n = 0; n < n_count; ++n)
        for (int c = 0; c < c_count; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out.at(n, c, y, x) = t.at(n, c, y, w - 1 - x);
    return out;
}

nn::Tensor4<float> rot90_tensor(const nn::Tensor4<float>& t, int quarters) {
    quarters = ((quarters % 4) + 4) % 4;
    if (quarters == 0) return t;
    const auto [n_count, c_count, h, w] = t.shape();
    // One counter-clockwise quarter turn: out has shape (w, h) and
    // out(y', x') = in(x', w - 1 - y').
    nn::Tensor4<float> out(n_count, c_count, w, h);
    for (int n = 0; n < n_count; ++n)
        for (int c = 0; c < c_count; ++c)
            for (int y = 0; y < w; ++y)
                for (int x = 0; x < h; ++x) out.at(n, c, y, x) = t.at(n, c, x, w - 1 - y);
    return quarters == 1 ? out : rot90_tensor(out, quarters - 1);
}

void apply_augmentation(PatchSample& sample, bool hflip, int rot90) {
    if (hflip) {
        sample.x_window = hflip_tensor(sample.x_window);
        sample.y_target = hflip_tensor(sample.y_target);
        sample.z_frames = hflip_tensor(sample.z_frames);
    }
    if (rot90 % 4 != 0) {
        sample.x_window = rot90_tensor(sample.x_window, rot90);
        sample.y_target = rot90_tensor(sample.y_target, rot90);
        sample.z_frames = rot90_tensor(sample.z_frames, rot90);
    }
    sample.geometry.hflip = hflip;
    sample.geometry.rot90 = ((rot90 % 4) + 4) % 4;
}

PatchGeometry draw_patch_geometry(const ClipTensors& clip, int t, int patch, nn::Rng& rng,
                                  bool augment) {
    const int h = clip.lr_height();
    const int w = clip.lr_width();
    if (patch < 1 || patch > h || patch > w) {
        throw std::invalid_argument("patch size " + std::to_string(patch) +
                                    " exceeds frame size " + std::to_string(w) + "x" +
                                    std::to_string(h));
    }
    if (t < 0 || t >= clip.frame_count()) {
        throw std::invalid_argument("frame index " + std::to_string(t) + " out of range");
    }
    PatchGeometry g;
    g.t = t;
    g.oy = rng.uniform_int(h - patch + 1);
    g.ox = rng.uniform_int(w - patch + 1);
    const bool flip = rng.bernoulli(0.5);
    const int rot = static_cast<int>(rng.uniform_int(4));
    g.hflip = augment && flip;
    g.rot90 = augment ? rot : 0;
    return g;
}

PatchSample extract_patch(const ClipTensors& clip, const PatchGeometry& geometry, int patch) {
    const int h = clip.lr_height();
    const int w = clip.lr_width();
    const int p = patch;
    if (p < 1 || p > h || p > w) {
        throw std::invalid_argument("patch size " + std::to_string(p) + " exceeds frame size");
    }
    if (geometry.oy < 0 || geometry.ox < 0 || geometry.oy + p > h || geometry.ox + p > w) {
        throw std::invalid_argument("crop origin out of bounds");
    }
    const int scale = clip.scale;
    PatchSample s;
    s.geometry = geometry;
    s.geometry.hflip = false;
    s.geometry.rot90 = 0;

    s.x_window = nn::Tensor4<float>(5, 3, p, p);
    const std::array<int, 5> win = window_indices(geometry.t, clip.frame_count());
    for (int k = 0; k < 5; ++k) {
        copy_plane_crop(clip.x[static_cast<std::size_t>(win[static_cast<std::size_t>(k)])], 0,
                        s.x_window, k, geometry.oy, geometry.ox, p);
    }

    s.z_frames = nn::Tensor4<float>(3, 3, p, p);
    for (int k = 0; k < 3; ++k) {
        const int zi = clamp_frame_index(geometry.t - 1 + k, clip.frame_count());
        copy_plane_crop(clip.z[static_cast<std::size_t>(zi)], 0, s.z_frames, k, geometry.oy,
                        geometry.ox, p);
    }

    s.y_target = nn::Tensor4<float>(1, 3, p * scale, p * scale);
    copy_plane_crop(clip.y[static_cast<std::size_t>(geometry.t)], 0, s.y_target,
                    0, geometry.oy * scale, geometry.ox * scale, p * scale);

    apply_augmentation(s, geometry.hflip, geometry.rot90);
    return s;
}

PatchSample sample_patch(const ClipTensors& clip, int t, int patch, nn::Rng& rng, bool augment) {
    const PatchGeometry g = draw_patch_geometry(clip, t, patch, rng, augment);
    return extract_patch(clip, g, patch);
}

}  // namespace dsvr::media
