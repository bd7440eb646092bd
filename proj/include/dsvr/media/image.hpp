#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsvr/nn/tensor.hpp"

namespace dsvr::media {

/// 8-bit RGB image, row-major, interleaved channels.
struct Image {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> data;  // h * w * 3

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), data(static_cast<std::size_t>(h_) * w_ * 3, 0) {}

    std::uint8_t& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * w + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * w + x) * 3 + c];
    }
    bool same_size(const Image& o) const { return h == o.h && w == o.w; }
};

/// Lossless PNG round trip; gray and alpha inputs are normalized to RGB8.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

/// [0,255] uint8 <-> [0,1] float tensor (1, 3, H, W).
nn::Tensor4<float> image_to_tensor(const Image& img);
Image tensor_to_image(const nn::Tensor4<float>& t, int batch_index = 0);

}  // namespace dsvr::media
