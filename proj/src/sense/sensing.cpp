#include "dsvr/sense/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "dsvr/media/image.hpp"

namespace dsvr::sense {

void write_dfm_png(const std::string& path, const nn::Tensor4<float>& e, int batch_index) {
    if (batch_index < 0 || batch_index >= e.n()) {
        throw std::invalid_argument("write_dfm_png: batch index out of range");
    }
    media::Image img(e.h(), e.w());
    for (int y = 0; y < e.h(); ++y) {
        for (int x = 0; x < e.w(); ++x) {
            float m = 0.0f;
            for (int c = 0; c < e.c(); ++c) m = std::max(m, e.at(batch_index, c, y, x));
            const auto v = static_cast<std::uint8_t>(
                std::lround(std::clamp(m, 0.0f, 1.0f) * 255.0f));
            img.at(y, x, 0) = v;
            img.at(y, x, 1) = v;
            img.at(y, x, 2) = v;
        }
    }
    media::write_png(path, img);
}

}  // namespace dsvr::sense
