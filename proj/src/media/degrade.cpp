#include "dsvr/media/degrade.hpp"

#include <unistd.h>

#include <filesystem>
#include <stdexcept>

#include "dsvr/media/bicubic.hpp"

namespace fs = std::filesystem;

namespace dsvr::media {

DegradedPair synthesize_degradation(const FrameClip& clip, int scale, int qp,
                                    const CodecTool& codec) {
    clip.validate();
    if (scale != 2 && scale != 4) {
        throw std::invalid_argument("scale must be 2 or 4, got " + std::to_string(scale));
    }
    const int divisor = 2 * scale;
    if (clip.width() % divisor != 0 || clip.height() % divisor != 0) {
        throw std::invalid_argument("frame dimensions " + std::to_string(clip.width()) + "x" +
                                    std::to_string(clip.height()) + " must be divisible by " +
                                    std::to_string(divisor) + " for scale " + std::to_string(scale));
    }

    FrameClip low;
    low.fps = clip.fps;
    low.source_id = clip.source_id;
    low.frames.reserve(clip.frames.size());
    for (const auto& frame : clip.frames) {
        low.frames.push_back(bicubic_resize(frame, clip.height() / scale, clip.width() / scale));
    }

    const fs::path mp4 = fs::temp_directory_path() /
                         ("dsvr_degrade_" + std::to_string(getpid()) + "_" + clip.source_id + ".mp4");
    DegradedPair pair;
    try {
        codec.encode(low, mp4.string(), qp);
        pair.degraded = codec.decode(mp4.string(), clip.fps);
    } catch (...) {
        fs::remove(mp4);
        throw;
    }
    fs::remove(mp4);

    if (pair.degraded.frame_count() != clip.frame_count()) {
        throw std::runtime_error("codec round trip changed frame count: " +
                                 std::to_string(clip.frame_count()) + " in, " +
                                 std::to_string(pair.degraded.frame_count()) + " out");
    }
    if (pair.degraded.width() != low.width() || pair.degraded.height() != low.height()) {
        throw std::runtime_error("codec round trip changed resolution");
    }

    pair.ground_truth = clip;
    pair.degraded.source_id = clip.source_id;
    pair.scale = scale;
    pair.qp = qp;
    pair.encoder_version = codec.version();
    return pair;
}

}  // namespace dsvr::media
