#pragma once

#include <string>

#include "dsvr/media/clip.hpp"
#include "dsvr/media/codec.hpp"

namespace dsvr::media {

/// Paired pristine / degraded clips produced by the synthesis pipeline.
struct DegradedPair {
    FrameClip ground_truth;  ///< original high-resolution frames y
    FrameClip degraded;      ///< compressed low-resolution frames x
    int scale = 2;
    int qp = 28;
    std::string encoder_version;
};

/// Synthesizes a degraded counterpart of `clip`: bicubic downscale by `scale`
/// followed by H.264 compression at constant QP `qp`.
///
/// Frame dimensions must be divisible by 2*scale so that the downscaled frames
/// have even dimensions (required by 4:2:0 chroma subsampling).
DegradedPair synthesize_degradation(const FrameClip& clip, int scale, int qp,
                                    const CodecTool& codec);

}  // namespace dsvr::media
