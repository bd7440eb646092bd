#pragma once

#include <string>
#include <vector>

#include "dsvr/media/image.hpp"

namespace dsvr::media {

/// Minimum clip length: the temporal window needs t-2..t+2.
inline constexpr int kMinClipFrames = 5;

/// Ordered frame sequence with shared resolution.
struct FrameClip {
    std::vector<Image> frames;
    double fps = 30.0;
    std::string source_id;

    int frame_count() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().h; }
    int width() const { return frames.empty() ? 0 : frames.front().w; }

    /// Enforces the FrameClip invariants (>= 5 frames, uniform resolution).
    void validate() const;
};

/// Reads a PNG sequence (lexicographic file order) from a directory.
FrameClip read_frames(const std::string& dir, double fps = 30.0);

/// Writes frames as zero-padded PNGs (000000.png, 000001.png, ...).
void write_frames(const std::string& dir, const FrameClip& clip);

/// Clamped temporal index (replicate edge frames).
inline int clamp_frame_index(int t, int frame_count) {
    if (t < 0) return 0;
    if (t >= frame_count) return frame_count - 1;
    return t;
}

}  // namespace dsvr::media
