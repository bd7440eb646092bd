#pragma once

#include <string>

#include "dsvr/media/clip.hpp"

namespace dsvr::media {

/// Handle to the external video codec tool (`vcq`), invoked as a subprocess.
///
/// Location precedence: DSVR_CODEC_TOOL environment variable, then a `vcq`
/// binary next to the current executable, then PATH lookup.
class CodecTool {
public:
    explicit CodecTool(std::string tool_path);

    /// Resolves the tool path (see precedence above). Throws if the tool is
    /// missing or does not respond to `version`.
    static CodecTool locate();

    const std::string& path() const { return tool_path_; }

    /// Identifying version string reported by the tool (single line).
    std::string version() const;

    /// Encodes `clip` to an H.264/MP4 file at constant QP.
    void encode(const FrameClip& clip, const std::string& mp4_path, int qp) const;

    /// Decodes an MP4 file back into frames.
    FrameClip decode(const std::string& mp4_path, double fps = 30.0) const;

private:
    std::string tool_path_;
};

}  // namespace dsvr::media
