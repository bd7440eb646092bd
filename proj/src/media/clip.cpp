#include "dsvr/media/clip.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace fs = std::filesystem;

namespace dsvr::media {

void FrameClip::validate() const {
    if (frame_count() < kMinClipFrames) {
        throw std::runtime_error("clip '" + source_id + "' has " + std::to_string(frame_count()) +
                                 " frame(s); minimum 5 frames required");
    }
    const int h = frames.front().h;
    const int w = frames.front().w;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].h != h || frames[i].w != w) {
            throw std::runtime_error("clip '" + source_id + "' has inconsistent resolution: frame " +
                                     std::to_string(i) + " is " + std::to_string(frames[i].w) + "x" +
                                     std::to_string(frames[i].h) + ", expected " + std::to_string(w) +
                                     "x" + std::to_string(h));
        }
    }
    if (fps <= 0.0) {
        throw std::runtime_error("clip '" + source_id + "' has non-positive fps");
    }
}

FrameClip read_frames(const std::string& dir, double fps) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("frame directory does not exist: " + dir);
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png") paths.push_back(entry.path().string());
    }
    if (paths.empty()) {
        throw std::runtime_error("no frames found in " + dir);
    }
    std::sort(paths.begin(), paths.end());

    FrameClip clip;
    clip.fps = fps;
    clip.source_id = fs::path(dir).filename().string();
    clip.frames.reserve(paths.size());
    for (const auto& p : paths) clip.frames.push_back(read_png(p));
    clip.validate();
    return clip;
}

void write_frames(const std::string& dir, const FrameClip& clip) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        write_png((fs::path(dir) / name).string(), clip.frames[i]);
    }
}

}  // namespace dsvr::media
