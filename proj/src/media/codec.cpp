#include "dsvr/media/codec.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>

#include "dsvr/media/subprocess.hpp"

namespace fs = std::filesystem;

namespace dsvr::media {
namespace {

std::string first_line(const std::string& s) {
    const auto pos = s.find('\n');
    return pos == std::string::npos ? s : s.substr(0, pos);
}

fs::path make_temp_dir(const char* tag) {
    static std::atomic<uint64_t> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("dsvr_" + std::string(tag) + "_" + std::to_string(getpid()) + "_" +
                          std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

std::string current_exe_dir() {
    char buf[4096];
    const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return {};
    buf[n] = '\0';
    return fs::path(buf).parent_path().string();
}

bool responds_to_version(const std::string& tool) {
    try {
        const RunResult r = run_tool({tool, "version"});
        return r.exit_code == 0 && !r.output.empty();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

CodecTool::CodecTool(std::string tool_path) : tool_path_(std::move(tool_path)) {
    if (!responds_to_version(tool_path_)) {
        throw std::runtime_error("codec tool not usable: " + tool_path_);
    }
}

CodecTool CodecTool::locate() {
    if (const char* env = std::getenv("DSVR_CODEC_TOOL"); env != nullptr && *env != '\0') {
        if (responds_to_version(env)) return CodecTool(env);
        throw std::runtime_error(std::string("video codec tool 'vcq' not usable: DSVR_CODEC_TOOL points to ") + env);
    }
    if (const std::string dir = current_exe_dir(); !dir.empty()) {
        const std::string sibling = (fs::path(dir) / "vcq").string();
        if (fs::exists(sibling) && responds_to_version(sibling)) return CodecTool(sibling);
    }
    if (responds_to_version("vcq")) return CodecTool("vcq");
    throw std::runtime_error(
        "video codec tool 'vcq' not found (set DSVR_CODEC_TOOL or add it to PATH)");
}

std::string CodecTool::version() const {
    const RunResult r = run_tool({tool_path_, "version"});
    if (r.exit_code != 0) {
        throw std::runtime_error("codec tool version query failed: " + r.output);
    }
    return first_line(r.output);
}

void CodecTool::encode(const FrameClip& clip, const std::string& mp4_path, int qp) const {
    clip.validate();
    if (qp < 0 || qp > 51) {
        throw std::invalid_argument("qp must be in [0, 51], got " + std::to_string(qp));
    }
    const fs::path tmp = make_temp_dir("enc");
    try {
        write_frames(tmp.string(), clip);
        const RunResult r = run_tool({tool_path_, "encode", "--in", tmp.string(), "--out", mp4_path,
                                      "--qp", std::to_string(qp), "--fps",
                                      std::to_string(clip.fps)});
        if (r.exit_code != 0) {
            throw std::runtime_error("codec encode failed (exit " + std::to_string(r.exit_code) +
                                     "): " + r.output);
        }
    } catch (...) {
        fs::remove_all(tmp);
        throw;
    }
    fs::remove_all(tmp);
}

FrameClip CodecTool::decode(const std::string& mp4_path, double fps) const {
    if (!fs::exists(mp4_path)) {
        throw std::runtime_error("decode input does not exist: " + mp4_path);
    }
    const fs::path tmp = make_temp_dir("dec");
    FrameClip clip;
    try {
        const RunResult r = run_tool({tool_path_, "decode", "--in", mp4_path, "--out", tmp.string()});
        if (r.exit_code != 0) {
            throw std::runtime_error("codec decode failed (exit " + std::to_string(r.exit_code) +
                                     "): " + r.output);
        }
        clip = read_frames(tmp.string(), fps);
        clip.source_id = fs::path(mp4_path).stem().string();
    } catch (...) {
        fs::remove_all(tmp);
        throw;
    }
    fs::remove_all(tmp);
    return clip;
}

}  // namespace dsvr::media
