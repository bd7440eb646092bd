#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dsvr/media/bicubic.hpp"
#include "dsvr/media/codec.hpp"
#include "dsvr/media/degrade.hpp"
#include "toy_clip.hpp"

using namespace dsvr;
namespace fs = std::filesystem;

// These tests exercise the external encoder contract; the build points
// DSVR_CODEC_TOOL at the freshly built tool.

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("dsvr_codec_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double clip_psnr(const media::FrameClip& a, const media::FrameClip& b) {
    REQUIRE(a.frame_count() == b.frame_count());
    double acc = 0.0;
    for (int t = 0; t < a.frame_count(); ++t) {
        acc += testutil::image_psnr(a.frames[static_cast<std::size_t>(t)],
                                    b.frames[static_cast<std::size_t>(t)]);
    }
    return acc / a.frame_count();
}

}  // namespace

TEST_CASE("codec: tool resolves and reports a version string") {
    const media::CodecTool tool = media::CodecTool::locate();
    const std::string v = tool.version();
    CHECK(v.rfind("vcq", 0) == 0);
    CHECK(v.find("libavcodec") != std::string::npos);
}

TEST_CASE("codec: encode/decode round trip preserves geometry and is faithful at low QP") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(8, 48, 64, 21);
    const fs::path dir = temp_dir("rt");
    const std::string mp4 = (dir / "clip.mp4").string();

    tool.encode(clip, mp4, 8);
    const media::FrameClip back = tool.decode(mp4);
    CHECK(back.frame_count() == clip.frame_count());
    CHECK(back.width() == clip.width());
    CHECK(back.height() == clip.height());
    // QP 8 is near-lossless; the floor absorbs 4:2:0 chroma subsampling.
    CHECK(clip_psnr(clip, back) > 32.0);
    fs::remove_all(dir);
}

TEST_CASE("codec: higher QP degrades quality monotonically") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(8, 48, 64, 22);
    const fs::path dir = temp_dir("mono");

    double prev = 1e9;
    for (int qp : {10, 28, 45}) {
        const std::string mp4 = (dir / ("q" + std::to_string(qp) + ".mp4")).string();
        tool.encode(clip, mp4, qp);
        const double psnr = clip_psnr(clip, tool.decode(mp4));
        CAPTURE(qp);
        CHECK(psnr < prev);
        prev = psnr;
    }
    fs::remove_all(dir);
}

TEST_CASE("codec: encoding is deterministic (identical bitstreams)") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(6, 32, 48, 23);
    const fs::path dir = temp_dir("det");

    auto read_bytes = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    tool.encode(clip, (dir / "a.mp4").string(), 30);
    tool.encode(clip, (dir / "b.mp4").string(), 30);
    CHECK(read_bytes((dir / "a.mp4").string()) == read_bytes((dir / "b.mp4").string()));
    fs::remove_all(dir);
}

TEST_CASE("codec: invalid qp and missing input are rejected") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(6, 16, 16, 24);
    const fs::path dir = temp_dir("err");
    CHECK_THROWS_AS(tool.encode(clip, (dir / "o.mp4").string(), 77), std::invalid_argument);
    CHECK_THROWS_AS(tool.decode((dir / "missing.mp4").string()), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("degrade: geometry law dims(x) = dims(z) = dims(y)/scale, equal frame counts") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(8, 48, 64, 25);

    for (int scale : {2, 4}) {
        const media::DegradedPair pair = media::synthesize_degradation(clip, scale, 28, tool);
        CAPTURE(scale);
        CHECK(pair.degraded.width() == 64 / scale);
        CHECK(pair.degraded.height() == 48 / scale);
        CHECK(pair.degraded.frame_count() == clip.frame_count());
        CHECK(pair.ground_truth.frame_count() == clip.frame_count());
        CHECK(pair.scale == scale);
        CHECK(pair.qp == 28);
        CHECK_FALSE(pair.encoder_version.empty());
    }
}

TEST_CASE("degrade: PSNR(x, z) is higher at QP 28 than at QP 45") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(8, 48, 64, 26);

    // z is the bicubic reference: reproduce it via the same downscale.
    media::FrameClip z;
    z.fps = clip.fps;
    z.source_id = clip.source_id;
    for (const auto& f : clip.frames) z.frames.push_back(media::bicubic_resize(f, 24, 32));

    const auto at28 = media::synthesize_degradation(clip, 2, 28, tool);
    const auto at45 = media::synthesize_degradation(clip, 2, 45, tool);
    CHECK(clip_psnr(at28.degraded, z) > clip_psnr(at45.degraded, z));
}

TEST_CASE("degrade: dimensions not divisible by 2*scale are rejected") {
    const media::CodecTool tool = media::CodecTool::locate();
    const media::FrameClip clip = testutil::make_toy_clip(6, 30, 30, 27);
    CHECK_THROWS_WITH_AS(media::synthesize_degradation(clip, 2, 28, tool),
                         doctest::Contains("divisible"), std::invalid_argument);
    CHECK_THROWS_AS(media::synthesize_degradation(clip, 3, 28, tool), std::invalid_argument);
}
