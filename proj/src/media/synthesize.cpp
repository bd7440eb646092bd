#include "dsvr/media/synthesize.hpp"

#include <filesystem>
#include <stdexcept>

#include "dsvr/media/bicubic.hpp"

namespace dsvr::media {

DatasetManifest synthesize_dataset(const std::vector<LabeledClip>& clips,
                                   const std::string& out_dir, int scale, int qp,
                                   const SplitFractions& fractions, std::uint64_t seed,
                                   const CodecTool& codec) {
    if (clips.empty()) throw std::invalid_argument("synthesize_dataset: no clips");
    std::size_t labeled = 0;
    for (const auto& c : clips) labeled += c.split.empty() ? 0 : 1;
    if (labeled != 0 && labeled != clips.size()) {
        throw std::invalid_argument(
            "synthesize_dataset: either every clip or no clip may name a split");
    }

    const std::filesystem::path root(out_dir);
    std::vector<ClipPaths> paths;
    std::vector<std::string> splits;
    for (const auto& labeled_clip : clips) {
        const auto& clip = labeled_clip.frames;
        clip.validate();
        const DegradedPair pair = synthesize_degradation(clip, scale, qp, codec);

        FrameClip z;
        z.fps = clip.fps;
        z.source_id = labeled_clip.id;
        const int lh = clip.height() / scale;
        const int lw = clip.width() / scale;
        for (const auto& frame : clip.frames) z.frames.push_back(bicubic_resize(frame, lh, lw));

        const std::filesystem::path base = root / labeled_clip.id;
        write_frames((base / "y").string(), pair.ground_truth);
        write_frames((base / "x").string(), pair.degraded);
        write_frames((base / "z").string(), z);

        paths.push_back(ClipPaths{labeled_clip.id, (base / "y").string(), (base / "x").string(),
                                  (base / "z").string(), clip.frame_count()});
        splits.push_back(labeled_clip.split);
    }

    DatasetManifest manifest;
    if (labeled == 0) {
        manifest = build_manifest(paths, fractions, seed, scale, qp, codec.version());
    } else {
        manifest.scale = scale;
        manifest.qp = qp;
        manifest.seed = seed;
        manifest.encoder_version = codec.version();
        for (std::size_t i = 0; i < paths.size(); ++i) {
            manifest.clips.push_back(ManifestEntry{paths[i].id, paths[i].y_dir, paths[i].x_dir,
                                                   paths[i].z_dir, paths[i].frame_count,
                                                   splits[i]});
        }
        manifest.validate();
    }
    manifest.save((root / "manifest.json").string());
    return manifest;
}

}  // namespace dsvr::media
