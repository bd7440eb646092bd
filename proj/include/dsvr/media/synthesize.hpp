#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsvr/media/codec.hpp"
#include "dsvr/media/degrade.hpp"
#include "dsvr/media/manifest.hpp"

namespace dsvr::media {

/// A source clip queued for dataset synthesis. When `split` is empty the
/// manifest builder assigns splits from the fractions; when every clip names
/// a split explicitly, those assignments are used verbatim.
struct LabeledClip {
    std::string id;
    FrameClip frames;
    std::string split;  ///< "" (auto) or "train" | "val" | "test"
};

/// Full dataset synthesis: for each clip writes the y/x/z PNG trees under
/// `out_dir/<id>/` (ground truth, degraded via bicubic downscale + constant-QP
/// H.264, and bicubic reference), then writes `out_dir/manifest.json`.
/// Mixing labeled and unlabeled clips is an error.
DatasetManifest synthesize_dataset(const std::vector<LabeledClip>& clips,
                                   const std::string& out_dir, int scale, int qp,
                                   const SplitFractions& fractions, std::uint64_t seed,
                                   const CodecTool& codec);

}  // namespace dsvr::media
