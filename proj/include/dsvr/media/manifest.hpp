#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dsvr::media {

/// One degraded clip triple referenced by a manifest.
struct ManifestEntry {
    std::string id;
    std::string y_dir;  ///< ground-truth frames (PNG dir)
    std::string x_dir;  ///< degraded frames (PNG dir)
    std::string z_dir;  ///< bicubic reference frames (PNG dir)
    int frame_count = 0;
    std::string split;  ///< "train" | "val" | "test"
};

/// Clip paths prior to split assignment.
struct ClipPaths {
    std::string id;
    std::string y_dir;
    std::string x_dir;
    std::string z_dir;
    int frame_count = 0;
};

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Dataset manifest: clip triples, degradation parameters and provenance.
struct DatasetManifest {
    std::vector<ManifestEntry> clips;
    int scale = 2;
    int qp = 28;
    std::string encoder_version;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);

    /// Entries with the given split tag, in manifest order.
    std::vector<ManifestEntry> split(const std::string& tag) const;

    /// Checks split tags are valid and clip ids are unique.
    void validate() const;
};

/// Assigns clips to train/val/test deterministically under `seed` using
/// largest-remainder apportionment of the shuffled clip list.
DatasetManifest build_manifest(const std::vector<ClipPaths>& clips, const SplitFractions& fractions,
                               std::uint64_t seed, int scale, int qp,
                               const std::string& encoder_version);

/// k-fold mode: returns k manifests; in manifest i, fold i is the test split
/// and the remaining clips are the train split. Every clip lands in exactly
/// one test fold across the k manifests.
std::vector<DatasetManifest> build_kfold_manifests(const std::vector<ClipPaths>& clips, int k,
                                                   std::uint64_t seed, int scale, int qp,
                                                   const std::string& encoder_version);

}  // namespace dsvr::media
