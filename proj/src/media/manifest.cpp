#include "dsvr/media/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "dsvr/nn/rng.hpp"

using nlohmann::json;

namespace dsvr::media {
namespace {

json entry_to_json(const ManifestEntry& e) {
    return json{{"id", e.id},
                {"y_dir", e.y_dir},
                {"x_dir", e.x_dir},
                {"z_dir", e.z_dir},
                {"frame_count", e.frame_count},
                {"split", e.split}};
}

ManifestEntry entry_from_json(const json& j) {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.y_dir = j.at("y_dir").get<std::string>();
    e.x_dir = j.at("x_dir").get<std::string>();
    e.z_dir = j.at("z_dir").get<std::string>();
    e.frame_count = j.at("frame_count").get<int>();
    e.split = j.at("split").get<std::string>();
    return e;
}

/// Deterministic Fisher–Yates shuffle of clip order under `seed`.
std::vector<ClipPaths> shuffled_clips(std::vector<ClipPaths> clips, std::uint64_t seed) {
    std::sort(clips.begin(), clips.end(),
              [](const ClipPaths& a, const ClipPaths& b) { return a.id < b.id; });
    nn::Rng rng(nn::Rng::derive(seed, 0x6d616e69 /* "mani" */));
    for (std::size_t i = clips.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
        std::swap(clips[i - 1], clips[j]);
    }
    return clips;
}

void check_unique_ids(const std::vector<ClipPaths>& clips) {
    std::set<std::string> seen;
    for (const auto& c : clips) {
        if (c.id.empty()) throw std::invalid_argument("clip with empty id");
        if (!seen.insert(c.id).second) {
            throw std::invalid_argument("duplicate clip id: " + c.id);
        }
    }
}

}  // namespace

json DatasetManifest::to_json() const {
    json jc = json::array();
    for (const auto& e : clips) jc.push_back(entry_to_json(e));
    return json{{"clips", std::move(jc)},
                {"scale", scale},
                {"qp", qp},
                {"encoder_version", encoder_version},
                {"seed", seed}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
    DatasetManifest m;
    m.scale = j.at("scale").get<int>();
    m.qp = j.at("qp").get<int>();
    m.encoder_version = j.at("encoder_version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& je : j.at("clips")) m.clips.push_back(entry_from_json(je));
    m.validate();
    return m;
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << to_json().dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("manifest is not valid JSON (" + path + "): " + e.what());
    }
    return from_json(j);
}

std::vector<ManifestEntry> DatasetManifest::split(const std::string& tag) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : clips) {
        if (e.split == tag) out.push_back(e);
    }
    return out;
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const auto& e : clips) {
        if (e.split != "train" && e.split != "val" && e.split != "test") {
            throw std::runtime_error("manifest entry '" + e.id + "' has invalid split tag '" +
                                     e.split + "'");
        }
        if (!seen.insert(e.id).second) {
            throw std::runtime_error("clip id appears in more than one manifest entry: " + e.id);
        }
        if (e.frame_count < 5) {
            throw std::runtime_error("manifest entry '" + e.id + "' has fewer than 5 frames");
        }
    }
}

DatasetManifest build_manifest(const std::vector<ClipPaths>& clips, const SplitFractions& fractions,
                               std::uint64_t seed, int scale, int qp,
                               const std::string& encoder_version) {
    check_unique_ids(clips);
    const double frac[3] = {fractions.train, fractions.val, fractions.test};
    double sum = 0.0;
    for (double f : frac) {
        if (f < 0.0) throw std::invalid_argument("split fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must sum to 1, got " + std::to_string(sum));
    }
    int nonzero_splits = 0;
    for (double f : frac) nonzero_splits += (f > 0.0) ? 1 : 0;
    if (static_cast<int>(clips.size()) < nonzero_splits) {
        throw std::invalid_argument("fewer clips (" + std::to_string(clips.size()) +
                                    ") than splits (" + std::to_string(nonzero_splits) + ")");
    }

    // Largest-remainder apportionment of clip counts.
    const int n = static_cast<int>(clips.size());
    int counts[3];
    double remainders[3];
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double quota = frac[s] * n;
        counts[s] = static_cast<int>(std::floor(quota));
        remainders[s] = quota - counts[s];
        assigned += counts[s];
    }
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (int i = 0; assigned < n; ++i) {
        counts[order[i % 3]] += 1;
        assigned += 1;
    }

    const std::vector<ClipPaths> shuffled = shuffled_clips(clips, seed);
    static const char* kTags[3] = {"train", "val", "test"};
    DatasetManifest m;
    m.scale = scale;
    m.qp = qp;
    m.encoder_version = encoder_version;
    m.seed = seed;
    int pos = 0;
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < counts[s]; ++i, ++pos) {
            const ClipPaths& c = shuffled[pos];
            m.clips.push_back({c.id, c.y_dir, c.x_dir, c.z_dir, c.frame_count, kTags[s]});
        }
    }
    m.validate();
    return m;
}

std::vector<DatasetManifest> build_kfold_manifests(const std::vector<ClipPaths>& clips, int k,
                                                   std::uint64_t seed, int scale, int qp,
                                                   const std::string& encoder_version) {
    check_unique_ids(clips);
    if (k < 2) throw std::invalid_argument("k-fold requires k >= 2");
    if (static_cast<int>(clips.size()) < k) {
        throw std::invalid_argument("fewer clips (" + std::to_string(clips.size()) + ") than folds (" +
                                    std::to_string(k) + ")");
    }
    const std::vector<ClipPaths> shuffled = shuffled_clips(clips, seed);
    std::vector<DatasetManifest> manifests;
    manifests.reserve(static_cast<std::size_t>(k));
    for (int fold = 0; fold < k; ++fold) {
        DatasetManifest m;
        m.scale = scale;
        m.qp = qp;
        m.encoder_version = encoder_version;
        m.seed = seed;
        for (std::size_t i = 0; i < shuffled.size(); ++i) {
            const ClipPaths& c = shuffled[i];
            const bool in_fold = static_cast<int>(i) % k == fold;
            m.clips.push_back(
                {c.id, c.y_dir, c.x_dir, c.z_dir, c.frame_count, in_fold ? "test" : "train"});
        }
        m.validate();
        manifests.push_back(std::move(m));
    }
    return manifests;
}

}  // namespace dsvr::media
