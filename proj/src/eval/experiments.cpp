#include "dsvr/eval/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dsvr/media/bicubic.hpp"
#include "dsvr/media/clip.hpp"
#include "dsvr/media/patches.hpp"
#include "dsvr/media/synthesize.hpp"
#include "dsvr/model/pipeline.hpp"

namespace dsvr::eval {
namespace {

namespace fs = std::filesystem;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<media::ManifestEntry> split_entries(const media::DatasetManifest& manifest,
                                                const std::string& split) {
    auto entries = manifest.split(split);
    if (entries.empty()) {
        throw std::invalid_argument("evaluation: split '" + split + "' has no clips");
    }
    return entries;
}

nlohmann::json dataset_meta(const media::DatasetManifest& manifest, const std::string& split) {
    return {{"split", split},
            {"scale", manifest.scale},
            {"qp", manifest.qp},
            {"encoder_version", manifest.encoder_version},
            {"dataset_seed", manifest.seed}};
}

void finalize(MetricsReport& report) {
    double sp = 0.0, ss = 0.0;
    for (const auto& c : report.clips) {
        sp += c.psnr;
        ss += c.ssim;
    }
    const double n = static_cast<double>(report.clips.size());
    report.mean_psnr = sp / n;
    report.mean_ssim = ss / n;
}

ClipMetrics score_clip(const std::string& id, const std::vector<nn::Tensor4<float>>& pred,
                       const std::vector<nn::Tensor4<float>>& truth) {
    ClipMetrics m;
    m.clip_id = id;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        m.psnr += psnr(pred[t], truth[t]);
        m.ssim += ssim(pred[t], truth[t]);
    }
    const double n = static_cast<double>(truth.size());
    m.psnr /= n;
    m.ssim /= n;
    return m;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

MetricsReport evaluate_checkpoint(const std::string& ckpt_path,
                                  const media::DatasetManifest& manifest,
                                  const std::string& split) {
    auto loaded = model::load_model(ckpt_path);
    if (loaded.config.scale != manifest.scale) {
        throw std::invalid_argument(
            "evaluation: checkpoint model scale " + std::to_string(loaded.config.scale) +
            " does not match dataset scale " + std::to_string(manifest.scale));
    }
    MetricsReport report;
    for (const auto& entry : split_entries(manifest, split)) {
        const auto clip = media::load_triple(entry, manifest.scale);
        const auto restored = model::restore_clip(loaded.params, loaded.config, clip.x);
        report.clips.push_back(score_clip(entry.id, restored.frames, clip.y));
    }
    finalize(report);
    report.meta = dataset_meta(manifest, split);
    report.meta["checkpoint"] = ckpt_path;
    report.meta["model"] = loaded.config.to_json();
    return report;
}

MetricsReport bicubic_baseline(const media::DatasetManifest& manifest, const std::string& split) {
    MetricsReport report;
    for (const auto& entry : split_entries(manifest, split)) {
        const auto clip = media::load_triple(entry, manifest.scale);
        std::vector<nn::Tensor4<float>> up;
        up.reserve(clip.x.size());
        for (const auto& frame : clip.x) {
            up.push_back(media::bicubic_resize(frame, frame.h() * manifest.scale,
                                               frame.w() * manifest.scale));
        }
        report.clips.push_back(score_clip(entry.id, up, clip.y));
    }
    finalize(report);
    report.meta = dataset_meta(manifest, split);
    report.meta["checkpoint"] = "bicubic";
    return report;
}

std::vector<SweepRow> run_qp_sweep(const std::string& ckpt_path,
                                   const media::DatasetManifest& manifest,
                                   const std::string& split, const std::vector<int>& qps,
                                   const std::string& work_dir, const media::CodecTool& codec) {
    if (qps.empty()) throw std::invalid_argument("qp sweep: no QP values given");
    const auto entries = split_entries(manifest, split);

    std::vector<media::LabeledClip> sources;
    for (const auto& entry : entries) {
        media::LabeledClip src;
        src.id = entry.id;
        src.frames = media::read_frames(entry.y_dir);
        src.frames.source_id = entry.id;
        src.split = "test";
        sources.push_back(std::move(src));
    }

    std::vector<SweepRow> rows;
    for (const int qp : qps) {
        const fs::path dir = fs::path(work_dir) / ("qp_" + std::to_string(qp));
        const auto degraded = media::synthesize_dataset(sources, dir.string(), manifest.scale, qp,
                                                        media::SplitFractions{}, manifest.seed,
                                                        codec);
        const auto report = evaluate_checkpoint(ckpt_path, degraded, "test");
        rows.push_back({qp, report.mean_psnr});
    }
    return rows;
}

AblationReport run_ablation(const std::string& ckpt_with, const std::string& ckpt_without,
                            const media::DatasetManifest& manifest, const std::string& split) {
    const auto lw = model::load_model(ckpt_with);
    const auto lo = model::load_model(ckpt_without);

    if (!(lw.config == lo.config)) {  // not the identical-arm control
        auto a = lw.config;
        auto b = lo.config;
        a.dfm_enabled = b.dfm_enabled = true;
        if (!(a == b)) {
            throw std::invalid_argument(
                "ablation: checkpoints differ in more than the degradation-map switch");
        }
        if (!lw.config.dfm_enabled || lo.config.dfm_enabled) {
            throw std::invalid_argument(
                "ablation: expected the degradation-aware checkpoint first and the ablated "
                "one second");
        }
    }
    const auto tw = lw.ckpt_config.value("training", nlohmann::json());
    const auto to = lo.ckpt_config.value("training", nlohmann::json());
    if (tw != to) {
        throw std::invalid_argument(
            "ablation: checkpoints were trained with different budgets or seeds");
    }

    AblationReport report;
    report.with_dfm = evaluate_checkpoint(ckpt_with, manifest, split);
    report.without_dfm = evaluate_checkpoint(ckpt_without, manifest, split);
    report.delta_psnr = report.with_dfm.mean_psnr - report.without_dfm.mean_psnr;
    report.delta_ssim = report.with_dfm.mean_ssim - report.without_dfm.mean_ssim;
    return report;
}

std::vector<SweepRow> run_n_sweep(const std::vector<std::pair<int, std::string>>& entries,
                                  const media::DatasetManifest& manifest,
                                  const std::string& split) {
    if (entries.empty()) throw std::invalid_argument("n sweep: no checkpoints given");
    model::ModelConfig reference;
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [n, path] = entries[i];
        const auto loaded = model::load_model(path);
        if (loaded.config.dmm_blocks != n) {
            throw std::invalid_argument("n sweep: checkpoint for n=" + std::to_string(n) +
                                        " was trained with dmm_blocks=" +
                                        std::to_string(loaded.config.dmm_blocks));
        }
        auto normalized = loaded.config;
        normalized.dmm_blocks = 0;
        if (i == 0) {
            reference = normalized;
        } else if (!(normalized == reference)) {
            throw std::invalid_argument(
                "n sweep: checkpoints differ in more than the temporal depth");
        }
        const auto report = evaluate_checkpoint(path, manifest, split);
        rows.push_back({n, report.mean_psnr});
    }
    return rows;
}

CorrelationRecord dfm_correlation(const std::string& ckpt_path,
                                  const media::DatasetManifest& manifest,
                                  const std::string& split, int patch) {
    auto loaded = model::load_model(ckpt_path);
    if (!loaded.config.dfm_enabled) {
        throw std::invalid_argument(
            "degradation correlation: the checkpoint has the degradation path disabled");
    }
    if (loaded.config.scale != manifest.scale) {
        throw std::invalid_argument(
            "degradation correlation: checkpoint model scale " +
            std::to_string(loaded.config.scale) + " does not match dataset scale " +
            std::to_string(manifest.scale));
    }

    CorrelationRecord pooled;
    pooled.patch = patch;
    for (const auto& entry : split_entries(manifest, split)) {
        const auto clip = media::load_triple(entry, manifest.scale);
        const auto restored = model::restore_clip(loaded.params, loaded.config, clip.x, true);
        for (std::size_t t = 0; t < clip.y.size(); ++t) {
            const auto err = abs_error_map(restored.frames[t], clip.y[t]);
            const auto rec = dfm_error_correlation(restored.dfm[t], err, patch);
            pooled.grid_w = rec.grid_w;
            pooled.grid_h = rec.grid_h;
            pooled.pairs.insert(pooled.pairs.end(), rec.pairs.begin(), rec.pairs.end());
        }
    }
    pooled.r = pearson(pooled.pairs, &pooled.degenerate);
    return pooled;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
    auto out = open_out(path);
    out << "clip_id,psnr_db,ssim\n";
    for (const auto& c : report.clips) {
        out << c.clip_id << ',' << fmt_g(c.psnr) << ',' << fmt_g(c.ssim) << '\n';
    }
}

void write_sweep_csv(const std::string& path, const std::string& param,
                     const std::vector<SweepRow>& rows) {
    auto out = open_out(path);
    out << param << ",psnr_db\n";
    for (const auto& row : rows) out << row.value << ',' << fmt_g(row.psnr) << '\n';
}

void write_corr_csv(const std::string& path, const CorrelationRecord& record) {
    auto out = open_out(path);
    out << "patch_x,patch_y,dfm_mean,err_mean\n";
    for (const auto& p : record.pairs) {
        out << p.patch_x << ',' << p.patch_y << ',' << fmt_g(p.dfm_mean) << ','
            << fmt_g(p.err_mean) << '\n';
    }
}

void write_summary_json(const std::string& path, const nlohmann::json& summary) {
    auto out = open_out(path);
    out << summary.dump(2) << '\n';
}

}  // namespace dsvr::eval
