#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsvr/eval/metrics.hpp"
#include "dsvr/media/codec.hpp"
#include "dsvr/media/manifest.hpp"

namespace dsvr::eval {

/// Per-clip quality numbers for one evaluation pass.
struct ClipMetrics {
    std::string clip_id;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Aggregate report over a manifest split: per-clip rows plus split means.
struct MetricsReport {
    std::vector<ClipMetrics> clips;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    nlohmann::json meta;  ///< provenance: checkpoint, split, dataset attributes
};

/// Restores every clip of `split` with the checkpointed model and scores the
/// result against the ground-truth frames. The checkpoint scale must match
/// the dataset scale.
MetricsReport evaluate_checkpoint(const std::string& ckpt_path,
                                  const media::DatasetManifest& manifest,
                                  const std::string& split);

/// Scores plain bicubic upsampling of the degraded frames — the reference
/// every learned result has to beat.
MetricsReport bicubic_baseline(const media::DatasetManifest& manifest, const std::string& split);

/// One row of a parameter sweep: the swept value and the aggregate PSNR.
struct SweepRow {
    int value = 0;
    double psnr = 0.0;
};

/// Re-encodes the ground-truth frames of `split` at each QP, restores them
/// with the same checkpoint and reports one aggregate PSNR per QP. Degraded
/// trees are materialised under `work_dir`/qp_<qp>/.
std::vector<SweepRow> run_qp_sweep(const std::string& ckpt_path,
                                   const media::DatasetManifest& manifest,
                                   const std::string& split, const std::vector<int>& qps,
                                   const std::string& work_dir, const media::CodecTool& codec);

/// Paired comparison of a degradation-aware checkpoint against its ablated
/// twin. Both checkpoints must agree on every model hyperparameter except
/// the degradation-map switch and on the embedded training budgets/seeds.
struct AblationReport {
    MetricsReport with_dfm;
    MetricsReport without_dfm;
    double delta_psnr = 0.0;  ///< with minus without
    double delta_ssim = 0.0;
};

AblationReport run_ablation(const std::string& ckpt_with, const std::string& ckpt_without,
                            const media::DatasetManifest& manifest, const std::string& split);

/// Evaluates one checkpoint per temporal-block depth `n`. Every entry's
/// checkpoint must have been trained with dmm_blocks == n and the configs
/// must agree on everything else.
std::vector<SweepRow> run_n_sweep(const std::vector<std::pair<int, std::string>>& entries,
                                  const media::DatasetManifest& manifest,
                                  const std::string& split);

/// Correlates predicted degradation maps against realised restoration error
/// over every frame of `split`, tiled into patch x patch cells. Pairs from
/// all frames are pooled into a single Pearson coefficient.
CorrelationRecord dfm_correlation(const std::string& ckpt_path,
                                  const media::DatasetManifest& manifest,
                                  const std::string& split, int patch);

/// CSV/JSON writers shared by the command-line tools. Columns are fixed:
///   metrics.csv  clip_id,psnr_db,ssim
///   sweep csv    <param>,psnr_db
///   corr.csv     patch_x,patch_y,dfm_mean,err_mean
void write_metrics_csv(const std::string& path, const MetricsReport& report);
void write_sweep_csv(const std::string& path, const std::string& param,
                     const std::vector<SweepRow>& rows);
void write_corr_csv(const std::string& path, const CorrelationRecord& record);
void write_summary_json(const std::string& path, const nlohmann::json& summary);

}  // namespace dsvr::eval
