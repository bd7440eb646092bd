#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace dsvr::train {

/// Which optimization phase a run executes. Stage 1 fits the interpolation
/// pair against the bicubic references; stage 2 freezes it and trains the
/// restoration network; finetune continues stage-2 optimization on a new
/// degradation domain.
enum class Stage { kStage1 = 1, kStage2 = 2, kFinetune = 3 };

std::string stage_name(Stage s);
Stage stage_from_string(const std::string& s);

/// Optimization hyper-parameters shared by all stages. JSON parsing is
/// strict: unknown keys are rejected so typos cannot silently fall back to
/// defaults.
struct TrainingConfig {
    Stage stage = Stage::kStage1;
    int iterations = 1000;       ///< optimizer steps for this run
    int batch_size = 8;
    int patch_size = 32;         ///< square crop edge in input (low-res) pixels
    double lr = 2e-4;
    std::uint64_t seed = 0;
    bool augment = true;         ///< random horizontal flip + 90-degree rotations
    bool cosine_lr = false;      ///< cosine decay; default is a constant rate
    bool unfreeze_sensing = false;  ///< stage 2/finetune: keep fb1/fb2 trainable
                                    ///< and add the interpolation loss term
    int checkpoint_cadence = 0;  ///< save every k steps (0 = final only)
    int eval_cadence = 0;        ///< validation metrics every k steps (0 = off)
    std::string resume_from;     ///< checkpoint path to continue from (optional)

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

/// One log row. `loss` is the training loss of that step; `psnr`/`ssim` are
/// validation metrics and are NaN on steps without an evaluation pass.
struct TrainLogRow {
    long long step = 0;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double psnr = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
    long long wall_ms = 0;  ///< milliseconds since the run started
};

/// Append-only training log with strictly increasing step indices,
/// serializable as CSV (step,loss,psnr,ssim,wall_ms — absent metrics are
/// empty fields).
class TrainLog {
public:
    void append(const TrainLogRow& row);
    const std::vector<TrainLogRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    const TrainLogRow& back() const { return rows_.back(); }

    void save_csv(const std::string& path) const;
    static TrainLog load_csv(const std::string& path);

private:
    std::vector<TrainLogRow> rows_;
};

}  // namespace dsvr::train
