#include "dsvr/train/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsvr::train {

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::kStage1: return "1";
        case Stage::kStage2: return "2";
        case Stage::kFinetune: return "finetune";
    }
    throw std::logic_error("stage_name: invalid stage");
}

Stage stage_from_string(const std::string& s) {
    if (s == "1") return Stage::kStage1;
    if (s == "2") return Stage::kStage2;
    if (s == "finetune") return Stage::kFinetune;
    throw std::invalid_argument("TrainingConfig: stage must be one of 1, 2, finetune (got '" + s +
                                "')");
}

void TrainingConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("TrainingConfig: iterations must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainingConfig: batch_size must be >= 1");
    if (patch_size < 8) throw std::invalid_argument("TrainingConfig: patch_size must be >= 8");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainingConfig: lr must be > 0");
    if (checkpoint_cadence < 0) {
        throw std::invalid_argument("TrainingConfig: checkpoint_cadence must be >= 0");
    }
    if (eval_cadence < 0) throw std::invalid_argument("TrainingConfig: eval_cadence must be >= 0");
}

nlohmann::json TrainingConfig::to_json() const {
    return nlohmann::json{{"stage", stage_name(stage)},
                          {"iterations", iterations},
                          {"batch_size", batch_size},
                          {"patch_size", patch_size},
                          {"lr", lr},
                          {"seed", seed},
                          {"augment", augment},
                          {"cosine_lr", cosine_lr},
                          {"unfreeze_sensing", unfreeze_sensing},
                          {"checkpoint_cadence", checkpoint_cadence},
                          {"eval_cadence", eval_cadence},
                          {"resume_from", resume_from}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("TrainingConfig: expected a JSON object");
    TrainingConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "stage") {
            cfg.stage = value.is_number()
                            ? stage_from_string(std::to_string(value.get<int>()))
                            : stage_from_string(value.get<std::string>());
        } else if (key == "iterations") {
            cfg.iterations = value.get<int>();
        } else if (key == "batch_size") {
            cfg.batch_size = value.get<int>();
        } else if (key == "patch_size") {
            cfg.patch_size = value.get<int>();
        } else if (key == "lr") {
            cfg.lr = value.get<double>();
        } else if (key == "seed") {
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "augment") {
            cfg.augment = value.get<bool>();
        } else if (key == "cosine_lr") {
            cfg.cosine_lr = value.get<bool>();
        } else if (key == "unfreeze_sensing") {
            cfg.unfreeze_sensing = value.get<bool>();
        } else if (key == "checkpoint_cadence") {
            cfg.checkpoint_cadence = value.get<int>();
        } else if (key == "eval_cadence") {
            cfg.eval_cadence = value.get<int>();
        } else if (key == "resume_from") {
            cfg.resume_from = value.get<std::string>();
        } else {
            throw std::invalid_argument("TrainingConfig: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

void TrainLog::append(const TrainLogRow& row) {
    if (!rows_.empty() && row.step <= rows_.back().step) {
        throw std::invalid_argument("TrainLog: step indices must be strictly increasing (got " +
                                    std::to_string(row.step) + " after " +
                                    std::to_string(rows_.back().step) + ")");
    }
    rows_.push_back(row);
}

namespace {

// %.9g round-trips float32-valued losses; %.12g keeps double metrics stable.
std::string field(double v, const char* fmt) {
    if (std::isnan(v)) return "";
    char buf[48];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

double parse_field(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

}  // namespace

void TrainLog::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("TrainLog: cannot open '" + path + "' for writing");
    out << "step,loss,psnr,ssim,wall_ms\n";
    for (const auto& r : rows_) {
        out << r.step << ',' << field(r.loss, "%.9g") << ',' << field(r.psnr, "%.12g") << ','
            << field(r.ssim, "%.12g") << ',' << r.wall_ms << '\n';
    }
    if (!out) throw std::runtime_error("TrainLog: write failed for '" + path + "'");
}

TrainLog TrainLog::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("TrainLog: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "step,loss,psnr,ssim,wall_ms") {
        throw std::runtime_error("TrainLog: '" + path + "' has an unexpected header");
    }
    TrainLog log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        TrainLogRow row;
        std::getline(ss, cell, ',');
        row.step = std::stoll(cell);
        std::getline(ss, cell, ',');
        row.loss = parse_field(cell);
        std::getline(ss, cell, ',');
        row.psnr = parse_field(cell);
        std::getline(ss, cell, ',');
        row.ssim = parse_field(cell);
        std::getline(ss, cell, ',');
        row.wall_ms = std::stoll(cell);
        log.append(row);
    }
    return log;
}

}  // namespace dsvr::train
