#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gazekit/models.hpp"
#include "gazekit/pipeline.hpp"

namespace gazekit {

struct ZoneGrid {
    double yaw_min = -60.0, yaw_max = 60.0;
    double pitch_min = -30.0, pitch_max = 30.0;
    int rows = 3, cols = 3;

    // 1-based zone id, row-major from top-left (highest pitch band first,
    // most negative yaw first). Labels outside the grid clamp to the nearest
    // zone; *outside is set when that happens.
    int zone_of(const AnglePair& g, bool* outside = nullptr) const;
    int zone_count() const { return rows * cols; }
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    double base_lr = 1e-4;  // step size at epoch e: base_lr * 0.1^(e/30)
    double beta = 0.3;      // head-loss weakening factor
    uint64_t seed = 1;
    double wing_w = 10.0;
    double wing_eps = 2.0;
    bool head_task = true;         // ablation axis: head-pose loss on/off
    double stop_train_aem = 0.0;   // early stop when train AEM falls below (0 = off)
    int val_every = 1;             // validation cadence in epochs (0 = never)
    // Explicit stage-1 convergence: stop when val head AEM fails to improve
    // by more than plateau_improvement for plateau_patience epochs.
    double plateau_improvement = 0.05;
    int plateau_patience = 10;
    ZoneGrid zones;  // classifier variant
};

double lr_for_epoch(double base_lr, int epoch);

struct EpochRecord {
    int epoch = 0;
    std::string stage;
    double lr = 0.0;
    double gaze_loss = NAN;
    double head_loss = NAN;
    double total_loss = NAN;
    double train_aem = NAN;
    double val_aem = NAN;
    double val_vem = NAN;
    double landmark_px = NAN;  // stage-A validation landmark error
    double accuracy = NAN;     // classifier validation accuracy
    int out_of_grid = 0;       // classifier labels clamped into the grid
    double wall_seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    // Stage starts after the first: (first epoch index of the new stage, label).
    std::vector<std::pair<int, std::string>> stage_boundaries;
    std::vector<std::string> warnings;

    void save_jsonl(const std::string& path) const;
    static TrainHistory load_jsonl(const std::string& path);
};

class Adam {
public:
    explicit Adam(std::vector<ParamRef> params, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void zero_grad();
    void step(double lr);

private:
    std::vector<ParamRef> params_;  // only refs with gradients
    std::vector<std::vector<float>> m_, v_;
    double beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

// Joint multi-task training: per batch, loss = gaze + beta * head, one update
// over both branches. beta = 0 (or head_task = false) degenerates to
// gaze-only training with bit-identical updates.
TrainHistory train_implicit(HgdModel& model, const Pipeline& train,
                            const Pipeline* val, const TrainConfig& cfg);

// Multi-stage training: stage 1 fits the face branch on head loss until the
// validation head AEM plateaus (or the epoch cap), stage 2 freezes it and
// trains the eye branch + fusion on gaze loss from the frozen head features.
TrainHistory train_explicit(HgdModel& model, const Pipeline& train,
                            const Pipeline& val, const TrainConfig& cfg);

struct NoHpStack {
    LandmarkDetector detector;
    AuxModule gaze_module;
    AuxModule head_module;
    FinalGazeModel final_model;

    explicit NoHpStack(const NoHpConfig& cfg)
        : detector(cfg),
          gaze_module(Rng::splitmix64(cfg.init_seed ^ 0x67617aull)),
          head_module(Rng::splitmix64(cfg.init_seed ^ 0x686561ull)),
          final_model(Rng::splitmix64(cfg.init_seed ^ 0x66696eull)) {}

    void collect_params(std::vector<ParamRef>& out);
};

// Three-stage pipeline: A) landmark detector on synthetic eye crops (wing
// loss on normalized coordinates), B) detector frozen, gaze/head modules on
// synthetic labels from its 200-d feature, C) the 600-d concatenation trains
// the final gaze model on the target set; frozen parts stay bit-identical.
TrainHistory train_nohp(NoHpStack& stack, const SampleSet& synth,
                        const SampleSet& target, const TrainConfig& cfg,
                        const PreprocOptions& pre);

// 9-way zone classifier variant of HGD (cross-entropy on zone ids derived
// from the unit's gaze label via the grid).
TrainHistory train_classifier(HgdModel& model, const Pipeline& train,
                              const Pipeline* val, const TrainConfig& cfg);

// Frozen detector features for a SEM pipeline, batched eval-mode forward.
Tensor detector_features(LandmarkDetector& det, const Pipeline& pipe,
                         int batch_size = 64);

// Gaze predictions in degrees for every unit of the pipeline (eval mode).
std::vector<std::vector<AnglePair>> predict_hgd(HgdModel& model, const Pipeline& pipe,
                                                int batch_size = 64);

std::vector<AnglePair> predict_nohp(NoHpStack& stack, const Pipeline& pipe,
                                    int batch_size = 64);

}  // namespace gazekit
