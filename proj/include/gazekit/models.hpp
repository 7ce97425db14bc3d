#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gazekit/layers.hpp"

namespace gazekit {

// Networks regress angles scaled by 1/kAngleScale so outputs live near
// [-1, 1]; losses and all public APIs stay in degrees.
inline constexpr double kAngleScale = 60.0;

struct BackboneConfig {
    int depth = 34;  // one of 10, 18, 34, 56, 101
    int in_channels = 1;
};

// Residual convolutional backbone ending in a global-average-pooled feature
// vector: 512 wide for basic-block depths, 2048 for the bottleneck depth.
class Backbone {
public:
    Backbone(const BackboneConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& x, bool train) { return net_.forward(x, train); }
    Tensor backward(const Tensor& dfeat) { return net_.backward(dfeat); }
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
        net_.collect_params(prefix, out);
    }
    int feature_dim() const { return feature_dim_; }

private:
    Sequential net_;
    int feature_dim_ = 0;
};

struct HgdConfig {
    int backbone_depth = 34;
    int face_channels = 1;
    int eye_channels = 1;
    int gaze_outputs = 2;     // 2 (SEM) or 4 (dual-eye)
    int lda_dim = 0;          // appended to the fusion input when > 0
    bool use_face_branch = true;
    bool classifier = false;  // 9-way zone logits instead of angle regression
    uint64_t init_seed = 1;

    int output_width() const { return classifier ? 9 : gaze_outputs; }
    int fusion_input_width() const { return (use_face_branch ? 128 : 64) + lda_dim; }
};

struct FaceForward {
    Tensor head_feature;  // (N, 64)
    Tensor head_pred;     // (N, 2), scaled angles
};

// Head-pose-aware gaze detector: a face branch regressing head pose whose
// 64-unit penultimate feature is fused with the eye branch's 64-unit hidden
// feature (optionally plus an LDA vector) through 128 -> 64 -> output layers.
class HgdModel {
public:
    explicit HgdModel(const HgdConfig& cfg);

    FaceForward forward_face(const Tensor& face, bool train);
    Tensor forward_gaze(const Tensor& eye, const Tensor& head_feature,
                        const Tensor* lda_vec, bool train);

    // Backward through the whole graph. dhead_pred may be empty (no head
    // task); set freeze_face to keep the face branch untouched (its forward
    // must then have run in eval mode).
    void backward(const Tensor& dgaze_pred, const Tensor& dhead_pred, bool freeze_face);

    // Backward of the head task alone (explicit stage 1; no gaze forward ran).
    void backward_head_only(const Tensor& dhead_pred);

    void collect_params(std::vector<ParamRef>& out);             // everything
    void collect_face_params(std::vector<ParamRef>& out);        // face branch only
    void collect_gaze_params(std::vector<ParamRef>& out);        // eye branch + fusion

    const HgdConfig& config() const { return cfg_; }

private:
    HgdConfig cfg_;
    std::unique_ptr<Backbone> face_bb_;
    std::unique_ptr<Linear> face_fc1_;  // feature_dim -> 64
    std::unique_ptr<ReLU> face_relu_;
    std::unique_ptr<Linear> face_fc2_;  // 64 -> 2
    Backbone eye_bb_;
    Linear gaze_fc1_;  // feature_dim -> 64 ("FC-3" hidden feature)
    ReLU gaze_relu_;
    Linear fus1_;  // fusion_input_width -> 64
    ReLU fus_relu_;
    Linear fus2_;  // 64 -> output_width

    int last_lda_dim_ = 0;
    int last_batch_ = 0;
};

struct NoHpConfig {
    int backbone_depth = 34;
    int eye_channels = 1;
    uint64_t init_seed = 1;
};

struct LandmarkForward {
    Tensor coords;   // (N, 32), normalized [0, 1] image units
    Tensor feature;  // (N, 200), the penultimate hidden feature
};

// Eye-landmark detector: backbone -> 200-unit feature -> 32 coordinates.
class LandmarkDetector {
public:
    explicit LandmarkDetector(const NoHpConfig& cfg);
    LandmarkForward forward(const Tensor& eye, bool train);
    // dcoords and/or dfeature (either may be empty).
    void backward(const Tensor& dcoords, const Tensor& dfeature);
    void collect_params(std::vector<ParamRef>& out);

private:
    Backbone bb_;
    Linear fc1_;  // feature_dim -> 200
    ReLU relu_;
    Linear fc2_;  // 200 -> 32
};

struct AuxForward {
    Tensor pred;  // (N, 2), scaled angles
    Tensor tap;   // (N, 200), second 200-unit layer activation
};

// Gaze / head-pose module: five FC layers 200, 200, 100, 50, 2 consuming the
// detector's 200-unit feature; the tap is the second 200-unit activation.
class AuxModule {
public:
    explicit AuxModule(uint64_t init_seed);
    AuxForward forward(const Tensor& feature200, bool train);
    Tensor backward(const Tensor& dpred, const Tensor& dtap);  // returns dfeature
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

private:
    Linear l1_, l2_, l3_, l4_, l5_;
    ReLU r1_, r2_, r3_, r4_;
};

// Final gaze model: five FC layers 600, 300, 100, 32, 2 over the 600-wide
// concatenation (detector feature, gaze tap, head tap).
class FinalGazeModel {
public:
    explicit FinalGazeModel(uint64_t init_seed);
    Tensor forward(const Tensor& concat600, bool train);
    Tensor backward(const Tensor& dpred);
    void collect_params(std::vector<ParamRef>& out);

private:
    Sequential net_;
};

// Checkpoint: binary parameter blob plus a JSON sidecar (config echo,
// parameter count, content hash, training seed) at <path>.json.
void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params,
                     const std::string& config_json, uint64_t seed);
void load_checkpoint(const std::string& path, const std::vector<ParamRef>& params);
std::string read_checkpoint_config(const std::string& path);

// FNV-1a content hash over all parameter bytes, hex encoded.
std::string params_hash(const std::vector<ParamRef>& params);

}  // namespace gazekit
