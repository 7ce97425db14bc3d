#pragma once

#include <array>
#include <string>
#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/image.hpp"
#include "gazekit/manifest.hpp"
#include "gazekit/merge.hpp"
#include "gazekit/rng.hpp"

namespace gazekit {

// All scene lengths are in interocular units (eye-center distance = 1).
// Orthographic projection: u = cx + s*x, v = cy - s*y (camera +x renders
// toward image right, +y up).

struct PhotometricParams {
    double brightness = 0.0;   // additive offset
    double contrast = 1.0;     // gain around mid-gray
    double noise_sigma = 0.0;  // additive Gaussian noise
};

struct SamplingRanges {
    double head_yaw = 30.0;   // degrees, symmetric about 0
    double head_pitch = 20.0;
    double eye_yaw = 30.0;    // eye-in-head limits
    double eye_pitch = 20.0;
    double target_dist_min = 4.0;   // interocular units
    double target_dist_max = 20.0;
    double aperture_min = 0.6;
    double aperture_max = 1.0;
    double brightness_jitter = 0.18;
    double contrast_min = 0.85;
    double contrast_max = 1.15;
    double noise_sigma_max = 0.02;
};

struct SceneParams {
    AnglePair head;
    Vec3 target_point;       // camera frame
    Vec3 eye_center_left;    // camera frame, from rotating the canonical set
    Vec3 eye_center_right;
    AnglePair gaze_left;     // camera-frame per-eye gaze toward target_point
    AnglePair gaze_right;
    AnglePair eye_left_in_head;
    AnglePair eye_right_in_head;
    double aperture = 1.0;   // eyelid openness in [0.3, 1]
    PhotometricParams photo;
    uint64_t rng_seed = 0;   // per-sample stream; render noise derives from it
};

// 8 interior-margin points followed by 8 iris-boundary points, pixel coords.
struct LandmarkSet {
    std::array<std::pair<double, double>, 8> interior_margin;
    std::array<std::pair<double, double>, 8> iris;
    std::array<bool, 8> iris_occluded{};  // point falls outside the margin

    PointList flattened() const;
};

struct EyeRender {
    Image image;
    LandmarkSet landmarks;
    AnglePair gaze;         // camera frame
    AnglePair eye_in_head;
    bool occluded = false;  // iris center hidden; caller should resample
};

// Builds the deterministic scene for a given draw of head pose, mid-eye
// direction and fixation distance; per-eye gaze and vergence follow from
// the target-point geometry.
SceneParams make_scene(const AnglePair& head, const AnglePair& eye_mid,
                       double target_dist, double aperture,
                       const PhotometricParams& photo, uint64_t rng_seed);

// Draws a scene uniformly within the ranges, rejection-resampling draws whose
// per-eye directions leave the limits or whose iris is occluded. Throws a
// configuration error when the rejection rate exceeds 99%.
SceneParams sample_scene(Rng& rng, const SamplingRanges& ranges);

EyeRender render_eye(const SceneParams& scene, EyeSide side, int height, int width);

Image render_face(const SceneParams& scene, int size);

// Projected pixel positions of the canonical fiducials on the face image:
// [left_eye, right_eye, nose, mouth_left, mouth_right, chin, forehead].
PointList face_fiducials(const SceneParams& scene, int size);

// Canonical fiducial set in the head frame (same order as face_fiducials).
const std::array<Vec3, 7>& canonical_fiducials();

// Pixels per interocular unit on a face image of the given size.
double face_scale_px(int size);
// Projection center of the face image.
std::pair<double, double> face_center_px(int size);

// Hook applied to every image before it is written (identity by default);
// the insertion point for external photo-realism refiners.
using ImageRefiner = Image (*)(const Image&);

struct GenConfig {
    int n = 0;
    uint64_t seed = 0;
    SamplingRanges ranges;
    int face_size = 224;
    int eye_height = 64;
    int eye_width = 96;
    double train_fraction = 0.9;
    int subjects = 50;
    ImageRefiner refiner = nullptr;
};

// Writes n samples (face + both eyes as PNG, labels + landmarks in the
// manifest) under out_dir, plus a config echo. Fully reproducible from the
// seed: sample i derives its own rng stream from (seed, i). Returns the
// manifest path.
std::string generate_dataset(const GenConfig& cfg, const std::string& out_dir);

}  // namespace gazekit
