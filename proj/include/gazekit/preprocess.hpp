#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gazekit/geometry.hpp"
#include "gazekit/image.hpp"
#include "gazekit/manifest.hpp"

namespace gazekit {

struct HogConfig {
    std::vector<int> cell_sizes = {8, 16, 32};  // one pyramid level per entry
    int bins = 9;                               // unsigned orientations over [0, pi)
    double epsilon = 1e-6;                      // L2 normalization guard
};

struct CropConfig {
    int face_size = 224;
    int eye_height = 64;
    int eye_width = 96;
    // Eye-crop half-width as a fraction of the interocular distance.
    double eye_crop_scale = 0.35;
};

struct CropResult {
    Image face;
    Image left_eye;
    Image right_eye;
};

// Crops face and eye regions from a frame given landmarks. Landmark layout:
// index 0 = left eye center, index 1 = right eye center; any further points
// only widen the face box. Out-of-frame crop windows use replicate-edge fill.
CropResult crop_regions(const Image& image, const PointList& landmarks,
                        const CropConfig& cfg = {});

// Multilevel HOG energy channels: per level, each cell's dominant-orientation
// energy after per-cell L2 normalization, upsampled back to input resolution.
// One channel per level, values in [0, 1]; invariant to affine intensity
// changes a*I+b with a > 0.
MultiImage mhog_channels(const Image& image, const HogConfig& cfg = {});

// Flat mHoG descriptor (all per-cell normalized histograms, all levels).
std::vector<float> mhog_descriptor(const Image& image, const HogConfig& cfg = {});

struct LdaTransform {
    Eigen::MatrixXd projection;  // descriptor_dim x k, orthonormal columns
    Eigen::MatrixXd centroids;   // classes x k
    double bin_width_deg = 10.0;
    int descriptor_dim = 0;

    std::vector<float> apply(const std::vector<float>& descriptor) const;

    void save(const std::string& path) const;
    static LdaTransform load(const std::string& path);
};

// Fisher discriminant fit on gaze pseudo-classes: labels quantized on a
// bin_width grid, within-scatter shrinkage-regularized (lambda on the
// diagonal), k = min(classes - 1, 32) orthonormalized directions.
LdaTransform fit_lda(const std::vector<std::vector<float>>& descriptors,
                     const std::vector<AnglePair>& gaze_labels,
                     double bin_width_deg = 10.0, double lambda = 1e-3);

// Channel concatenation (image channels first); inputs are expected in
// [0, 1] and are clamped to that range.
MultiImage assemble_input(const MultiImage& image, const MultiImage& extra_channels,
                          bool use_mhog);

// Sample -> model-ready tensors for one eye/face pair.
struct PreprocOptions {
    bool use_mhog = false;
    HogConfig hog;
    const LdaTransform* lda = nullptr;  // optional fusion-level feature
};

MultiImage to_multi(const Image& img);
MultiImage prepare_image(const Image& img, const PreprocOptions& opts);

}  // namespace gazekit
