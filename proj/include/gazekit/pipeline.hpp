#pragma once

#include <optional>
#include <vector>

#include "gazekit/manifest.hpp"
#include "gazekit/merge.hpp"
#include "gazekit/preprocess.hpp"
#include "gazekit/tensor.hpp"

namespace gazekit {

// Sample-to-tensor bridge. A "unit" is one network input: dual-eye
// strategies yield one unit per sample with 4 targets; SEM yields two units
// per sample (left and right), 2 targets each. Targets stay in degrees.
class Pipeline {
public:
    Pipeline(const SampleSet& set, EyeMerge strategy, PreprocOptions pre);

    int unit_count() const { return static_cast<int>(units_.size()); }
    const SampleSet& set() const { return set_; }
    EyeMerge strategy() const { return strategy_; }

    InputUnit make_unit(int unit_idx) const;

    // Sample index and SEM side backing a unit.
    std::pair<int, EyeSide> unit_source(int unit_idx) const { return units_[unit_idx]; }

    // Tensor channel/shape info probed from the first unit.
    int eye_channels() const;
    int face_channels() const;

    // Enables an in-memory cache of prepared units (used when the set is
    // small enough to hold).
    void set_cache_enabled(bool on) const;

private:
    SampleSet set_;  // owned copy: metadata only, images load lazily
    EyeMerge strategy_;
    PreprocOptions pre_;
    std::vector<std::pair<int, EyeSide>> units_;
    mutable std::vector<std::optional<InputUnit>> cache_;
    mutable bool cache_enabled_ = false;
};

struct Batch {
    Tensor face;     // (N, C, H, W)
    Tensor eye;      // (N, C, H, W)
    Tensor targets;  // (N, 2 or 4), degrees
    Tensor head;     // (N, 2), degrees
    Tensor lda;      // (N, k) or empty
    std::vector<int> unit_indices;
};

Batch assemble_batch(const Pipeline& pipe, const std::vector<int>& unit_indices);

// Landmark batch for the detector: eye crops plus 32 normalized coordinates.
struct LandmarkBatch {
    Tensor eye;     // (N, C, H, W)
    Tensor coords;  // (N, 32) in [0, 1] image units
    Tensor gaze;    // (N, 2) degrees, this eye's camera-frame gaze
    Tensor head;    // (N, 2) degrees
};

// Units are (sample, side) pairs over the whole set; samples without eye
// landmarks are rejected.
class LandmarkPipeline {
public:
    LandmarkPipeline(const SampleSet& set, PreprocOptions pre);
    int unit_count() const { return static_cast<int>(units_.size()); }
    LandmarkBatch make_batch(const std::vector<int>& unit_indices) const;
    int eye_channels() const;
    int crop_height() const { return crop_h_; }
    int crop_width() const { return crop_w_; }

private:
    SampleSet set_;
    PreprocOptions pre_;
    std::vector<std::pair<int, EyeSide>> units_;
    int crop_h_ = 0, crop_w_ = 0;
};

}  // namespace gazekit
