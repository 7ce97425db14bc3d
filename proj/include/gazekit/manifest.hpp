#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/image.hpp"

namespace gazekit {

using PointList = std::vector<std::pair<double, double>>;

// One capture. Images are stored as paths relative to the manifest directory
// and loaded on demand; per-eye gaze labels are independent (vergence) and
// are never averaged anywhere in the data path.
struct Sample {
    std::string subject_id;
    std::string camera_id;
    std::string face_path;
    std::string left_eye_path;
    std::string right_eye_path;
    AnglePair head;
    AnglePair gaze_left;
    AnglePair gaze_right;
    std::optional<AnglePair> eye_left_in_head;
    std::optional<AnglePair> eye_right_in_head;
    std::optional<PointList> landmarks;        // face fiducials, pixel coords
    std::optional<PointList> left_landmarks;   // 16 eye landmarks, crop coords
    std::optional<PointList> right_landmarks;
    std::optional<std::string> illumination;   // "day" / "night"
    std::string split = "train";
    bool gaze_duplicated = false;  // one shared gaze label copied to both eyes
};

struct SampleSet {
    std::vector<Sample> samples;
    std::string manifest_path;
    std::string root_dir;  // directory image paths are relative to
    std::string split_tag;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    Image load_face(const Sample& s) const;
    Image load_left_eye(const Sample& s) const;
    Image load_right_eye(const Sample& s) const;

    std::set<std::string> subjects() const;
    // Samples carrying the given split tag, same root.
    SampleSet with_split(const std::string& tag) const;
};

inline constexpr int kManifestVersion = 1;

// Line-delimited manifest: a version header line followed by one JSON record
// per sample. Angles in degrees. Missing per-eye gaze labels fall back to a
// shared "gaze" field, duplicated into both eyes and flagged.
SampleSet load_manifest(const std::string& path);

// Writes the set in the exact on-disk form load_manifest reads; a save of a
// loaded set reproduces the original bytes.
void save_manifest(const SampleSet& set, const std::string& path);

// Cross-subject partition: held-out subjects go to test, the rest to train.
// Order preserved within each side. Unknown or empty held_out is an error.
std::pair<SampleSet, SampleSet> split_cross_subject(
    const SampleSet& set, const std::set<std::string>& held_out);

// Deterministic shuffled batch order for one epoch: every index appears
// exactly once; the final partial batch is emitted.
std::vector<std::vector<int>> batch_indices(int n, int batch_size, uint64_t seed);

}  // namespace gazekit
