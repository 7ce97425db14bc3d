#include "gazekit/manifest.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gazekit/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gazekit {

namespace {

[[noreturn]] void schema_error(int line, const std::string& what) {
    throw std::runtime_error("manifest line " + std::to_string(line) + ": " + what);
}

AnglePair parse_angles(const json& j, int line, const char* field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        schema_error(line, std::string("field '") + field + "' must be [yaw, pitch]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json angles_to_json(const AnglePair& a) { return json::array({a.yaw, a.pitch}); }

PointList parse_points(const json& j, int line, const char* field) {
    PointList pts;
    if (!j.is_array()) schema_error(line, std::string("field '") + field + "' must be a point list");
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) {
            schema_error(line, std::string("field '") + field + "' has a malformed point");
        }
        pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return pts;
}

json points_to_json(const PointList& pts) {
    json arr = json::array();
    for (const auto& [x, y] : pts) arr.push_back(json::array({x, y}));
    return arr;
}

std::string require_string(const json& rec, int line, const char* field) {
    if (!rec.contains(field)) schema_error(line, std::string("missing field '") + field + "'");
    if (!rec[field].is_string()) schema_error(line, std::string("field '") + field + "' must be a string");
    return rec[field].get<std::string>();
}

Image load_rel(const std::string& root, const std::string& rel) {
    const fs::path p = fs::path(root) / rel;
    if (!fs::exists(p)) {
        throw std::runtime_error("manifest image not found: " + p.string());
    }
    return read_png_gray(p.string());
}

}  // namespace

Image SampleSet::load_face(const Sample& s) const { return load_rel(root_dir, s.face_path); }
Image SampleSet::load_left_eye(const Sample& s) const { return load_rel(root_dir, s.left_eye_path); }
Image SampleSet::load_right_eye(const Sample& s) const { return load_rel(root_dir, s.right_eye_path); }

std::set<std::string> SampleSet::subjects() const {
    std::set<std::string> ids;
    for (const auto& s : samples) ids.insert(s.subject_id);
    return ids;
}

SampleSet SampleSet::with_split(const std::string& tag) const {
    SampleSet out;
    out.manifest_path = manifest_path;
    out.root_dir = root_dir;
    out.split_tag = tag;
    for (const auto& s : samples) {
        if (s.split == tag) out.samples.push_back(s);
    }
    return out;
}

SampleSet load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("manifest is empty (missing header): " + path);
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        schema_error(1, std::string("bad header: ") + e.what());
    }
    if (header.value("format", "") != "gazekit-manifest") {
        schema_error(1, "unrecognized format tag");
    }
    if (header.value("version", -1) != kManifestVersion) {
        schema_error(1, "unsupported manifest version");
    }

    SampleSet set;
    set.manifest_path = path;
    set.root_dir = fs::path(path).parent_path().string();
    if (set.root_dir.empty()) set.root_dir = ".";

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            schema_error(lineno, std::string("bad record: ") + e.what());
        }
        Sample s;
        s.subject_id = require_string(rec, lineno, "subject_id");
        s.camera_id = require_string(rec, lineno, "camera_id");
        s.face_path = require_string(rec, lineno, "face");
        s.left_eye_path = require_string(rec, lineno, "left_eye");
        s.right_eye_path = require_string(rec, lineno, "right_eye");
        if (!rec.contains("head")) schema_error(lineno, "missing field 'head'");
        s.head = parse_angles(rec["head"], lineno, "head");
        if (rec.contains("gaze_left") && rec.contains("gaze_right")) {
            s.gaze_left = parse_angles(rec["gaze_left"], lineno, "gaze_left");
            s.gaze_right = parse_angles(rec["gaze_right"], lineno, "gaze_right");
            s.gaze_duplicated = rec.value("gaze_duplicated", false);
        } else if (rec.contains("gaze")) {
            // Single shared label (public-dataset style): duplicate and flag.
            s.gaze_left = s.gaze_right = parse_angles(rec["gaze"], lineno, "gaze");
            s.gaze_duplicated = true;
        } else {
            schema_error(lineno, "missing field 'gaze_left'/'gaze_right' (or 'gaze')");
        }
        if (rec.contains("eye_left_in_head")) {
            s.eye_left_in_head = parse_angles(rec["eye_left_in_head"], lineno, "eye_left_in_head");
        }
        if (rec.contains("eye_right_in_head")) {
            s.eye_right_in_head = parse_angles(rec["eye_right_in_head"], lineno, "eye_right_in_head");
        }
        if (rec.contains("landmarks")) s.landmarks = parse_points(rec["landmarks"], lineno, "landmarks");
        if (rec.contains("left_landmarks")) s.left_landmarks = parse_points(rec["left_landmarks"], lineno, "left_landmarks");
        if (rec.contains("right_landmarks")) s.right_landmarks = parse_points(rec["right_landmarks"], lineno, "right_landmarks");
        if (rec.contains("illumination")) s.illumination = rec["illumination"].get<std::string>();
        s.split = require_string(rec, lineno, "split");

        for (const auto& img : {s.face_path, s.left_eye_path, s.right_eye_path}) {
            if (!fs::exists(fs::path(set.root_dir) / img)) {
                throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                         ": image not resolvable: " + img);
            }
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

void save_manifest(const SampleSet& set, const std::string& path) {
    std::ostringstream out;
    out << json{{"format", "gazekit-manifest"}, {"version", kManifestVersion}}.dump() << "\n";
    for (const auto& s : set.samples) {
        json rec;
        rec["subject_id"] = s.subject_id;
        rec["camera_id"] = s.camera_id;
        rec["face"] = s.face_path;
        rec["left_eye"] = s.left_eye_path;
        rec["right_eye"] = s.right_eye_path;
        rec["head"] = angles_to_json(s.head);
        rec["gaze_left"] = angles_to_json(s.gaze_left);
        rec["gaze_right"] = angles_to_json(s.gaze_right);
        if (s.gaze_duplicated) rec["gaze_duplicated"] = true;
        if (s.eye_left_in_head) rec["eye_left_in_head"] = angles_to_json(*s.eye_left_in_head);
        if (s.eye_right_in_head) rec["eye_right_in_head"] = angles_to_json(*s.eye_right_in_head);
        if (s.landmarks) rec["landmarks"] = points_to_json(*s.landmarks);
        if (s.left_landmarks) rec["left_landmarks"] = points_to_json(*s.left_landmarks);
        if (s.right_landmarks) rec["right_landmarks"] = points_to_json(*s.right_landmarks);
        if (s.illumination) rec["illumination"] = *s.illumination;
        rec["split"] = s.split;
        out << rec.dump() << "\n";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write manifest: " + path);
    }
    f << out.str();
}

std::pair<SampleSet, SampleSet> split_cross_subject(
    const SampleSet& set, const std::set<std::string>& held_out) {
    if (held_out.empty()) {
        throw std::invalid_argument("split_cross_subject: held_out is empty");
    }
    const auto present = set.subjects();
    for (const auto& id : held_out) {
        if (!present.count(id)) {
            throw std::invalid_argument("split_cross_subject: unknown subject '" + id + "'");
        }
    }
    SampleSet train, test;
    train.root_dir = test.root_dir = set.root_dir;
    train.manifest_path = test.manifest_path = set.manifest_path;
    train.split_tag = "train";
    test.split_tag = "test";
    for (const auto& s : set.samples) {
        (held_out.count(s.subject_id) ? test : train).samples.push_back(s);
    }
    return {std::move(train), std::move(test)};
}

std::vector<std::vector<int>> batch_indices(int n, int batch_size, uint64_t seed) {
    if (batch_size < 1) {
        throw std::invalid_argument("batch_indices: batch_size must be >= 1");
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    // Fisher-Yates with our own bounded draw; std::shuffle's sequence is
    // implementation-defined.
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(i) + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

}  // namespace gazekit
