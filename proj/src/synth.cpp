#include "gazekit/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gazekit/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gazekit {

namespace {

// Eye-region geometry, interocular units, relative to the eye center in the
// head frame. The face surface is the z = 0 plane; the eyeball sits recessed
// behind it, which makes the projected iris position depend on head pose as
// well as gaze (same-appearance ambiguity between the two).
constexpr double kEyeHalfWidth = 0.35;
constexpr double kUpperLid = 0.16;
constexpr double kLowerLid = 0.12;
constexpr double kEyeballRadius = 0.19;
constexpr double kEyeballRecess = 0.14;
constexpr double kIrisAngle = 22.0;  // angular radius on the eyeball, degrees
constexpr double kPupilAngle = 9.0;

constexpr double kCropSpanUnits = 0.7;  // eye-crop width in interocular units

// Shading levels.
constexpr float kSkin = 0.62f;
constexpr float kSclera = 0.88f;
constexpr float kIrisBase = 0.32f;
constexpr float kPupil = 0.08f;

using Pt = std::pair<double, double>;

struct Projector {
    double cx, cy, scale;
    Pt operator()(const Vec3& v) const { return {cx + scale * v.x, cy - scale * v.y}; }
};

bool point_in_polygon(const std::vector<Pt>& poly, double x, double y) {
    bool inside = false;
    for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& [xi, yi] = poly[i];
        const auto& [xj, yj] = poly[j];
        if ((yi > y) != (yj > y) &&
            x < (xj - xi) * (y - yi) / (yj - yi) + xi) {
            inside = !inside;
        }
    }
    return inside;
}

// Horizontal pixel spans covered by the polygon on each image row.
std::vector<std::vector<Pt>> polygon_row_spans(const std::vector<Pt>& poly, int height) {
    std::vector<std::vector<Pt>> spans(height);
    for (int r = 0; r < height; ++r) {
        const double y = r + 0.5;
        std::vector<double> xs;
        for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
            const auto& [xi, yi] = poly[i];
            const auto& [xj, yj] = poly[j];
            if ((yi > y) != (yj > y)) {
                xs.push_back(xi + (xj - xi) * (y - yi) / (yj - yi));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (size_t k = 0; k + 1 < xs.size(); k += 2) {
            spans[r].emplace_back(xs[k], xs[k + 1]);
        }
    }
    return spans;
}

struct Ellipse2D {
    Pt center;
    // Inverse of the 2x2 basis matrix [a b]; maps pixel offsets to the unit disc.
    double inv[2][2];
    bool degenerate = false;

    static Ellipse2D from_basis(const Pt& c, const Pt& a, const Pt& b) {
        Ellipse2D e;
        e.center = c;
        const double det = a.first * b.second - a.second * b.first;
        if (std::abs(det) < 1e-9) {
            e.degenerate = true;
            return e;
        }
        e.inv[0][0] = b.second / det;
        e.inv[0][1] = -b.first / det;
        e.inv[1][0] = -a.second / det;
        e.inv[1][1] = a.first / det;
        return e;
    }

    // Squared disc radius of the pixel, <= 1 means inside.
    double r2(double x, double y) const {
        const double dx = x - center.first, dy = y - center.second;
        const double al = inv[0][0] * dx + inv[0][1] * dy;
        const double be = inv[1][0] * dx + inv[1][1] * dy;
        return al * al + be * be;
    }
};

// Full projected geometry of one eye region at a given image placement.
struct EyeGeo {
    std::vector<Pt> margin_poly;  // dense polyline, pixel coords
    std::array<Pt, 8> margin_landmarks;
    std::array<Pt, 8> iris_landmarks;
    Ellipse2D iris, pupil;
    bool occluded = false;
};

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

EyeGeo compute_eye_geo(const SceneParams& scene, EyeSide side, const Projector& proj) {
    const Mat3 rot = head_rotation(scene.head);
    const AnglePair eye_in_head =
        side == EyeSide::Left ? scene.eye_left_in_head : scene.eye_right_in_head;

    EyeGeo geo;

    // Interior margin: two parabolic arcs between the corners, height scaled
    // by the eyelid aperture, on the face-surface plane.
    auto margin_point = [&](double x, bool upper) {
        const double t = 1.0 - (x / kEyeHalfWidth) * (x / kEyeHalfWidth);
        const double y = (upper ? kUpperLid : -kLowerLid) * scene.aperture * t;
        return proj(rot.apply({x, y, 0.0}));
    };
    const int kArcSamples = 40;
    for (int i = 0; i <= kArcSamples; ++i) {
        const double x = -kEyeHalfWidth + 2.0 * kEyeHalfWidth * i / kArcSamples;
        geo.margin_poly.push_back(margin_point(x, true));
    }
    for (int i = kArcSamples - 1; i > 0; --i) {
        const double x = -kEyeHalfWidth + 2.0 * kEyeHalfWidth * i / kArcSamples;
        geo.margin_poly.push_back(margin_point(x, false));
    }

    // 8 margin landmarks: both corners, 3 upper, 3 lower.
    geo.margin_landmarks[0] = margin_point(-kEyeHalfWidth, true);
    geo.margin_landmarks[1] = margin_point(-kEyeHalfWidth / 2, true);
    geo.margin_landmarks[2] = margin_point(0.0, true);
    geo.margin_landmarks[3] = margin_point(kEyeHalfWidth / 2, true);
    geo.margin_landmarks[4] = margin_point(kEyeHalfWidth, true);
    geo.margin_landmarks[5] = margin_point(kEyeHalfWidth / 2, false);
    geo.margin_landmarks[6] = margin_point(0.0, false);
    geo.margin_landmarks[7] = margin_point(-kEyeHalfWidth / 2, false);

    // Iris: a circle of fixed angular radius on the recessed eyeball sphere,
    // centered on the eye-in-head direction; its orthographic projection is
    // an ellipse.
    const Vec3 g = angles_to_vector(eye_in_head);  // head frame
    Vec3 e1 = cross({0.0, 1.0, 0.0}, g);
    const double n1 = e1.norm();
    if (n1 < 1e-9) {  // gaze pointing straight up/down
        e1 = {1.0, 0.0, 0.0};
    } else {
        e1 = e1 * (1.0 / n1);
    }
    const Vec3 e2 = cross(g, e1);
    const Vec3 ball_center{0.0, 0.0, -kEyeballRecess};

    auto ring = [&](double angle_deg) {
        struct Ring {
            Vec3 center, a, b;
        } r;
        const double ca = std::cos(deg2rad(angle_deg));
        const double sa = std::sin(deg2rad(angle_deg));
        r.center = ball_center + g * (kEyeballRadius * ca);
        r.a = e1 * (kEyeballRadius * sa);
        r.b = e2 * (kEyeballRadius * sa);
        return r;
    };

    const auto iris_ring = ring(kIrisAngle);
    const auto pupil_ring = ring(kPupilAngle);

    auto project_rel = [&](const Vec3& v) {  // direction vectors: no offset
        const Vec3 q = rot.apply(v);
        return Pt{proj.scale * q.x, -proj.scale * q.y};
    };
    const Pt iris_c = proj(rot.apply(iris_ring.center));
    geo.iris = Ellipse2D::from_basis(iris_c, project_rel(iris_ring.a), project_rel(iris_ring.b));
    geo.pupil = Ellipse2D::from_basis(proj(rot.apply(pupil_ring.center)),
                                      project_rel(pupil_ring.a), project_rel(pupil_ring.b));

    for (int k = 0; k < 8; ++k) {
        const double t = 2.0 * M_PI * k / 8.0;
        const Vec3 p = iris_ring.center + iris_ring.a * std::cos(t) + iris_ring.b * std::sin(t);
        geo.iris_landmarks[k] = proj(rot.apply(p));
    }

    // Occlusion: iris center hidden behind the lids, turned past the eyeball
    // horizon, or projected edge-on.
    const bool center_visible = point_in_polygon(geo.margin_poly, iris_c.first, iris_c.second);
    const bool facing = g.z > std::cos(deg2rad(65.0));
    geo.occluded = geo.iris.degenerate || !center_visible || !facing;
    return geo;
}

void shade_eye_region(Image& img, const EyeGeo& geo) {
    const auto spans = polygon_row_spans(geo.margin_poly, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (const auto& [x0, x1] : spans[r]) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
            const int c1 = std::min(img.width - 1, static_cast<int>(std::floor(x1 - 0.5)));
            for (int c = c0; c <= c1; ++c) {
                const double px = c + 0.5, py = r + 0.5;
                float v = kSclera;
                if (!geo.iris.degenerate) {
                    const double ir2 = geo.iris.r2(px, py);
                    if (ir2 <= 1.0) {
                        v = kIrisBase + 0.18f * static_cast<float>(ir2);
                        if (!geo.pupil.degenerate && geo.pupil.r2(px, py) <= 1.0) {
                            v = kPupil;
                        }
                    }
                }
                img.at(r, c) = v;
            }
        }
    }
}

void apply_photometrics(Image& img, const PhotometricParams& photo, Rng& rng) {
    for (auto& v : img.data) {
        double x = photo.contrast * (v - 0.5) + 0.5 + photo.brightness;
        if (photo.noise_sigma > 0.0) {
            x += photo.noise_sigma * rng.normal();
        }
        v = static_cast<float>(std::clamp(x, 0.0, 1.0));
    }
}

LandmarkSet landmarks_from_geo(const EyeGeo& geo) {
    LandmarkSet lm;
    lm.interior_margin = geo.margin_landmarks;
    lm.iris = geo.iris_landmarks;
    for (int k = 0; k < 8; ++k) {
        lm.iris_occluded[k] =
            !point_in_polygon(geo.margin_poly, geo.iris_landmarks[k].first,
                              geo.iris_landmarks[k].second);
    }
    return lm;
}

void soft_blob(Image& img, double cx, double cy, double radius, float darken) {
    const int r0 = std::max(0, static_cast<int>(cy - radius - 1));
    const int r1 = std::min(img.height - 1, static_cast<int>(cy + radius + 1));
    const int c0 = std::max(0, static_cast<int>(cx - radius - 1));
    const int c1 = std::min(img.width - 1, static_cast<int>(cx + radius + 1));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dx = c + 0.5 - cx, dy = r + 0.5 - cy;
            const double d2 = (dx * dx + dy * dy) / (radius * radius);
            if (d2 < 1.0) {
                img.at(r, c) *= 1.0f - darken * static_cast<float>(1.0 - d2);
            }
        }
    }
}

constexpr int kMaxRejects = 500;

}  // namespace

PointList LandmarkSet::flattened() const {
    PointList out;
    out.insert(out.end(), interior_margin.begin(), interior_margin.end());
    out.insert(out.end(), iris.begin(), iris.end());
    return out;
}

const std::array<Vec3, 7>& canonical_fiducials() {
    // Head-frame positions: eye centers, nose tip (protruding along the face
    // normal), mouth corners, chin, forehead. Non-planar, so yaw and pitch
    // are both observable from the projected layout.
    static const std::array<Vec3, 7> pts = {{
        {0.5, 0.0, 0.0},    // left eye (subject's left, renders image-right)
        {-0.5, 0.0, 0.0},   // right eye
        {0.0, -0.35, 0.45}, // nose tip
        {0.3, -0.75, 0.12}, // mouth left
        {-0.3, -0.75, 0.12},
        {0.0, -1.1, 0.1},   // chin
        {0.0, 0.45, 0.25},  // forehead
    }};
    return pts;
}

double face_scale_px(int size) { return size * (64.0 / 224.0); }

std::pair<double, double> face_center_px(int size) {
    return {size / 2.0, 0.42 * size};
}

SceneParams make_scene(const AnglePair& head, const AnglePair& eye_mid,
                       double target_dist, double aperture,
                       const PhotometricParams& photo, uint64_t rng_seed) {
    SceneParams s;
    s.head = head;
    s.aperture = aperture;
    s.photo = photo;
    s.rng_seed = rng_seed;

    const Mat3 rot = head_rotation(head);
    s.eye_center_left = rot.apply({0.5, 0.0, 0.0});
    s.eye_center_right = rot.apply({-0.5, 0.0, 0.0});

    const AnglePair gaze_mid = compose_gaze(head, eye_mid);
    s.target_point = angles_to_vector(gaze_mid) * target_dist;

    s.gaze_left = vector_to_angles((s.target_point - s.eye_center_left).normalized());
    s.gaze_right = vector_to_angles((s.target_point - s.eye_center_right).normalized());
    s.eye_left_in_head = decompose_eye(head, s.gaze_left);
    s.eye_right_in_head = decompose_eye(head, s.gaze_right);
    return s;
}

SceneParams sample_scene(Rng& rng, const SamplingRanges& ranges) {
    for (int attempt = 0; attempt < kMaxRejects; ++attempt) {
        const AnglePair head{rng.uniform(-ranges.head_yaw, ranges.head_yaw),
                             rng.uniform(-ranges.head_pitch, ranges.head_pitch)};
        const AnglePair eye_mid{rng.uniform(-ranges.eye_yaw, ranges.eye_yaw),
                                rng.uniform(-ranges.eye_pitch, ranges.eye_pitch)};
        const double dist = rng.uniform(ranges.target_dist_min, ranges.target_dist_max);
        const double aperture = rng.uniform(ranges.aperture_min, ranges.aperture_max);
        PhotometricParams photo;
        photo.brightness = rng.uniform(-ranges.brightness_jitter, ranges.brightness_jitter);
        photo.contrast = rng.uniform(ranges.contrast_min, ranges.contrast_max);
        photo.noise_sigma = rng.uniform(0.0, ranges.noise_sigma_max);
        const uint64_t sample_seed = rng.next_u64();

        SceneParams scene;
        try {
            scene = make_scene(head, eye_mid, dist, aperture, photo, sample_seed);
        } catch (const std::domain_error&) {
            continue;  // composed direction left the frontal range
        }

        // Per-eye directions may exceed the mid-eye draw by the vergence
        // angle; allow that much slack (capped: distances this close are a
        // configuration problem, not vergence).
        const double slack = std::min(10.0, rad2deg(std::atan2(0.5, dist)));
        const bool in_limits =
            std::abs(scene.eye_left_in_head.yaw) <= ranges.eye_yaw + slack &&
            std::abs(scene.eye_right_in_head.yaw) <= ranges.eye_yaw + slack &&
            std::abs(scene.eye_left_in_head.pitch) <= ranges.eye_pitch + slack &&
            std::abs(scene.eye_right_in_head.pitch) <= ranges.eye_pitch + slack &&
            std::abs(scene.gaze_left.yaw) < 85.0 && std::abs(scene.gaze_left.pitch) < 85.0 &&
            std::abs(scene.gaze_right.yaw) < 85.0 && std::abs(scene.gaze_right.pitch) < 85.0;
        if (!in_limits) continue;

        // Both irises must be visible at crop scale.
        const Projector proj{48.0, 32.0, 96.0 / kCropSpanUnits};
        if (compute_eye_geo(scene, EyeSide::Left, proj).occluded) continue;
        if (compute_eye_geo(scene, EyeSide::Right, proj).occluded) continue;
        return scene;
    }
    throw std::runtime_error(
        "sample_scene: rejection rate above 99%; sampling ranges are infeasible");
}

EyeRender render_eye(const SceneParams& scene, EyeSide side, int height, int width) {
    if (height < 8 || width < 8) {
        throw std::invalid_argument("render_eye: crop size too small");
    }
    const Projector proj{width / 2.0, height / 2.0, width / kCropSpanUnits};
    const EyeGeo geo = compute_eye_geo(scene, side, proj);

    EyeRender out;
    out.gaze = side == EyeSide::Left ? scene.gaze_left : scene.gaze_right;
    out.eye_in_head = side == EyeSide::Left ? scene.eye_left_in_head : scene.eye_right_in_head;
    out.occluded = geo.occluded;
    out.landmarks = landmarks_from_geo(geo);

    out.image = Image(height, width, kSkin);
    shade_eye_region(out.image, geo);
    Rng noise = Rng::for_index(scene.rng_seed, side == EyeSide::Left ? 1 : 2);
    apply_photometrics(out.image, scene.photo, noise);
    return out;
}

PointList face_fiducials(const SceneParams& scene, int size) {
    const auto [cx, cy] = face_center_px(size);
    const Projector proj{cx, cy, face_scale_px(size)};
    const Mat3 rot = head_rotation(scene.head);
    PointList out;
    for (const auto& p : canonical_fiducials()) {
        out.push_back(proj(rot.apply(p)));
    }
    return out;
}

Image render_face(const SceneParams& scene, int size) {
    const auto [cx, cy] = face_center_px(size);
    const double s = face_scale_px(size);
    const Mat3 rot = head_rotation(scene.head);
    const Projector proj{cx, cy, s};

    Image img(size, size, 0.10f);

    // Head outline: an ellipse on the face plane, rotated and projected.
    std::vector<Pt> outline;
    for (int i = 0; i < 72; ++i) {
        const double t = 2.0 * M_PI * i / 72.0;
        outline.push_back(proj(rot.apply({0.95 * std::cos(t), 1.28 * std::sin(t) - 0.25, 0.0})));
    }
    const auto spans = polygon_row_spans(outline, size);
    for (int r = 0; r < size; ++r) {
        for (const auto& [x0, x1] : spans[r]) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
            const int c1 = std::min(size - 1, static_cast<int>(std::floor(x1 - 0.5)));
            for (int c = c0; c <= c1; ++c) img.at(r, c) = kSkin;
        }
    }

    // Non-eye fiducials as shaded blobs.
    const auto fid = face_fiducials(scene, size);
    const double blob = 0.05 * size;
    soft_blob(img, fid[2].first, fid[2].second, blob, 0.55f);        // nose
    soft_blob(img, fid[3].first, fid[3].second, 0.8 * blob, 0.45f);  // mouth
    soft_blob(img, fid[4].first, fid[4].second, 0.8 * blob, 0.45f);
    soft_blob(img, fid[5].first, fid[5].second, 0.9 * blob, 0.35f);  // chin
    soft_blob(img, fid[6].first, fid[6].second, 0.9 * blob, 0.25f);  // forehead

    // Eye regions, same geometry as render_eye at face scale.
    for (const EyeSide side : {EyeSide::Left, EyeSide::Right}) {
        const Vec3 center_h = side == EyeSide::Left ? canonical_fiducials()[0]
                                                    : canonical_fiducials()[1];
        const Pt c = proj(rot.apply(center_h));
        // compute_eye_geo works relative to the eye center; anchoring the
        // projector at the projected fiducial places the region correctly
        // because both rotation and projection are affine.
        const Projector eye_proj{c.first, c.second, s};
        shade_eye_region(img, compute_eye_geo(scene, side, eye_proj));
    }

    Rng noise = Rng::for_index(scene.rng_seed, 0);
    apply_photometrics(img, scene.photo, noise);
    return img;
}

std::string generate_dataset(const GenConfig& cfg, const std::string& out_dir) {
    if (cfg.n < 1) {
        throw std::invalid_argument("generate_dataset: n must be >= 1");
    }
    const fs::path out(out_dir);
    const fs::path images = out / "images";
    fs::create_directories(images);

    const int subjects = std::max(1, std::min(cfg.subjects, cfg.n));
    const int per_subject = (cfg.n + subjects - 1) / subjects;
    const int n_train = static_cast<int>(std::lround(cfg.n * cfg.train_fraction));

    SampleSet set;
    set.root_dir = out.string();

    const std::string manifest_path = (out / "manifest.jsonl").string();
    try {
        for (int i = 0; i < cfg.n; ++i) {
            Rng rng = Rng::for_index(cfg.seed, static_cast<uint64_t>(i));
            const SceneParams scene = sample_scene(rng, cfg.ranges);

            Image face = render_face(scene, cfg.face_size);
            EyeRender left = render_eye(scene, EyeSide::Left, cfg.eye_height, cfg.eye_width);
            EyeRender right = render_eye(scene, EyeSide::Right, cfg.eye_height, cfg.eye_width);
            if (cfg.refiner) {
                face = cfg.refiner(face);
                left.image = cfg.refiner(left.image);
                right.image = cfg.refiner(right.image);
            }

            char name[64];
            std::snprintf(name, sizeof(name), "face_%06d.png", i);
            const std::string face_rel = (fs::path("images") / name).string();
            std::snprintf(name, sizeof(name), "left_%06d.png", i);
            const std::string left_rel = (fs::path("images") / name).string();
            std::snprintf(name, sizeof(name), "right_%06d.png", i);
            const std::string right_rel = (fs::path("images") / name).string();

            write_png_gray((out / face_rel).string(), face);
            write_png_gray((out / left_rel).string(), left.image);
            write_png_gray((out / right_rel).string(), right.image);

            char subj[32];
            std::snprintf(subj, sizeof(subj), "s%04d", i / per_subject);

            Sample rec;
            rec.subject_id = subj;
            rec.camera_id = "cam0";
            rec.face_path = face_rel;
            rec.left_eye_path = left_rel;
            rec.right_eye_path = right_rel;
            rec.head = scene.head;
            rec.gaze_left = scene.gaze_left;
            rec.gaze_right = scene.gaze_right;
            rec.eye_left_in_head = scene.eye_left_in_head;
            rec.eye_right_in_head = scene.eye_right_in_head;
            rec.landmarks = face_fiducials(scene, cfg.face_size);
            rec.left_landmarks = left.landmarks.flattened();
            rec.right_landmarks = right.landmarks.flattened();
            rec.illumination = scene.photo.brightness < -0.06 ? "night" : "day";
            rec.split = i < n_train ? "train" : "test";
            set.samples.push_back(std::move(rec));
        }
        save_manifest(set, manifest_path);

        json echo;
        echo["n"] = cfg.n;
        echo["seed"] = cfg.seed;
        echo["face_size"] = cfg.face_size;
        echo["eye_height"] = cfg.eye_height;
        echo["eye_width"] = cfg.eye_width;
        echo["train_fraction"] = cfg.train_fraction;
        echo["subjects"] = cfg.subjects;
        echo["ranges"] = {
            {"head_yaw", cfg.ranges.head_yaw},
            {"head_pitch", cfg.ranges.head_pitch},
            {"eye_yaw", cfg.ranges.eye_yaw},
            {"eye_pitch", cfg.ranges.eye_pitch},
            {"target_dist_min", cfg.ranges.target_dist_min},
            {"target_dist_max", cfg.ranges.target_dist_max},
            {"aperture_min", cfg.ranges.aperture_min},
            {"aperture_max", cfg.ranges.aperture_max},
            {"brightness_jitter", cfg.ranges.brightness_jitter},
            {"contrast_min", cfg.ranges.contrast_min},
            {"contrast_max", cfg.ranges.contrast_max},
            {"noise_sigma_max", cfg.ranges.noise_sigma_max},
        };
        std::ofstream cfgout(out / "generate_config.json");
        cfgout << echo.dump(2) << "\n";
    } catch (...) {
        // Partial-output cleanup: remove everything this call created.
        std::error_code ec;
        fs::remove_all(images, ec);
        fs::remove(manifest_path, ec);
        fs::remove(out / "generate_config.json", ec);
        throw;
    }
    return manifest_path;
}

}  // namespace gazekit
