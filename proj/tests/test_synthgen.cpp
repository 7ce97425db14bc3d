#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gazekit/synth.hpp"

using namespace gazekit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("gazekit_synth_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

PhotometricParams quiet_photo() { return {0.0, 1.0, 0.0}; }

SceneParams frontal_scene(double dist = 20.0, double aperture = 1.0) {
    return make_scene({0, 0}, {0, 0}, dist, aperture, quiet_photo(), 99);
}

std::pair<double, double> centroid(const std::array<std::pair<double, double>, 8>& pts) {
    double x = 0, y = 0;
    for (const auto& [px, py] : pts) {
        x += px;
        y += py;
    }
    return {x / 8, y / 8};
}

// Least-squares pose recovery from projected fiducials: Gauss-Newton over
// (yaw, pitch) with numeric Jacobians, grid-seeded. Fully independent of
// head_rotation's composition order: it only uses face_fiducials' forward map.
AnglePair recover_pose(const PointList& observed, int size) {
    auto residual = [&](double yaw, double pitch) {
        SceneParams probe = frontal_scene();
        probe.head = {yaw, pitch};
        const PointList proj = face_fiducials(probe, size);
        Eigen::VectorXd r(2 * proj.size());
        for (size_t i = 0; i < proj.size(); ++i) {
            r[2 * i] = proj[i].first - observed[i].first;
            r[2 * i + 1] = proj[i].second - observed[i].second;
        }
        return r;
    };
    double best_yaw = 0, best_pitch = 0;
    double best = 1e18;
    for (double y = -45; y <= 45; y += 5) {
        for (double p = -45; p <= 45; p += 5) {
            const double c = residual(y, p).squaredNorm();
            if (c < best) {
                best = c;
                best_yaw = y;
                best_pitch = p;
            }
        }
    }
    double yaw = best_yaw, pitch = best_pitch;
    for (int it = 0; it < 30; ++it) {
        const Eigen::VectorXd r0 = residual(yaw, pitch);
        const double h = 1e-4;
        Eigen::MatrixXd J(r0.size(), 2);
        J.col(0) = (residual(yaw + h, pitch) - r0) / h;
        J.col(1) = (residual(yaw, pitch + h) - r0) / h;
        const Eigen::Vector2d step =
            (J.transpose() * J).ldlt().solve(J.transpose() * r0);
        yaw -= step[0];
        pitch -= step[1];
        if (step.norm() < 1e-10) break;
    }
    return {yaw, pitch};
}

}  // namespace

TEST_CASE("make_scene: label consistency and vergence") {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const AnglePair head{rng.uniform(-30, 30), rng.uniform(-20, 20)};
        const AnglePair eye{rng.uniform(-25, 25), rng.uniform(-15, 15)};
        const double dist = rng.uniform(4, 20);
        const SceneParams s = make_scene(head, eye, dist, 0.8, quiet_photo(), i);

        // compose(head, eye_in_head) reproduces the stored per-eye gaze.
        const AnglePair gl = compose_gaze(s.head, s.eye_left_in_head);
        const AnglePair gr = compose_gaze(s.head, s.eye_right_in_head);
        CHECK(std::abs(gl.yaw - s.gaze_left.yaw) < 1e-6);
        CHECK(std::abs(gl.pitch - s.gaze_left.pitch) < 1e-6);
        CHECK(std::abs(gr.yaw - s.gaze_right.yaw) < 1e-6);
        CHECK(std::abs(gr.pitch - s.gaze_right.pitch) < 1e-6);

        // Finite-distance target: the two eyes never agree exactly.
        CHECK(std::abs(s.gaze_left.yaw - s.gaze_right.yaw) > 0.0);
    }
}

TEST_CASE("make_scene: midline target gives mirror-symmetric yaws") {
    for (const double dist : {5.0, 10.0, 20.0}) {
        const SceneParams s = make_scene({0, 0}, {0, 0}, dist, 1.0, quiet_photo(), 1);
        CHECK(s.gaze_left.yaw == doctest::Approx(-s.gaze_right.yaw).epsilon(1e-9));
    }
}

TEST_CASE("make_scene: vergence shrinks monotonically with distance") {
    double prev = 1e9;
    for (const double dist : {4.0, 6.0, 9.0, 14.0, 20.0}) {
        const SceneParams s = make_scene({5, 3}, {4, -2}, dist, 1.0, quiet_photo(), 1);
        const double verg = std::abs(s.gaze_left.yaw - s.gaze_right.yaw);
        CHECK(verg > 0.0);
        CHECK(verg < prev);
        prev = verg;
    }
}

TEST_CASE("sample_scene: collapsed ranges give a frontal scene") {
    SamplingRanges r;
    r.head_yaw = r.head_pitch = r.eye_yaw = r.eye_pitch = 0.0;
    r.target_dist_min = r.target_dist_max = 20.0;
    r.aperture_min = r.aperture_max = 1.0;
    r.brightness_jitter = 0.0;
    r.contrast_min = r.contrast_max = 1.0;
    r.noise_sigma_max = 0.0;
    Rng rng(5);
    const SceneParams s = sample_scene(rng, r);
    CHECK(s.head.yaw == 0.0);
    CHECK(s.head.pitch == 0.0);
    CHECK(std::abs(s.gaze_left.yaw) < 1.6);   // vergence at dist 20 only
    CHECK(std::abs(s.gaze_right.yaw) < 1.6);
    CHECK(std::abs(s.gaze_left.pitch) < 1e-9);
}

TEST_CASE("sample_scene: default ranges span roughly +-60 composed yaw") {
    SamplingRanges r;  // head +-30, eye +-30 via defaults
    r.eye_yaw = 30.0;
    Rng rng(7);
    double lo = 0, hi = 0;
    for (int i = 0; i < 10000; ++i) {
        const SceneParams s = sample_scene(rng, r);
        lo = std::min({lo, s.gaze_left.yaw, s.gaze_right.yaw});
        hi = std::max({hi, s.gaze_left.yaw, s.gaze_right.yaw});
    }
    CHECK(hi > 52.0);
    CHECK(hi < 66.0);
    CHECK(lo < -52.0);
    CHECK(lo > -66.0);
}

TEST_CASE("sample_scene: infeasible ranges raise a configuration error") {
    SamplingRanges r;
    r.head_yaw = 0.0;
    r.head_pitch = 0.0;
    r.eye_yaw = 5.0;
    r.eye_pitch = 5.0;
    // A fixation point sitting essentially between the eyes: every draw
    // needs |eye-in-head| far past the configured limit.
    r.target_dist_min = r.target_dist_max = 0.2;
    Rng rng(11);
    CHECK_THROWS_AS(sample_scene(rng, r), std::runtime_error);
}

TEST_CASE("render_eye: frontal iris centered, landmarks consistent") {
    const SceneParams s = frontal_scene();
    const EyeRender out = render_eye(s, EyeSide::Left, 64, 96);
    CHECK(!out.occluded);
    CHECK(out.image.height == 64);
    CHECK(out.image.width == 96);

    // |eye_in_head| is ~1.4 deg of vergence at dist 20; the iris centroid
    // stays within a pixel of the geometric center.
    const auto [cx, cy] = centroid(out.landmarks.iris);
    CHECK(std::abs(cx - 48.0) < 1.0);
    CHECK(std::abs(cy - 32.0) < 1.0);

    for (int k = 0; k < 8; ++k) CHECK(!out.landmarks.iris_occluded[k]);

    // 16 points, 32 scalars.
    CHECK(out.landmarks.flattened().size() == 16);
}

TEST_CASE("render_eye: iris displacement follows eye yaw") {
    const SceneParams base = make_scene({0, 0}, {0, 0}, 1e6, 1.0, quiet_photo(), 4);
    const SceneParams turned = make_scene({0, 0}, {30, 0}, 1e6, 1.0, quiet_photo(), 4);
    const auto c0 = centroid(render_eye(base, EyeSide::Left, 64, 96).landmarks.iris);
    const auto c1 = centroid(render_eye(turned, EyeSide::Left, 64, 96).landmarks.iris);
    CHECK(c1.first - c0.first > 5.0);  // +yaw renders toward image right
    const SceneParams neg = make_scene({0, 0}, {-30, 0}, 1e6, 1.0, quiet_photo(), 4);
    const auto c2 = centroid(render_eye(neg, EyeSide::Left, 64, 96).landmarks.iris);
    CHECK(c2.first - c0.first < -5.0);
}

TEST_CASE("render_eye: head yaw deforms the interior margin") {
    const SceneParams s0 = make_scene({0, 0}, {0, 0}, 1e6, 1.0, quiet_photo(), 4);
    const SceneParams s20 = make_scene({20, 0}, {-20, 0}, 1e6, 1.0, quiet_photo(), 4);
    // Same camera-frame gaze (eye compensates the head turn); only the head
    // pose differs, and the margin polygon must deform measurably.
    auto aspect = [](const LandmarkSet& lm) {
        const double w = std::abs(lm.interior_margin[4].first - lm.interior_margin[0].first);
        const double h = std::abs(lm.interior_margin[2].second - lm.interior_margin[6].second);
        return w / h;
    };
    const auto lm0 = render_eye(s0, EyeSide::Left, 64, 96).landmarks;
    const auto lm20 = render_eye(s20, EyeSide::Left, 64, 96).landmarks;
    const double rel = std::abs(aspect(lm20) - aspect(lm0)) / aspect(lm0);
    CHECK(rel > 0.01);
}

TEST_CASE("render_eye: aperture controls occlusion flagging") {
    // Looking far up with nearly closed lids hides the iris; the same
    // direction with open lids does not.
    const SceneParams squint = make_scene({0, 0}, {0, 25}, 1e6, 0.3, quiet_photo(), 4);
    CHECK(render_eye(squint, EyeSide::Left, 64, 96).occluded);
    const SceneParams open = make_scene({0, 0}, {0, 25}, 1e6, 1.0, quiet_photo(), 4);
    CHECK(!render_eye(open, EyeSide::Left, 64, 96).occluded);
}

TEST_CASE("render_face: frontal symmetry and recoverable pose") {
    const SceneParams s = frontal_scene();
    const PointList fid = face_fiducials(s, 224);
    REQUIRE(fid.size() == 7);
    // Bilateral symmetry about the vertical axis within a pixel.
    const double cx = 112.0;
    CHECK(std::abs((fid[0].first - cx) + (fid[1].first - cx)) < 1.0);
    CHECK(std::abs(fid[0].second - fid[1].second) < 1.0);
    CHECK(std::abs(fid[2].first - cx) < 1.0);  // nose on the midline

    const Image img = render_face(s, 224);
    CHECK(img.height == 224);
    CHECK(img.width == 224);
}

TEST_CASE("render_face: yaw displaces the nose and pose recovery works") {
    SceneParams s = frontal_scene();
    s.head = {30, 0};
    const PointList fid = face_fiducials(s, 224);
    CHECK(fid[2].first > 112.0);  // nose tip toward image x > center

    const AnglePair rec = recover_pose(fid, 224);
    CHECK(std::abs(rec.yaw - 30.0) < 2.0);
    CHECK(std::abs(rec.pitch - 0.0) < 2.0);

    SceneParams tilted = frontal_scene();
    tilted.head = {-12, 17};
    const AnglePair rec2 = recover_pose(face_fiducials(tilted, 224), 224);
    CHECK(std::abs(rec2.yaw + 12.0) < 2.0);
    CHECK(std::abs(rec2.pitch - 17.0) < 2.0);
}

TEST_CASE("render_face: recovered yaw is monotone in true yaw") {
    double prev = -1e9;
    for (double yaw = -30; yaw <= 30; yaw += 6) {
        SceneParams s = frontal_scene();
        s.head = {yaw, 0};
        const AnglePair rec = recover_pose(face_fiducials(s, 224), 224);
        CHECK(rec.yaw > prev);
        prev = rec.yaw;
    }
}

TEST_CASE("landmark/gaze coupling: iris offset tracks eye-in-head yaw") {
    Rng rng(21);
    std::vector<double> xs, ys;
    for (int i = 0; i < 1000; ++i) {
        const AnglePair head{rng.uniform(-30, 30), rng.uniform(-15, 15)};
        const AnglePair eye{rng.uniform(-25, 25), rng.uniform(-12, 12)};
        const SceneParams s = make_scene(head, eye, 1e6, 1.0, quiet_photo(), i);
        const EyeRender out = render_eye(s, EyeSide::Left, 64, 96);
        if (out.occluded) continue;
        xs.push_back(out.eye_in_head.yaw);
        ys.push_back(centroid(out.landmarks.iris).first - 48.0);
    }
    REQUIRE(xs.size() > 300);
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    CHECK(corr > 0.9);
}

TEST_CASE("generate_dataset: counts, splits, loadability, determinism") {
    const fs::path dir_a = temp_dir("gen_a");
    const fs::path dir_b = temp_dir("gen_b");
    GenConfig cfg;
    cfg.n = 20;
    cfg.seed = 42;
    cfg.face_size = 64;
    cfg.eye_height = 32;
    cfg.eye_width = 48;
    cfg.train_fraction = 0.9;
    cfg.subjects = 5;

    const std::string ma = generate_dataset(cfg, dir_a.string());
    const SampleSet set = load_manifest(ma);
    REQUIRE(set.size() == 20);
    int n_train = 0, n_test = 0;
    for (const auto& s : set.samples) (s.split == "train" ? n_train : n_test)++;
    CHECK(n_train == 18);
    CHECK(n_test == 2);
    CHECK(set.subjects().size() == 5);

    // Labels round-trip through compose_gaze.
    for (const auto& s : set.samples) {
        REQUIRE(s.eye_left_in_head.has_value());
        const AnglePair g = compose_gaze(s.head, *s.eye_left_in_head);
        CHECK(std::abs(g.yaw - s.gaze_left.yaw) < 1e-6);
    }

    // Same seed: byte-identical manifest and images.
    const std::string mb = generate_dataset(cfg, dir_b.string());
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), {});
    };
    CHECK(slurp(ma) == slurp(mb));
    CHECK(slurp(dir_a / "images" / "face_000003.png") ==
          slurp(dir_b / "images" / "face_000003.png"));
    CHECK(slurp(dir_a / "images" / "left_000007.png") ==
          slurp(dir_b / "images" / "left_000007.png"));

    // n=1 is loadable and complete.
    const fs::path dir_c = temp_dir("gen_c");
    GenConfig one = cfg;
    one.n = 1;
    const SampleSet single = load_manifest(generate_dataset(one, dir_c.string()));
    REQUIRE(single.size() == 1);
    CHECK(!single.load_face(single.samples[0]).empty());
    CHECK(single.samples[0].left_landmarks->size() == 16);
}
