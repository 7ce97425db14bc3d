#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gazekit/geometry.hpp"
#include "gazekit/rng.hpp"

using namespace gazekit;

namespace {

// Independent oracle: builds the direction from spherical trig on its own
// and measures the arc with clamped arccos.
Vec3 oracle_vector(double yaw_deg, double pitch_deg) {
    const double y = yaw_deg * M_PI / 180.0;
    const double p = pitch_deg * M_PI / 180.0;
    return {std::cos(p) * std::sin(y), std::sin(p), std::cos(p) * std::cos(y)};
}

double oracle_vem(const AnglePair& a, const AnglePair& b) {
    const Vec3 p = oracle_vector(a.yaw, a.pitch);
    const Vec3 r = oracle_vector(b.yaw, b.pitch);
    double d = p.x * r.x + p.y * r.y + p.z * r.z;
    d = std::min(1.0, std::max(-1.0, d));
    return std::acos(d) * 180.0 / M_PI;
}

// Rotation-matrix oracle for gaze composition: yaw about +y then pitch about
// the rotated x-axis, assembled independently of head_rotation.
Vec3 oracle_compose(const AnglePair& head, const AnglePair& eye) {
    const double cy = std::cos(head.yaw * M_PI / 180.0);
    const double sy = std::sin(head.yaw * M_PI / 180.0);
    const double cp = std::cos(head.pitch * M_PI / 180.0);
    const double sp = std::sin(head.pitch * M_PI / 180.0);
    const Vec3 e = oracle_vector(eye.yaw, eye.pitch);
    // R_x(-pitch) applied first, then R_y(yaw).
    const Vec3 t{e.x, cp * e.y + sp * e.z, -sp * e.y + cp * e.z};
    return {cy * t.x + sy * t.z, t.y, -sy * t.x + cy * t.z};
}

}  // namespace

TEST_CASE("angles_to_vector basic directions") {
    const Vec3 fwd = angles_to_vector({0, 0});
    CHECK(fwd.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fwd.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fwd.z == doctest::Approx(1.0).epsilon(1e-12));

    const Vec3 left = angles_to_vector({90, 0});
    CHECK(left.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(left.y) < 1e-12);
    CHECK(std::abs(left.z) < 1e-12);

    const Vec3 v = angles_to_vector({30, 45});
    const Vec3 o = oracle_vector(30, 45);
    CHECK(std::abs(v.x - o.x) < 1e-12);
    CHECK(std::abs(v.y - o.y) < 1e-12);
    CHECK(std::abs(v.z - o.z) < 1e-12);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
}

TEST_CASE("vector_to_angles inverts the transform") {
    CHECK(vector_to_angles({0, 0, 1}).yaw == doctest::Approx(0.0));
    CHECK(vector_to_angles({0, 0, 1}).pitch == doctest::Approx(0.0));
    CHECK(vector_to_angles({1, 0, 0}).yaw == doctest::Approx(90.0));

    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const AnglePair a{rng.uniform(-89, 89), rng.uniform(-89, 89)};
        const AnglePair back = vector_to_angles(angles_to_vector(a));
        CHECK(std::abs(back.yaw - a.yaw) < 1e-9);
        CHECK(std::abs(back.pitch - a.pitch) < 1e-9);
    }
}

TEST_CASE("vector_to_angles rejects non-unit input") {
    CHECK_THROWS_AS(vector_to_angles({0, 0, 1.01}), std::invalid_argument);
    CHECK_THROWS_AS(vector_to_angles({0, 0, 0}), std::invalid_argument);
}

TEST_CASE("vem identity, orthogonality and the brute-force oracle") {
    CHECK(vem({12, -5}, {12, -5}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(vem({90, 0}, {0, 0}) == doctest::Approx(90.0).epsilon(1e-12));

    Rng rng(7);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const AnglePair a{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        const AnglePair b{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        worst = std::max(worst, std::abs(vem(a, b) - oracle_vem(a, b)));
        CHECK(vem(a, b) == doctest::Approx(vem(b, a)).epsilon(1e-12));  // symmetry
        CHECK(vem(a, b) >= 0.0);
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("vem satisfies the spherical triangle bound") {
    Rng rng(13);
    for (int i = 0; i < 2000; ++i) {
        const AnglePair a{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        const AnglePair b{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        const AnglePair c{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        CHECK(vem(a, c) <= vem(a, b) + vem(b, c) + 1e-9);
    }
}

TEST_CASE("aem formula and the scalar-loop oracle") {
    CHECK(aem({{1, 2}}, {{1, 2}}) == doctest::Approx(0.0));
    // n=1: (|3-1| + |4-2|) / 2 = 2.
    CHECK(aem({{3, 4}}, {{1, 2}}) == doctest::Approx(2.0).epsilon(1e-15));

    Rng rng(17);
    std::vector<AnglePair> p, r;
    for (int i = 0; i < 5000; ++i) {
        p.push_back({rng.uniform(-60, 60), rng.uniform(-60, 60)});
        r.push_back({rng.uniform(-60, 60), rng.uniform(-60, 60)});
    }
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        sum += std::abs(p[i].yaw - r[i].yaw) + std::abs(p[i].pitch - r[i].pitch);
    }
    CHECK(std::abs(aem(p, r) - sum / (2.0 * p.size())) < 1e-12);
}

TEST_CASE("aem scales linearly with the residuals") {
    Rng rng(23);
    std::vector<AnglePair> refs, p1, p2;
    const double s = 3.5;
    for (int i = 0; i < 500; ++i) {
        const AnglePair r{rng.uniform(-40, 40), rng.uniform(-40, 40)};
        const double dy = rng.uniform(-5, 5), dp = rng.uniform(-5, 5);
        refs.push_back(r);
        p1.push_back({r.yaw + dy, r.pitch + dp});
        p2.push_back({r.yaw + s * dy, r.pitch + s * dp});
    }
    CHECK(aem(p2, refs) == doctest::Approx(s * aem(p1, refs)).epsilon(1e-12));
}

TEST_CASE("aem rejects empty and mismatched inputs") {
    CHECK_THROWS_AS(aem({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(aem({{0, 0}}, {}), std::invalid_argument);
}

TEST_CASE("compose_gaze: coaxial yaw adds, identity eye returns head") {
    const AnglePair g = compose_gaze({30, 0}, {30, 0});
    CHECK(g.yaw == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(g.pitch == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(29);
    for (int i = 0; i < 200; ++i) {
        const AnglePair head{rng.uniform(-45, 45), rng.uniform(-45, 45)};
        const AnglePair g2 = compose_gaze(head, {0, 0});
        CHECK(std::abs(g2.yaw - head.yaw) < 1e-9);
        CHECK(std::abs(g2.pitch - head.pitch) < 1e-9);
    }
}

TEST_CASE("compose_gaze matches the rotation-matrix oracle") {
    Rng rng(31);
    for (int i = 0; i < 2000; ++i) {
        const AnglePair head{rng.uniform(-30, 30), rng.uniform(-30, 30)};
        const AnglePair eye{rng.uniform(-30, 30), rng.uniform(-30, 30)};
        const AnglePair g = compose_gaze(head, eye);
        const AnglePair o = vector_to_angles(oracle_compose(head, eye).normalized());
        CHECK(std::abs(g.yaw - o.yaw) < 1e-9);
        CHECK(std::abs(g.pitch - o.pitch) < 1e-9);
    }
    // Spot value from the oracle.
    const AnglePair g = compose_gaze({20, 10}, {-15, 5});
    const AnglePair o = vector_to_angles(oracle_compose({20, 10}, {-15, 5}).normalized());
    CHECK(g.yaw == doctest::Approx(o.yaw).epsilon(1e-12));
    CHECK(g.pitch == doctest::Approx(o.pitch).epsilon(1e-12));
}

TEST_CASE("compose_gaze rejects out-of-range compositions") {
    CHECK_THROWS_AS(compose_gaze({80, 0}, {80, 0}), std::domain_error);
}

TEST_CASE("decompose_eye inverts compose_gaze") {
    CHECK(std::abs(decompose_eye({25, -10}, {25, -10}).yaw) < 1e-9);
    CHECK(std::abs(decompose_eye({25, -10}, {25, -10}).pitch) < 1e-9);
    const AnglePair g{17, -4};
    CHECK(decompose_eye({0, 0}, g).yaw == doctest::Approx(g.yaw).epsilon(1e-12));
    CHECK(decompose_eye({0, 0}, g).pitch == doctest::Approx(g.pitch).epsilon(1e-12));

    Rng rng(37);
    for (int i = 0; i < 2000; ++i) {
        const AnglePair head{rng.uniform(-30, 30), rng.uniform(-30, 30)};
        const AnglePair gaze{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        const AnglePair eye = decompose_eye(head, gaze);
        const AnglePair back = compose_gaze(head, eye);
        CHECK(std::abs(back.yaw - gaze.yaw) < 1e-9);
        CHECK(std::abs(back.pitch - gaze.pitch) < 1e-9);
    }
}

TEST_CASE("head and eye sweeps double the gaze range") {
    double lo = 0.0, hi = 0.0;
    for (double hy = -30.0; hy <= 30.0; hy += 1.0) {
        for (double ey = -30.0; ey <= 30.0; ey += 1.0) {
            const AnglePair g = compose_gaze({hy, 0}, {ey, 0});
            lo = std::min(lo, g.yaw);
            hi = std::max(hi, g.yaw);
        }
    }
    CHECK(hi == doctest::Approx(60.0).epsilon(1e-9));
    CHECK(lo == doctest::Approx(-60.0).epsilon(1e-9));
}

TEST_CASE("non-finite inputs are rejected") {
    CHECK_THROWS_AS(angles_to_vector({NAN, 0}), std::invalid_argument);
    CHECK_THROWS_AS(compose_gaze({0, 0}, {INFINITY, 0}), std::invalid_argument);
}
