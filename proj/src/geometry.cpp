#include "gazekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gazekit {

namespace {

void require_finite(const AnglePair& a, const char* what) {
    if (!std::isfinite(a.yaw) || !std::isfinite(a.pitch)) {
        throw std::invalid_argument(std::string(what) + ": non-finite angle pair");
    }
}

}  // namespace

double deg2rad(double d) { return d * M_PI / 180.0; }
double rad2deg(double r) { return r * 180.0 / M_PI; }

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        throw std::invalid_argument("Vec3::normalized: zero vector");
    }
    return {x / n, y / n, z / n};
}

Vec3 Mat3::apply(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Mat3 Mat3::transposed() const {
    Mat3 t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.m[i][j] = m[j][i];
    return t;
}

Mat3 Mat3::mul(const Mat3& a, const Mat3& b) {
    Mat3 c;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
            c.m[i][j] = s;
        }
    return c;
}

Vec3 angles_to_vector(const AnglePair& a) {
    require_finite(a, "angles_to_vector");
    const double yaw = deg2rad(a.yaw);
    const double pitch = deg2rad(a.pitch);
    return {std::cos(pitch) * std::sin(yaw), std::sin(pitch),
            std::cos(pitch) * std::cos(yaw)};
}

AnglePair vector_to_angles(const Vec3& v) {
    const double n = v.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
        throw std::invalid_argument("vector_to_angles: input norm " +
                                    std::to_string(n) + " deviates from 1");
    }
    const double y = std::clamp(v.y, -1.0, 1.0);
    return {rad2deg(std::atan2(v.x, v.z)), rad2deg(std::asin(y))};
}

double vem(const AnglePair& pred, const AnglePair& ref) {
    const Vec3 p = angles_to_vector(pred);
    const Vec3 r = angles_to_vector(ref);
    const double d = std::clamp(p.dot(r), -1.0, 1.0);
    return rad2deg(std::acos(d));
}

double aem(const std::vector<AnglePair>& preds, const std::vector<AnglePair>& refs) {
    if (preds.empty()) {
        throw std::invalid_argument("aem: empty input");
    }
    if (preds.size() != refs.size()) {
        throw std::invalid_argument("aem: size mismatch (" +
                                    std::to_string(preds.size()) + " vs " +
                                    std::to_string(refs.size()) + ")");
    }
    double sum = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        require_finite(preds[i], "aem");
        require_finite(refs[i], "aem");
        sum += std::abs(preds[i].yaw - refs[i].yaw) +
               std::abs(preds[i].pitch - refs[i].pitch);
    }
    return sum / (2.0 * static_cast<double>(preds.size()));
}

Mat3 head_rotation(const AnglePair& head) {
    require_finite(head, "head_rotation");
    const double cy = std::cos(deg2rad(head.yaw));
    const double sy = std::sin(deg2rad(head.yaw));
    const double cp = std::cos(deg2rad(head.pitch));
    const double sp = std::sin(deg2rad(head.pitch));
    // R_y(yaw) * R_x(-pitch); maps (0,0,1) to angles_to_vector(head).
    const Mat3 ry = {{{cy, 0.0, sy}, {0.0, 1.0, 0.0}, {-sy, 0.0, cy}}};
    const Mat3 rx = {{{1.0, 0.0, 0.0}, {0.0, cp, sp}, {0.0, -sp, cp}}};
    return Mat3::mul(ry, rx);
}

AnglePair compose_gaze(const AnglePair& head, const AnglePair& eye_in_head) {
    const Vec3 g = head_rotation(head).apply(angles_to_vector(eye_in_head));
    const AnglePair out = vector_to_angles(g);
    if (std::abs(out.yaw) >= 90.0 || std::abs(out.pitch) >= 90.0) {
        throw std::domain_error("compose_gaze: composed direction (" +
                                std::to_string(out.yaw) + ", " +
                                std::to_string(out.pitch) +
                                ") outside (-90, 90) range");
    }
    return out;
}

AnglePair decompose_eye(const AnglePair& head, const AnglePair& gaze) {
    const Vec3 e = head_rotation(head).transposed().apply(angles_to_vector(gaze));
    return vector_to_angles(e);
}

}  // namespace gazekit
