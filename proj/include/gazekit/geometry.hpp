#pragma once

#include <vector>

namespace gazekit {

// Camera coordinate frame used throughout: +z into the scene, +y up,
// +x camera-left. All public angles are degrees; radians stay internal.

// (yaw, pitch) in degrees. Positive yaw looks toward +x, positive pitch up.
struct AnglePair {
    double yaw = 0.0;
    double pitch = 0.0;

    bool operator==(const AnglePair&) const = default;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const;
    Vec3 normalized() const;
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

// Row-major 3x3 rotation matrix.
struct Mat3 {
    double m[3][3];

    Vec3 apply(const Vec3& v) const;
    Mat3 transposed() const;
    static Mat3 mul(const Mat3& a, const Mat3& b);
};

double deg2rad(double d);
double rad2deg(double r);

// T: (yaw, pitch) -> unit vector (cos p * sin y, sin p, cos p * cos y).
Vec3 angles_to_vector(const AnglePair& a);

// Inverse of angles_to_vector: pitch = asin(y), yaw = atan2(x, z).
// Rejects inputs whose norm deviates from 1 by more than 1e-6.
AnglePair vector_to_angles(const Vec3& v);

// Arc angle in degrees between the two directions (dot product clamped
// to [-1, 1] before arccos).
double vem(const AnglePair& pred, const AnglePair& ref);

// Mean absolute angular difference: (1/(2n)) * sum(|dyaw| + |dpitch|).
double aem(const std::vector<AnglePair>& preds, const std::vector<AnglePair>& refs);

// Head rotation: intrinsic yaw about +y, then pitch about the rotated
// x-axis; roll fixed at 0. Satisfies R(h) * (0,0,1) == angles_to_vector(h).
Mat3 head_rotation(const AnglePair& head);

// Gaze in camera frame from head pose and eye-in-head direction:
// vector_to_angles(R(head) * T(eye_in_head)). Throws if the composed
// direction leaves the frontal (-90, 90) x (-90, 90) range.
AnglePair compose_gaze(const AnglePair& head, const AnglePair& eye_in_head);

// Inverse of compose_gaze: eye-in-head direction for a camera-frame gaze.
AnglePair decompose_eye(const AnglePair& head, const AnglePair& gaze);

}  // namespace gazekit
