#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace dislo {

inline constexpr double kTol = 1e-12;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// components in the basis (e23, e31, e12)
struct BiVec3 {
    double c23 = 0, c31 = 0, c12 = 0;

    BiVec3& operator+=(const BiVec3& o) { c23 += o.c23; c31 += o.c31; c12 += o.c12; return *this; }
    BiVec3& operator*=(double s) { c23 *= s; c31 *= s; c12 *= s; return *this; }
    bool operator==(const BiVec3&) const = default;
};

inline BiVec3 operator+(BiVec3 a, const BiVec3& b) { return a += b; }
inline BiVec3 operator-(const BiVec3& a, const BiVec3& b) {
    return {a.c23 - b.c23, a.c31 - b.c31, a.c12 - b.c12};
}
inline BiVec3 operator*(double s, BiVec3 a) { return a *= s; }
inline double mass(const BiVec3& a) { return std::sqrt(a.c23 * a.c23 + a.c31 * a.c31 + a.c12 * a.c12); }

// basis (e01, e02, e03, e23, e31, e12); e0 is time
struct BiVec4 {
    std::array<double, 6> c{};

    BiVec4& operator+=(const BiVec4& o) {
        for (int i = 0; i < 6; ++i) c[i] += o.c[i];
        return *this;
    }
    BiVec4& operator*=(double s) {
        for (auto& v : c) v *= s;
        return *this;
    }
};

inline BiVec4 operator*(double s, BiVec4 a) { return a *= s; }
inline double dot(const BiVec4& a, const BiVec4& b) {
    double s = 0;
    for (int i = 0; i < 6; ++i) s += a.c[i] * b.c[i];
    return s;
}
inline double mass(const BiVec4& a) { return std::sqrt(dot(a, a)); }

// space-time point / vector (t, x)
struct Vec4 {
    double t = 0;
    Vec3 x;
};

inline Vec4 operator-(const Vec4& a, const Vec4& b) { return {a.t - b.t, a.x - b.x}; }

struct Mat3 {
    std::array<double, 9> a{};  // row-major

    double& operator()(int i, int j) { return a[3 * i + j]; }
    double operator()(int i, int j) const { return a[3 * i + j]; }

    static Mat3 identity() {
        Mat3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1;
        return m;
    }
    static Mat3 diag(double d0, double d1, double d2) {
        Mat3 m;
        m(0, 0) = d0;
        m(1, 1) = d1;
        m(2, 2) = d2;
        return m;
    }

    Mat3& operator+=(const Mat3& o) {
        for (int i = 0; i < 9; ++i) a[i] += o.a[i];
        return *this;
    }
    Mat3& operator-=(const Mat3& o) {
        for (int i = 0; i < 9; ++i) a[i] -= o.a[i];
        return *this;
    }
    Mat3& operator*=(double s) {
        for (auto& v : a) v *= s;
        return *this;
    }
    bool operator==(const Mat3&) const = default;
};

inline Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
inline Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
inline Mat3 operator*(double s, Mat3 a) { return a *= s; }
Mat3 operator*(const Mat3& A, const Mat3& B);
Vec3 operator*(const Mat3& A, const Vec3& v);

Mat3 outer(const Vec3& a, const Vec3& b);
Mat3 transpose(const Mat3& A);
double trace(const Mat3& A);
double det(const Mat3& A);
Mat3 cofactor(const Mat3& A);  // det(A) A^{-T}
Mat3 inverse(const Mat3& A);   // throws std::domain_error when singular
double frob(const Mat3& A);
double frob2(const Mat3& A);
double max_abs(const Mat3& A);

BiVec3 wedge(const Vec3& a, const Vec3& b);
Vec3 hodge_star(const BiVec3& xi);
BiVec3 hodge_inverse(const Vec3& v);
BiVec4 wedge4(const Vec4& a, const Vec4& b);
BiVec3 spatial_projection(const BiVec4& xi);
BiVec3 pushforward2(const Mat3& P, const BiVec3& xi);
Vec3 proj_perp(const Vec3& n, const Vec3& v);

}  // namespace dislo
