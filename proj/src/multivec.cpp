#include "dislo/multivec.hpp"

namespace dislo {

Mat3 operator*(const Mat3& A, const Mat3& B) {
    Mat3 C;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            C(i, j) = A(i, 0) * B(0, j) + A(i, 1) * B(1, j) + A(i, 2) * B(2, j);
    return C;
}

Vec3 operator*(const Mat3& A, const Vec3& v) {
    return {A(0, 0) * v.x + A(0, 1) * v.y + A(0, 2) * v.z,
            A(1, 0) * v.x + A(1, 1) * v.y + A(1, 2) * v.z,
            A(2, 0) * v.x + A(2, 1) * v.y + A(2, 2) * v.z};
}

Mat3 outer(const Vec3& a, const Vec3& b) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = a[i] * b[j];
    return m;
}

Mat3 transpose(const Mat3& A) {
    Mat3 T;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) T(i, j) = A(j, i);
    return T;
}

double trace(const Mat3& A) { return A(0, 0) + A(1, 1) + A(2, 2); }

double det(const Mat3& A) {
    return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
           A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
           A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
}

Mat3 cofactor(const Mat3& A) {
    Mat3 C;
    C(0, 0) = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
    C(0, 1) = A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2);
    C(0, 2) = A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0);
    C(1, 0) = A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2);
    C(1, 1) = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
    C(1, 2) = A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1);
    C(2, 0) = A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1);
    C(2, 1) = A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2);
    C(2, 2) = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    return C;
}

Mat3 inverse(const Mat3& A) {
    double d = det(A);
    if (!(std::abs(d) > 0) || !std::isfinite(d)) throw std::domain_error("inverse: singular matrix");
    Mat3 inv = transpose(cofactor(A));
    inv *= 1.0 / d;
    return inv;
}

double frob2(const Mat3& A) {
    double s = 0;
    for (double v : A.a) s += v * v;
    return s;
}

double frob(const Mat3& A) { return std::sqrt(frob2(A)); }

double max_abs(const Mat3& A) {
    double m = 0;
    for (double v : A.a) m = std::max(m, std::abs(v));
    return m;
}

BiVec3 wedge(const Vec3& a, const Vec3& b) {
    Vec3 c = cross(a, b);
    return {c.x, c.y, c.z};
}

Vec3 hodge_star(const BiVec3& xi) { return {xi.c23, xi.c31, xi.c12}; }

BiVec3 hodge_inverse(const Vec3& v) { return {v.x, v.y, v.z}; }

BiVec4 wedge4(const Vec4& a, const Vec4& b) {
    BiVec4 r;
    r.c[0] = a.t * b.x.x - a.x.x * b.t;
    r.c[1] = a.t * b.x.y - a.x.y * b.t;
    r.c[2] = a.t * b.x.z - a.x.z * b.t;
    Vec3 s = cross(a.x, b.x);
    r.c[3] = s.x;
    r.c[4] = s.y;
    r.c[5] = s.z;
    return r;
}

BiVec3 spatial_projection(const BiVec4& xi) { return {xi.c[3], xi.c[4], xi.c[5]}; }

// (Pa) x (Pb) = cof(P) (a x b)
BiVec3 pushforward2(const Mat3& P, const BiVec3& xi) {
    Vec3 v = cofactor(P) * hodge_star(xi);
    return hodge_inverse(v);
}

Vec3 proj_perp(const Vec3& n, const Vec3& v) {
    double nn = dot(n, n);
    if (!(nn > 0)) throw std::domain_error("proj_perp: zero normal");
    return v - (dot(v, n) / nn) * n;
}

}  // namespace dislo
