#include "dislo/slipfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dislo {

double Mollifier::operator()(const Vec3& x) const {
    double q = dot(x, x) / (rho * rho);
    if (q >= 1.0) return 0.0;
    double s = 1.0 - q;
    s *= s;
    return c * s * s;
}

Mollifier make_mollifier(double rho, const Grid& grid) {
    if (!(rho > 0)) throw std::invalid_argument("mollifier radius must be positive");
    double h = grid.h();
    int r = int(std::ceil(rho / h));
    double sum = 0;
    for (int k = -r; k <= r; ++k)
        for (int j = -r; j <= r; ++j)
            for (int i = -r; i <= r; ++i) {
                double q = h * h * double(i * i + j * j + k * k) / (rho * rho);
                if (q < 1.0) {
                    double s = (1 - q) * (1 - q);
                    sum += s * s;
                }
            }
    Mollifier m;
    m.rho = rho;
    m.c = 1.0 / (sum * h * h * h);
    return m;
}

void BurgersTable::validate() const {
    if (b.empty()) throw std::invalid_argument("Burgers table is empty");
    for (size_t i = 0; i < b.size(); ++i) {
        if (!(norm(b[i]) > 0)) throw std::invalid_argument("zero Burgers vector");
        for (size_t j = 0; j < i; ++j)
            if (norm(cross(b[i], b[j])) <= 1e-12 * norm(b[i]) * norm(b[j]))
                throw std::invalid_argument("parallel Burgers representatives");
    }
}

namespace {

void accumulate_triangle(const Triangle& tri, double t, int mult, const Grid& grid, const Mollifier& eta,
                         std::vector<BiVec3>& out) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return tri.v[a].t < tri.v[b].t; });
    const Vec4& V0 = tri.v[o[0]];
    const Vec4& V1 = tri.v[o[1]];
    const Vec4& V2 = tri.v[o[2]];
    double t0 = V0.t, t1 = V1.t, t2 = V2.t;
    if (!(t > t0 && t < t2)) return;

    Vec3 Lp = (1.0 / (t2 - t0)) * (V2.x - V0.x);
    Vec3 L = V0.x + (t - t0) * Lp;
    Vec3 Mp, M;
    double tm;  // where the two edges meet
    if (t < t1) {
        Mp = (1.0 / (t1 - t0)) * (V1.x - V0.x);
        M = V0.x + (t - t0) * Mp;
        tm = t0;
    } else {
        Mp = (1.0 / (t2 - t1)) * (V2.x - V1.x);
        M = V1.x + (t - t1) * Mp;
        tm = t2;
    }
    Vec3 du = M - L;
    Vec3 vel = 0.5 * (Lp + Mp);
    // vel ^ du with du = (t - tm)(Mp - Lp); exactly zero when either edge is static
    BiVec3 xi = (t - tm) * wedge(Lp, Mp);
    if (xi.c23 == 0 && xi.c31 == 0 && xi.c12 == 0) return;

    // orient the (t, u) parameterization like the triangle
    BiVec4 T = wedge4({1.0, vel}, {0.0, du});
    BiVec4 S = wedge4(tri.v[1] - tri.v[0], tri.v[2] - tri.v[0]);
    double sg = dot(S, T);
    if (sg == 0) return;
    double sign = sg > 0 ? 1.0 : -1.0;

    // eta is a degree-8 polynomial along any chord of its support: 5-point Gauss is exact
    static const double gx[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                 0.9061798459386640};
    static const double gw[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                 0.2369268850561891};
    const double h = grid.h(), r2 = eta.rho * eta.rho, aa = dot(du, du);
    const int n = grid.n;
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        double mn = std::min(L[a], M[a]), mx = std::max(L[a], M[a]);
        lo[a] = std::max(0, int(std::ceil((mn - eta.rho) / h)));
        hi[a] = std::min(n, int(std::floor((mx + eta.rho) / h)));
    }
    const double w0 = sign * mult;
    for (int k = lo[2]; k <= hi[2]; ++k)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int i = lo[0]; i <= hi[0]; ++i) {
                Vec3 x{i * h, j * h, k * h};
                Vec3 e = x - L;
                double bb = dot(e, du), disc = bb * bb - aa * (dot(e, e) - r2);
                if (!(disc > 0)) continue;
                double sq = std::sqrt(disc);
                double ua = std::max(0.0, (bb - sq) / aa), ub = std::min(1.0, (bb + sq) / aa);
                if (!(ub > ua)) continue;
                double mid = 0.5 * (ua + ub), half = 0.5 * (ub - ua), sum = 0;
                for (int q = 0; q < 5; ++q) sum += gw[q] * eta(x - (L + (mid + half * gx[q]) * du));
                double f = w0 * half * sum;
                BiVec3& dst = out[grid.index(i, j, k)];
                dst.c23 += f * xi.c23;
                dst.c31 += f * xi.c31;
                dst.c12 += f * xi.c12;
            }
}

}  // namespace

SlipRateField gamma_field(const SlipTrajectory& traj, double t, const Grid& grid, const Mollifier& eta, size_t nreps) {
    SlipRateField f;
    f.grid = grid;
    f.t = t;
    f.gamma.assign(nreps, std::vector<BiVec3>(grid.size()));
    for (const auto& s : traj.surfaces) {
        if (s.burgers_index < 0 || size_t(s.burgers_index) >= nreps)
            throw std::out_of_range("gamma_field: burgers_index outside the table");
        for (const auto& tri : s.triangles)
            accumulate_triangle(tri, t, s.multiplicity, grid, eta, f.gamma[size_t(s.burgers_index)]);
    }
    return f;
}

std::vector<std::vector<Vec3>> normal_rate(const SlipRateField& f) {
    std::vector<std::vector<Vec3>> g(f.gamma.size());
    for (size_t r = 0; r < f.gamma.size(); ++r) {
        g[r].resize(f.gamma[r].size());
        for (size_t i = 0; i < f.gamma[r].size(); ++i) g[r][i] = hodge_star(f.gamma[r][i]);
    }
    return g;
}

SweptSurface reversed(const SweptSurface& s) {
    SweptSurface r = s;
    for (auto& tri : r.triangles) std::swap(tri.v[1], tri.v[2]);
    for (auto& leg : r.legs) {
        std::reverse(leg.start.begin(), leg.start.end());
        std::reverse(leg.end.begin(), leg.end.end());
    }
    return r;
}

GammaBoundReport gamma_bound_check(const SlipTrajectory& traj, const Grid& grid, const Mollifier& eta, size_t nreps,
                                   double a, double b, int slabs, double tol) {
    GammaBoundReport rep;
    rep.lhs.assign(nreps, 0.0);
    rep.rhs.assign(nreps, 0.0);
    double dt = (b - a) / slabs;
    for (int j = 0; j < slabs; ++j) {
        SlipRateField f = gamma_field(traj, a + (j + 0.5) * dt, grid, eta, nreps);
        for (size_t r = 0; r < nreps; ++r) {
            double mx = 0;
            for (const auto& g : f.gamma[r]) mx = std::max(mx, mass(g));
            rep.lhs[r] += dt * mx;
        }
    }
    for (const auto& s : traj.surfaces) rep.rhs[size_t(s.burgers_index)] += eta.c * variation(s, a, b);
    for (size_t r = 0; r < nreps; ++r)
        if (rep.lhs[r] > rep.rhs[r] + tol * (1 + rep.rhs[r])) rep.ok = false;
    return rep;
}

}  // namespace dislo
