#include "dislo/dissipation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace dislo {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

void DissipationParams::validate(size_t nreps) const {
    if (weights.size() != nreps) throw std::invalid_argument("dissipation: one weight per Burgers representative");
    for (const auto& W : weights) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < i; ++j)
                if (std::abs(W(i, j) - W(j, i)) > 1e-12 * (1 + frob(W)))
                    throw std::invalid_argument("dissipation weight must be symmetric");
    }
    if (!(min_weight_eigenvalue() > 0)) throw std::invalid_argument("dissipation weight must be positive definite");
    if (!(h0 >= 1.0) || !(h4 > 0)) throw std::invalid_argument("hardening needs h0 >= 1 and h4 > 0");
}

double DissipationParams::min_weight_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& W : weights) {
        Eigen::Matrix3d M;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) M(i, j) = W(i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

DissipationParams DissipationParams::isotropic(size_t nreps, double w) {
    DissipationParams p;
    p.weights.assign(nreps, w * Mat3::identity());
    return p;
}

double potential(const Mat3& P, const BiVec4& xi, const DissipationParams& params, size_t rep) {
    if (std::abs(det(P) - 1.0) > 1e-8) throw std::domain_error("potential: det P differs from 1");
    BiVec3 s = spatial_projection(xi);
    if (s.c23 == 0 && s.c31 == 0 && s.c12 == 0) return 0.0;
    Vec3 v = params.weights[rep] * hodge_star(pushforward2(P, s));
    return params.hardening(frob(P)) * norm(v);
}

namespace {

// coordinate 0 is time, 1..3 space
double coord(const Vec4& v, int k) { return k == 0 ? v.t : k == 1 ? v.x.x : k == 2 ? v.x.y : v.x.z; }

std::vector<Vec4> clip_coord(const std::vector<Vec4>& poly, int k, double c, bool keep_above) {
    std::vector<Vec4> out;
    const size_t n = poly.size();
    auto inside = [&](const Vec4& p) { return keep_above ? coord(p, k) >= c : coord(p, k) <= c; };
    for (size_t i = 0; i < n; ++i) {
        const Vec4& cur = poly[i];
        const Vec4& nxt = poly[(i + 1) % n];
        bool ci = inside(cur), ni = inside(nxt);
        if (ci) out.push_back(cur);
        double a = coord(cur, k), b = coord(nxt, k);
        if (ci != ni && a != c && b != c) {
            double u = (c - a) / (b - a);
            out.push_back({cur.t + u * (nxt.t - cur.t), cur.x + u * (nxt.x - cur.x)});
        }
    }
    return out;
}

std::vector<Vec4> clip_band(const std::vector<Vec4>& poly, int k, double lo, double hi) {
    std::vector<Vec4> out = clip_coord(poly, k, lo, true);
    if (out.size() >= 3) out = clip_coord(out, k, hi, false);
    return out;
}

// split a planar polygon along the grid planes of axis k and beyond
void split_cells(const std::vector<Vec4>& poly, int k, double h, std::vector<std::vector<Vec4>>& out) {
    if (k > 3) {
        out.push_back(poly);
        return;
    }
    double lo = kInfinity, hi = -kInfinity;
    for (const auto& v : poly) {
        lo = std::min(lo, coord(v, k));
        hi = std::max(hi, coord(v, k));
    }
    int i0 = int(std::floor(lo / h)), i1 = int(std::ceil(hi / h));
    if (i1 - i0 <= 1) {
        split_cells(poly, k + 1, h, out);
        return;
    }
    for (int i = i0; i < i1; ++i) {
        std::vector<Vec4> part = clip_band(poly, k, i * h, (i + 1) * h);
        if (part.size() >= 3) split_cells(part, k + 1, h, out);
    }
}

Vec4 mid(const Vec4& a, const Vec4& b) { return {0.5 * (a.t + b.t), 0.5 * (a.x + b.x)}; }

// degree-5 seven-point rule on triangles
constexpr double kQw[3] = {0.225, 0.132394152788506, 0.125939180544827};
constexpr double kQa[3] = {1.0 / 3.0, 0.059715871789770, 0.797426985353087};
constexpr double kQb[3] = {1.0 / 3.0, 0.470142064105115, 0.101286507323456};

}  // namespace

double dissipation(const SlipTrajectory& traj, const PlasticPath& path, const DissipationParams& params, double a,
                   double b) {
    const auto& ts = path.times;
    const double h = path.fields.front().grid.h();
    double total = 0;
    std::vector<std::vector<Vec4>> cells;
    std::vector<Triangle> pieces;
    for (const auto& s : traj.surfaces) {
        size_t rep = size_t(s.burgers_index);
        double part = 0;
        for (const auto& tri : s.triangles) {
            double lo = std::min({tri.v[0].t, tri.v[1].t, tri.v[2].t});
            double hi = std::max({tri.v[0].t, tri.v[1].t, tri.v[2].t});
            BiVec4 xi = triangle_bivec(tri);
            BiVec3 sp = spatial_projection(xi);
            if (sp.c23 == 0 && sp.c31 == 0 && sp.c12 == 0) continue;
            const double area = mass(xi);
            for (size_t j = 0; j + 1 < ts.size(); ++j) {
                double sa = std::max({a, ts[j], lo}), sb = std::min({b, ts[j + 1], hi});
                if (!(sb > sa)) continue;
                std::vector<Vec4> poly = clip_band({tri.v.begin(), tri.v.end()}, 0, sa, sb);
                if (poly.size() < 3) continue;
                cells.clear();
                split_cells(poly, 1, h, cells);
                const PlasticField& F0 = path.fields[j];
                const PlasticField& F1 = path.fields[j + 1];
                const bool frozen = F0.P == F1.P;
                for (const auto& cell : cells) {
                    pieces.clear();
                    for (size_t k = 1; k + 1 < cell.size(); ++k) {
                        Triangle t{{cell[0], cell[k], cell[k + 1]}};
                        Vec4 m01 = mid(t.v[0], t.v[1]), m12 = mid(t.v[1], t.v[2]), m20 = mid(t.v[2], t.v[0]);
                        pieces.push_back({{t.v[0], m01, m20}});
                        pieces.push_back({{m01, t.v[1], m12}});
                        pieces.push_back({{m20, m12, t.v[2]}});
                        pieces.push_back({{m01, m12, m20}});
                    }
                    for (const auto& piece : pieces) {
                        double w_area = triangle_area(piece) / area;
                        if (!(w_area > 0)) continue;
                        BiVec4 xp = w_area * xi;
                        for (int g = 0; g < 7; ++g) {
                            int cls = g == 0 ? 0 : (g + 2) / 3;
                            int rot = g == 0 ? 0 : (g - 1) % 3;
                            double l[3] = {kQb[cls], kQb[cls], kQb[cls]};
                            l[rot] = kQa[cls];
                            Vec4 c{l[0] * piece.v[0].t + l[1] * piece.v[1].t + l[2] * piece.v[2].t,
                                   l[0] * piece.v[0].x + l[1] * piece.v[1].x + l[2] * piece.v[2].x};
                            Mat3 P = interpolate_P(F0, c.x);
                            double w = (c.t - ts[j]) / (ts[j + 1] - ts[j]);
                            if (!frozen && w > 0) {
                                Mat3 Q = interpolate_P(F1, c.x);
                                Mat3 L = P + w * (Q - P);
                                P = std::pow(det(L), -1.0 / 3.0) * L;
                            }
                            part += kQw[cls] * potential(P, xp, params, rep);
                        }
                    }
                }
            }
        }
        total += part * s.multiplicity;
    }
    return total;
}

double dissipation(const SlipTrajectory& traj, const PlasticPath& path, const DissipationParams& params) {
    return dissipation(traj, path, params, traj.sigma, traj.tau);
}

double var_diss_constant(const DissipationParams& params) {
    return 1.0 / (3.0 * std::sqrt(3.0) * params.min_weight_eigenvalue() * params.h4);
}

VarDissReport var_diss_bound(const SlipTrajectory& traj, const PlasticPath& path, const DissipationParams& params,
                             double tol) {
    VarDissReport r;
    r.var = variation(traj);
    r.diss = dissipation(traj, path, params);
    r.C = var_diss_constant(params);
    r.ratio = r.diss > 0 ? r.var / r.diss : 0.0;
    r.ok = r.var <= r.C * r.diss + tol;
    return r;
}

}  // namespace dislo
