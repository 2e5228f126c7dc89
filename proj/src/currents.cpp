#include "dislo/currents.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace dislo {

namespace {

double lerp_piecewise(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    size_t i = size_t(it - xs.begin()) - 1;
    double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return ys[i] + w * (ys[i + 1] - ys[i]);
}

Vec4 cut(const Vec4& p, const Vec4& q, double t) {
    double w = (t - p.t) / (q.t - p.t);
    Vec4 r{t, p.x + w * (q.x - p.x)};
    return r;
}

std::vector<Vec4> clip_half(const std::vector<Vec4>& poly, double c, bool keep_above) {
    std::vector<Vec4> out;
    size_t n = poly.size();
    auto inside = [&](const Vec4& p) { return keep_above ? p.t >= c : p.t <= c; };
    for (size_t i = 0; i < n; ++i) {
        const Vec4& cur = poly[i];
        const Vec4& nxt = poly[(i + 1) % n];
        bool ci = inside(cur), ni = inside(nxt);
        if (ci) out.push_back(cur);
        if (ci != ni) {
            // strict crossing only; a vertex on the plane is kept as is
            if (cur.t != c && nxt.t != c) out.push_back(cut(cur, nxt, c));
        }
    }
    return out;
}


void remap_times(SweptSurface& s, const std::function<double(double)>& f) {
    for (auto& tri : s.triangles)
        for (auto& v : tri.v) v.t = f(v.t);
    for (auto& leg : s.legs)
        for (auto& t : leg.knot_t) t = f(t);
}

bool same_point(const Vec4& a, const Vec4& b, double tol) {
    return std::abs(a.t - b.t) <= tol && norm(a.x - b.x) <= tol;
}

}  // namespace

bool inside_domain(const Vec3& x) {
    for (int i = 0; i < 3; ++i)
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) return false;
    return true;
}

void validate_loop(const Loop& loop, bool strict_interior) {
    if (loop.nodes.size() < 3) throw std::invalid_argument("loop needs at least 3 nodes");
    if (loop.multiplicity < 1) throw std::invalid_argument("loop multiplicity must be positive");
    if (loop.burgers_index < 0) throw std::invalid_argument("negative burgers_index");
    size_t n = loop.nodes.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec3& x = loop.nodes[i];
        if (!std::isfinite(x.x) || !std::isfinite(x.y) || !std::isfinite(x.z))
            throw std::invalid_argument("non-finite loop node");
        if (!inside_domain(x)) throw std::invalid_argument("loop node outside the closed unit cube");
        if (strict_interior)
            for (int a = 0; a < 3; ++a)
                if (x[a] <= 0.0 || x[a] >= 1.0)
                    throw std::invalid_argument("loop node not strictly inside the unit cube");
        if (loop.nodes[(i + 1) % n] == x) throw std::invalid_argument("consecutive loop nodes coincide");
    }
}

double loop_mass(const Loop& loop) {
    double L = 0;
    size_t n = loop.nodes.size();
    for (size_t i = 0; i < n; ++i) L += norm(loop.nodes[(i + 1) % n] - loop.nodes[i]);
    return L * loop.multiplicity;
}

double system_mass(const DislocationSystem& phi) {
    double m = 0;
    for (const auto& l : phi.loops) m += loop_mass(l);
    return m;
}

Loop reversed(const Loop& loop) {
    Loop r = loop;
    std::reverse(r.nodes.begin(), r.nodes.end());
    return r;
}

BiVec4 triangle_bivec(const Triangle& tri) {
    BiVec4 xi = wedge4(tri.v[1] - tri.v[0], tri.v[2] - tri.v[0]);
    xi *= 0.5;
    return xi;
}

double triangle_area(const Triangle& tri) { return mass(triangle_bivec(tri)); }

double time_gradient_norm(const Triangle& tri) {
    // orthonormal basis of the tangent plane by Gram-Schmidt in R^{1+3}
    auto dot4 = [](const Vec4& a, const Vec4& b) { return a.t * b.t + dot(a.x, b.x); };
    Vec4 u = tri.v[1] - tri.v[0];
    Vec4 w = tri.v[2] - tri.v[0];
    double nu = std::sqrt(dot4(u, u));
    if (nu == 0) std::swap(u, w), nu = std::sqrt(dot4(u, u));
    if (nu == 0) return 0;
    u.t /= nu;
    u.x *= 1.0 / nu;
    double c = dot4(w, u);
    Vec4 v{w.t - c * u.t, w.x - c * u.x};
    double nv = std::sqrt(dot4(v, v));
    if (nv <= 1e-300) return 0;
    v.t /= nv;
    v.x *= 1.0 / nv;
    return std::sqrt(u.t * u.t + v.t * v.t);
}

double Leg::theta(double t) const { return lerp_piecewise(knot_t, knot_theta, t); }

double PiecewiseLinearMap::operator()(double s) const {
    if (s < t.front() || s > t.back()) {
        // affine extension by the end pieces
        size_t i = s < t.front() ? 0 : t.size() - 2;
        return a[i] + (s - t[i]) * (a[i + 1] - a[i]) / (t[i + 1] - t[i]);
    }
    return lerp_piecewise(t, a, s);
}

double PiecewiseLinearMap::inverse(double s) const { return lerp_piecewise(a, t, s); }

void PiecewiseLinearMap::validate() const {
    if (t.size() < 2 || t.size() != a.size()) throw std::domain_error("time map needs matching knots");
    for (size_t i = 0; i + 1 < t.size(); ++i)
        if (!(t[i + 1] > t[i]) || !(a[i + 1] > a[i]))
            throw std::domain_error("time map must be strictly increasing");
}

PiecewiseLinearMap PiecewiseLinearMap::identity(double sigma, double tau) { return {{sigma, tau}, {sigma, tau}}; }

PiecewiseLinearMap PiecewiseLinearMap::sampled(const std::function<double(double)>& f, double sigma, double tau,
                                               int pieces) {
    PiecewiseLinearMap m;
    for (int i = 0; i <= pieces; ++i) {
        double s = i == pieces ? tau : sigma + (tau - sigma) * i / pieces;
        m.t.push_back(s);
        m.a.push_back(f(s));
    }
    m.validate();
    return m;
}

SweptSurface sweep(const Loop& loop, const std::vector<Vec3>& d, double sigma, double tau) {
    size_t n = loop.nodes.size();
    if (d.size() != n) throw std::invalid_argument("sweep: displacement count differs from node count");
    if (!(tau > sigma)) throw std::invalid_argument("sweep: empty interval");
    SweptSurface s;
    s.multiplicity = loop.multiplicity;
    s.burgers_index = loop.burgers_index;
    s.sigma = sigma;
    s.tau = tau;
    Leg leg;
    leg.knot_t = {sigma, tau};
    leg.knot_theta = {0.0, 1.0};
    leg.start = loop.nodes;
    leg.end.resize(n);
    for (size_t i = 0; i < n; ++i) {
        leg.end[i] = loop.nodes[i] + d[i];
        // the domain is convex, so checking the endpoint covers the whole segment
        if (!inside_domain(leg.end[i])) throw std::out_of_range("sweep: node leaves the closed domain");
    }
    s.triangles.reserve(2 * n);
    for (size_t i = 0; i < n; ++i) {
        size_t j = (i + 1) % n;
        Vec4 A{sigma, leg.start[i]}, B{sigma, leg.start[j]};
        Vec4 C{tau, leg.end[j]}, D{tau, leg.end[i]};
        // quad oriented A, D, C, B so that the tau trace is +final and the sigma trace -initial
        if (i < j) {
            s.triangles.push_back({{A, D, C}});
            s.triangles.push_back({{A, C, B}});
        } else {
            s.triangles.push_back({{A, D, B}});
            s.triangles.push_back({{D, C, B}});
        }
    }
    s.legs.push_back(std::move(leg));
    return s;
}

SlipTrajectory sweep_system(const DislocationSystem& phi, const std::vector<std::vector<Vec3>>& displacements,
                            double sigma, double tau) {
    if (displacements.size() != phi.loops.size())
        throw std::invalid_argument("sweep_system: one displacement list per loop required");
    SlipTrajectory tr;
    tr.sigma = sigma;
    tr.tau = tau;
    for (size_t i = 0; i < phi.loops.size(); ++i) tr.surfaces.push_back(sweep(phi.loops[i], displacements[i], sigma, tau));
    return tr;
}

std::vector<Triangle> clip_to_slab(const Triangle& tri, double a, double b) {
    double lo = std::min({tri.v[0].t, tri.v[1].t, tri.v[2].t});
    double hi = std::max({tri.v[0].t, tri.v[1].t, tri.v[2].t});
    if (lo >= a && hi <= b) return {tri};
    if (hi < a || lo > b) return {};
    std::vector<Vec4> poly(tri.v.begin(), tri.v.end());
    poly = clip_half(poly, a, true);
    if (poly.size() >= 3) poly = clip_half(poly, b, false);
    std::vector<Triangle> out;
    for (size_t k = 1; k + 1 < poly.size(); ++k) out.push_back({{poly[0], poly[k], poly[k + 1]}});
    return out;
}

double variation(const SweptSurface& s, double a, double b) {
    double v = 0;
    for (const auto& tri : s.triangles)
        for (const auto& piece : clip_to_slab(tri, a, b)) v += mass(spatial_projection(triangle_bivec(piece)));
    return v * s.multiplicity;
}

double variation(const SweptSurface& s) { return variation(s, s.sigma, s.tau); }

double variation(const SlipTrajectory& traj, double a, double b) {
    double v = 0;
    for (const auto& s : traj.surfaces) v += variation(s, a, b);
    return v;
}

double variation(const SlipTrajectory& traj) { return variation(traj, traj.sigma, traj.tau); }

double surface_mass(const SweptSurface& s, double a, double b) {
    double m = 0;
    for (const auto& tri : s.triangles)
        for (const auto& piece : clip_to_slab(tri, a, b)) m += triangle_area(piece);
    return m * s.multiplicity;
}

double surface_mass(const SweptSurface& s) { return surface_mass(s, s.sigma, s.tau); }

double slice_mass_integral(const SweptSurface& s, double a, double b) {
    double m = 0;
    for (const auto& tri : s.triangles)
        for (const auto& piece : clip_to_slab(tri, a, b)) m += triangle_area(piece) * time_gradient_norm(piece);
    return m * s.multiplicity;
}

Loop slice_loop(const SweptSurface& s, double t) {
    if (!(t >= s.sigma && t <= s.tau)) throw std::domain_error("slice_loop: time outside the interval");
    const Leg* leg = &s.legs.back();
    for (const auto& l : s.legs)
        if (t <= l.t1()) {
            leg = &l;
            break;
        }
    double th = leg->theta(t);
    Loop loop;
    loop.multiplicity = s.multiplicity;
    loop.burgers_index = s.burgers_index;
    loop.nodes.resize(leg->start.size());
    for (size_t i = 0; i < loop.nodes.size(); ++i) {
        if (th == 0.0)
            loop.nodes[i] = leg->start[i];
        else if (th == 1.0)
            loop.nodes[i] = leg->end[i];
        else
            loop.nodes[i] = leg->start[i] + th * (leg->end[i] - leg->start[i]);
    }
    return loop;
}

Loop initial_loop(const SweptSurface& s) {
    Loop l{s.legs.front().start, s.multiplicity, s.burgers_index};
    return l;
}

Loop final_loop(const SweptSurface& s) {
    Loop l{s.legs.back().end, s.multiplicity, s.burgers_index};
    return l;
}

double slice_mass(const SlipTrajectory& traj, double t) {
    double m = 0;
    for (const auto& s : traj.surfaces) m += loop_mass(slice_loop(s, t));
    return m;
}

double linf_mass(const SlipTrajectory& traj) {
    // each slice length is convex in t between knots, so the sup sits on a knot
    std::vector<double> ts{traj.sigma, traj.tau};
    for (const auto& s : traj.surfaces)
        for (const auto& l : s.legs) ts.insert(ts.end(), l.knot_t.begin(), l.knot_t.end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    double m = 0;
    for (double t : ts) {
        double tot = 0;
        for (const auto& s : traj.surfaces) {
            // at a leg junction both sides coincide; take the later leg for definiteness
            tot += loop_mass(slice_loop(s, t));
        }
        m = std::max(m, tot);
    }
    return m;
}

SlipTrajectory concatenate(const SlipTrajectory& s1, const SlipTrajectory& s2) {
    if (s1.surfaces.size() != s2.surfaces.size())
        throw CompositionError("concatenate: trajectories carry different loop counts");
    SlipTrajectory out;
    out.sigma = 0;
    out.tau = 1;
    for (size_t i = 0; i < s1.surfaces.size(); ++i) {
        const auto& a = s1.surfaces[i];
        const auto& b = s2.surfaces[i];
        if (a.multiplicity != b.multiplicity || a.burgers_index != b.burgers_index)
            throw CompositionError("concatenate: surface labels differ");
        if (final_loop(a).nodes != initial_loop(b).nodes)
            throw CompositionError("concatenate: final loops of the first leg differ from initial loops of the second");
        SweptSurface s;
        s.multiplicity = a.multiplicity;
        s.burgers_index = a.burgers_index;
        s.sigma = 0;
        s.tau = 1;
        double sa = 0.5 / (a.tau - a.sigma), sb = 0.5 / (b.tau - b.sigma);
        auto fa = [&](double t) { return t == a.tau ? 0.5 : (t - a.sigma) * sa; };
        auto fb = [&](double t) { return t == b.tau ? 1.0 : 0.5 + (t - b.sigma) * sb; };
        SweptSurface ca = a, cb = b;
        remap_times(ca, fa);
        remap_times(cb, fb);
        s.triangles = ca.triangles;
        s.triangles.insert(s.triangles.end(), cb.triangles.begin(), cb.triangles.end());
        s.legs = ca.legs;
        s.legs.insert(s.legs.end(), cb.legs.begin(), cb.legs.end());
        out.surfaces.push_back(std::move(s));
    }
    return out;
}

SlipTrajectory rescale_trajectory(const SlipTrajectory& traj, const PiecewiseLinearMap& map) {
    map.validate();
    if (map.t.front() > traj.sigma || map.t.back() < traj.tau)
        throw std::domain_error("rescale: map does not cover the trajectory interval");
    std::vector<double> cuts;
    for (double k : map.t)
        if (k > traj.sigma && k < traj.tau) cuts.push_back(k);
    auto f = [&](double t) { return map(t); };
    SlipTrajectory out;
    out.sigma = map(traj.sigma);
    out.tau = map(traj.tau);
    for (const auto& s : traj.surfaces) {
        SweptSurface r = s;
        // split at the knots so that the time map is affine on every triangle
        std::vector<Triangle> tris = s.triangles;
        for (double c : cuts) {
            std::vector<Triangle> next;
            next.reserve(tris.size());
            for (const auto& tri : tris) {
                double lo = std::min({tri.v[0].t, tri.v[1].t, tri.v[2].t});
                double hi = std::max({tri.v[0].t, tri.v[1].t, tri.v[2].t});
                if (!(lo < c && c < hi)) {
                    next.push_back(tri);
                    continue;
                }
                for (const auto& p : clip_to_slab(tri, lo, c)) next.push_back(p);
                for (const auto& p : clip_to_slab(tri, c, hi)) next.push_back(p);
            }
            tris = std::move(next);
        }
        r.triangles = std::move(tris);
        for (auto& leg : r.legs) {
            std::vector<double> kt = leg.knot_t;
            for (double c : cuts)
                if (c > leg.t0() && c < leg.t1()) kt.push_back(c);
            std::sort(kt.begin(), kt.end());
            kt.erase(std::unique(kt.begin(), kt.end()), kt.end());
            std::vector<double> th;
            for (double t : kt) th.push_back(leg.theta(t));
            leg.knot_t = kt;
            leg.knot_theta = th;
        }
        remap_times(r, f);
        r.sigma = out.sigma;
        r.tau = out.tau;
        out.surfaces.push_back(std::move(r));
    }
    return out;
}

SlipTrajectory neutral(const DislocationSystem& phi, double sigma, double tau) {
    std::vector<std::vector<Vec3>> d;
    for (const auto& l : phi.loops) d.emplace_back(l.nodes.size(), Vec3{});
    return sweep_system(phi, d, sigma, tau);
}

DislocationSystem dislocation_forward(const SlipTrajectory& traj, const DislocationSystem& phi) {
    if (traj.surfaces.size() != phi.loops.size())
        throw CompositionError("forward: trajectory does not match the dislocation system");
    DislocationSystem out;
    for (size_t i = 0; i < phi.loops.size(); ++i) {
        const auto& s = traj.surfaces[i];
        const auto& l = phi.loops[i];
        if (initial_loop(s).nodes != l.nodes || s.multiplicity != l.multiplicity ||
            s.burgers_index != l.burgers_index)
            throw CompositionError("forward: initial trace differs from loop " + std::to_string(i));
        out.loops.push_back(final_loop(s));
    }
    return out;
}

bool boundary_consistent(const SweptSurface& s, double tol) {
    struct Edge {
        Vec4 p, q;
        bool used = false;
    };
    std::vector<Edge> edges;
    for (const auto& tri : s.triangles)
        for (int k = 0; k < 3; ++k) edges.push_back({tri.v[k], tri.v[(k + 1) % 3]});
    // cancel opposite pairs
    for (size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].used) continue;
        for (size_t j = i + 1; j < edges.size(); ++j) {
            if (edges[j].used) continue;
            if (same_point(edges[i].p, edges[j].q, tol) && same_point(edges[i].q, edges[j].p, tol)) {
                edges[i].used = edges[j].used = true;
                break;
            }
        }
    }
    std::vector<Edge> expected;
    Loop a = initial_loop(s), b = final_loop(s);
    size_t n = a.nodes.size();
    for (size_t i = 0; i < n; ++i) {
        size_t j = (i + 1) % n;
        expected.push_back({{s.sigma, a.nodes[j]}, {s.sigma, a.nodes[i]}});
        expected.push_back({{s.tau, b.nodes[i]}, {s.tau, b.nodes[j]}});
    }
    std::vector<const Edge*> rest;
    for (const auto& e : edges)
        if (!e.used && !same_point(e.p, e.q, tol)) rest.push_back(&e);
    size_t nexp = 0;
    for (const auto& e : expected)
        if (!same_point(e.p, e.q, tol)) ++nexp;
    if (rest.size() != nexp) return false;
    // edge-by-edge match of the traces
    for (const auto& e : expected) {
        if (same_point(e.p, e.q, tol)) continue;
        bool found = false;
        for (const Edge* r : rest)
            if (same_point(r->p, e.p, tol) && same_point(r->q, e.q, tol)) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

}  // namespace dislo
