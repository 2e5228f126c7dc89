#include "dislo/energy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace dislo {

void ElasticDensityParams::validate() const {
    if (!(p > 3)) throw std::invalid_argument("requires p > 3");
    if (!(r > p)) throw std::invalid_argument("requires r > p");
    if (!(q > 3)) throw std::invalid_argument("requires q > 3");
    if (!(det_floor >= 0)) throw std::invalid_argument("det_floor must be nonnegative");
}

namespace {

double pow_half(double x2, double e) {
    // (x2)^(e/2) with a fast path for even integer e
    double k = e / 2;
    if (k == std::floor(k) && k >= 0 && k <= 8) {
        double r = 1;
        for (int i = 0; i < int(k); ++i) r *= x2;
        return r;
    }
    return std::pow(x2, k);
}

}  // namespace

double elastic_density(const Mat3& E, const ElasticDensityParams& params) {
    double d = det(E);
    if (!(d > 0)) return kInf;
    return pow_half(frob2(E), params.r) + 1.0 / d;
}

Mat3 elastic_stress(const Mat3& E, const ElasticDensityParams& params) {
    double d = det(E);
    Mat3 S = (params.r * pow_half(frob2(E), params.r - 2)) * E;
    S -= (1.0 / (d * d)) * cofactor(E);
    return S;
}

Mesh::Mesh(int m_) : m(m_) {
    if (m < 1) throw std::invalid_argument("mesh needs at least one cell");
    double h = 1.0 / m;
    double g = 1.0 / std::sqrt(3.0);
    double pts[2] = {0.5 * (1 - g), 0.5 * (1 + g)};
    for (int q = 0; q < 8; ++q) {
        double xi[3] = {pts[q & 1], pts[(q >> 1) & 1], pts[(q >> 2) & 1]};
        qp_local[q] = {xi[0] * h, xi[1] * h, xi[2] * h};
        for (int a = 0; a < 8; ++a) {
            int d[3] = {a & 1, (a >> 1) & 1, (a >> 2) & 1};
            double f[3], df[3];
            for (int k = 0; k < 3; ++k) {
                f[k] = d[k] ? xi[k] : 1 - xi[k];
                df[k] = (d[k] ? 1.0 : -1.0) / h;
            }
            N[q][a] = f[0] * f[1] * f[2];
            dN[q][a] = {df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]};
        }
    }
    weight = h * h * h / 8.0;
}

std::array<size_t, 8> Mesh::element_nodes(size_t e) const {
    size_t ei = e % m, ej = (e / m) % m, ek = e / (size_t(m) * m);
    size_t p = m + 1;
    std::array<size_t, 8> nd{};
    for (int a = 0; a < 8; ++a) {
        size_t i = ei + (a & 1), j = ej + ((a >> 1) & 1), k = ek + ((a >> 2) & 1);
        nd[a] = (k * p + j) * p + i;
    }
    return nd;
}

Vec3 Mesh::qp_position(size_t e, int q) const {
    double h = 1.0 / m;
    size_t ei = e % m, ej = (e / m) % m, ek = e / (size_t(m) * m);
    return Vec3{ei * h, ej * h, ek * h} + qp_local[q];
}

bool Mesh::on_boundary(size_t node) const {
    size_t p = m + 1;
    size_t i = node % p, j = (node / p) % p, k = node / (p * p);
    return i == 0 || j == 0 || k == 0 || i == size_t(m) || j == size_t(m) || k == size_t(m);
}

double Ramp::value(double t) const {
    switch (kind) {
        case Kind::Linear: return rate * t;
        case Kind::Quadratic: return rate * t * t;
        case Kind::Constant: return rate;
    }
    return 0;
}

double Ramp::derivative(double t) const {
    switch (kind) {
        case Kind::Linear: return rate;
        case Kind::Quadratic: return 2 * rate * t;
        case Kind::Constant: return 0;
    }
    return 0;
}

Ramp::Kind Ramp::parse(const std::string& s) {
    if (s == "linear") return Kind::Linear;
    if (s == "quadratic") return Kind::Quadratic;
    if (s == "constant") return Kind::Constant;
    throw std::invalid_argument("unknown ramp type '" + s + "'");
}

std::string Ramp::name(Kind k) {
    switch (k) {
        case Kind::Linear: return "linear";
        case Kind::Quadratic: return "quadratic";
        case Kind::Constant: return "constant";
    }
    return "?";
}

PlasticQP plastic_at_qp(const Mesh& mesh, const PlasticField& P) {
    PlasticQP out;
    size_t nq = mesh.elements() * 8;
    out.P.resize(nq);
    out.Pinv.resize(nq);
    bool same_grid = P.grid.n == mesh.m;
    for (size_t e = 0; e < mesh.elements(); ++e) {
        auto nd = mesh.element_nodes(e);
        for (int q = 0; q < 8; ++q) {
            Mat3 M;
            if (same_grid) {
                bool all_id = true;
                for (int a = 0; a < 8; ++a) all_id = all_id && P.P[nd[a]] == Mat3::identity();
                if (all_id) {
                    M = Mat3::identity();
                } else {
                    for (int a = 0; a < 8; ++a) M += mesh.N[q][a] * P.P[nd[a]];
                    double d = det(M);
                    if (!(d > 0)) throw std::domain_error("interpolated plastic distortion is singular");
                    M = std::pow(d, -1.0 / 3.0) * M;
                }
            } else {
                M = interpolate_P(P, mesh.qp_position(e, q));
            }
            out.P[e * 8 + q] = M;
            out.Pinv[e * 8 + q] = M == Mat3::identity() ? M : inverse(M);
        }
    }
    return out;
}

DeformationField affine_deformation(const Mesh& mesh, const AffineMap& g) {
    DeformationField y;
    Grid grid = mesh.grid();
    y.y.resize(mesh.nodes());
    for (size_t i = 0; i < y.y.size(); ++i) y.y[i] = g(grid.position(i));
    return y;
}

namespace {

template <bool WithGrad>
double energy_impl(const Mesh& mesh, const DeformationField& y, const PlasticQP& P,
                   const ElasticDensityParams& params, std::vector<Vec3>* grad, double floor) {
    if constexpr (WithGrad) grad->assign(mesh.nodes(), Vec3{});
    double total = 0;
    const double w = mesh.weight;
    for (size_t e = 0; e < mesh.elements(); ++e) {
        auto nd = mesh.element_nodes(e);
        Vec3 ye[8];
        for (int a = 0; a < 8; ++a) ye[a] = y.y[nd[a]];
        Vec3 ge[8];
        for (int q = 0; q < 8; ++q) {
            Mat3 F;
            for (int a = 0; a < 8; ++a) {
                const Vec3& d = mesh.dN[q][a];
                const Vec3& v = ye[a];
                F.a[0] += v.x * d.x; F.a[1] += v.x * d.y; F.a[2] += v.x * d.z;
                F.a[3] += v.y * d.x; F.a[4] += v.y * d.y; F.a[5] += v.y * d.z;
                F.a[6] += v.z * d.x; F.a[7] += v.z * d.y; F.a[8] += v.z * d.z;
            }
            const Mat3& Qi = P.Pinv[e * 8 + q];
            Mat3 E = F * Qi;
            double dE = det(E);
            if (!(dE > floor)) return kInf;
            total += w * (pow_half(frob2(E), params.r) + 1.0 / dE);
            if constexpr (WithGrad) {
                Mat3 S = elastic_stress(E, params) * transpose(Qi);
                for (int a = 0; a < 8; ++a) {
                    const Vec3& d = mesh.dN[q][a];
                    ge[a].x += w * (S.a[0] * d.x + S.a[1] * d.y + S.a[2] * d.z);
                    ge[a].y += w * (S.a[3] * d.x + S.a[4] * d.y + S.a[5] * d.z);
                    ge[a].z += w * (S.a[6] * d.x + S.a[7] * d.y + S.a[8] * d.z);
                }
            }
        }
        if constexpr (WithGrad)
            for (int a = 0; a < 8; ++a) (*grad)[nd[a]] += ge[a];
    }
    return total;
}

}  // namespace

double elastic_energy(const Mesh& mesh, const DeformationField& y, const PlasticQP& P,
                      const ElasticDensityParams& params, double floor) {
    return energy_impl<false>(mesh, y, P, params, nullptr, floor);
}

double elastic_energy_grad(const Mesh& mesh, const DeformationField& y, const PlasticQP& P,
                           const ElasticDensityParams& params, std::vector<Vec3>& grad, double floor) {
    return energy_impl<true>(mesh, y, P, params, &grad, floor);
}

std::vector<Vec3> load_vector(const Mesh& mesh, const AffineMap& profile) {
    std::vector<Vec3> F(mesh.nodes());
    for (size_t e = 0; e < mesh.elements(); ++e) {
        auto nd = mesh.element_nodes(e);
        for (int q = 0; q < 8; ++q) {
            Vec3 f = profile(mesh.qp_position(e, q));
            for (int a = 0; a < 8; ++a) F[nd[a]] += (mesh.weight * mesh.N[q][a]) * f;
        }
    }
    return F;
}

double load_pairing(const std::vector<Vec3>& F, const DeformationField& y) {
    double s = 0;
    for (size_t i = 0; i < F.size(); ++i) s += dot(F[i], y.y[i]);
    return s;
}

ElasticResult minimize_elastic(const Mesh& mesh, const PlasticQP& P, const std::vector<Vec3>& load, double ramp_value,
                               const ElasticDensityParams& params, const DeformationField& warm,
                               const SolverOptions& opts) {
    std::vector<size_t> interior;
    for (size_t i = 0; i < mesh.nodes(); ++i)
        if (!mesh.on_boundary(i)) interior.push_back(i);
    const size_t n = interior.size() * 3;

    DeformationField y = warm;
    std::vector<Vec3> gfull;
    auto evaluate = [&](const DeformationField& yy, std::vector<double>* g) {
        double W;
        if (g) {
            W = elastic_energy_grad(mesh, yy, P, params, gfull, params.det_floor);
            if (std::isfinite(W)) {
                g->resize(n);
                for (size_t k = 0; k < interior.size(); ++k) {
                    Vec3 v = gfull[interior[k]] - ramp_value * load[interior[k]];
                    (*g)[3 * k] = v.x;
                    (*g)[3 * k + 1] = v.y;
                    (*g)[3 * k + 2] = v.z;
                }
            }
        } else {
            W = elastic_energy(mesh, yy, P, params, params.det_floor);
        }
        if (!std::isfinite(W)) return kInf;
        return W - ramp_value * load_pairing(load, yy);
    };
    auto apply = [&](const DeformationField& base, const std::vector<double>& d, double a) {
        DeformationField out = base;
        for (size_t k = 0; k < interior.size(); ++k) {
            Vec3& v = out.y[interior[k]];
            v.x += a * d[3 * k];
            v.y += a * d[3 * k + 1];
            v.z += a * d[3 * k + 2];
        }
        return out;
    };
    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    auto vdot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };

    std::vector<double> g;
    double f = evaluate(y, &g);
    if (!std::isfinite(f)) throw InitializationError("elastic solve: warm start has infinite energy");

    ElasticResult res;
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    const double h = 1.0 / mesh.m;
    double bb = 0;  // Barzilai-Borwein scale for the gradient method
    int it = 0, stall = 0;
    for (; it < opts.max_iter; ++it) {
        if (inf_norm(g) < opts.gtol) break;
        std::vector<double> d(n);
        bool quasi = opts.method == SolverOptions::Method::Lbfgs && !S.empty();
        if (quasi) {
            std::vector<double> qv = g;
            std::vector<double> alpha(S.size());
            for (size_t i = S.size(); i-- > 0;) {
                alpha[i] = rho[i] * vdot(S[i], qv);
                for (size_t k = 0; k < n; ++k) qv[k] -= alpha[i] * Y[i][k];
            }
            double gamma = vdot(S.back(), Y.back()) / vdot(Y.back(), Y.back());
            for (auto& v : qv) v *= gamma;
            for (size_t i = 0; i < S.size(); ++i) {
                double beta = rho[i] * vdot(Y[i], qv);
                for (size_t k = 0; k < n; ++k) qv[k] += (alpha[i] - beta) * S[i][k];
            }
            for (size_t k = 0; k < n; ++k) d[k] = -qv[k];
            if (vdot(d, g) >= 0) quasi = false;
        }
        double step;
        if (!quasi) {
            for (size_t k = 0; k < n; ++k) d[k] = -g[k];
            step = bb > 0 ? bb : std::min(1.0, 0.01 * h / inf_norm(d));
            S.clear();
            Y.clear();
            rho.clear();
        } else {
            step = 1.0;
        }
        double slope = vdot(g, d);
        DeformationField trial;
        double ft = kInf;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial = apply(y, d, step);
            ft = evaluate(trial, nullptr);
            if (std::isfinite(ft) && ft <= f + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            if (quasi) {
                // drop curvature memory and retry along the gradient
                S.clear();
                Y.clear();
                rho.clear();
                bb = 0;
                continue;
            }
            break;
        }
        std::vector<double> gn;
        double fn = evaluate(trial, &gn);
        std::vector<double> s(n), yv(n);
        for (size_t k = 0; k < n; ++k) {
            s[k] = step * d[k];
            yv[k] = gn[k] - g[k];
        }
        double sy = vdot(s, yv);
        if (sy > 1e-16 * std::sqrt(vdot(s, s) * vdot(yv, yv))) {
            S.push_back(std::move(s));
            Y.push_back(std::move(yv));
            rho.push_back(1.0 / sy);
            if (int(S.size()) > opts.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
            if (opts.method == SolverOptions::Method::Gradient) {
                bb = sy / vdot(Y.back(), Y.back());
                S.clear();
                Y.clear();
                rho.clear();
            }
        }
        // stop once the decrease sits at roundoff level
        stall = f - fn <= 1e-15 * std::abs(f) ? stall + 1 : 0;
        y = std::move(trial);
        f = fn;
        g = std::move(gn);
        if (stall >= 20) break;
    }
    res.y = std::move(y);
    res.iterations = it;
    res.grad_inf = inf_norm(g);
    res.converged = res.grad_inf < opts.gtol;
    res.potential = f;
    res.load = ramp_value * load_pairing(load, res.y);
    res.elastic = elastic_energy(mesh, res.y, P, params);
    return res;
}

double core_energy(const DislocationSystem& phi, double zeta) { return zeta * system_mass(phi); }

EnergyBreakdown total_energy(const Mesh& mesh, double ramp_value, const std::vector<Vec3>& load,
                             const DeformationField& y, const PlasticQP& P, const DislocationSystem& phi,
                             const ElasticDensityParams& params, double zeta) {
    EnergyBreakdown b;
    b.elastic = elastic_energy(mesh, y, P, params);
    b.load = ramp_value * load_pairing(load, y);
    b.core = core_energy(phi, zeta);
    b.total = b.elastic - b.load + b.core;
    return b;
}

CoercivityReport coercivity_check(const Mesh& mesh, const Loading& loading, double t, const AffineMap& boundary,
                                  const DeformationField& y, const PlasticQP& P, const DislocationSystem& phi,
                                  const ElasticDensityParams& params, double zeta) {
    const double p = params.p, r = params.r, s = params.s();
    const double pc = p / (p - 1);
    double grad_p = 0, P_s = 0, f_pp = 0, g_p = 0;
    double ramp = loading.ramp.value(t);
    for (size_t e = 0; e < mesh.elements(); ++e) {
        auto nd = mesh.element_nodes(e);
        for (int q = 0; q < 8; ++q) {
            Mat3 F;
            for (int a = 0; a < 8; ++a) F += outer(y.y[nd[a]], mesh.dN[q][a]);
            Vec3 x = mesh.qp_position(e, q);
            grad_p += mesh.weight * std::pow(frob(F), p);
            P_s += mesh.weight * std::pow(frob(P.P[e * 8 + q]), s);
            f_pp += mesh.weight * std::pow(norm(ramp * loading.profile(x)), pc);
            g_p += mesh.weight * std::pow(norm(boundary(x)), p);
        }
    }
    // |F|^p <= |E|^p |P|^p <= (p/r)|E|^r + ((r-p)/r)|P|^s
    // <f,y> <= |f|_{p'} (|grad y|_p + G), G = |grad g|_p + |g|_p (Poincare constant 1 on the unit cube)
    // Young with eps = r/(2p): a b <= eps a^p + K b^{p'}
    double G = frob(boundary.A) + std::pow(g_p, 1.0 / p);
    double eps = r / (2 * p);
    double K = std::pow(eps * p, -pc / p) / pc;
    double c_low = std::min(r / (2 * p), zeta);
    double c_high = std::max({(r - p) / p, K + 1.0 / pc, std::pow(G, p) / p});
    double C = std::max(1.0 / c_low, c_high);

    CoercivityReport rep;
    rep.grad_p = grad_p;
    rep.P_s = P_s;
    rep.f_pp = f_pp;
    rep.mass = system_mass(phi);
    rep.C = C;
    std::vector<Vec3> F = load_vector(mesh, loading.profile);
    rep.lhs = total_energy(mesh, ramp, F, y, P, phi, params, zeta).total;
    rep.rhs = (grad_p + rep.mass) / C - C * (P_s + f_pp + 1.0);
    rep.margin = rep.lhs - rep.rhs;
    return rep;
}

}  // namespace dislo
