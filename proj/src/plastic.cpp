#include "dislo/plastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dislo {

namespace {

bool is_zero(const Mat3& A) {
    for (double v : A.a)
        if (v != 0.0) return false;
    return true;
}

double norm1(const Mat3& A) {
    double m = 0;
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(A(0, j)) + std::abs(A(1, j)) + std::abs(A(2, j)));
    return m;
}

Mat3 lerp(const Mat3& A, const Mat3& B, double w) {
    Mat3 C;
    for (int i = 0; i < 9; ++i) C.a[i] = A.a[i] + w * (B.a[i] - A.a[i]);
    return C;
}

Mat3 trilinear(const PlasticField& P, const Vec3& x) {
    const Grid& g = P.grid;
    int n = g.n;
    double h = g.h();
    int idx[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
        double s = std::clamp(x[a], 0.0, 1.0) / h;
        int i = std::min(n - 1, int(std::floor(s)));
        idx[a] = i;
        w[a] = s - i;
    }
    Mat3 r;
    for (int c = 0; c < 8; ++c) {
        int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        double wt = (di ? w[0] : 1 - w[0]) * (dj ? w[1] : 1 - w[1]) * (dk ? w[2] : 1 - w[2]);
        if (wt == 0) continue;
        const Mat3& M = P.P[g.index(idx[0] + di, idx[1] + dj, idx[2] + dk)];
        for (int i = 0; i < 9; ++i) r.a[i] += wt * M.a[i];
    }
    return r;
}

Mat3 unit_det(const Mat3& A) {
    double d = det(A);
    if (!(d > 0)) throw std::domain_error("interpolated plastic distortion has non-positive determinant");
    if (d == 1.0) return A;
    return std::pow(d, -1.0 / 3.0) * A;
}

}  // namespace

DriftEvaluation drift(const std::vector<Vec3>& g, const BurgersTable& burgers, const Mat3& R) {
    if (g.size() != burgers.size()) throw std::invalid_argument("drift: one normal rate per representative required");
    Mat3 Rinv = inverse(R);
    DriftEvaluation ev;
    for (size_t r = 0; r < burgers.size(); ++r) {
        if (g[r].x == 0 && g[r].y == 0 && g[r].z == 0) continue;
        const Vec3& b = burgers.b[r];
        ev.value += outer(b, proj_perp(Rinv * b, g[r]));
    }
    ev.generator = Rinv * ev.value;
    ev.trace_residual = std::abs(trace(ev.generator));
    return ev;
}

Mat3 expm(const Mat3& A) {
    Mat3 I = Mat3::identity();
    if (is_zero(A)) return I;
    Mat3 A2 = A * A;
    if (is_zero(A2)) return I + A;
    Mat3 A3 = A2 * A;
    if (is_zero(A3)) return I + A + 0.5 * A2;

    double nrm = norm1(A);
    int s = 0;
    if (nrm > 0.5) s = int(std::ceil(std::log2(nrm / 0.5)));
    Mat3 X = std::ldexp(1.0, -s) * A;
    Mat3 X2 = X * X, X4 = X2 * X2, X6 = X4 * X2;
    const double c[7] = {1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
    Mat3 V = c[0] * I + c[2] * X2 + c[4] * X4 + c[6] * X6;
    Mat3 U = X * (c[1] * I + c[3] * X2 + c[5] * X4);
    Mat3 R = inverse(V - U) * (V + U);
    for (int k = 0; k < s; ++k) R = R * R;
    return R;
}

RateSource trajectory_rates(const SlipTrajectory& traj, const Grid& grid, const Mollifier& eta, size_t nreps) {
    return [&traj, grid, eta, nreps](double t, std::vector<std::vector<Vec3>>& g) {
        SlipRateField f = gamma_field(traj, t, grid, eta, nreps);
        g = normal_rate(f);
    };
}

std::vector<double> uniform_times(double sigma, double tau, int M) {
    if (M < 1) throw std::invalid_argument("substep count must be positive");
    std::vector<double> t(size_t(M) + 1);
    for (int j = 0; j <= M; ++j) t[size_t(j)] = j == M ? tau : sigma + (tau - sigma) * j / M;
    return t;
}

PlasticPath integrate_P(const PlasticField& P0, const RateSource& rates, const BurgersTable& burgers,
                        const std::vector<double>& times) {
    if (times.size() < 2) throw std::invalid_argument("integrate_P: need at least one substep");
    for (const auto& P : P0.P)
        if (std::abs(det(P) - 1.0) > 1e-10) throw std::invalid_argument("integrate_P: initial determinant is not 1");
    PlasticPath path;
    path.times = times;
    path.fields.reserve(times.size());
    path.fields.push_back(P0);
    size_t nreps = burgers.size();
    std::vector<std::vector<Vec3>> g;
    std::vector<Vec3> gn(nreps);
    for (size_t j = 0; j + 1 < times.size(); ++j) {
        double dt = times[j + 1] - times[j];
        double tm = 0.5 * (times[j] + times[j + 1]);
        rates(tm, g);
        PlasticField next = path.fields.back();
        for (size_t i = 0; i < next.P.size(); ++i) {
            bool any = false;
            for (size_t r = 0; r < nreps; ++r) {
                gn[r] = g[r][i];
                any = any || gn[r].x != 0 || gn[r].y != 0 || gn[r].z != 0;
            }
            if (!any) continue;
            const Mat3 Pn = next.P[i];
            DriftEvaluation d1 = drift(gn, burgers, Pn);
            Mat3 Ph = Pn * expm((0.5 * dt) * d1.generator);
            DriftEvaluation d2 = drift(gn, burgers, Ph);
            next.P[i] = Pn * expm(dt * d2.generator);
            path.max_trace_residual = std::max({path.max_trace_residual, d1.trace_residual, d2.trace_residual});
        }
        path.fields.push_back(std::move(next));
    }
    return path;
}

PlasticPath integrate_P(const PlasticField& P0, const SlipTrajectory& traj, const Mollifier& eta,
                        const BurgersTable& burgers, const std::vector<double>& times) {
    return integrate_P(P0, trajectory_rates(traj, P0.grid, eta, burgers.size()), burgers, times);
}

PlasticField plastic_forward(const PlasticField& P0, const SlipTrajectory& traj, const Mollifier& eta,
                             const BurgersTable& burgers, int M) {
    return integrate_P(P0, traj, eta, burgers, uniform_times(traj.sigma, traj.tau, M)).final();
}

double det_residual(const PlasticField& P) {
    double r = 0;
    for (const auto& M : P.P) r = std::max(r, std::abs(det(M) - 1.0));
    return r;
}

Mat3 interpolate_P(const PlasticField& P, const Vec3& x) { return unit_det(trilinear(P, x)); }

Mat3 interpolate_path(const PlasticPath& path, double t, const Vec3& x) {
    const auto& ts = path.times;
    if (t <= ts.front()) return interpolate_P(path.fields.front(), x);
    if (t >= ts.back()) return interpolate_P(path.fields.back(), x);
    size_t j = size_t(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1;
    double w = (t - ts[j]) / (ts[j + 1] - ts[j]);
    return unit_det(lerp(trilinear(path.fields[j], x), trilinear(path.fields[j + 1], x), w));
}

double w1q_norm(const Grid& grid, const std::vector<Mat3>& F, double q) {
    double h = grid.h(), vol = h * h * h;
    double s = 0;
    for (const auto& M : F) s += std::pow(frob(M), q) * vol;
    int p = grid.per_axis();
    for (int k = 0; k < p; ++k)
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < p; ++i) {
                size_t id = grid.index(i, j, k);
                if (i + 1 < p) s += std::pow(frob(F[grid.index(i + 1, j, k)] - F[id]) / h, q) * vol;
                if (j + 1 < p) s += std::pow(frob(F[grid.index(i, j + 1, k)] - F[id]) / h, q) * vol;
                if (k + 1 < p) s += std::pow(frob(F[grid.index(i, j, k + 1)] - F[id]) / h, q) * vol;
            }
    return std::pow(s, 1.0 / q);
}

PChangeReport p_change_bound(const PlasticPath& path, const SlipTrajectory& traj, double q) {
    PChangeReport rep;
    const auto& P0 = path.fields.front();
    for (size_t j = 0; j < path.times.size(); ++j) {
        std::vector<Mat3> diff(P0.P.size());
        double sup = 0;
        for (size_t i = 0; i < diff.size(); ++i) {
            diff[i] = path.fields[j].P[i] - P0.P[i];
            sup = std::max(sup, frob(diff[i]));
        }
        double w = w1q_norm(P0.grid, diff, q);
        double v = variation(traj, traj.sigma, path.times[j]);
        rep.sup_norm.push_back(sup);
        rep.w1q_norm.push_back(w);
        rep.var.push_back(v);
        if (v > 0) {
            rep.defined = true;
            rep.max_ratio_sup = std::max(rep.max_ratio_sup, sup / v);
            rep.max_ratio_w1q = std::max(rep.max_ratio_w1q, w / v);
        }
    }
    return rep;
}

}  // namespace dislo
