#pragma once

#include <functional>
#include <vector>

#include "dislo/currents.hpp"
#include "dislo/multivec.hpp"
#include "dislo/slipfield.hpp"

namespace dislo {

struct PlasticField {
    Grid grid;
    std::vector<Mat3> P;

    static PlasticField identity(const Grid& grid) { return {grid, std::vector<Mat3>(grid.size(), Mat3::identity())}; }
};

struct DriftEvaluation {
    Mat3 value;
    Mat3 generator;  // R^{-1} D
    double trace_residual = 0;
};

// g: normal rates at one node, one entry per representative
DriftEvaluation drift(const std::vector<Vec3>& g, const BurgersTable& burgers, const Mat3& R);

// Pade(6) with scaling and squaring; exact for A^2 = 0 and A^3 = 0
Mat3 expm(const Mat3& A);

// normal rate source: fills g[rep][node] at time t
using RateSource = std::function<void(double t, std::vector<std::vector<Vec3>>& g)>;

RateSource trajectory_rates(const SlipTrajectory& traj, const Grid& grid, const Mollifier& eta, size_t nreps);

struct PlasticPath {
    std::vector<double> times;
    std::vector<PlasticField> fields;
    double max_trace_residual = 0;

    const PlasticField& final() const { return fields.back(); }
};

std::vector<double> uniform_times(double sigma, double tau, int M);

PlasticPath integrate_P(const PlasticField& P0, const RateSource& rates, const BurgersTable& burgers,
                        const std::vector<double>& times);
PlasticPath integrate_P(const PlasticField& P0, const SlipTrajectory& traj, const Mollifier& eta,
                        const BurgersTable& burgers, const std::vector<double>& times);
PlasticField plastic_forward(const PlasticField& P0, const SlipTrajectory& traj, const Mollifier& eta,
                             const BurgersTable& burgers, int M);

double det_residual(const PlasticField& P);

// P at an arbitrary point: trilinear, then P / det(P)^{1/3}
Mat3 interpolate_P(const PlasticField& P, const Vec3& x);
Mat3 interpolate_path(const PlasticPath& path, double t, const Vec3& x);

struct PChangeReport {
    std::vector<double> sup_norm, w1q_norm, var;  // per substep time
    double max_ratio_sup = 0, max_ratio_w1q = 0;  // over times with var > 0
    bool defined = false;
};

PChangeReport p_change_bound(const PlasticPath& path, const SlipTrajectory& traj, double q);

double w1q_norm(const Grid& grid, const std::vector<Mat3>& F, double q);

}  // namespace dislo
