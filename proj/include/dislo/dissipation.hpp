#pragma once

#include <vector>

#include "dislo/currents.hpp"
#include "dislo/plastic.hpp"

namespace dislo {

// R^b(P, xi) = h(|P|) |W_b pushforward2(P, p(xi))|, h(tau) = h0 + h4 tau^4
struct DissipationParams {
    std::vector<Mat3> weights;  // symmetric positive definite, one per representative
    double h0 = 1.0, h4 = 1.0;

    double hardening(double tau) const { return h0 + h4 * tau * tau * tau * tau; }
    void validate(size_t nreps) const;
    double min_weight_eigenvalue() const;
    static DissipationParams isotropic(size_t nreps, double w = 1.0);
};

double potential(const Mat3& P, const BiVec4& xi, const DissipationParams& params, size_t rep = 0);

// pieces between consecutive path times, clipped to grid cells, split in four, degree-5 rule on each
double dissipation(const SlipTrajectory& traj, const PlasticPath& path, const DissipationParams& params, double a,
                   double b);
double dissipation(const SlipTrajectory& traj, const PlasticPath& path, const DissipationParams& params);

struct VarDissReport {
    double var = 0, diss = 0, C = 0, ratio = 0;
    bool ok = true;
};

// C = 1 / (3 sqrt(3) lambda_min(W)) from |cof(P^{-1})| <= |P^{-1}|^2/sqrt3 <= |P|^4/(3 sqrt3) and h >= h4 tau^4
VarDissReport var_diss_bound(const SlipTrajectory& traj, const PlasticPath& path, const DissipationParams& params,
                             double tol = 1e-12);
double var_diss_constant(const DissipationParams& params);

}  // namespace dislo
