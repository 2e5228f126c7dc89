#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dislo/multivec.hpp"

namespace dislo {

struct CompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Loop {
    std::vector<Vec3> nodes;  // closed: last connects to first
    int multiplicity = 1;
    int burgers_index = 0;
};

struct DislocationSystem {
    std::vector<Loop> loops;
};

// throws std::invalid_argument with a reason
void validate_loop(const Loop& loop, bool strict_interior = false);
bool inside_domain(const Vec3& x);
double loop_mass(const Loop& loop);
double system_mass(const DislocationSystem& phi);
Loop reversed(const Loop& loop);

struct Triangle {
    std::array<Vec4, 3> v;
};

// 1/2 (v1 - v0) ^ (v2 - v0): area-weighted orienting 2-vector
BiVec4 triangle_bivec(const Triangle& tri);
double triangle_area(const Triangle& tri);

// Generator of the slice loops: nodes(t) = start + theta(t) (end - start),
// theta piecewise linear through (knot_t, knot_theta).
struct Leg {
    std::vector<double> knot_t;
    std::vector<double> knot_theta;
    std::vector<Vec3> start, end;

    double t0() const { return knot_t.front(); }
    double t1() const { return knot_t.back(); }
    double theta(double t) const;
};

struct SweptSurface {
    std::vector<Triangle> triangles;
    int multiplicity = 1;
    int burgers_index = 0;
    double sigma = 0, tau = 1;
    std::vector<Leg> legs;
};

struct SlipTrajectory {
    std::vector<SweptSurface> surfaces;  // one per loop of the attached system
    double sigma = 0, tau = 1;
};

// Monotone piecewise-linear time map given by its knots.
struct PiecewiseLinearMap {
    std::vector<double> t, a;

    double operator()(double s) const;
    double inverse(double s) const;
    void validate() const;  // throws std::domain_error unless strictly increasing
    static PiecewiseLinearMap identity(double sigma, double tau);
    static PiecewiseLinearMap sampled(const std::function<double(double)>& f, double sigma, double tau,
                                      int pieces);
};

SweptSurface sweep(const Loop& loop, const std::vector<Vec3>& displacement, double sigma = 0,
                   double tau = 1);
SlipTrajectory sweep_system(const DislocationSystem& phi, const std::vector<std::vector<Vec3>>& displacements,
                            double sigma = 0, double tau = 1);

// clip a triangle to the time slab [a, b]; orientation preserved
std::vector<Triangle> clip_to_slab(const Triangle& tri, double a, double b);

double variation(const SweptSurface& s, double a, double b);
double variation(const SweptSurface& s);
double variation(const SlipTrajectory& traj, double a, double b);
double variation(const SlipTrajectory& traj);
double surface_mass(const SweptSurface& s, double a, double b);
double surface_mass(const SweptSurface& s);
// int M(S(t)) dt evaluated on the triangles (coarea with |grad_S t|)
double slice_mass_integral(const SweptSurface& s, double a, double b);
// |grad_S t| for one triangle, from the tangent plane directly
double time_gradient_norm(const Triangle& tri);

Loop slice_loop(const SweptSurface& s, double t);
Loop initial_loop(const SweptSurface& s);
Loop final_loop(const SweptSurface& s);
double slice_mass(const SlipTrajectory& traj, double t);
double linf_mass(const SlipTrajectory& traj);

SlipTrajectory concatenate(const SlipTrajectory& s1, const SlipTrajectory& s2);
SlipTrajectory rescale_trajectory(const SlipTrajectory& s, const PiecewiseLinearMap& a);
SlipTrajectory neutral(const DislocationSystem& phi, double sigma = 0, double tau = 1);
DislocationSystem dislocation_forward(const SlipTrajectory& traj, const DislocationSystem& phi);

// true when interior edges cancel and the time-boundary traces are -initial and +final
bool boundary_consistent(const SweptSurface& s, double tol = 1e-12);

}  // namespace dislo
