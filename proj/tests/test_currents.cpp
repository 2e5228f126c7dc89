#include <doctest.h>

#include <cmath>
#include <random>

#include "dislo/currents.hpp"

using namespace dislo;

namespace {

Loop rect(double x0, double x1, double y0, double y1, double z, int mult = 1) {
    Loop l;
    l.nodes = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
    l.multiplicity = mult;
    return l;
}

std::vector<Vec3> uniform(size_t n, Vec3 d) { return std::vector<Vec3>(n, d); }

SlipTrajectory single(const SweptSurface& s) {
    SlipTrajectory t;
    t.surfaces = {s};
    t.sigma = s.sigma;
    t.tau = s.tau;
    return t;
}

}  // namespace

TEST_CASE("loop mass") {
    CHECK(loop_mass(rect(0, 1, 0, 1, 0.5)) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(loop_mass(rect(0, 1, 0, 1, 0.5, 3)) == doctest::Approx(12.0).epsilon(1e-15));
    Loop ngon;
    const int n = 64;
    for (int i = 0; i < n; ++i) ngon.nodes.push_back({std::cos(2 * M_PI * i / n), std::sin(2 * M_PI * i / n), 0});
    CHECK(loop_mass(ngon) == doctest::Approx(2 * n * std::sin(M_PI / n)).epsilon(1e-13));
}

TEST_CASE("loop validation") {
    CHECK_NOTHROW(validate_loop(rect(0, 1, 0, 1, 0.5)));
    CHECK_THROWS(validate_loop(rect(0, 1, 0, 1, 0.5), true));
    CHECK_THROWS(validate_loop(rect(0.2, 1.2, 0.2, 0.4, 0.5)));
    Loop dup = rect(0.2, 0.4, 0.2, 0.4, 0.5);
    dup.nodes[1] = dup.nodes[0];
    CHECK_THROWS(validate_loop(dup));
}

TEST_CASE("static sweep") {
    Loop sq = rect(0, 1, 0, 1, 0.5);
    SweptSurface s = sweep(sq, uniform(4, {}), 0, 1);
    CHECK(variation(s) == 0);
    CHECK(surface_mass(s) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(boundary_consistent(s));
}

TEST_CASE("translated rectangle: variation 2h and the mass estimate") {
    const double h = 0.1;
    Loop r = rect(0.1, 0.5, 0.0, 1.0, 0.5);
    SweptSurface s = sweep(r, uniform(4, {h, 0, 0}), 0, 1);
    CHECK(variation(s) == doctest::Approx(2 * h).epsilon(1e-14));
    CHECK(variation(s, 0, 0.5) == doctest::Approx(h).epsilon(1e-14));
    CHECK(variation(s, 0.5, 1) == doctest::Approx(h).epsilon(1e-14));
    double M = surface_mass(s);
    double slices = slice_mass_integral(s, 0, 1);
    double V = variation(s);
    CHECK(slices == doctest::Approx(loop_mass(r)).epsilon(1e-12));
    CHECK(M >= std::max(slices, V) - 1e-12);
    CHECK(M <= slices + V + 1e-12);
    CHECK(loop_mass(slice_loop(s, 0.37)) == doctest::Approx(loop_mass(r)).epsilon(1e-14));
    CHECK(boundary_consistent(s));
}

TEST_CASE("single-node displacement sweeps a triangle fan") {
    const double d = 0.05, L = 0.4;
    Loop sq = rect(0.3, 0.3 + L, 0.3, 0.3 + L, 0.5);
    std::vector<Vec3> disp(4);
    disp[2] = {0, 0, d};
    SweptSurface s = sweep(sq, disp, 0, 1);
    // each of the two adjacent edges sweeps a right triangle with legs L and d
    CHECK(variation(s) == doctest::Approx(d * L).epsilon(1e-13));
    CHECK(boundary_consistent(s));
}

TEST_CASE("slices of a ruled sweep") {
    Loop sq = rect(0.2, 0.6, 0.2, 0.6, 0.4);
    std::vector<Vec3> disp = {{0.1, 0, 0}, {0, 0.1, 0}, {0, 0, 0.1}, {-0.1, 0.05, 0}};
    SweptSurface s = sweep(sq, disp, 0, 1);
    Loop mid = slice_loop(s, 0.5);
    for (size_t i = 0; i < 4; ++i) CHECK(norm(mid.nodes[i] - (sq.nodes[i] + 0.5 * disp[i])) < 1e-15);
    CHECK(slice_loop(s, 0).nodes == sq.nodes);
    CHECK_THROWS_AS(slice_loop(s, 1.5), std::domain_error);
    CHECK(boundary_consistent(s));
}

TEST_CASE("per-triangle decomposition |grad t|^2 + |p(S)|^2 = 1") {
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    Loop sq = rect(0.3, 0.7, 0.3, 0.7, 0.5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Vec3> disp(4);
        for (auto& v : disp) v = {u(g), u(g), u(g)};
        SweptSurface s = sweep(sq, disp, 0, 1);
        for (const auto& tri : s.triangles) {
            BiVec4 xi = triangle_bivec(tri);
            double a = mass(xi);
            if (a < 1e-12) continue;
            xi *= 1.0 / a;
            double p = mass(spatial_projection(xi));
            double tg = time_gradient_norm(tri);
            CHECK(std::abs(p * p + tg * tg - 1.0) <= 1e-12);
        }
        double M = surface_mass(s), sl = slice_mass_integral(s, 0, 1), V = variation(s);
        CHECK(M <= sl + V + 1e-12);
    }
}

TEST_CASE("leaving the domain is rejected") {
    Loop sq = rect(0.3, 0.9, 0.3, 0.7, 0.5);
    CHECK_THROWS_AS(sweep(sq, uniform(4, {0.2, 0, 0}), 0, 1), std::out_of_range);
}

TEST_CASE("concatenation") {
    const double h = 0.1;
    DislocationSystem phi{{rect(0.1, 0.4, 0.0, 1.0, 0.5)}};
    SlipTrajectory a = sweep_system(phi, {uniform(4, {h, 0, 0})});
    DislocationSystem phi1 = dislocation_forward(a, phi);
    SlipTrajectory b = sweep_system(phi1, {uniform(4, {h, 0, 0})});
    SlipTrajectory c = concatenate(a, b);
    CHECK(std::abs(variation(c) - (variation(a) + variation(b))) <= 1e-12);
    CHECK(variation(c) == doctest::Approx(4 * h).epsilon(1e-13));
    DislocationSystem f2 = dislocation_forward(b, phi1);
    DislocationSystem fc = dislocation_forward(c, phi);
    CHECK(fc.loops[0].nodes == f2.loops[0].nodes);
    // the neutral trajectory at the end leaves the variation unchanged
    SlipTrajectory cn = concatenate(a, neutral(phi1));
    CHECK(std::abs(variation(cn) - variation(a)) <= 1e-12);
    CHECK_THROWS_AS(concatenate(b, a), CompositionError);
    CHECK(boundary_consistent(c.surfaces[0]));
}

TEST_CASE("L-infinity mass of a concatenation is the larger one") {
    // perimeter 1 grows to perimeter 1.5 by stretching in x
    DislocationSystem phi{{rect(0.3, 0.55, 0.3, 0.55, 0.5)}};
    SlipTrajectory a = neutral(phi);
    std::vector<Vec3> d{{0, 0, 0}, {0.25, 0, 0}, {0.25, 0, 0}, {0, 0, 0}};
    SlipTrajectory b = sweep_system(phi, {d});
    CHECK(linf_mass(a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(linf_mass(b) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(linf_mass(concatenate(a, b)) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("time rescaling") {
    Loop sq = rect(0.2, 0.6, 0.2, 0.6, 0.4);
    std::vector<Vec3> disp = {{0.1, 0, 0.02}, {0, 0.1, 0}, {0, 0, 0.1}, {-0.1, 0.05, 0}};
    SlipTrajectory s = single(sweep(sq, disp, 0, 1));
    SlipTrajectory id = rescale_trajectory(s, PiecewiseLinearMap::identity(0, 1));
    CHECK(id.surfaces[0].triangles.size() == s.surfaces[0].triangles.size());
    CHECK(variation(id) == variation(s));

    auto sq2 = [](double t) { return t * t; };
    PiecewiseLinearMap a = PiecewiseLinearMap::sampled(sq2, 0, 1, 8);
    SlipTrajectory r = rescale_trajectory(s, a);
    CHECK(std::abs(variation(r) - variation(s)) <= 1e-12);
    CHECK(std::abs(variation(r, 0, a(0.5)) - variation(s, 0, 0.5)) <= 1e-12);
    for (double t : {0.13, 0.5, 0.77}) {
        Loop l0 = slice_loop(s.surfaces[0], t);
        Loop l1 = slice_loop(r.surfaces[0], a(t));
        for (size_t i = 0; i < 4; ++i) CHECK(norm(l0.nodes[i] - l1.nodes[i]) < 1e-14);
    }
    PiecewiseLinearMap bad{{0, 0.5, 1}, {0, 0.7, 0.6}};
    CHECK_THROWS_AS(rescale_trajectory(s, bad), std::domain_error);
}

TEST_CASE("neutral trajectory") {
    DislocationSystem phi{{rect(0.2, 0.6, 0.2, 0.6, 0.4), rect(0.3, 0.5, 0.1, 0.9, 0.7, 2)}};
    SlipTrajectory n = neutral(phi);
    CHECK(variation(n) == 0);
    CHECK(linf_mass(n) == doctest::Approx(system_mass(phi)).epsilon(1e-15));
    DislocationSystem f = dislocation_forward(n, phi);
    for (size_t i = 0; i < 2; ++i) CHECK(f.loops[i].nodes == phi.loops[i].nodes);
    CHECK(slice_loop(n.surfaces[1], 0.4).nodes == phi.loops[1].nodes);
}
