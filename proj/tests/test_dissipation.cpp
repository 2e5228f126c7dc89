#include <doctest.h>

#include <random>

#include "dislo/dissipation.hpp"

using namespace dislo;

namespace {

Loop rect(double x0, double x1, double y0, double y1, double z) {
    Loop l;
    l.nodes = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
    return l;
}

PlasticPath identity_path(const Grid& grid, std::vector<double> times) {
    PlasticPath p;
    p.times = times;
    p.fields.assign(times.size(), PlasticField::identity(grid));
    return p;
}

}  // namespace

TEST_CASE("potential values") {
    auto params = DissipationParams::isotropic(1);
    BiVec4 e12 = wedge4(Vec4{0, {1, 0, 0}}, Vec4{0, {0, 1, 0}});
    CHECK(potential(Mat3::identity(), e12, params) == doctest::Approx(10.0).epsilon(1e-15));
    BiVec4 e01 = wedge4(Vec4{1, {}}, Vec4{0, {1, 0, 0}});
    CHECK(potential(Mat3::identity(), e01, params) == 0);
    CHECK_THROWS_AS(potential(Mat3::diag(2, 1, 1), e12, params), std::domain_error);
    // positively 1-homogeneous
    CHECK(potential(Mat3::identity(), 2.5 * e12, params) == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("hardening is monotone") {
    DissipationParams p = DissipationParams::isotropic(1);
    double prev = p.hardening(0);
    for (double t = 0.1; t < 5; t += 0.1) {
        CHECK(p.hardening(t) > prev);
        prev = p.hardening(t);
    }
    p.h4 = 0;
    CHECK_THROWS(p.validate(1));
    DissipationParams q = DissipationParams::isotropic(1);
    q.weights[0](0, 1) = 2;  // not symmetric
    CHECK_THROWS(q.validate(1));
    CHECK_NOTHROW(DissipationParams::isotropic(2, 0.5).validate(2));
    CHECK(DissipationParams::isotropic(2, 0.5).min_weight_eigenvalue() == doctest::Approx(0.5));
}

TEST_CASE("dissipation of a translated rectangle at P = I") {
    Grid grid{4};
    auto params = DissipationParams::isotropic(1);
    DislocationSystem phi{{rect(0.1, 0.5, 0.0, 1.0, 0.5)}};
    SlipTrajectory tr = sweep_system(phi, {std::vector<Vec3>(4, {0.1, 0, 0})});
    PlasticPath id = identity_path(grid, uniform_times(0, 1, 4));
    CHECK(dissipation(tr, id, params) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(dissipation(tr, id, params, 0, 0.5) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(dissipation(neutral(phi), id, params) == 0);
}

TEST_CASE("additivity over intervals and concatenation") {
    Grid grid{8};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    BurgersTable B{{{0.1, 0, 0}}};
    auto params = DissipationParams::isotropic(1, 0.3);
    DislocationSystem phi{{rect(0.3, 0.6, 0.3, 0.6, 0.5)}};
    std::vector<Vec3> d = {{0.05, 0.01, 0.0}, {0.0, 0.03, 0.02}, {-0.02, 0.0, 0.01}, {0.04, -0.03, 0.0}};
    SlipTrajectory a = sweep_system(phi, {d});
    PlasticPath pa = integrate_P(PlasticField::identity(grid), a, eta, B, uniform_times(0, 1, 8));
    double whole = dissipation(a, pa, params);
    double split = dissipation(a, pa, params, 0, 0.3) + dissipation(a, pa, params, 0.3, 1);
    CHECK(std::abs(whole - split) <= 1e-12 * whole);

    DislocationSystem phi1 = dislocation_forward(a, phi);
    SlipTrajectory b = sweep_system(phi1, {std::vector<Vec3>(4, {0, 0.04, 0})});
    PlasticPath pb = integrate_P(pa.final(), b, eta, B, uniform_times(0, 1, 8));
    SlipTrajectory c = concatenate(a, b);
    std::vector<double> times = uniform_times(0, 0.5, 8), t2 = uniform_times(0.5, 1, 8);
    times.insert(times.end(), t2.begin() + 1, t2.end());
    PlasticPath pc = integrate_P(PlasticField::identity(grid), c, eta, B, times);
    double dc = dissipation(c, pc, params);
    double sum = whole + dissipation(b, pb, params);
    CHECK(std::abs(dc - sum) <= 1e-12 * sum);
}

TEST_CASE("reparametrization invariance") {
    Grid grid{8};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    BurgersTable B{{{0.1, 0, 0}}};
    auto params = DissipationParams::isotropic(1, 0.3);
    DislocationSystem phi{{rect(0.3, 0.6, 0.3, 0.6, 0.5)}};
    SlipTrajectory a = sweep_system(phi, {std::vector<Vec3>(4, {0.05, 0.02, 0})});
    PiecewiseLinearMap m{{0, 0.25, 0.5, 0.75, 1}, {0, 0.1, 0.3, 0.7, 1}};
    SlipTrajectory r = rescale_trajectory(a, m);
    PlasticPath pa = integrate_P(PlasticField::identity(grid), a, eta, B, m.t);
    PlasticPath pr = integrate_P(PlasticField::identity(grid), r, eta, B, m.a);
    double da = dissipation(a, pa, params), dr = dissipation(r, pr, params);
    CHECK(std::abs(da - dr) <= 1e-12 * da);
}

TEST_CASE("variation is controlled by dissipation") {
    Grid grid{8};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    BurgersTable B{{{0.2, 0, 0}}};
    DislocationSystem phi{{rect(0.3, 0.6, 0.3, 0.6, 0.5)}};
    std::mt19937_64 g(6);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    for (double w : {0.1, 1.0, 3.0}) {
        auto params = DissipationParams::isotropic(1, w);
        for (int k = 0; k < 6; ++k) {
            std::vector<Vec3> d(4);
            for (auto& v : d) v = {u(g), u(g), u(g)};
            SlipTrajectory tr = sweep_system(phi, {d});
            PlasticPath path = integrate_P(PlasticField::identity(grid), tr, eta, B, uniform_times(0, 1, 4));
            VarDissReport rep = var_diss_bound(tr, path, params);
            CHECK(rep.ok);
            CHECK(rep.var <= rep.C * rep.diss);
        }
    }
}
