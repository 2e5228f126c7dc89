#include <doctest.h>

#include <random>

#include "dislo/slipfield.hpp"

using namespace dislo;

namespace {

Loop rect(double x0, double x1, double y0, double y1, double z, int mult = 1) {
    Loop l;
    l.nodes = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
    l.multiplicity = mult;
    return l;
}

SlipTrajectory moving_edge(Vec3 p0, Vec3 p1, Vec3 d, int mult = 1) {
    Vec4 A{0, p0}, B{0, p1}, C{1, p1 + d}, D{1, p0 + d};
    SweptSurface s;
    s.multiplicity = mult;
    s.triangles = {{{A, D, C}}, {{A, C, B}}};
    SlipTrajectory t;
    t.surfaces = {s};
    return t;
}

BiVec3 grid_integral(const SlipRateField& f, size_t rep) {
    double h = f.grid.h();
    BiVec3 s;
    for (const auto& g : f.gamma[rep]) s += g;
    s *= h * h * h;
    return s;
}

}  // namespace

TEST_CASE("mollifier") {
    Grid grid{16};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    CHECK(eta(Vec3{eta.rho, 0, 0}) == 0);
    CHECK(eta(Vec3{0, 0, 2 * eta.rho}) == 0);
    CHECK(eta(Vec3{}) == eta.c);
    double s = 0;
    Vec3 c{0.5, 0.5, 0.5};
    for (size_t i = 0; i < grid.size(); ++i) s += eta(grid.position(i) - c);
    s *= std::pow(grid.h(), 3);
    CHECK(std::abs(s - 1.0) <= 1e-6);
    // continuum constant for comparison: c = 3465 / (512 pi rho^3)
    double cont = 3465.0 / (512.0 * M_PI * std::pow(eta.rho, 3));
    CHECK(eta.c == doctest::Approx(cont).epsilon(0.02));
}

TEST_CASE("burgers table validation") {
    BurgersTable ok{{{1, 0, 0}, {0, 1, 0}}};
    CHECK_NOTHROW(ok.validate());
    BurgersTable zero{{{0, 0, 0}}};
    CHECK_THROWS(zero.validate());
    BurgersTable par{{{1, 0, 0}, {-2, 0, 0}}};
    CHECK_THROWS(par.validate());
}

TEST_CASE("neutral trajectory has zero slip rate") {
    Grid grid{8};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    DislocationSystem phi{{rect(0.3, 0.7, 0.3, 0.7, 0.5)}};
    SlipRateField f = gamma_field(neutral(phi), 0.5, grid, eta, 1);
    for (const auto& g : f.gamma[0]) CHECK(mass(g) == 0);
}

TEST_CASE("moving straight edge: total slip rate is v L e1^e2") {
    const double v = 0.1, L = 0.25;
    for (int n : {16, 24}) {
        Grid grid{n};
        for (double rho : {0.15, 0.2}) {
            Mollifier eta = make_mollifier(rho, grid);
            SlipTrajectory tr = moving_edge({0.41, 0.37, 0.52}, {0.41, 0.37 + L, 0.52}, {v, 0, 0});
            SlipRateField f = gamma_field(tr, 0.5, grid, eta, 1);
            BiVec3 I = grid_integral(f, 0);
            CHECK(I.c12 == doctest::Approx(v * L).epsilon(2e-3));
            CHECK(std::abs(I.c23) < 1e-15);
            CHECK(std::abs(I.c31) < 1e-15);
            auto g = normal_rate(f);
            Vec3 gs;
            for (const auto& x : g[0]) gs += x;
            CHECK(gs.z > 0);
            CHECK(std::abs(gs.x) < 1e-12);
            // multiplicity doubles the field exactly
            SlipRateField f2 = gamma_field(moving_edge({0.41, 0.37, 0.52}, {0.41, 0.37 + L, 0.52}, {v, 0, 0}, 2),
                                           0.5, grid, eta, 1);
            for (size_t i = 0; i < grid.size(); ++i) {
                CHECK(f2.gamma[0][i].c12 == 2 * f.gamma[0][i].c12);
            }
        }
    }
}

TEST_CASE("normal rate is the Hodge star") {
    SlipRateField f;
    f.grid = Grid{1};
    f.gamma = {std::vector<BiVec3>(8)};
    f.gamma[0][3] = {0, 0, 1};
    auto g = normal_rate(f);
    CHECK(g[0][3] == Vec3{0, 0, 1});
    CHECK(g[0][0] == Vec3{});
}

TEST_CASE("orientation reversal flips the sign") {
    Grid grid{8};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    DislocationSystem phi{{rect(0.3, 0.6, 0.35, 0.65, 0.45)}};
    std::vector<Vec3> d = {{0.05, 0.01, 0.0}, {0.0, 0.03, 0.02}, {-0.02, 0.0, 0.01}, {0.04, -0.03, 0.0}};
    SlipTrajectory a = sweep_system(phi, {d});
    SlipTrajectory b = a;
    b.surfaces[0] = reversed(a.surfaces[0]);
    SlipRateField fa = gamma_field(a, 0.3, grid, eta, 1), fb = gamma_field(b, 0.3, grid, eta, 1);
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(fb.gamma[0][i].c23 + fa.gamma[0][i].c23) <= 1e-15);
        CHECK(std::abs(fb.gamma[0][i].c31 + fa.gamma[0][i].c31) <= 1e-15);
        CHECK(std::abs(fb.gamma[0][i].c12 + fa.gamma[0][i].c12) <= 1e-15);
    }
}

TEST_CASE("support within rho of the slice") {
    Grid grid{16};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    DislocationSystem phi{{rect(0.3, 0.5, 0.3, 0.5, 0.5)}};
    SlipTrajectory a = sweep_system(phi, {std::vector<Vec3>(4, {0.05, 0, 0})});
    double t = 0.5;
    SlipRateField f = gamma_field(a, t, grid, eta, 1);
    Loop sl = slice_loop(a.surfaces[0], t);
    for (size_t i = 0; i < grid.size(); ++i) {
        Vec3 x = grid.position(i);
        double dist = 1e9;
        for (size_t k = 0; k < 4; ++k) {
            Vec3 p = sl.nodes[k], q = sl.nodes[(k + 1) % 4];
            double u = std::clamp(dot(x - p, q - p) / dot(q - p, q - p), 0.0, 1.0);
            dist = std::min(dist, norm(x - (p + u * (q - p))));
        }
        if (dist > eta.rho) CHECK(mass(f.gamma[0][i]) == 0);
    }
}

TEST_CASE("slip-rate bound against the variation") {
    Grid grid{8};
    Mollifier eta = make_mollifier(3 * grid.h(), grid);
    DislocationSystem phi{{rect(0.3, 0.6, 0.3, 0.6, 0.5)}};
    auto r0 = gamma_bound_check(neutral(phi), grid, eta, 1, 0, 1, 4);
    CHECK(r0.lhs[0] == 0);
    CHECK(r0.rhs[0] == 0);
    CHECK(r0.ok);
    SlipTrajectory tr = sweep_system(phi, {std::vector<Vec3>(4, {0.1, 0, 0})});
    auto r1 = gamma_bound_check(tr, grid, eta, 1, 0, 1, 8);
    CHECK(r1.rhs[0] == doctest::Approx(eta.c * 0.2 * 0.3 / 1.0 * 1.0).epsilon(1e-12));
    CHECK(r1.lhs[0] > 0);
    CHECK(r1.ok);
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    for (int k = 0; k < 20; ++k) {
        std::vector<Vec3> d(4);
        for (auto& v : d) v = {u(g), u(g), u(g)};
        auto r = gamma_bound_check(sweep_system(phi, {d}), grid, eta, 1, 0, 1, 4);
        CHECK(r.ok);
    }
}
