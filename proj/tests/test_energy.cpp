#include <doctest.h>

#include <random>

#include "dislo/energy.hpp"

using namespace dislo;

namespace {

Loop rect(double x0, double x1, double y0, double y1, double z) {
    Loop l;
    l.nodes = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
    return l;
}

PlasticField sheared(const Grid& grid, double s) {
    PlasticField P = PlasticField::identity(grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        Vec3 x = grid.position(i);
        Mat3 N = outer({1, 0, 0}, {0, 0, 1});
        P.P[i] = Mat3::identity() + (s * std::sin(M_PI * x.y) * std::sin(M_PI * x.z)) * N;
    }
    return P;
}

}  // namespace

TEST_CASE("elastic density values") {
    ElasticDensityParams p4{3.5, 4, 4};
    CHECK(elastic_density(Mat3::identity(), p4) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(elastic_density(2.0 * Mat3::identity(), p4) == doctest::Approx(144.125).epsilon(1e-15));
    CHECK(elastic_density(Mat3::diag(1, 1, -1), p4) == kInf);
    CHECK(elastic_density(Mat3{}, p4) == kInf);
    ElasticDensityParams bad{4, 4, 4};
    CHECK_THROWS(bad.validate());
    CHECK_THROWS(ElasticDensityParams{3, 4, 6}.validate());
    CHECK_NOTHROW(ElasticDensityParams{}.validate());
}

TEST_CASE("stress is the derivative of the density") {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    ElasticDensityParams params;
    for (int k = 0; k < 50; ++k) {
        Mat3 E = Mat3::identity();
        for (auto& v : E.a) v += u(g);
        if (det(E) < 0.2) continue;
        Mat3 S = elastic_stress(E, params);
        for (int i = 0; i < 9; ++i) {
            const double eps = 1e-6;
            Mat3 a = E, b = E;
            a.a[i] += eps;
            b.a[i] -= eps;
            double fd = (elastic_density(a, params) - elastic_density(b, params)) / (2 * eps);
            CHECK(std::abs(fd - S.a[i]) <= 1e-6 * (1 + std::abs(S.a[i])));
        }
    }
}

TEST_CASE("mesh shape functions") {
    Mesh mesh(4);
    for (int q = 0; q < 8; ++q) {
        double s = 0;
        Vec3 gs;
        for (int a = 0; a < 8; ++a) {
            s += mesh.N[q][a];
            gs += mesh.dN[q][a];
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(norm(gs) < 1e-12);
    }
    CHECK(mesh.weight * 8 * mesh.elements() == doctest::Approx(1.0).epsilon(1e-15));
    size_t nb = 0;
    for (size_t i = 0; i < mesh.nodes(); ++i) nb += mesh.on_boundary(i);
    CHECK(nb == mesh.nodes() - 27);
}

TEST_CASE("affine deformation energy and the identity minimizer") {
    Mesh mesh(4);
    ElasticDensityParams params;
    PlasticQP P = plastic_at_qp(mesh, PlasticField::identity(mesh.grid()));
    DeformationField id = affine_deformation(mesh, AffineMap{});
    CHECK(elastic_energy(mesh, id, P, params) == doctest::Approx(28.0).epsilon(1e-13));

    // perturb the interior and recover the identity: homogeneous states are equilibria
    DeformationField warm = id;
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    for (size_t i = 0; i < mesh.nodes(); ++i)
        if (!mesh.on_boundary(i)) warm.y[i] += Vec3{u(g), u(g), u(g)};
    std::vector<Vec3> zero(mesh.nodes());
    SolverOptions opts;
    opts.gtol = 1e-8;
    ElasticResult r = minimize_elastic(mesh, P, zero, 0.0, params, warm, opts);
    INFO("grad_inf ", r.grad_inf, " iterations ", r.iterations);
    CHECK(r.converged);
    double err = 0;
    for (size_t i = 0; i < mesh.nodes(); ++i) err = std::max(err, norm(r.y.y[i] - id.y[i]));
    CHECK(err < 1e-8);
    CHECK(r.potential == doctest::Approx(28.0).epsilon(1e-12));

    SolverOptions gd = opts;
    gd.method = SolverOptions::Method::Gradient;
    gd.gtol = 1e-8;
    ElasticResult rg = minimize_elastic(mesh, P, zero, 0.0, params, warm, gd);
    CHECK(rg.converged);
    CHECK(rg.potential == doctest::Approx(28.0).epsilon(1e-10));
}

TEST_CASE("nodal gradient matches finite differences") {
    Mesh mesh(3);
    ElasticDensityParams params;
    PlasticQP P = plastic_at_qp(mesh, sheared(mesh.grid(), 0.2));
    DeformationField y = affine_deformation(mesh, AffineMap{});
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    for (auto& v : y.y) v += Vec3{u(g), u(g), u(g)};
    std::vector<Vec3> grad;
    elastic_energy_grad(mesh, y, P, params, grad);
    for (size_t i : {size_t(0), size_t(21), size_t(37), mesh.nodes() - 1}) {
        for (int c = 0; c < 3; ++c) {
            const double eps = 1e-6;
            DeformationField a = y, b = y;
            double* pa = c == 0 ? &a.y[i].x : c == 1 ? &a.y[i].y : &a.y[i].z;
            double* pb = c == 0 ? &b.y[i].x : c == 1 ? &b.y[i].y : &b.y[i].z;
            *pa += eps;
            *pb -= eps;
            double fd = (elastic_energy(mesh, a, P, params) - elastic_energy(mesh, b, P, params)) / (2 * eps);
            double an = c == 0 ? grad[i].x : c == 1 ? grad[i].y : grad[i].z;
            CHECK(std::abs(fd - an) <= 1e-5 * (1 + std::abs(an)));
        }
    }
}

TEST_CASE("loading") {
    Mesh mesh(4);
    AffineMap f{Mat3{}, {0, 0, -1}};
    auto F = load_vector(mesh, f);
    DeformationField id = affine_deformation(mesh, AffineMap{});
    CHECK(load_pairing(F, id) == doctest::Approx(-0.5).epsilon(1e-14));
    // an affine profile integrates exactly against an affine deformation
    AffineMap f2{Mat3::diag(1, 2, 0), {0.5, 0, 0}};
    CHECK(load_pairing(load_vector(mesh, f2), id) == doctest::Approx(1.0 / 3 + 2.0 / 3 + 0.25).epsilon(1e-13));

    Ramp lin{Ramp::Kind::Linear, 2.0};
    CHECK(lin.value(0.25) == 0.5);
    CHECK(lin.derivative(0.7) == 2.0);
    Ramp quad{Ramp::Kind::Quadratic, 2.0};
    CHECK(quad.value(0.5) == 0.5);
    Ramp cst{Ramp::Kind::Constant, 3.0};
    CHECK(cst.value(10) == 3.0);
    CHECK(cst.derivative(10) == 0.0);
    CHECK(Ramp::parse("quadratic") == Ramp::Kind::Quadratic);
    CHECK_THROWS(Ramp::parse("cubic"));
}

TEST_CASE("core energy and total energy") {
    DislocationSystem phi{{rect(0.2, 0.45, 0.2, 0.45, 0.5), rect(0.5, 0.65, 0.5, 0.65, 0.5)}};
    // perimeters 1 and 0.6
    CHECK(core_energy(DislocationSystem{{rect(0.25, 0.5, 0.25, 0.5, 0.5), rect(0.25, 0.5, 0.25, 0.5, 0.6),
                                         rect(0.25, 0.5, 0.25, 0.5, 0.7), rect(0.25, 0.5, 0.25, 0.5, 0.8)}},
                      0.1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(core_energy(phi, 1.0) == doctest::Approx(1.6).epsilon(1e-14));
    Mesh mesh(2);
    ElasticDensityParams params;
    PlasticQP P = plastic_at_qp(mesh, PlasticField::identity(mesh.grid()));
    DeformationField id = affine_deformation(mesh, AffineMap{});
    auto F = load_vector(mesh, AffineMap{Mat3{}, {0, 0, -1}});
    EnergyBreakdown e = total_energy(mesh, 2.0, F, id, P, phi, params, 0.5);
    CHECK(e.elastic == doctest::Approx(28.0));
    CHECK(e.load == doctest::Approx(-1.0));
    CHECK(e.core == doctest::Approx(0.8));
    CHECK(e.total == doctest::Approx(28.0 + 1.0 + 0.8));
}

TEST_CASE("coercivity inequality on sampled states") {
    Mesh mesh(3);
    ElasticDensityParams params;
    DislocationSystem phi{{rect(0.3, 0.6, 0.3, 0.6, 0.5)}};
    Loading loading{AffineMap{Mat3::diag(0.5, 0, 0), {0, 0, -1}}, Ramp{Ramp::Kind::Linear, 1.0}};
    AffineMap bc{};
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int k = 0; k < 10; ++k) {
        PlasticQP P = plastic_at_qp(mesh, sheared(mesh.grid(), 0.5 * k / 10.0));
        DeformationField y = affine_deformation(mesh, bc);
        for (size_t i = 0; i < mesh.nodes(); ++i)
            if (!mesh.on_boundary(i)) y.y[i] += Vec3{u(g), u(g), u(g)};
        auto rep = coercivity_check(mesh, loading, 0.1 * k, bc, y, P, phi, params, 0.2);
        CHECK(std::isfinite(rep.lhs));
        CHECK(rep.lhs >= rep.rhs);
        CHECK(rep.C >= 1.0);
    }
}
