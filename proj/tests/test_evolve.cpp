#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dislo/evolve.hpp"
#include "dislo/io.hpp"
#include "dislo/verify.hpp"

using namespace dislo;
using nlohmann::json;

namespace {

Scenario small_shear(int N = 2) {
    json j = json::parse(R"({
        "schema": "dislo-scenario/1",
        "name": "small",
        "grid": 8, "mesh": 4,
        "burgers": [[0.1, 0, 0]],
        "loops": [{"nodes": [[0.3, 0.3, 0.5], [0.7, 0.3, 0.5], [0.7, 0.7, 0.5], [0.3, 0.7, 0.5]]}],
        "exponents": {"p": 3.5, "q": 4, "r": 4},
        "zeta": 0.001,
        "loading": {"profile": {"A": [[0, 0, 1], [0, 0, 0], [0, 0, 0]], "v": [-0.5, 0, 0]},
                    "ramp": {"type": "linear", "rate": 40}},
        "dissipation": {"weights": [0.001]},
        "solver": {"gtol": 1e-7, "substeps": 4, "random_candidates": 2, "stability_samples": 2,
                   "refinement": false, "threads": 1}
    })");
    j["N"] = N;
    return scenario_from_json(j);
}

RateSource constant_rate(Vec3 g, size_t nodes) {
    return [g, nodes](double, std::vector<std::vector<Vec3>>& out) { out.assign(1, std::vector<Vec3>(nodes, g)); };
}

RateSource rotating_rate(size_t nodes) {
    return [nodes](double t, std::vector<std::vector<Vec3>>& out) {
        out.assign(1, std::vector<Vec3>(nodes, Vec3{0.4 * std::cos(3 * t), 0.9 * std::sin(3 * t), 0.8}));
    };
}

std::string temp_dir(const char* name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    return p.string();
}

}  // namespace

TEST_CASE("gronwall certificate stays below the maximal solution") {
    for (int N : {10, 100, 1000}) {
        GronwallTable tab = gronwall_certificate(0, 1, 0.99, N);
        REQUIRE(tab.T_infinity);
        CHECK(*tab.T_infinity == 1.0);
        CHECK(tab.ok);
        REQUIRE(tab.rows.size() == size_t(N + 1));
        for (const auto& row : tab.rows) {
            REQUIRE(row.bound);
            CHECK(row.a <= -std::log(1 - row.t));
        }
    }
}

TEST_CASE("gronwall iterates increase towards the bound under refinement") {
    double prev = -1;
    for (int N : {10, 100, 1000}) {
        double a = gronwall_certificate(0, 1, 0.9, N).rows.back().a;
        CHECK(a > prev);
        CHECK(a < -std::log(0.1));
        prev = a;
    }
}

TEST_CASE("gronwall table marks times past blow-up") {
    GronwallTable tab = gronwall_certificate(std::log(2.0), 1, 1.0, 4);
    CHECK(*tab.T_infinity == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tab.rows[1].bound);
    CHECK_FALSE(tab.rows[2].bound);
    CHECK_FALSE(tab.rows[4].bound);
    CHECK_THROWS(gronwall_certificate(0, 0, 1, 4));
    CHECK_THROWS(gronwall_certificate(0, -1, 1, 4));
    CHECK_FALSE(gronwall_bound(0, 2, 0.5));
    CHECK(*gronwall_bound(0, 2, 0.25) == doctest::Approx(std::log(2.0)));
    CHECK(*gronwall_bound(1.5, 0, 7.0) == 1.5);
}

TEST_CASE("flow residual on constant shear") {
    Grid grid{2};
    PlasticField P0 = PlasticField::identity(grid);
    BurgersTable B{{{1, 0, 0}}};
    auto rates = constant_rate({0, 0, 1}, grid.size());
    PlasticPath path = integrate_P(P0, rates, B, uniform_times(0, 1, 16));
    CHECK(flow_residual(path, rates, B) <= 1e-6);
}

TEST_CASE("flow residual on a rotating single-system rate sits at roundoff") {
    Grid grid{1};
    PlasticField P0 = PlasticField::identity(grid);
    BurgersTable B{{{1, 0, 0}}};
    auto rates = rotating_rate(grid.size());
    for (int M : {4, 16, 64}) CHECK(flow_residual(integrate_P(P0, rates, B, uniform_times(0, 1, M)), rates, B) <= 1e-12);
}

TEST_CASE("flow residual is second order with two slip systems") {
    Grid grid{2};
    PlasticField P0 = PlasticField::identity(grid);
    BurgersTable B{{{1, 0, 0}, {0, 1, 0.2}}};
    RateSource rates = [&](double t, std::vector<std::vector<Vec3>>& out) {
        out.assign(2, std::vector<Vec3>(grid.size()));
        for (size_t i = 0; i < grid.size(); ++i) {
            out[0][i] = {std::sin(7 * t + i), 0.3, std::cos(5 * t)};
            out[1][i] = {0.2, std::cos(11 * t), std::sin(3 * t + 2.0 * i)};
        }
    };
    double r32 = flow_residual(integrate_P(P0, rates, B, uniform_times(0, 1, 32)), rates, B);
    double r64 = flow_residual(integrate_P(P0, rates, B, uniform_times(0, 1, 64)), rates, B);
    CHECK(r32 / r64 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("dictionary layout") {
    Scenario sc = small_shear();
    Context ctx(sc);
    auto c = base_dictionary(ctx, sc.loops, 4);
    REQUIRE(!c.empty());
    CHECK(is_neutral(c[0]));
    // 4 nodes x 3 axes x 2 signs, 6 rigid moves, 2 random fields
    CHECK(c.size() == 1 + 24 + 6 + 2);
    auto again = base_dictionary(ctx, sc.loops, 4);
    for (size_t i = 0; i < c.size(); ++i) CHECK(c[i].disp == again[i].disp);
    auto other = random_candidates(ctx, sc.loops, 8, 2, "random");
    CHECK(other[0].disp != c.back().disp);
}

TEST_CASE("neutral candidate reproduces the previous state") {
    Scenario sc = small_shear();
    Context ctx(sc);
    State s = initial_state(ctx);
    Evaluation ev = evaluate_candidate(ctx, s, 0.0, neutral_candidate(s.phi), s.y);
    REQUIRE(ev.admissible);
    CHECK(ev.diss == 0);
    CHECK(ev.var == 0);
    for (size_t i = 0; i < s.P.P.size(); ++i) CHECK(ev.path.final().P[i] == s.P.P[i]);
    CHECK(ev.phi.loops[0].nodes == s.phi.loops[0].nodes);
}

TEST_CASE("candidates leaving the domain are rejected") {
    Scenario sc = small_shear();
    Context ctx(sc);
    State s = initial_state(ctx);
    Candidate c = neutral_candidate(s.phi);
    c.disp[0][0] = {-0.5, 0, 0};
    Evaluation ev = evaluate_candidate(ctx, s, 0.0, c, s.y);
    CHECK_FALSE(ev.admissible);
    CHECK(ev.reason == "leaves the domain");
}

TEST_CASE("small run satisfies the step invariants and replays") {
    Scenario sc = small_shear(3);
    RunResult r = run(sc);
    CHECK(r.ok());
    REQUIRE(r.steps.size() == 4);
    for (size_t k = 1; k < r.steps.size(); ++k) {
        CHECK(r.steps[k].J_accepted <= r.steps[k].J_neutral);
        CHECK(r.steps[k].e + r.steps[k].d <= r.steps[k].E_previous);
        CHECK(r.steps[k].s - r.steps[k - 1].s >= sc.dT());
        CHECK(r.steps[k].det_residual <= 1e-10);
    }
    EnergyBalanceReport eb = verify_energy_balance(r);
    CHECK(eb.ok);
    CHECK(eb.max_violation <= 1e-8);
    RescalingReport rs = verify_rescaling(Context(sc), r);
    CHECK(rs.ok);
    CHECK(rs.min_slope > 0);
    CHECK(rs.max_slope <= 1.0);
    CHECK(rs.max_diss_rate <= 1 + 1e-8);

    std::string dir = temp_dir("dislo_test_run");
    write_run(dir, r, Context(sc));
    RunResult back = read_run(dir);
    CHECK(ledger_json(back) == ledger_json(r));
    json rep = verify_run(back, VerifyOptions{});
    CHECK(rep["pass"].get<bool>());

    // corrupt one plastic strain value: det check must fail
    back.snapshots[2].P.P[5](0, 0) += 1e-6;
    json bad = verify_run(back, VerifyOptions{0});
    CHECK_FALSE(bad["pass"].get<bool>());
    CHECK_FALSE(bad["checks"]["det_P"]["ok"].get<bool>());
    std::filesystem::remove_all(dir);
}

TEST_CASE("rescaling function maps s back onto t") {
    RunResult r;
    r.scenario = small_shear(2);
    for (int k = 0; k <= 2; ++k) {
        StepRecord s;
        s.k = k;
        s.t = 0.5 * k;
        s.e = 1.0;
        s.d = k == 1 ? 0.25 : 0.0;
        r.steps.push_back(s);
    }
    double ds = 0;
    for (auto& s : r.steps) {
        ds += s.d;
        s.alpha = 1 + s.e + ds;
    }
    finalize_ledger(r);
    CHECK(r.steps[1].s == doctest::Approx(0.75));
    CHECK(r.steps[2].s == doctest::Approx(1.25));
    RescalingFunction psi = build_rescaling(r);
    CHECK(psi(0.75) == doctest::Approx(0.5));
    CHECK(psi(1.25) == doctest::Approx(1.0));
    CHECK(psi(5.0) == doctest::Approx(1.0));
    for (double sl : psi.slopes()) {
        CHECK(sl > 0);
        CHECK(sl <= 1.0);
    }
}
