#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dislo/evolve.hpp"
#include "dislo/io.hpp"
#include "dislo/verify.hpp"

using namespace dislo;

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "past-blow-up";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

void print_row(const StepRecord& s) {
    std::printf("%4d %9.4f %10.5f %12.6g %10.4g %12.6g %14s  %s\n", s.k, s.t, s.s, s.e, s.d, s.alpha,
                cell(s.gronwall_bound).c_str(), s.accepted.c_str());
    std::fflush(stdout);
}

int cmd_simulate(const std::string& path, std::optional<std::string> out, std::optional<uint64_t> seed,
                 std::optional<int> steps) {
    Scenario sc = load_scenario(path);
    if (seed) sc.search.seed = *seed;
    if (steps) {
        if (*steps < 1) throw ScenarioError("--steps must be at least 1");
        sc.N = *steps;
    }
    if (out) sc.output = *out;
    std::printf("%4s %9s %10s %12s %10s %12s %14s  %s\n", "k", "t", "s", "e", "d", "alpha", "bound", "move");
    // the bound column is only final once the whole run is known
    RunResult r = run(sc, [](const StepRecord& s) {
        std::printf("%4d %9.4f %10s %12.6g %10.4g %12.6g %14s  %s\n", s.k, s.t, "-", s.e, s.d, s.alpha, "-",
                    s.accepted.c_str());
        std::fflush(stdout);
    });
    Context ctx(r.scenario);
    write_run(sc.output, r, ctx);
    std::printf("\nfinal ledger\n");
    for (const auto& s : r.steps) print_row(s);
    std::printf("C_scaled %.6g  T_infinity %s  onset %d\n", r.C_scaled, r.T_infinity ? cell(r.T_infinity).c_str() : "none", onset_step(r));
    std::printf("ledger: %s\n", (std::filesystem::path(sc.output) / "ledger.json").string().c_str());
    for (const auto& v : r.violations) std::fprintf(stderr, "violation: %s\n", v.c_str());
    return r.ok() ? 0 : 1;
}

int cmd_verify(const std::string& dir, int samples) {
    RunResult r = read_run(dir);
    VerifyOptions opts;
    opts.stability_samples = samples;
    nlohmann::json rep = verify_run(r, opts);
    auto p = std::filesystem::path(dir) / "verification.json";
    std::ofstream out(p);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << rep.dump(2) << '\n';
    for (auto& [name, c] : rep["checks"].items())
        std::printf("%-22s %s\n", name.c_str(), c["ok"].get<bool>() ? "ok" : "FAILED");
    std::printf("%-22s worst margin %s (advisory)\n", "stability", rep["stability"]["worst_margin"].dump().c_str());
    std::printf("report: %s\n", p.string().c_str());
    return rep["pass"].get<bool>() ? 0 : 1;
}

int cmd_gronwall(double alpha0, double C, double T, int N) {
    if (!(C > 0)) throw CLI::ValidationError("--C", "must be positive");
    if (N < 1) throw CLI::ValidationError("--N", "must be at least 1");
    GronwallTable tab = gronwall_certificate(alpha0, C, T, N);
    std::printf("%6s %12s %16s %16s\n", "k", "t", "a_k", "A*(t_k)");
    for (const auto& row : tab.rows)
        std::printf("%6d %12.6g %16.10g %16s\n", row.k, row.t, row.a, cell(row.bound).c_str());
    std::printf("T_infinity %s\n", tab.T_infinity ? cell(tab.T_infinity).c_str() : "none");
    std::printf("iterates below bound: %s\n", tab.ok ? "yes" : "no");
    return tab.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dislo: dislocation-driven elasto-plastic evolution"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run the incremental scheme on a scenario");
    std::string scenario;
    std::optional<std::string> out;
    std::optional<uint64_t> seed;
    std::optional<int> steps;
    sim->add_option("scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "output directory");
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--steps", steps, "number of steps (overrides N)");

    auto* ver = app.add_subcommand("verify", "replay the invariant suites on a run directory");
    std::string dir;
    int samples = -1;
    ver->add_option("run", dir, "run directory")->required();
    ver->add_option("--stability-samples", samples, "random samples per step for the stability sweep");

    auto* gr = app.add_subcommand("gronwall", "print the Gronwall certificate table");
    double alpha0 = 0, C = 1, T = 1;
    int N = 10;
    gr->add_option("--alpha0", alpha0)->required();
    gr->add_option("--C", C)->required();
    gr->add_option("--T", T)->required();
    gr->add_option("--N", N)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(scenario, out, seed, steps);
        if (ver->parsed()) return cmd_verify(dir, samples);
        if (gr->parsed()) return cmd_gronwall(alpha0, C, T, N);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
