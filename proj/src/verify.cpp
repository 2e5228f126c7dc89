#include "dislo/verify.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dislo {

using nlohmann::json;

namespace {

json check(bool ok, json detail) {
    detail["ok"] = ok;
    return detail;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json verify_run(const RunResult& r, const VerifyOptions& opts) {
    Context ctx(r.scenario);
    const Scenario& sc = r.scenario;
    json rep;
    rep["scenario"] = sc.name;
    rep["steps"] = int(r.steps.size()) - 1;
    json checks;

    // ledger against snapshots
    double de = 0, dd = 0, dP = 0, dpath = 0, dvar = 0;
    bool loops_ok = true, gamma_ok = true, vd_ok = true, obj_ok = true;
    double flow = 0, vd_ratio = 0, det_max = 0, coerc = kInf;
    std::vector<std::string> replay_errors;
    for (size_t k = 0; k < r.snapshots.size(); ++k) {
        const Snapshot& s = r.snapshots[k];
        det_max = std::max(det_max, det_residual(s.P));
        PlasticQP qp = plastic_at_qp(ctx.mesh, s.P);
        double e = total_energy(ctx.mesh, ctx.ramp(r.steps[k].t), ctx.load, s.y, qp, s.phi, sc.density, sc.zeta).total;
        de = std::max(de, std::abs(e - r.steps[k].e) / (1 + std::abs(e)));
        CoercivityReport cr = coercivity_check(ctx.mesh, sc.loading, r.steps[k].t, sc.boundary, s.y, qp, s.phi,
                                               sc.density, sc.zeta);
        coerc = std::min(coerc, cr.margin);
        if (k == 0) continue;
        Replay rp;
        try {
            rp = replay_step(ctx, r, int(k));
        } catch (const std::exception& e) {
            replay_errors.push_back("step " + std::to_string(k) + ": " + e.what());
            continue;
        }
        double d = dissipation(rp.traj, rp.path, sc.dissipation);
        dd = std::max(dd, std::abs(d - r.steps[k].d) / (1 + d));
        for (size_t i = 0; i < s.P.P.size(); ++i) dP = std::max(dP, max_abs(rp.path.final().P[i] - s.P.P[i]));
        DislocationSystem phi = dislocation_forward(rp.traj, r.snapshots[k - 1].phi);
        for (size_t l = 0; l < phi.loops.size(); ++l)
            if (phi.loops[l].nodes != s.phi.loops[l].nodes) loops_ok = false;
        dvar = std::max(dvar, std::abs(variation(rp.traj) - r.steps[k].var));
        if (linf_mass(rp.traj) > sc.gamma_cap) gamma_ok = false;
        VarDissReport vd = var_diss_bound(rp.traj, rp.path, sc.dissipation);
        vd_ok = vd_ok && vd.ok;
        if (vd.diss > 0) vd_ratio = std::max(vd_ratio, vd.var / (vd.C * vd.diss));
        double f = flow_residual(rp.path, trajectory_rates(rp.traj, ctx.grid, ctx.eta, sc.burgers.size()), sc.burgers);
        flow = std::max(flow, f);
        dpath = std::max(dpath, std::abs(f - r.steps[k].flow_residual));
        if (!(r.steps[k].J_accepted <= r.steps[k].J_neutral)) obj_ok = false;
    }
    checks["coercivity"] = check(coerc > 0, {{"min_margin", coerc}});
    checks["ledger_energy"] = check(de <= 1e-9, {{"max_rel_diff", de}});
    checks["ledger_dissipation"] = check(dd <= 1e-9, {{"max_rel_diff", dd}});
    checks["replay"] = check(replay_errors.empty(), {{"errors", replay_errors}});
    checks["replayed_P"] = check(dP <= 1e-12, {{"max_abs_diff", dP}});
    checks["replayed_loops"] = check(loops_ok, json::object());
    checks["ledger_variation"] = check(dvar <= 1e-12, {{"max_abs_diff", dvar}});
    checks["det_P"] = check(det_max <= 1e-10, {{"max_residual", det_max}});
    checks["gamma_cap"] = check(gamma_ok, {{"gamma", sc.gamma_cap}});
    checks["var_diss"] = check(vd_ok, {{"max_var_over_C_diss", vd_ratio}});
    checks["flow"] = check(std::isfinite(flow) && dpath <= 1e-12, {{"max_residual", flow}, {"ledger_diff", dpath}});
    checks["objective_vs_neutral"] = check(obj_ok, json::object());

    // ledger columns that depend on the whole run
    RunResult again = r;
    {
        double dsum = 0;
        for (size_t k = 0; k < again.steps.size(); ++k) {
            dsum += k ? again.steps[k].d : 0.0;
            again.steps[k].alpha = 1 + again.steps[k].e + dsum;
        }
        finalize_ledger(again);
        double diff = 0;
        bool bounds_ok = true;
        for (size_t k = 0; k < r.steps.size(); ++k) {
            diff = std::max({diff, std::abs(again.steps[k].alpha - r.steps[k].alpha),
                             std::abs(again.steps[k].beta - r.steps[k].beta),
                             std::abs(again.steps[k].s - r.steps[k].s)});
            const auto& b = again.steps[k].gronwall_bound;
            if (b && again.steps[k].alpha > *b + 1e-12 * (1 + std::abs(*b))) bounds_ok = false;
            if (again.steps[k].alpha > again.steps[k].beta) bounds_ok = false;
        }
        checks["ledger_alpha_beta_s"] = check(diff <= 1e-9 * (1 + std::abs(r.steps[0].alpha)), {{"max_abs_diff", diff}});
        checks["gronwall"] = check(bounds_ok && std::abs(again.C_scaled - r.C_scaled) <= 1e-9 * (1 + r.C_scaled),
                                   {{"C_scaled", again.C_scaled},
                                    {"T_infinity", again.T_infinity ? json(*again.T_infinity) : json(nullptr)}});
    }

    EnergyBalanceReport eb = verify_energy_balance(r, opts.tol);
    checks["energy_balance"] = check(eb.ok, {{"max_violation", eb.max_violation},
                                             {"max_gap", eb.max_gap},
                                             {"max_step_violation", eb.max_step_violation}});
    try {
        RescalingReport rs = verify_rescaling(ctx, r, opts.tol);
        checks["rescaling"] = check(rs.ok, {{"min_gap", rs.min_gap},
                                            {"min_slope", finite_or_null(rs.min_slope)},
                                            {"max_slope", rs.max_slope},
                                            {"max_diss_rate", rs.max_diss_rate}});
    } catch (const std::exception& e) {
        checks["rescaling"] = check(false, {{"error", e.what()}});
    }
    try {
        RateIndependenceReport ri = verify_rate_independence(ctx, r, opts.tol);
        checks["rate_independence"] =
            check(ri.ok, {{"max_P_diff", ri.max_P_diff}, {"loops_identical", ri.loops_identical}});
    } catch (const std::exception& e) {
        checks["rate_independence"] = check(false, {{"error", e.what()}});
    }

    bool pass = true;
    for (auto& [name, c] : checks.items()) pass = pass && c["ok"].get<bool>();

    int samples = opts.stability_samples >= 0 ? opts.stability_samples : sc.search.stability_samples;
    json stab = json::array();
    double worst = kInf;
    if (samples > 0) {
        for (size_t k = 0; k < r.snapshots.size(); ++k) {
            State st{int(k), r.steps[k].t, r.snapshots[k].y, r.snapshots[k].P, r.snapshots[k].phi};
            try {
                StabilityReport s =
                    verify_stability(ctx, st, r.steps[k].e, samples, false, uint64_t(4 * k + 2), opts.tol);
                worst = std::min(worst, s.margin);
                stab.push_back({{"k", k}, {"margin", finite_or_null(s.margin)}, {"worst", s.worst}, {"ok", s.ok}});
            } catch (const std::exception& e) {
                stab.push_back({{"k", k}, {"error", e.what()}, {"ok", false}});
            }
        }
    }
    rep["stability"] = {{"advisory", true},
                        {"samples_per_step", samples},
                        {"worst_margin", finite_or_null(worst)},
                        {"per_step", stab}};
    rep["checks"] = checks;
    rep["pass"] = pass;
    return rep;
}

}  // namespace dislo
