#include "dislo/evolve.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "dislo/rng.hpp"

namespace dislo {

Context::Context(const Scenario& s)
    : sc(s), grid{s.grid}, mesh(s.mesh), eta(make_mollifier(s.rho(), Grid{s.grid})),
      load(load_vector(mesh, s.loading.profile)) {}

int Context::threads() const {
    int n = int(std::max(1u, std::thread::hardware_concurrency()));
    if (sc.search.threads > 0) n = sc.search.threads;
    if (const char* env = std::getenv("DISLO_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::max(1, n);
}

Candidate neutral_candidate(const DislocationSystem& phi) {
    Candidate c;
    c.tag = "neutral";
    for (const auto& l : phi.loops) c.disp.emplace_back(l.nodes.size());
    return c;
}

bool is_neutral(const Candidate& c) {
    for (const auto& d : c.disp)
        for (const auto& v : d)
            if (v.x != 0 || v.y != 0 || v.z != 0) return false;
    return true;
}

namespace {

void set_axis(Vec3& v, int axis, double value) {
    (axis == 0 ? v.x : axis == 1 ? v.y : v.z) += value;
}

std::string label(const Candidate& c, size_t index) { return c.tag + ":" + std::to_string(index); }

bool better(const Evaluation& a, const Evaluation& b) { return a.admissible && (!b.admissible || a.J < b.J); }

}  // namespace

Evaluation evaluate_candidate(const Context& ctx, const State& from, double t, const Candidate& cand,
                              const DeformationField& warm) {
    const Scenario& sc = ctx.sc;
    Evaluation ev;
    try {
        ev.traj = sweep_system(from.phi, cand.disp);
    } catch (const std::out_of_range&) {
        ev.reason = "leaves the domain";
        return ev;
    }
    ev.phi = dislocation_forward(ev.traj, from.phi);
    for (const auto& l : ev.phi.loops) {
        try {
            validate_loop(l);
        } catch (const std::invalid_argument& e) {
            ev.reason = std::string("degenerate loop: ") + e.what();
            return ev;
        }
    }
    ev.linf = linf_mass(ev.traj);
    if (ev.linf > sc.gamma_cap) {
        ev.reason = "exceeds the gamma cap";
        return ev;
    }
    ev.var = variation(ev.traj);
    ev.path = integrate_P(from.P, ev.traj, ctx.eta, sc.burgers, uniform_times(0, 1, sc.search.substeps));
    ev.diss = dissipation(ev.traj, ev.path, sc.dissipation);
    PlasticQP qp = plastic_at_qp(ctx.mesh, ev.path.final());
    const double ramp = ctx.ramp(t);
    ElasticResult er;
    try {
        er = minimize_elastic(ctx.mesh, qp, ctx.load, ramp, sc.density, warm, sc.solver);
    } catch (const InitializationError&) {
        try {
            er = minimize_elastic(ctx.mesh, qp, ctx.load, ramp, sc.density, from.y, sc.solver);
        } catch (const InitializationError&) {
            ev.reason = "no feasible warm start for the elastic solve";
            return ev;
        }
    }
    ev.iterations = er.iterations;
    ev.converged = er.converged;
    ev.y = std::move(er.y);
    ev.energy = total_energy(ctx.mesh, ramp, ctx.load, ev.y, qp, ev.phi, sc.density, sc.zeta);
    ev.J = ev.energy.total + ev.diss;
    ev.admissible = std::isfinite(ev.J);
    if (!ev.admissible) ev.reason = "infinite energy";
    return ev;
}

std::vector<Candidate> random_candidates(const Context& ctx, const DislocationSystem& phi, uint64_t stream, int n,
                                         const std::string& tag) {
    std::vector<Candidate> out;
    const double sigma = 0.5 * ctx.delta();
    for (int c = 0; c < n; ++c) {
        Candidate cand = neutral_candidate(phi);
        cand.tag = tag;
        for (size_t l = 0; l < phi.loops.size(); ++l)
            for (size_t i = 0; i < phi.loops[l].nodes.size(); ++i) {
                uint64_t base = (uint64_t(l) << 32 | uint64_t(i)) * 3;
                Vec3& v = cand.disp[l][i];
                v.x = sigma * counter_normal(ctx.sc.search.seed, stream, uint64_t(c), base);
                v.y = sigma * counter_normal(ctx.sc.search.seed, stream, uint64_t(c), base + 1);
                v.z = sigma * counter_normal(ctx.sc.search.seed, stream, uint64_t(c), base + 2);
            }
        out.push_back(std::move(cand));
    }
    return out;
}

std::vector<Candidate> base_dictionary(const Context& ctx, const DislocationSystem& phi, uint64_t stream) {
    std::vector<Candidate> out{neutral_candidate(phi)};
    const double d = ctx.delta();
    for (size_t l = 0; l < phi.loops.size(); ++l)
        for (size_t i = 0; i < phi.loops[l].nodes.size(); ++i)
            for (int axis = 0; axis < 3; ++axis)
                for (double sg : {1.0, -1.0}) {
                    Candidate c = neutral_candidate(phi);
                    c.tag = "coordinate";
                    set_axis(c.disp[l][i], axis, sg * d);
                    out.push_back(std::move(c));
                }
    if (ctx.sc.search.translations)
        for (size_t l = 0; l < phi.loops.size(); ++l)
            for (int axis = 0; axis < 3; ++axis)
                for (double sg : {1.0, -1.0}) {
                    Candidate c = neutral_candidate(phi);
                    c.tag = "translation";
                    for (auto& v : c.disp[l]) set_axis(v, axis, sg * d);
                    out.push_back(std::move(c));
                }
    auto rnd = random_candidates(ctx, phi, stream, ctx.sc.search.random_candidates, "random");
    out.insert(out.end(), rnd.begin(), rnd.end());
    return out;
}

std::vector<Candidate> refinement_candidates(const Context& ctx, const Candidate& incumbent) {
    std::vector<Candidate> out;
    const double d = 0.5 * ctx.delta();
    for (size_t l = 0; l < incumbent.disp.size(); ++l)
        for (size_t i = 0; i < incumbent.disp[l].size(); ++i)
            for (int axis = 0; axis < 3; ++axis)
                for (double sg : {1.0, -1.0}) {
                    Candidate c = incumbent;
                    c.tag = "refined";
                    set_axis(c.disp[l][i], axis, sg * d);
                    out.push_back(std::move(c));
                }
    return out;
}

std::vector<Evaluation> evaluate_all(const Context& ctx, const State& from, double t,
                                     const std::vector<Candidate>& cands, const DeformationField& warm) {
    std::vector<Evaluation> out(cands.size());
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i = next++; i < cands.size(); i = next++) {
            try {
                out[i] = evaluate_candidate(ctx, from, t, cands[i], warm);
            } catch (const std::exception& e) {
                out[i] = Evaluation{};
                out[i].reason = e.what();
            }
        }
    };
    int nt = std::min<int>(ctx.threads(), int(cands.size()));
    if (nt <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nt; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return out;
}

StepOutcome incremental_step(const Context& ctx, const State& prev, int k) {
    const Scenario& sc = ctx.sc;
    const double t = k * sc.dT();
    StepOutcome out;
    PlasticQP qp_prev = plastic_at_qp(ctx.mesh, prev.P);
    out.E_previous =
        total_energy(ctx.mesh, ctx.ramp(t), ctx.load, prev.y, qp_prev, prev.phi, sc.density, sc.zeta).total;

    Candidate neutral = neutral_candidate(prev.phi);
    Evaluation n = evaluate_candidate(ctx, prev, t, neutral, prev.y);
    if (!n.admissible) throw StepError("step " + std::to_string(k) + ": neutral candidate failed: " + n.reason);
    out.J_neutral = n.J;

    std::vector<Candidate> cands = base_dictionary(ctx, prev.phi, uint64_t(4 * k));
    std::vector<Evaluation> evs(1);
    evs[0] = std::move(n);
    {
        std::vector<Candidate> rest(cands.begin() + 1, cands.end());
        auto more = evaluate_all(ctx, prev, t, rest, evs[0].y);
        for (auto& e : more) evs.push_back(std::move(e));
    }
    size_t best = 0;
    for (size_t i = 1; i < evs.size(); ++i)
        if (better(evs[i], evs[best])) best = i;
    if (sc.search.refinement) {
        auto ref = refinement_candidates(ctx, cands[best]);
        auto more = evaluate_all(ctx, prev, t, ref, evs[0].y);
        for (size_t i = 0; i < ref.size(); ++i) {
            cands.push_back(std::move(ref[i]));
            evs.push_back(std::move(more[i]));
            if (better(evs.back(), evs[best])) best = evs.size() - 1;
        }
    }
    for (const auto& e : evs) {
        ++out.evaluated;
        if (!e.admissible) ++out.rejected;
        else if (!e.converged) ++out.nonconverged;
    }
    out.accepted_index = best;
    out.move = cands[best];
    out.best = std::move(evs[best]);
    out.state.k = k;
    out.state.t = t;
    out.state.y = out.best.y;
    out.state.P = out.best.path.final();
    out.state.phi = out.best.phi;
    return out;
}

StabilityReport verify_stability(const Context& ctx, const State& state, double energy, int random_samples,
                                 bool with_dictionary, uint64_t stream, double tol) {
    std::vector<Candidate> cands =
        with_dictionary ? base_dictionary(ctx, state.phi, stream) : std::vector<Candidate>{neutral_candidate(state.phi)};
    auto rnd = random_candidates(ctx, state.phi, stream + 1, random_samples, "sample");
    cands.insert(cands.end(), rnd.begin(), rnd.end());
    auto evs = evaluate_all(ctx, state, state.t, cands, state.y);
    StabilityReport rep;
    for (size_t i = 0; i < evs.size(); ++i) {
        if (!evs[i].admissible) continue;
        double m = evs[i].J - energy;
        // neutral only re-solves the elasticity; it checks the solver, not the state
        if (is_neutral(cands[i])) {
            if (m < -tol * (1 + std::abs(energy))) rep.ok = false;
            continue;
        }
        ++rep.samples;
        if (m < rep.margin) {
            rep.margin = m;
            rep.worst = label(cands[i], i);
        }
    }
    rep.ok = rep.ok && rep.margin >= -tol * (1 + std::abs(energy));
    return rep;
}

double flow_residual(const PlasticPath& path, const RateSource& rates, const BurgersTable& burgers) {
    double res = 0;
    std::vector<std::vector<Vec3>> g;
    std::vector<Vec3> gn(burgers.size());
    for (size_t j = 0; j + 1 < path.times.size(); ++j) {
        double dt = path.times[j + 1] - path.times[j];
        rates(0.5 * (path.times[j] + path.times[j + 1]), g);
        const auto& A = path.fields[j].P;
        const auto& B = path.fields[j + 1].P;
        for (size_t i = 0; i < A.size(); ++i) {
            for (size_t r = 0; r < gn.size(); ++r) gn[r] = g[r][i];
            Mat3 D = drift(gn, burgers, 0.5 * (A[i] + B[i])).value;
            res = std::max(res, max_abs((1.0 / dt) * (B[i] - A[i]) - D));
        }
    }
    return res;
}

State initial_state(const Context& ctx) {
    const Scenario& sc = ctx.sc;
    State s;
    s.P = PlasticField::identity(ctx.grid);
    s.phi = sc.loops;
    PlasticQP qp = plastic_at_qp(ctx.mesh, s.P);
    try {
        s.y = minimize_elastic(ctx.mesh, qp, ctx.load, ctx.ramp(0), sc.density,
                               affine_deformation(ctx.mesh, sc.boundary), sc.solver)
                  .y;
    } catch (const InitializationError& e) {
        throw StepError(std::string("initial elastic solve: ") + e.what());
    }
    return s;
}

std::optional<double> gronwall_bound(double alpha0, double C_scaled, double t) {
    if (!(C_scaled > 0)) return alpha0;
    double x = C_scaled * t;
    if (!(x < 1)) return std::nullopt;
    return alpha0 - std::log1p(-x);
}

GronwallTable gronwall_certificate_scaled(double alpha0, double C_scaled, double T, int N) {
    if (N < 1) throw std::invalid_argument("gronwall: N must be at least 1");
    GronwallTable tab;
    tab.alpha0 = alpha0;
    tab.C = std::isfinite(alpha0) ? C_scaled * std::exp(-alpha0) : 0.0;
    if (C_scaled > 0) tab.T_infinity = 1.0 / C_scaled;
    const double dT = T / N;
    double a = alpha0;
    tab.rows.push_back({0, 0.0, a, gronwall_bound(alpha0, C_scaled, 0.0)});
    for (int k = 1; k <= N; ++k) {
        if (std::isfinite(alpha0)) a += dT * C_scaled * std::exp(a - alpha0);
        GronwallRow row{k, k * dT, a, gronwall_bound(alpha0, C_scaled, k * dT)};
        if (!std::isfinite(alpha0)) row.bound = alpha0;
        if (row.bound && !(row.a <= *row.bound)) tab.ok = false;
        tab.rows.push_back(row);
    }
    return tab;
}

GronwallTable gronwall_certificate(double alpha0, double C, double T, int N) {
    if (!(C > 0)) throw std::invalid_argument("gronwall: C must be positive");
    GronwallTable tab = gronwall_certificate_scaled(alpha0, C * std::exp(alpha0), T, N);
    tab.C = C;
    if (std::isfinite(alpha0)) tab.T_infinity = std::exp(-alpha0) / C;
    else tab.T_infinity.reset();
    return tab;
}

void finalize_ledger(RunResult& r) {
    auto& st = r.steps;
    if (st.empty()) return;
    const double dT = r.scenario.dT();
    const double a0 = st[0].alpha;
    double cs = 0;
    for (size_t k = 1; k < st.size(); ++k)
        cs = std::max(cs, (st[k].alpha - st[k - 1].alpha) / dT * std::exp(a0 - st[k - 1].alpha));
    r.C_scaled = cs;
    r.T_infinity.reset();
    if (cs > 0) r.T_infinity = 1.0 / cs;
    double beta = a0, acc = 0;
    st[0].beta = a0;
    st[0].s = 0;
    st[0].gronwall_bound = gronwall_bound(a0, cs, 0.0);
    for (size_t k = 1; k < st.size(); ++k) {
        beta += std::max(st[k].alpha - st[k - 1].alpha, 0.0);
        acc += std::max(st[k].e - st[k - 1].e, 0.0) + st[k].d;
        st[k].beta = beta;
        st[k].s = st[k].t + acc;
        st[k].gronwall_bound = gronwall_bound(a0, cs, st[k].t);
    }
}

double RescalingFunction::operator()(double x) const {
    if (x <= s.front()) return t.front();
    if (x >= s.back()) return t.back();
    size_t j = size_t(std::upper_bound(s.begin(), s.end(), x) - s.begin()) - 1;
    return t[j] + (t[j + 1] - t[j]) * (x - s[j]) / (s[j + 1] - s[j]);
}

std::vector<double> RescalingFunction::slopes() const {
    std::vector<double> out;
    for (size_t j = 0; j + 1 < s.size(); ++j) out.push_back((t[j + 1] - t[j]) / (s[j + 1] - s[j]));
    return out;
}

RescalingFunction build_rescaling(const RunResult& r) {
    RescalingFunction f;
    for (const auto& st : r.steps) {
        f.s.push_back(st.s);
        f.t.push_back(st.t);
    }
    return f;
}

Replay replay_step(const Context& ctx, const RunResult& r, int k) {
    const Snapshot& a = r.snapshots[size_t(k - 1)];
    const Snapshot& b = r.snapshots[size_t(k)];
    Replay rp;
    rp.traj = sweep_system(a.phi, b.disp);
    rp.path = integrate_P(a.P, rp.traj, ctx.eta, ctx.sc.burgers, uniform_times(0, 1, ctx.sc.search.substeps));
    return rp;
}

RescalingReport verify_rescaling(const Context& ctx, const RunResult& r, double tol) {
    RescalingReport rep;
    const double dT = r.scenario.dT();
    const auto& st = r.steps;
    RescalingFunction psi = build_rescaling(r);
    for (double sl : psi.slopes()) {
        rep.min_slope = std::min(rep.min_slope, sl);
        rep.max_slope = std::max(rep.max_slope, sl);
    }
    for (size_t k = 1; k < st.size(); ++k) {
        double L = st[k].s - st[k - 1].s;
        rep.min_gap = std::min(rep.min_gap, L - dT);
        if (!(st[k].d > 0)) continue;
        Replay rp = replay_step(ctx, r, int(k));
        // steadied map: s(tau) = s_{k-1} + Diss(Sigma_k; [0, tau]) + (dT + max(de, 0)) tau
        const double c = dT + std::max(st[k].e - st[k - 1].e, 0.0);
        PiecewiseLinearMap m;
        for (double tau : rp.path.times) {
            m.t.push_back(tau);
            double D = tau > 0 ? dissipation(rp.traj, rp.path, ctx.sc.dissipation, 0, tau) : 0.0;
            m.a.push_back(st[k - 1].s + D + c * tau);
        }
        SlipTrajectory rs = rescale_trajectory(rp.traj, m);
        PlasticPath rpath = rp.path;
        rpath.times = m.a;
        for (size_t j = 0; j + 1 < m.a.size(); ++j) {
            double rate = dissipation(rs, rpath, ctx.sc.dissipation, m.a[j], m.a[j + 1]) / (m.a[j + 1] - m.a[j]);
            rep.max_diss_rate = std::max(rep.max_diss_rate, rate);
        }
    }
    rep.ok = rep.min_gap >= -1e-12 && rep.min_slope > 0 && rep.max_slope <= 1 + 1e-12 &&
             rep.max_diss_rate <= 1 + tol;
    return rep;
}

EnergyBalanceReport verify_energy_balance(const RunResult& r, double tol) {
    EnergyBalanceReport rep;
    const auto& st = r.steps;
    if (st.empty()) return rep;
    double rhs = st[0].e;
    rep.lhs.push_back(st[0].e);
    rep.rhs.push_back(rhs);
    for (size_t k = 1; k < st.size(); ++k) {
        rhs += -st[k].d + st[k].power;
        rep.lhs.push_back(st[k].e);
        rep.rhs.push_back(rhs);
        rep.max_violation = std::max(rep.max_violation, st[k].e - rhs);
        rep.max_gap = std::max(rep.max_gap, rhs - st[k].e);
        rep.max_step_violation = std::max(rep.max_step_violation, st[k].e + st[k].d - st[k].E_previous);
    }
    rep.ok = rep.max_violation <= tol && rep.max_step_violation <= 0;
    return rep;
}

RateIndependenceReport verify_rate_independence(const Context& ctx, const RunResult& r, double tol) {
    RateIndependenceReport rep;
    const int M = ctx.sc.search.substeps;
    auto sq = [](double t) { return t * t; };
    PiecewiseLinearMap a = PiecewiseLinearMap::sampled(sq, 0, 1, M);
    for (size_t k = 1; k < r.snapshots.size(); ++k) {
        const Snapshot& prev = r.snapshots[k - 1];
        const Snapshot& cur = r.snapshots[k];
        SlipTrajectory traj = sweep_system(prev.phi, cur.disp);
        SlipTrajectory rs = rescale_trajectory(traj, a);
        PlasticField P = integrate_P(prev.P, rs, ctx.eta, ctx.sc.burgers, a.a).final();
        for (size_t i = 0; i < P.P.size(); ++i)
            rep.max_P_diff = std::max(rep.max_P_diff, max_abs(P.P[i] - cur.P.P[i]));
        DislocationSystem phi = dislocation_forward(rs, prev.phi);
        for (size_t l = 0; l < phi.loops.size(); ++l)
            if (phi.loops[l].nodes != cur.phi.loops[l].nodes) rep.loops_identical = false;
    }
    rep.ok = rep.max_P_diff <= tol && rep.loops_identical;
    return rep;
}

int onset_step(const RunResult& r) {
    for (size_t k = 1; k < r.steps.size(); ++k)
        if (r.steps[k].accepted.rfind("neutral", 0) != 0) return int(k);
    return -1;
}

RunResult run(const Scenario& sc, const Progress& progress) {
    Context ctx(sc);
    RunResult r;
    r.scenario = sc;
    const double dT = sc.dT();
    State state = initial_state(ctx);
    PlasticQP qp0 = plastic_at_qp(ctx.mesh, state.P);
    StepRecord r0;
    r0.e = total_energy(ctx.mesh, ctx.ramp(0), ctx.load, state.y, qp0, state.phi, sc.density, sc.zeta).total;
    r0.alpha = 1 + r0.e;
    r0.J_accepted = r0.J_neutral = r0.E_previous = r0.e;
    r0.det_residual = det_residual(state.P);
    r0.linf = system_mass(state.phi);
    if (sc.search.stability_samples > 0) {
        StabilityReport s0 = verify_stability(ctx, state, r0.e, sc.search.stability_samples, true, 1);
        r0.stability_margin = s0.margin;
        r.initial_stability = s0.margin;
    }
    r.steps.push_back(r0);
    r.snapshots.push_back({state.y, state.P, state.phi, {}});
    if (progress) progress(r0);
    double dsum = 0;
    for (int k = 1; k <= sc.N; ++k) {
        StepOutcome out;
        try {
            out = incremental_step(ctx, state, k);
        } catch (const std::exception& e) {
            r.violations.push_back(std::string("step aborted: ") + e.what());
            break;
        }
        const StepRecord& last = r.steps.back();
        StepRecord rec;
        rec.k = k;
        rec.t = out.state.t;
        rec.e = out.best.energy.total;
        rec.d = out.best.diss;
        dsum += rec.d;
        rec.alpha = 1 + rec.e + dsum;
        rec.accepted = label(out.move, out.accepted_index);
        rec.J_accepted = out.best.J;
        rec.J_neutral = out.J_neutral;
        rec.E_previous = out.E_previous;
        const Ramp& ramp = sc.loading.ramp;
        double trap = 0.5 * (ramp.derivative(last.t) + ramp.derivative(rec.t)) * dT;
        rec.power = -trap * load_pairing(ctx.load, state.y);
        rec.flow_residual = flow_residual(out.best.path, trajectory_rates(out.best.traj, ctx.grid, ctx.eta, sc.burgers.size()),
                                          sc.burgers);
        rec.det_residual = det_residual(out.state.P);
        rec.var = out.best.var;
        rec.linf = out.best.linf;
        rec.evaluated = out.evaluated;
        rec.rejected = out.rejected;
        rec.nonconverged = out.nonconverged;
        if (sc.search.stability_samples > 0)
            rec.stability_margin =
                verify_stability(ctx, out.state, rec.e, sc.search.stability_samples, false, uint64_t(4 * k + 1)).margin;
        if (rec.det_residual > 1e-10) r.violations.push_back("step " + std::to_string(k) + ": det P drifted from 1");
        if (out.best.path.max_trace_residual > 1e-12)
            r.violations.push_back("step " + std::to_string(k) + ": trace residual above 1e-12");
        if (!(rec.J_accepted <= rec.J_neutral))
            r.violations.push_back("step " + std::to_string(k) + ": accepted objective above neutral");
        if (!(rec.e + rec.d <= rec.E_previous))
            r.violations.push_back("step " + std::to_string(k) + ": neutral-test inequality failed");
        state = std::move(out.state);
        r.steps.push_back(rec);
        r.snapshots.push_back({state.y, state.P, state.phi, out.move.disp});
        if (progress) progress(rec);
    }
    finalize_ledger(r);
    for (const auto& st : r.steps)
        if (st.gronwall_bound && st.alpha > *st.gronwall_bound + 1e-12 * (1 + std::abs(st.alpha)))
            r.violations.push_back("step " + std::to_string(st.k) + ": alpha above the Gronwall bound");
    EnergyBalanceReport eb = verify_energy_balance(r);
    if (!eb.ok) r.violations.push_back("discrete lower energy estimate violated");
    RescalingReport rs = verify_rescaling(ctx, r);
    if (!rs.ok) r.violations.push_back("rescaling check failed");
    return r;
}

}  // namespace dislo
