#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dislo/dissipation.hpp"
#include "dislo/energy.hpp"
#include "dislo/scenario.hpp"

namespace dislo {

struct StepError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a run derives once from its scenario.
struct Context {
    Scenario sc;
    Grid grid;
    Mesh mesh;
    Mollifier eta;
    std::vector<Vec3> load;  // consistent load vector of the profile

    explicit Context(const Scenario& s);
    double ramp(double t) const { return sc.loading.ramp.value(t); }
    double delta() const { return sc.search.delta_cells * grid.h(); }
    int threads() const;
};

struct State {
    int k = 0;
    double t = 0;
    DeformationField y;
    PlasticField P;
    DislocationSystem phi;
};

// per-loop, per-node displacements of one linear sweep over pseudo-time [0, 1]
struct Candidate {
    std::vector<std::vector<Vec3>> disp;
    std::string tag;  // neutral | coordinate | translation | random | refined
};

Candidate neutral_candidate(const DislocationSystem& phi);
bool is_neutral(const Candidate& c);

struct Evaluation {
    bool admissible = false;
    std::string reason;
    double J = kInf;  // E(t, y, Sigma >> z) + Diss(Sigma)
    EnergyBreakdown energy;
    double diss = 0, var = 0, linf = 0;
    int iterations = 0;
    bool converged = false;
    DeformationField y;
    PlasticPath path;
    DislocationSystem phi;
    SlipTrajectory traj;
};

Evaluation evaluate_candidate(const Context& ctx, const State& from, double t, const Candidate& cand,
                              const DeformationField& warm);

// neutral, per-node +-delta along each axis, rigid loop moves, random Gaussian fields
std::vector<Candidate> base_dictionary(const Context& ctx, const DislocationSystem& phi, uint64_t stream);
std::vector<Candidate> refinement_candidates(const Context& ctx, const Candidate& incumbent);
std::vector<Candidate> random_candidates(const Context& ctx, const DislocationSystem& phi, uint64_t stream, int n,
                                         const std::string& tag);

// evaluates all candidates (in parallel if allowed); warm start for each is `warm`
std::vector<Evaluation> evaluate_all(const Context& ctx, const State& from, double t,
                                     const std::vector<Candidate>& cands, const DeformationField& warm);

struct StepOutcome {
    State state;
    Candidate move;
    Evaluation best;
    size_t accepted_index = 0;
    double J_neutral = kInf;
    double E_previous = kInf;  // E(t_k, y_{k-1}, z_{k-1})
    int evaluated = 0, rejected = 0, nonconverged = 0;
};

StepOutcome incremental_step(const Context& ctx, const State& prev, int k);

struct StabilityReport {
    double margin = kInf;  // min over non-neutral samples of (E + Diss) minus E(state)
    int samples = 0;
    std::string worst;
    bool ok = true;
};

StabilityReport verify_stability(const Context& ctx, const State& state, double energy, int random_samples,
                                 bool with_dictionary, uint64_t stream, double tol = 1e-8);

// max over substeps and nodes of |(P_{j+1} - P_j)/dtau - D(g(t_mid), (P_j + P_{j+1})/2)|
double flow_residual(const PlasticPath& path, const RateSource& rates, const BurgersTable& burgers);

struct StepRecord {
    int k = 0;
    double t = 0, s = 0, e = 0, d = 0, alpha = 0, beta = 0;
    std::optional<double> gronwall_bound;  // empty past blow-up
    std::string accepted = "initial";
    double J_accepted = 0, J_neutral = 0, E_previous = 0;
    double power = 0;  // -int <f', y_{k-1}> over the step
    double stability_margin = kInf;
    double flow_residual = 0;
    double det_residual = 0;
    double var = 0, linf = 0;
    int evaluated = 0, rejected = 0, nonconverged = 0;
};

struct Snapshot {
    DeformationField y;
    PlasticField P;
    DislocationSystem phi;
    std::vector<std::vector<Vec3>> disp;  // move that produced this state (empty at k = 0)
};

struct RunResult {
    Scenario scenario;
    std::vector<StepRecord> steps;  // steps[0] is the initial state
    std::vector<Snapshot> snapshots;
    double C_scaled = 0;  // run-derived C times e^{alpha_0}
    std::optional<double> T_infinity;
    double initial_stability = kInf;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

using Progress = std::function<void(const StepRecord&)>;

State initial_state(const Context& ctx);
RunResult run(const Scenario& sc, const Progress& progress = {});
// recompute the ledger columns that depend on the whole run (s, beta, bounds, constant)
void finalize_ledger(RunResult& r);

struct GronwallRow {
    int k = 0;
    double t = 0, a = 0;
    std::optional<double> bound;  // A*(t), empty past blow-up
};

struct GronwallTable {
    double alpha0 = 0, C = 0;
    std::optional<double> T_infinity;  // empty: no blow-up
    std::vector<GronwallRow> rows;
    bool ok = true;
};

// a_k = a_{k-1} + dT C e^{a_{k-1}} against A*(t) = -log(e^{-alpha0} - C t)
GronwallTable gronwall_certificate(double alpha0, double C, double T, int N);
// same with the constant given as C e^{alpha0}, which stays finite for large alpha0
GronwallTable gronwall_certificate_scaled(double alpha0, double C_scaled, double T, int N);
std::optional<double> gronwall_bound(double alpha0, double C_scaled, double t);

struct RescalingFunction {
    std::vector<double> s, t;  // breakpoints, psi(s_k) = t_k, constant afterwards
    double operator()(double s) const;
    std::vector<double> slopes() const;
};

RescalingFunction build_rescaling(const RunResult& r);

struct RescalingReport {
    double min_gap = kInf;  // min over k of (s_k - s_{k-1}) - dT
    double min_slope = kInf, max_slope = 0;
    double max_diss_rate = 0;  // per unit s on the steadied rescaled steps
    bool ok = true;
};

RescalingReport verify_rescaling(const Context& ctx, const RunResult& r, double tol = 1e-8);

struct EnergyBalanceReport {
    std::vector<double> lhs, rhs;  // lhs_k = e_k, rhs_k = e_0 - sum d - sum int <f', y>
    double max_violation = -kInf;  // max(lhs - rhs)
    double max_gap = 0;            // max(rhs - lhs)
    double max_step_violation = -kInf;  // max(e_k + d_k - E(t_k, y_{k-1}, z_{k-1}))
    bool ok = true;
};

EnergyBalanceReport verify_energy_balance(const RunResult& r, double tol = 1e-8);

// replays one step: sweep from the stored state and integrate the plastic flow
struct Replay {
    SlipTrajectory traj;
    PlasticPath path;
};
Replay replay_step(const Context& ctx, const RunResult& r, int k);

struct RateIndependenceReport {
    double max_P_diff = 0;
    bool loops_identical = true;
    bool ok = true;
};

// every step re-integrated along a(t) = t^2 (sampled on the substep grid)
RateIndependenceReport verify_rate_independence(const Context& ctx, const RunResult& r, double tol = 1e-8);

// first step whose accepted move is not neutral; -1 if none
int onset_step(const RunResult& r);

}  // namespace dislo
