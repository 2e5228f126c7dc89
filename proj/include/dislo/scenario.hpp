#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dislo/dissipation.hpp"
#include "dislo/energy.hpp"

namespace dislo {

inline constexpr const char* kScenarioSchema = "dislo-scenario/1";

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchOptions {
    double delta_cells = 1.0;   // coordinate move size in grid spacings
    int random_candidates = 16;
    bool translations = true;   // rigid per-loop moves
    bool refinement = true;     // one pass at delta/2 around the incumbent
    int stability_samples = 4;  // per-step sampled stability test
    int substeps = 8;           // plastic substeps per trajectory
    uint64_t seed = 1;
    int threads = 0;            // 0: DISLO_THREADS or hardware concurrency
};

struct Scenario {
    std::string name = "scenario";
    int grid = 8, mesh = 8;
    BurgersTable burgers;
    DislocationSystem loops;
    ElasticDensityParams density;
    double zeta = 0.01;
    double rho_cells = 3.0;
    double gamma_cap = 0;  // 0 in the file: twice the initial mass
    double T = 1.0;
    int N = 10;
    Loading loading;
    AffineMap boundary;
    DissipationParams dissipation;
    SolverOptions solver;
    SearchOptions search;
    std::string output = "runs/out";

    double dT() const { return T / N; }
    double rho() const { return rho_cells / grid; }
    void validate() const;  // throws ScenarioError
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

}  // namespace dislo
