#include "dislo/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace dislo {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ScenarioError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ScenarioError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

double num(const json& j, const std::string& key) {
    if (!j.is_number()) throw ScenarioError("'" + key + "' must be a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ScenarioError("'" + key + "' must be an integer");
    return j.get<int>();
}

Vec3 vec3(const json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 3) throw ScenarioError("'" + key + "' must be a 3-vector");
    return {num(j[0], key), num(j[1], key), num(j[2], key)};
}

Mat3 mat3(const json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 3) throw ScenarioError("'" + key + "' must be a 3x3 matrix");
    Mat3 M;
    for (int i = 0; i < 3; ++i) {
        Vec3 r = vec3(j[i], key);
        M(i, 0) = r.x;
        M(i, 1) = r.y;
        M(i, 2) = r.z;
    }
    return M;
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json to_json(const Mat3& M) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) rows.push_back(json::array({M(i, 0), M(i, 1), M(i, 2)}));
    return rows;
}

AffineMap affine(const json& j, const std::string& where, const char* lin, const char* off) {
    check_keys(j, {lin, off}, where);
    AffineMap a{Mat3{}, Vec3{}};
    if (j.contains(lin)) a.A = mat3(j[lin], where + "." + lin);
    if (j.contains(off)) a.c = vec3(j[off], where + "." + off);
    return a;
}

}  // namespace

void Scenario::validate() const {
    try {
        density.validate();
        burgers.validate();
        dissipation.validate(burgers.size());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("validation error: ") + e.what());
    }
    if (grid < 1 || mesh < 1) throw ScenarioError("validation error: grid and mesh need at least one cell");
    if (!(zeta > 0)) throw ScenarioError("validation error: zeta must be positive");
    if (!(rho_cells > 0)) throw ScenarioError("validation error: rho must be positive");
    if (!(T > 0) || N < 1) throw ScenarioError("validation error: requires T > 0 and N >= 1");
    if (loops.loops.empty()) throw ScenarioError("validation error: at least one loop is required");
    for (size_t i = 0; i < loops.loops.size(); ++i) {
        const Loop& l = loops.loops[i];
        if (l.burgers_index < 0 || size_t(l.burgers_index) >= burgers.size())
            throw ScenarioError("validation error: loop " + std::to_string(i) + " names an unknown Burgers vector");
        if (l.multiplicity < 1) throw ScenarioError("validation error: multiplicity must be positive");
        try {
            validate_loop(l, true);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("validation error: loop " + std::to_string(i) + ": " + e.what());
        }
    }
    double m0 = system_mass(loops);
    if (gamma_cap < m0)
        throw ScenarioError("validation error: gamma_cap " + std::to_string(gamma_cap) +
                            " is below the initial dislocation mass " + std::to_string(m0) +
                            " (the cap must satisfy gamma >= M(Phi_0))");
    if (!(solver.gtol > 0) || solver.max_iter < 1 || solver.memory < 1)
        throw ScenarioError("validation error: solver needs gtol > 0, max_iter >= 1, memory >= 1");
    if (!(search.delta_cells > 0) || search.random_candidates < 0 || search.substeps < 1 ||
        search.stability_samples < 0)
        throw ScenarioError("validation error: bad search options");
}

Scenario scenario_from_json(const json& j) {
    check_keys(j, {"schema", "name", "grid", "mesh", "burgers", "loops", "exponents", "zeta", "rho", "gamma_cap", "T",
                   "N", "loading", "boundary", "dissipation", "solver", "output"},
               "");
    if (!j.contains("schema") || j["schema"] != kScenarioSchema)
        throw ScenarioError(std::string("'schema' must be \"") + kScenarioSchema + "\"");
    Scenario s;
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    if (j.contains("grid")) s.grid = integer(j["grid"], "grid");
    if (j.contains("mesh")) s.mesh = integer(j["mesh"], "mesh");
    if (!j.contains("burgers") || !j["burgers"].is_array()) throw ScenarioError("'burgers' must be a list of vectors");
    for (const auto& b : j["burgers"]) s.burgers.b.push_back(vec3(b, "burgers"));
    if (!j.contains("loops") || !j["loops"].is_array()) throw ScenarioError("'loops' must be a list");
    for (const auto& lj : j["loops"]) {
        check_keys(lj, {"nodes", "multiplicity", "burgers"}, "loops[]");
        Loop l;
        if (!lj.contains("nodes") || !lj["nodes"].is_array()) throw ScenarioError("'loops[].nodes' is required");
        for (const auto& n : lj["nodes"]) l.nodes.push_back(vec3(n, "loops[].nodes"));
        if (lj.contains("multiplicity")) l.multiplicity = integer(lj["multiplicity"], "loops[].multiplicity");
        if (lj.contains("burgers")) l.burgers_index = integer(lj["burgers"], "loops[].burgers");
        s.loops.loops.push_back(std::move(l));
    }
    if (j.contains("exponents")) {
        const auto& e = j["exponents"];
        check_keys(e, {"p", "q", "r", "det_floor"}, "exponents");
        if (e.contains("p")) s.density.p = num(e["p"], "exponents.p");
        if (e.contains("q")) s.density.q = num(e["q"], "exponents.q");
        if (e.contains("r")) s.density.r = num(e["r"], "exponents.r");
        if (e.contains("det_floor")) s.density.det_floor = num(e["det_floor"], "exponents.det_floor");
    }
    if (j.contains("zeta")) s.zeta = num(j["zeta"], "zeta");
    if (j.contains("rho")) s.rho_cells = num(j["rho"], "rho");
    if (j.contains("T")) s.T = num(j["T"], "T");
    if (j.contains("N")) s.N = integer(j["N"], "N");
    if (j.contains("loading")) {
        const auto& l = j["loading"];
        check_keys(l, {"profile", "ramp"}, "loading");
        if (l.contains("profile")) s.loading.profile = affine(l["profile"], "loading.profile", "A", "v");
        if (l.contains("ramp")) {
            check_keys(l["ramp"], {"type", "rate"}, "loading.ramp");
            try {
                if (l["ramp"].contains("type")) s.loading.ramp.kind = Ramp::parse(l["ramp"]["type"].get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ScenarioError(e.what());
            }
            if (l["ramp"].contains("rate")) s.loading.ramp.rate = num(l["ramp"]["rate"], "loading.ramp.rate");
        }
    }
    if (j.contains("boundary")) {
        s.boundary = affine(j["boundary"], "boundary", "A", "c");
        if (!j["boundary"].contains("A")) s.boundary.A = Mat3::identity();
    }
    size_t nreps = s.burgers.size();
    s.dissipation = DissipationParams::isotropic(nreps, 1.0);
    if (j.contains("dissipation")) {
        const auto& d = j["dissipation"];
        check_keys(d, {"weights", "h0", "h4"}, "dissipation");
        if (d.contains("weights")) {
            const auto& w = d["weights"];
            if (!w.is_array()) throw ScenarioError("'dissipation.weights' must be a list");
            s.dissipation.weights.clear();
            for (const auto& e : w)
                s.dissipation.weights.push_back(e.is_number() ? e.get<double>() * Mat3::identity()
                                                              : mat3(e, "dissipation.weights"));
        }
        if (d.contains("h0")) s.dissipation.h0 = num(d["h0"], "dissipation.h0");
        if (d.contains("h4")) s.dissipation.h4 = num(d["h4"], "dissipation.h4");
    }
    if (j.contains("solver")) {
        const auto& o = j["solver"];
        check_keys(o, {"gtol", "max_iter", "memory", "method", "substeps", "delta_cells", "random_candidates",
                       "translations", "refinement", "stability_samples", "seed", "threads"},
                   "solver");
        if (o.contains("gtol")) s.solver.gtol = num(o["gtol"], "solver.gtol");
        if (o.contains("max_iter")) s.solver.max_iter = integer(o["max_iter"], "solver.max_iter");
        if (o.contains("memory")) s.solver.memory = integer(o["memory"], "solver.memory");
        if (o.contains("method")) {
            std::string m = o["method"].get<std::string>();
            if (m == "lbfgs") s.solver.method = SolverOptions::Method::Lbfgs;
            else if (m == "gradient") s.solver.method = SolverOptions::Method::Gradient;
            else throw ScenarioError("'solver.method' must be \"lbfgs\" or \"gradient\"");
        }
        if (o.contains("substeps")) s.search.substeps = integer(o["substeps"], "solver.substeps");
        if (o.contains("delta_cells")) s.search.delta_cells = num(o["delta_cells"], "solver.delta_cells");
        if (o.contains("random_candidates"))
            s.search.random_candidates = integer(o["random_candidates"], "solver.random_candidates");
        if (o.contains("translations")) s.search.translations = o["translations"].get<bool>();
        if (o.contains("refinement")) s.search.refinement = o["refinement"].get<bool>();
        if (o.contains("stability_samples"))
            s.search.stability_samples = integer(o["stability_samples"], "solver.stability_samples");
        if (o.contains("seed")) s.search.seed = o["seed"].get<uint64_t>();
        if (o.contains("threads")) s.search.threads = integer(o["threads"], "solver.threads");
    }
    if (j.contains("output")) s.output = j["output"].get<std::string>();
    s.gamma_cap = j.contains("gamma_cap") ? num(j["gamma_cap"], "gamma_cap") : 2.0 * system_mass(s.loops);
    s.validate();
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["schema"] = kScenarioSchema;
    j["name"] = s.name;
    j["grid"] = s.grid;
    j["mesh"] = s.mesh;
    j["burgers"] = json::array();
    for (const auto& b : s.burgers.b) j["burgers"].push_back(to_json(b));
    j["loops"] = json::array();
    for (const auto& l : s.loops.loops) {
        json lj;
        lj["nodes"] = json::array();
        for (const auto& n : l.nodes) lj["nodes"].push_back(to_json(n));
        lj["multiplicity"] = l.multiplicity;
        lj["burgers"] = l.burgers_index;
        j["loops"].push_back(lj);
    }
    j["exponents"] = {{"p", s.density.p}, {"q", s.density.q}, {"r", s.density.r}, {"det_floor", s.density.det_floor}};
    j["zeta"] = s.zeta;
    j["rho"] = s.rho_cells;
    j["gamma_cap"] = s.gamma_cap;
    j["T"] = s.T;
    j["N"] = s.N;
    j["loading"] = {{"profile", {{"A", to_json(s.loading.profile.A)}, {"v", to_json(s.loading.profile.c)}}},
                    {"ramp", {{"type", Ramp::name(s.loading.ramp.kind)}, {"rate", s.loading.ramp.rate}}}};
    j["boundary"] = {{"A", to_json(s.boundary.A)}, {"c", to_json(s.boundary.c)}};
    json w = json::array();
    for (const auto& W : s.dissipation.weights) w.push_back(to_json(W));
    j["dissipation"] = {{"weights", w}, {"h0", s.dissipation.h0}, {"h4", s.dissipation.h4}};
    j["solver"] = {{"gtol", s.solver.gtol},
                   {"max_iter", s.solver.max_iter},
                   {"memory", s.solver.memory},
                   {"method", s.solver.method == SolverOptions::Method::Lbfgs ? "lbfgs" : "gradient"},
                   {"substeps", s.search.substeps},
                   {"delta_cells", s.search.delta_cells},
                   {"random_candidates", s.search.random_candidates},
                   {"translations", s.search.translations},
                   {"refinement", s.search.refinement},
                   {"stability_samples", s.search.stability_samples},
                   {"seed", s.search.seed},
                   {"threads", s.search.threads}};
    j["output"] = s.output;
    return j;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ScenarioError("scenario '" + path + "' is not valid JSON: " + e.what());
    } catch (const json::type_error& e) {
        throw ScenarioError(std::string("scenario type error: ") + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("scenario type error: ") + e.what());
    }
}

}  // namespace dislo
