#include "dislo/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dislo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string snap_name(int k, const char* what) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "step_%04d_%s.csv", k, what);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    return out;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("missing artifact '" + p.string() + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("bad number '" + cell + "' in '" + p.string() + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_loops(const fs::path& p, const DislocationSystem& phi) {
    auto out = open_out(p);
    out << "loop,node,x,y,z,multiplicity,burgers\n";
    for (size_t l = 0; l < phi.loops.size(); ++l)
        for (size_t i = 0; i < phi.loops[l].nodes.size(); ++i) {
            const Vec3& x = phi.loops[l].nodes[i];
            out << l << ',' << i << ',' << format_number(x.x) << ',' << format_number(x.y) << ','
                << format_number(x.z) << ',' << phi.loops[l].multiplicity << ',' << phi.loops[l].burgers_index
                << '\n';
        }
}

DislocationSystem read_loops(const fs::path& p) {
    DislocationSystem phi;
    for (const auto& r : read_csv(p)) {
        if (r.size() != 7) throw IoError("malformed loop row in '" + p.string() + "'");
        size_t l = size_t(r[0]);
        if (l >= phi.loops.size()) phi.loops.resize(l + 1);
        phi.loops[l].nodes.push_back({r[2], r[3], r[4]});
        phi.loops[l].multiplicity = int(r[5]);
        phi.loops[l].burgers_index = int(r[6]);
    }
    return phi;
}

void write_vectors(const fs::path& p, const char* header, const std::vector<std::vector<Vec3>>& v) {
    auto out = open_out(p);
    out << header << '\n';
    for (size_t l = 0; l < v.size(); ++l)
        for (size_t i = 0; i < v[l].size(); ++i)
            out << l << ',' << i << ',' << format_number(v[l][i].x) << ',' << format_number(v[l][i].y) << ','
                << format_number(v[l][i].z) << '\n';
}

std::vector<std::vector<Vec3>> read_vectors(const fs::path& p) {
    std::vector<std::vector<Vec3>> v;
    for (const auto& r : read_csv(p)) {
        if (r.size() != 5) throw IoError("malformed row in '" + p.string() + "'");
        size_t l = size_t(r[0]);
        if (l >= v.size()) v.resize(l + 1);
        v[l].push_back({r[2], r[3], r[4]});
    }
    return v;
}

void write_P(const fs::path& p, const PlasticField& P) {
    auto out = open_out(p);
    out << "node,x,y,z,P11,P12,P13,P21,P22,P23,P31,P32,P33\n";
    for (size_t i = 0; i < P.P.size(); ++i) {
        Vec3 x = P.grid.position(i);
        out << i << ',' << format_number(x.x) << ',' << format_number(x.y) << ',' << format_number(x.z);
        for (double a : P.P[i].a) out << ',' << format_number(a);
        out << '\n';
    }
}

PlasticField read_P(const fs::path& p, const Grid& grid) {
    PlasticField P = PlasticField::identity(grid);
    auto rows = read_csv(p);
    if (rows.size() != P.P.size()) throw IoError("'" + p.string() + "' does not match the grid");
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 13) throw IoError("malformed P row in '" + p.string() + "'");
        for (int c = 0; c < 9; ++c) P.P[i].a[c] = rows[i][4 + c];
    }
    return P;
}

void write_y(const fs::path& p, const DeformationField& y, const Mesh& mesh) {
    auto out = open_out(p);
    out << "node,X,Y,Z,y1,y2,y3\n";
    Grid g = mesh.grid();
    for (size_t i = 0; i < y.y.size(); ++i) {
        Vec3 X = g.position(i);
        out << i << ',' << format_number(X.x) << ',' << format_number(X.y) << ',' << format_number(X.z) << ','
            << format_number(y.y[i].x) << ',' << format_number(y.y[i].y) << ',' << format_number(y.y[i].z) << '\n';
    }
}

DeformationField read_y(const fs::path& p, size_t nodes) {
    DeformationField y;
    for (const auto& r : read_csv(p)) {
        if (r.size() != 7) throw IoError("malformed y row in '" + p.string() + "'");
        y.y.push_back({r[4], r[5], r[6]});
    }
    if (y.y.size() != nodes) throw IoError("'" + p.string() + "' does not match the mesh");
    return y;
}

void write_gamma(const fs::path& p, const SlipRateField& f) {
    auto out = open_out(p);
    out << "rep,node,x,y,z,g1,g2,g3\n";
    auto g = normal_rate(f);
    for (size_t r = 0; r < g.size(); ++r)
        for (size_t i = 0; i < g[r].size(); ++i) {
            if (g[r][i].x == 0 && g[r][i].y == 0 && g[r][i].z == 0) continue;
            Vec3 x = f.grid.position(i);
            out << r << ',' << i << ',' << format_number(x.x) << ',' << format_number(x.y) << ','
                << format_number(x.z) << ',' << format_number(g[r][i].x) << ',' << format_number(g[r][i].y) << ','
                << format_number(g[r][i].z) << '\n';
        }
}

}  // namespace

json ledger_json(const RunResult& r) {
    json j;
    j["schema"] = kLedgerSchema;
    j["scenario"] = r.scenario.name;
    j["T"] = r.scenario.T;
    j["N"] = r.scenario.N;
    j["dT"] = r.scenario.dT();
    j["alpha0"] = r.steps.empty() ? json(nullptr) : json(r.steps[0].alpha);
    j["C_scaled"] = r.C_scaled;
    j["T_infinity"] = opt(r.T_infinity);
    j["initial_stability_margin"] = finite_or_null(r.initial_stability);
    j["violations"] = r.violations;
    j["steps"] = json::array();
    for (const auto& s : r.steps) {
        json row;
        row["k"] = s.k;
        row["t"] = s.t;
        row["s"] = s.s;
        row["e"] = s.e;
        row["d"] = s.d;
        row["alpha"] = s.alpha;
        row["beta"] = s.beta;
        row["gronwall_bound"] = opt(s.gronwall_bound);
        row["accepted_candidate"] = s.accepted;
        row["stability_margin"] = finite_or_null(s.stability_margin);
        row["flow_residual"] = s.flow_residual;
        row["J_accepted"] = s.J_accepted;
        row["J_neutral"] = s.J_neutral;
        row["E_previous"] = s.E_previous;
        row["power"] = s.power;
        row["det_residual"] = s.det_residual;
        row["var"] = s.var;
        row["linf"] = s.linf;
        row["evaluated"] = s.evaluated;
        row["rejected"] = s.rejected;
        row["nonconverged"] = s.nonconverged;
        j["steps"].push_back(row);
    }
    return j;
}

void write_run(const std::string& dir, const RunResult& r, const Context& ctx) {
    fs::path root(dir), snaps = root / "snapshots";
    std::error_code ec;
    fs::create_directories(snaps, ec);
    if (ec) throw IoError("cannot create '" + snaps.string() + "': " + ec.message());
    {
        auto out = open_out(root / "scenario.json");
        out << scenario_to_json(r.scenario).dump(2) << '\n';
    }
    {
        auto out = open_out(root / "ledger.json");
        out << ledger_json(r).dump(2) << '\n';
    }
    for (size_t k = 0; k < r.snapshots.size(); ++k) {
        const Snapshot& s = r.snapshots[k];
        write_loops(snaps / snap_name(int(k), "loops"), s.phi);
        write_P(snaps / snap_name(int(k), "P"), s.P);
        write_y(snaps / snap_name(int(k), "y"), s.y, ctx.mesh);
        if (k > 0) {
            write_vectors(snaps / snap_name(int(k), "move"), "loop,node,dx,dy,dz", s.disp);
            SlipTrajectory traj = sweep_system(r.snapshots[k - 1].phi, s.disp);
            write_gamma(snaps / snap_name(int(k), "g"),
                        gamma_field(traj, 0.5, ctx.grid, ctx.eta, r.scenario.burgers.size()));
        }
    }
}

RunResult read_run(const std::string& dir) {
    fs::path root(dir), snaps = root / "snapshots";
    RunResult r;
    r.scenario = load_scenario((root / "scenario.json").string());
    std::ifstream in(root / "ledger.json");
    if (!in) throw IoError("missing artifact '" + (root / "ledger.json").string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("ledger is not valid JSON: ") + e.what());
    }
    if (j.value("schema", "") != kLedgerSchema) throw IoError("ledger schema mismatch");
    auto num = [](const json& v) { return v.is_null() ? kInf : v.get<double>(); };
    r.C_scaled = j.at("C_scaled").get<double>();
    if (!j.at("T_infinity").is_null()) r.T_infinity = j["T_infinity"].get<double>();
    r.initial_stability = num(j.at("initial_stability_margin"));
    r.violations = j.at("violations").get<std::vector<std::string>>();
    for (const auto& row : j.at("steps")) {
        StepRecord s;
        s.k = row.at("k").get<int>();
        s.t = row.at("t").get<double>();
        s.s = row.at("s").get<double>();
        s.e = row.at("e").get<double>();
        s.d = row.at("d").get<double>();
        s.alpha = row.at("alpha").get<double>();
        s.beta = row.at("beta").get<double>();
        if (!row.at("gronwall_bound").is_null()) s.gronwall_bound = row["gronwall_bound"].get<double>();
        s.accepted = row.at("accepted_candidate").get<std::string>();
        s.stability_margin = num(row.at("stability_margin"));
        s.flow_residual = row.at("flow_residual").get<double>();
        s.J_accepted = row.at("J_accepted").get<double>();
        s.J_neutral = row.at("J_neutral").get<double>();
        s.E_previous = row.at("E_previous").get<double>();
        s.power = row.at("power").get<double>();
        s.det_residual = row.at("det_residual").get<double>();
        s.var = row.at("var").get<double>();
        s.linf = row.at("linf").get<double>();
        s.evaluated = row.at("evaluated").get<int>();
        s.rejected = row.at("rejected").get<int>();
        s.nonconverged = row.at("nonconverged").get<int>();
        r.steps.push_back(s);
    }
    Grid grid{r.scenario.grid};
    Mesh mesh(r.scenario.mesh);
    for (size_t k = 0; k < r.steps.size(); ++k) {
        Snapshot s;
        s.phi = read_loops(snaps / snap_name(int(k), "loops"));
        s.P = read_P(snaps / snap_name(int(k), "P"), grid);
        s.y = read_y(snaps / snap_name(int(k), "y"), mesh.nodes());
        if (k > 0) s.disp = read_vectors(snaps / snap_name(int(k), "move"));
        r.snapshots.push_back(std::move(s));
    }
    return r;
}

}  // namespace dislo
