#pragma once

#include <vector>

#include "dislo/currents.hpp"
#include "dislo/multivec.hpp"

namespace dislo {

// Regular node grid on [0,1]^3 with n cells per axis.
struct Grid {
    int n = 8;

    int per_axis() const { return n + 1; }
    size_t size() const { return size_t(n + 1) * (n + 1) * (n + 1); }
    double h() const { return 1.0 / n; }
    size_t index(int i, int j, int k) const { return (size_t(k) * (n + 1) + j) * (n + 1) + i; }
    Vec3 position(size_t idx) const {
        int p = n + 1;
        int i = int(idx % p), j = int((idx / p) % p), k = int(idx / (size_t(p) * p));
        return {i * h(), j * h(), k * h()};
    }
};

struct Mollifier {
    double rho = 0.375;
    double c = 1.0;

    double operator()(const Vec3& x) const;
};

// c fixed so that the lattice sum h^3 sum eta(x_node) = 1 for a node-centred bump
Mollifier make_mollifier(double rho, const Grid& grid);

struct BurgersTable {
    std::vector<Vec3> b;  // one representative per +-pair

    size_t size() const { return b.size(); }
    void validate() const;  // throws std::invalid_argument
};

struct SlipRateField {
    Grid grid;
    double t = 0;
    std::vector<std::vector<BiVec3>> gamma;  // [rep][node]
};

SlipRateField gamma_field(const SlipTrajectory& traj, double t, const Grid& grid, const Mollifier& eta,
                          size_t nreps);
std::vector<std::vector<Vec3>> normal_rate(const SlipRateField& f);

// -S: every triangle and every leg reversed
SweptSurface reversed(const SweptSurface& s);

struct GammaBoundReport {
    std::vector<double> lhs, rhs;  // per representative
    bool ok = true;
};

// int ||gamma^b(t)||_inf dt (midpoint per slab) against ||eta||_inf Var(S^b; I)
GammaBoundReport gamma_bound_check(const SlipTrajectory& traj, const Grid& grid, const Mollifier& eta, size_t nreps,
                                   double a, double b, int slabs, double tol = 1e-9);

}  // namespace dislo
