#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "dislo/currents.hpp"
#include "dislo/multivec.hpp"
#include "dislo/plastic.hpp"

namespace dislo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ElasticDensityParams {
    double p = 4, q = 4, r = 6;
    double det_floor = 1e-6;

    double s() const { return 1.0 / (1.0 / p - 1.0 / r); }
    void validate() const;  // r > p > 3, q > 3
};

double elastic_density(const Mat3& E, const ElasticDensityParams& params);
// dW/dE; only meaningful where det E > 0
Mat3 elastic_stress(const Mat3& E, const ElasticDensityParams& params);

// Trilinear hexahedra on [0,1]^3, m cells per axis, 2x2x2 Gauss.
struct Mesh {
    int m = 8;
    std::array<std::array<double, 8>, 8> N{};                 // [qp][node]
    std::array<std::array<Vec3, 8>, 8> dN{};                  // physical gradients
    std::array<Vec3, 8> qp_local{};                           // offsets inside a cell
    double weight = 0;                                        // per quadrature point

    explicit Mesh(int m = 8);
    Grid grid() const { return Grid{m}; }
    size_t nodes() const { return size_t(m + 1) * (m + 1) * (m + 1); }
    size_t elements() const { return size_t(m) * m * m; }
    std::array<size_t, 8> element_nodes(size_t e) const;
    Vec3 qp_position(size_t e, int q) const;
    bool on_boundary(size_t node) const;
};

struct AffineMap {
    Mat3 A = Mat3::identity();
    Vec3 c;

    Vec3 operator()(const Vec3& x) const { return A * x + c; }
};

struct Ramp {
    enum class Kind { Linear, Quadratic, Constant };
    Kind kind = Kind::Linear;
    double rate = 0;

    double value(double t) const;
    double derivative(double t) const;
    static Kind parse(const std::string& s);
    static std::string name(Kind k);
};

// f(t, x) = ramp(t) (A x + v)
struct Loading {
    AffineMap profile{Mat3{}, Vec3{}};
    Ramp ramp;
};

// per-quadrature-point plastic data
struct PlasticQP {
    std::vector<Mat3> P, Pinv;
};

PlasticQP plastic_at_qp(const Mesh& mesh, const PlasticField& P);

struct DeformationField {
    std::vector<Vec3> y;
};

DeformationField affine_deformation(const Mesh& mesh, const AffineMap& g);

double elastic_energy(const Mesh& mesh, const DeformationField& y, const PlasticQP& P,
                      const ElasticDensityParams& params, double floor = 0.0);
// energy and nodal gradient (boundary entries included)
double elastic_energy_grad(const Mesh& mesh, const DeformationField& y, const PlasticQP& P,
                           const ElasticDensityParams& params, std::vector<Vec3>& grad, double floor = 0.0);

// consistent load vector: <f1, y> = sum_a F_a . y_a
std::vector<Vec3> load_vector(const Mesh& mesh, const AffineMap& profile);
double load_pairing(const std::vector<Vec3>& F, const DeformationField& y);

struct SolverOptions {
    enum class Method { Lbfgs, Gradient };
    Method method = Method::Lbfgs;
    double gtol = 1e-6;
    int max_iter = 5000;
    int memory = 10;
};

struct ElasticResult {
    DeformationField y;
    double potential = 0;  // W_e - <f, y>
    double elastic = 0;
    double load = 0;       // <f(t), y>
    int iterations = 0;
    double grad_inf = 0;
    bool converged = false;
};

struct InitializationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ElasticResult minimize_elastic(const Mesh& mesh, const PlasticQP& P, const std::vector<Vec3>& load, double ramp_value,
                               const ElasticDensityParams& params, const DeformationField& warm,
                               const SolverOptions& opts);

double core_energy(const DislocationSystem& phi, double zeta);

struct EnergyBreakdown {
    double elastic = 0, load = 0, core = 0, total = 0;
};

EnergyBreakdown total_energy(const Mesh& mesh, double ramp_value, const std::vector<Vec3>& load,
                             const DeformationField& y, const PlasticQP& P, const DislocationSystem& phi,
                             const ElasticDensityParams& params, double zeta);

struct CoercivityReport {
    double lhs = 0, rhs = 0, margin = 0;
    double C = 0;  // single constant: rhs = C^{-1}(|grad y|_p^p + M) - C(|P|_s^s + |f|_{p'}^{p'} + 1)
    double grad_p = 0, P_s = 0, f_pp = 0, mass = 0;
};

CoercivityReport coercivity_check(const Mesh& mesh, const Loading& loading, double t, const AffineMap& boundary,
                                  const DeformationField& y, const PlasticQP& P, const DislocationSystem& phi,
                                  const ElasticDensityParams& params, double zeta);

}  // namespace dislo
