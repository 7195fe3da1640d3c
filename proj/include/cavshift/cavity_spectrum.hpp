#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cavshift/geometry.hpp"
#include "cavshift/types.hpp"

namespace cavshift {

struct CavityConfig {
    Shape2D shape = Shape2D::disk(1.0);
    double eps_c = 1.0;
    double eps_m = 1.0;
    double mu_m = 1.0;
    double tau = 10.0;

    Medium background() const { return {eps_m, mu_m}; }
    // alpha(omega) = omega^2 tau eps_c mu_m
    cplx alpha(cplx omega) const { return omega * omega * tau * eps_c * mu_m; }
    cplx alpha_deriv(cplx omega) const { return 2.0 * omega * tau * eps_c * mu_m; }
};

void validate_cavity(const CavityConfig& c);

// Mirror-symmetry sector of the discrete problem. `even`/`odd` restrict to functions
// symmetric/antisymmetric under reflection about the shape's local x-axis.
enum class Sector { none, even, odd };
const char* to_string(Sector s);
Sector sector_from_string(const std::string& s);

class OperatorCache;

// Frequency-independent discretization data: quadrature, sector maps, per-node angular rules.
class CavityModel {
public:
    CavityModel(CavityConfig cfg, int resolution, int workers = 1);
    CavityModel(CavityConfig cfg, VolumeQuadrature quad, int workers = 1);

    const CavityConfig& config() const { return cfg_; }
    const VolumeQuadrature& quad() const { return quad_; }
    int workers() const { return workers_; }
    void set_workers(int w) { workers_ = std::max(1, w); }

    // Reduced node set of a sector: indices into the full grid and their mirror partners.
    const std::vector<int>& active(Sector s) const;
    // Weight of a reduced unknown (2w in the symmetric sectors).
    VecX reduced_weights(Sector s) const;

    // Angular rule about node i (built on first use, thread-safe after prepare()).
    const AngularRule& angular_rule(int i) const;
    void prepare(Sector s) const;

    // Integral of Gamma(x - y) over Omega and its derivative in k, by polar integration about x.
    cplx volume_potential(int node, cplx k) const;
    cplx volume_potential_dk(int node, cplx k) const;

    std::shared_ptr<OperatorCache> cache;
    std::string hash() const;

private:
    CavityConfig cfg_;
    VolumeQuadrature quad_;
    int workers_;
    std::vector<int> active_all_, active_half_;
    mutable std::vector<std::unique_ptr<AngularRule>> rules_;
};

// Symmetrized Nystrom matrix W^{1/2} A W^{-1/2} of K on a sector; complex symmetric.
struct DiscreteOperator {
    MatXc a;
    MatXc da;  // d/d omega, empty unless requested
    cplx omega;
    Sector sector = Sector::none;
};

DiscreteOperator assemble_k(const CavityModel& model, cplx omega, Sector sector = Sector::none,
                            bool with_derivative = false);

struct EigenPair {
    cplx lambda;
    VecXc v;  // symmetrized coordinates, bilinear-normalized v^T v = 1
    double residual = 0.0;
    bool near_defective = false;
};

struct EigenOptions {
    double tol = 1e-12;
    int max_restarts = 60;
    int dense_threshold = 400;
    const VecXc* start = nullptr;
};

// The `count` largest-|lambda| eigenpairs of a complex symmetric matrix.
std::vector<EigenPair> eigenpairs(const MatXc& a, int count, const EigenOptions& opt = {});
std::vector<EigenPair> eigenpairs(const DiscreteOperator& op, int count, const EigenOptions& opt = {});

// Bilinear products of symmetrized vectors.
inline cplx bilinear(const VecXc& u, const VecXc& v) { return (u.array() * v.array()).sum(); }

struct BranchSample {
    cplx omega;
    cplx lambda;
    VecXc v;
    double overlap;
};

struct EigenBranch {
    int index = 0;
    Sector sector = Sector::none;
    std::vector<BranchSample> samples;
};

EigenBranch track_branch(const CavityModel& model, Sector sector, int j0, const std::vector<cplx>& path,
                         int nev = 8);

// Branch selection: target sector, plus an optional seed function whose overlap picks the family.
struct BranchSpec {
    cplx seed = {1.0, 0.0};
    Sector sector = Sector::none;
    std::function<double(const Vec2&)> seed_function;
    int nev = 8;
};

struct ResonanceRecord {
    cplx omega0;
    int branch = 0;
    Sector sector = Sector::none;
    cplx lambda0;
    cplx r;            // f'(omega0), f = 1 - alpha lambda
    cplx c;            // residue coefficient -lambda0 / R
    VecXc mode;        // e on the full grid, sum w e^2 = 1
    VecXc mode_sym;    // reduced symmetrized eigenvector
    cplx norm_certificate;
    double residual = 0.0;
    int iterations = 0;
    bool exceptional = false;
    std::shared_ptr<const CavityModel> model;
};

struct NewtonOptions {
    double tol = 1e-9;
    int max_iter = 30;
};

ResonanceRecord find_resonance(std::shared_ptr<const CavityModel> model, const BranchSpec& spec,
                               const NewtonOptions& opt = {});

// Resonance residual |1 - alpha lambda| for a record (re-evaluated from scratch).
double characteristic_residual(const ResonanceRecord& rec);

struct ResidueResult {
    cplx c;
    VecXc mode;                // full grid, normalized
    MatXc probe_block;         // residue on probe pairs
    std::vector<int> probes;   // full-grid node indices
    double sigma_ratio = 0.0;  // sigma_2 / sigma_1
    double asymmetry = 0.0;
    int winding = 0;           // zeros of det(I - alpha K) inside the circle
    double rho = 0.0;
    int points = 0;
};

// Default probe set: `count` nodes spread in angle over the reduced sector on the ring
// closest to the given fraction of the boundary radius.
std::vector<int> default_probes(const CavityModel& model, Sector sector, int count = 8,
                                double radius_fraction = 0.12);

// Probe block of the (sector) Green's function difference G - Gamma at omega.
MatXc green_difference(const CavityModel& model, Sector sector, cplx omega, const std::vector<int>& probes,
                       MatXc* full_columns = nullptr);

ResidueResult extract_residue(const ResonanceRecord& rec, double rho, int points = 32,
                              std::vector<int> probes = {});

struct ModeSample {
    cplx value;
    Vec2c gradient;
};

// e(z) and grad e(z) at an interior point from the integral representation.
ModeSample mode_value_and_gradient(const ResonanceRecord& rec, const Vec2& z);

// Integrals over a shape about an interior point x, from a polar angular rule built about x:
//   s = int Gamma(x - y) dy, grad = grad_x s, t = int grad_x Gamma(x - y) (y - x)^T dy.
struct PointPotentials {
    cplx s;
    Vec2c grad;
    Mat2c t;
};
PointPotentials point_potentials(const AngularRule& rule, cplx k);

// Principal value of int Hess_x Gamma(x - y) dy over the shape (the delta part excluded).
Mat2c hessian_potential_pv(const AngularRule& rule, cplx k);

// g(x) = alpha(omega0) * int_Omega e Gamma(x - y) dy outside Omega.
class ExteriorMode {
public:
    explicit ExteriorMode(const ResonanceRecord& rec);
    cplx value(const Vec2& x) const;
    Vec2c gradient(const Vec2& x) const;
    cplx omega() const { return omega_; }

private:
    void check(const Vec2& x) const;
    std::shared_ptr<const CavityModel> model_;
    cplx omega_, alpha_;
    VecXc we_;  // w_l e_l
};

ExteriorMode exterior_mode(const ResonanceRecord& rec);

// Operator cache interface (implemented by the CLI's on-disk cache).
class OperatorCache {
public:
    virtual ~OperatorCache() = default;
    virtual bool load(const std::string& key, DiscreteOperator& op) = 0;
    virtual void store(const std::string& key, const DiscreteOperator& op) = 0;
};

std::string operator_key(const CavityModel& model, cplx omega, Sector sector, bool with_derivative);

}  // namespace cavshift
