#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cavshift/cavity_spectrum.hpp"
#include "cavshift/errors.hpp"
#include "cavshift/highprec.hpp"
#include "cavshift/particle_ops.hpp"
#include "cavshift/types.hpp"

namespace cavshift {

// ---------------------------------------------------------------- concentric layers

struct RadialLayer {
    double eps = 1.0;
    double mu = 1.0;
};

// layers[0] fills r < radii[0], layers[i] fills radii[i-1] < r < radii[i]; `outer` fills r > radii.back().
struct RadialLayerStack {
    std::vector<double> radii;
    std::vector<RadialLayer> layers;
    Medium outer;
    int order = 1;
};

void validate_stack(const RadialLayerStack& s);

// Cavity disk of radius r: one layer with eps = tau eps_c + eps_m.
RadialLayerStack cavity_stack(const CavityConfig& cfg, double radius, int order);
// Cavity disk with a concentric particle disk of radius delta_r and permeability mu_c.
RadialLayerStack particle_stack(const CavityConfig& cfg, double radius, double delta_r, double mu_c, int order);

// Rectangle lo.real() <= Re <= hi.real(), lo.imag() <= Im <= hi.imag().
struct SearchWindow {
    cplx lo;
    cplx hi;
};

// Interface matching matrix (u and (1/mu) d_r u) and its determinant, with fixed column scaling.
MatXc multilayer_matrix(const RadialLayerStack& s, cplx omega);
cplx multilayer_determinant(const RadialLayerStack& s, cplx omega);
// sigma_min / sigma_max of the column-normalized matching matrix.
double multilayer_residual(const RadialLayerStack& s, cplx omega);
// Zeros of the determinant inside the window by the argument principle.
int multilayer_winding(const RadialLayerStack& s, const SearchWindow& w);

struct MultilayerRoots {
    std::vector<cplx> roots;  // sorted by real part
    std::vector<double> residuals;
    int winding = 0;
};

// All resonances in the window; an empty list signals a root-free window.
MultilayerRoots multilayer_disk_resonances(const RadialLayerStack& s, const SearchWindow& w);

// Single root near a guess, from a small window around it.
cplx multilayer_root_near(const RadialLayerStack& s, cplx guess, double half_width);

// Eigenvalue of the disk volume operator K on angular order n near a guess:
// lambda = 1/(kappa^2 - k^2), kappa a zero of kappa J_n'(kappa R) H_n(kR) - k J_n(kappa R) H_n'(kR).
cplx radial_k_eigenvalue(double radius, cplx k, int order, cplx lambda_guess);

// ---------------------------------------------------------------- coupled cavity + particle solver

struct CoupledOptions {
    int particle_resolution = 16;
    double tol = 1e-11;
    int max_iter = 40;
    bool golden_polish = false;
};

struct CoupledResult {
    cplx omega;
    double sigma_min = 0.0;  // relative smallest singular value at the root
    int iterations = 0;
    Sector sector = Sector::none;
    std::vector<std::string> warnings;
};

// Scalar unknowns on the cavity nodes (eps contrast) and vector unknowns v = grad u on the particle nodes
// (mu contrast). Internal particles add the local Taylor data (a, g) of the smooth field at z.
class CoupledSystem {
public:
    CoupledSystem(std::shared_ptr<const CavityModel> model, ParticleConfig particle, Sector sector,
                  int particle_resolution = 16);

    MatXc assemble(cplx omega) const;
    Eigen::Index size() const;
    Eigen::Index cavity_size() const { return static_cast<Eigen::Index>(omega_active_.size()); }
    Eigen::Index particle_size() const { return 2 * static_cast<Eigen::Index>(d_active_.size()); }
    const VolumeQuadrature& particle_quad() const { return dq_; }
    Sector sector() const { return sector_; }
    cplx beta(cplx omega) const;
    // Reduced cavity unknowns of a full-grid field.
    VecXc restrict_cavity(const VecXc& full) const;

private:
    std::shared_ptr<const CavityModel> model_;
    ParticleConfig particle_;
    Sector sector_;
    VolumeQuadrature dq_;
    std::vector<int> omega_active_, d_active_, d_mirror_;
    std::vector<AngularRule> d_rules_;       // particle shape about each particle node
    std::vector<AngularRule> cavity_rules_;  // cavity shape about each particle node (internal only)
    AngularRule cavity_rule_z_;
    bool internal_ = false;
    int taylor_unknowns_ = 0;
};

CoupledResult coupled_perturbed_resonance(const ResonanceRecord& seed, const ParticleConfig& particle,
                                          const CoupledOptions& opt = {});

// Discrete static particle operator N^0 on the particle grid (full, 2N x 2N, component-blocked
// [x-components; y-components]) including the 1/2 delta term.
MatX static_particle_operator(const VolumeQuadrature& dq, const Shape2D& shape);

// Dipole moment int_D L^{-1}[F] for the static L = 1/(k - 1) I + N^0 on D.
Vec2c static_dipole_moment(const Shape2D& particle_shape, int resolution, double contrast,
                           const std::function<Vec2c(const Vec2&)>& field);

// ---------------------------------------------------------------- convergence studies

struct ConvergenceRow {
    double delta = 0.0;
    cplx prediction;
    cplx oracle;
    double abs_error = 0.0;
    double rel_error = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
    double intercept = 0.0;
    double fit_residual = 0.0;
    bool degenerate = false;  // every error below 1e-12 of the shift scale

    std::string csv() const;
};

class ConvergenceAborted : public Error {
public:
    ConvergenceAborted(const std::string& what, ConvergenceStudy partial)
        : Error(what), partial_(std::move(partial)) {}
    const ConvergenceStudy& partial() const { return partial_; }

private:
    ConvergenceStudy partial_;
};

// Least-squares slope of log|error| against log(delta).
ConvergenceStudy convergence_study(const std::function<cplx(double)>& prediction,
                                   const std::function<cplx(double)>& oracle, const std::vector<double>& deltas,
                                   int workers = 1);

struct LogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};
LogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cavshift
