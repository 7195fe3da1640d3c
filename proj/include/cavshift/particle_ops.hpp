#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavshift/geometry.hpp"
#include "cavshift/types.hpp"

namespace cavshift {

struct ResonanceRecord;

struct DrudeParams {
    double omega_p = 1.0;
    double mu_m = 1.0;
};

enum class ParticlePosition { internal, external };

// Particle D = z + delta*B with constant or Drude permeability.
struct ParticleConfig {
    Shape2D shape = Shape2D::disk(1.0);  // reference B, size ~1, contains the origin
    double delta = 0.01;
    Vec2 z = Vec2::Zero();
    double mu_c = 0.5;
    std::optional<DrudeParams> drude;
    ParticlePosition position = ParticlePosition::internal;

    Shape2D actual_shape() const { return scaled_translated(shape, delta, z); }
};

// Throws InvalidArgument if the separation assumptions of the position class fail.
void validate_particle(const ParticleConfig& p, const Shape2D& cavity);

// Discrete K_B^* on boundary nodes: (1/2pi) <x - y, nu_x>/|x - y|^2 with curvature/(4 pi) on the diagonal.
struct NPOperator {
    MatX k;
    BoundaryQuadrature bq;
};

NPOperator assemble_np(const Shape2D& b, const BoundaryQuadrature& bq);
NPOperator assemble_np(const Shape2D& b, int n);

// Single layer S[phi](x) = (1/2pi) int log|x - y| phi(y) ds(y) at the nodes, with log-split
// product quadrature. Acts on density values.
MatX single_layer(const Shape2D& b, const BoundaryQuadrature& bq);

// Eigenvalues of the NP operator, sorted descending.
VecX np_eigenvalues(const NPOperator& np);

// Polarization tensor M(k, B), k = mu_m/mu_c:
// M_pq = int_dB xi_p (lambda I - K^*)^{-1}[nu_q] ds, lambda = (k + 1)/(2(k - 1)).
// Scalar may be double or std::complex<double> (dispersive contrast).
template <class Scalar>
Eigen::Matrix<Scalar, 2, 2> polarization_tensor(const NPOperator& np, Scalar k);

Mat2 polarization_tensor(const Shape2D& b, int n, double k);

// Contrast parameter lambda(k) of the NP resolvent.
template <class Scalar>
Scalar np_lambda(Scalar k) {
    return (k + Scalar(1)) / (Scalar(2) * (k - Scalar(1)));
}

// Eigen-decomposition of N^0 restricted to W: eigenvalues 1/2 + (NP eigenvalue on mean-zero
// densities), boundary densities psi_j with grad S[psi_j] of unit L^2(B) norm.
struct WSpectrum {
    VecX lambda;     // W eigenvalues in (0, 1)
    VecX np;         // matching NP eigenvalues
    MatX psi;        // columns: normalized densities on the boundary nodes
    VecX raw_norm2;  // L^2(B) norm^2 of grad S[psi] before normalization
    BoundaryQuadrature bq;
    Shape2D shape;
    // phi_j . nu on dB from inside: (np_j - 1/2) psi_j
    VecX normal_trace(int j) const;
};

WSpectrum w_spectrum(const Shape2D& b, const BoundaryQuadrature& bq, int count);

// Clusters of (nearly) equal W eigenvalues, as index lists.
std::vector<std::vector<int>> w_clusters(const WSpectrum& s, double tol = 1e-8);

cplx drude_mu(cplx omega, const DrudeParams& p);
// lambda(omega) = mu_c/(mu_m - mu_c) = omega^2/omega_p^2 - 1 for the Drude model.
cplx drude_lambda(cplx omega, const DrudeParams& p);
cplx drude_lambda_deriv(cplx omega, const DrudeParams& p);

// (grad e, phi_j)_{L^2(D)} for D = z + delta B, by boundary reduction int_dD e (phi_j . nu).
// `field` evaluates e at physical points.
std::vector<cplx> coupling_coefficients(const std::function<cplx(const Vec2&)>& field,
                                        const ParticleConfig& particle, const WSpectrum& spec);

// Couplings of a resonance mode; refuses external particles.
std::vector<cplx> coupling_coefficients(const ResonanceRecord& rec, const ParticleConfig& particle,
                                        const WSpectrum& spec);

// Same coupling by direct volume quadrature of grad e . grad S[psi_j] over D (cross-check).
std::vector<cplx> coupling_coefficients_volume(const std::function<Vec2c(const Vec2&)>& grad_field,
                                               const ParticleConfig& particle, const WSpectrum& spec,
                                               int resolution = 48);

// grad S[psi](x) for x strictly inside B (reference frame).
Vec2 single_layer_gradient(const BoundaryQuadrature& bq, const VecX& psi, const Vec2& x);

}  // namespace cavshift
