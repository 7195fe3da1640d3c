#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavshift/cavity_spectrum.hpp"
#include "cavshift/particle_ops.hpp"
#include "cavshift/types.hpp"

namespace cavshift {

enum class ShiftCase { internal, external, plasmonic, exceptional };
const char* to_string(ShiftCase c);

struct ShiftPrediction {
    ShiftCase kind = ShiftCase::internal;
    cplx omega0;
    std::vector<cplx> roots;  // omega_delta - omega0, sorted by magnitude
    // input digest
    cplx c;
    Vec2c gradient = Vec2c::Zero();
    Mat2c m = Mat2c::Zero();
    double delta = 0.0;
    Vec2 z = Vec2::Zero();
    cplx coupling_sq;
    double lambda_j = 0.0;
    bool degenerate = false;
    std::vector<std::string> warnings;

    cplx shift() const { return roots.at(0); }
};

// delta^2 c grad^T M grad (bilinear contraction).
ShiftPrediction dipole_shift(ShiftCase kind, cplx omega0, cplx c, const Vec2c& grad, const Mat2c& m, double delta);

ShiftPrediction internal_shift(const ResonanceRecord& rec, const ParticleConfig& particle, const Mat2& m);
ShiftPrediction external_shift(const ResonanceRecord& rec, const ExteriorMode& g, const ParticleConfig& particle,
                               const Mat2& m);

// (omega - omega0)(lambda(omega) + lambda_j) = c * coupling^2, lambda(omega) = mu_c/(mu_m - mu_c).
struct PlasmonicInputs {
    cplx omega0;
    cplx c;
    cplx coupling_sq;  // (grad e, phi_j)^2 summed over the cluster of lambda_j
    double lambda_j = 0.5;
    std::optional<DrudeParams> drude;
    std::function<cplx(cplx)> lambda_fn;  // used when drude is empty
    double neighborhood = 0.5;            // roots kept within neighborhood*|omega0|
    double match_tol = 1e-10;             // |lambda(omega0) + lambda_j| below this is the matched case
    // Drude plasmon frequency omega_p sqrt(1 - lambda_j) within tune_tol*|omega0| of Re omega0 marks
    // a two-root result as degenerate
    double tune_tol = 1e-9;
};

cplx plasmonic_lambda(const PlasmonicInputs& in, cplx omega);
double plasmonic_residual(const PlasmonicInputs& in, cplx omega);
ShiftPrediction plasmonic_shift(const PlasmonicInputs& in);

// From a resonance record: couplings to the W cluster containing index j.
ShiftPrediction plasmonic_shift(const ResonanceRecord& rec, const ParticleConfig& particle, const WSpectrum& spec, int j);

// Two-term (simple plus double pole) Green's function data with frozen coefficients.
struct ExceptionalData {
    cplx omega0;
    cplx c1, c2;
    cplx q11, q12, q22;  // (L^{-1} grad h_a, grad h_b)
    double neighborhood = 1.0;
};

// det(I - diag(c1/x, c2/x^2) Q), x = omega - omega0.
cplx exceptional_determinant(const ExceptionalData& d, cplx x);
// Coefficients (highest degree first) of x^p det, with artificial zero roots removed.
std::vector<cplx> exceptional_polynomial(const ExceptionalData& d);
ShiftPrediction exceptional_shift(const ExceptionalData& d);

// Roots of a polynomial (coefficients highest degree first), Newton-polished.
std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs);

}  // namespace cavshift
