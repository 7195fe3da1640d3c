#include "cavshift/shift_predictor.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cavshift/errors.hpp"

namespace cavshift {

const char* to_string(ShiftCase c) {
    switch (c) {
        case ShiftCase::internal: return "internal";
        case ShiftCase::external: return "external";
        case ShiftCase::plasmonic: return "plasmonic";
        case ShiftCase::exceptional: return "exceptional";
    }
    return "?";
}

namespace {

void sort_by_magnitude(std::vector<cplx>& r) {
    std::stable_sort(r.begin(), r.end(), [](cplx a, cplx b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

cplx horner(const std::vector<cplx>& p, cplx x, cplx* deriv = nullptr) {
    cplx v = 0, d = 0;
    for (const cplx& a : p) {
        d = d * x + v;
        v = v * x + a;
    }
    if (deriv) *deriv = d;
    return v;
}

}  // namespace

std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs) {
    std::size_t lead = 0;
    while (lead < coeffs.size() && coeffs[lead] == 0.0) ++lead;
    if (lead == coeffs.size()) throw InvalidArgument("polynomial_roots: zero polynomial");
    std::vector<cplx> p(coeffs.begin() + lead, coeffs.end());
    const int n = static_cast<int>(p.size()) - 1;
    std::vector<cplx> roots;
    if (n == 0) return roots;
    MatXc comp = MatXc::Zero(n, n);
    for (int j = 0; j < n; ++j) comp(0, j) = -p[j + 1] / p[0];
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<MatXc> es(comp, false);
    for (int i = 0; i < n; ++i) {
        cplx x = es.eigenvalues()[i];
        for (int it = 0; it < 8; ++it) {
            cplx d;
            const cplx v = horner(p, x, &d);
            if (v == 0.0 || d == 0.0) break;
            const cplx step = v / d;
            x -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        roots.push_back(x);
    }
    return roots;
}

ShiftPrediction dipole_shift(ShiftCase kind, cplx omega0, cplx c, const Vec2c& grad, const Mat2c& m, double delta) {
    ShiftPrediction p;
    p.kind = kind;
    p.omega0 = omega0;
    p.c = c;
    p.gradient = grad;
    p.m = m;
    p.delta = delta;
    const cplx contraction = (grad.transpose() * m * grad)(0, 0);
    p.roots = {delta * delta * c * contraction};
    return p;
}

ShiftPrediction internal_shift(const ResonanceRecord& rec, const ParticleConfig& particle, const Mat2& m) {
    if (rec.exceptional) throw ExceptionalPointError("internal shift: resonance is flagged exceptional");
    if (particle.position != ParticlePosition::internal) throw InvalidArgument("internal shift: particle is external");
    validate_particle(particle, rec.model->config().shape);
    const ModeSample s = mode_value_and_gradient(rec, particle.z);
    ShiftPrediction p = dipole_shift(ShiftCase::internal, rec.omega0, rec.c, s.gradient, m.cast<cplx>(), particle.delta);
    p.z = particle.z;
    return p;
}

ShiftPrediction external_shift(const ResonanceRecord& rec, const ExteriorMode& g, const ParticleConfig& particle,
                               const Mat2& m) {
    if (rec.exceptional) throw ExceptionalPointError("external shift: resonance is flagged exceptional");
    if (particle.position != ParticlePosition::external) throw InvalidArgument("external shift: particle is internal");
    validate_particle(particle, rec.model->config().shape);
    ShiftPrediction p =
        dipole_shift(ShiftCase::external, rec.omega0, rec.c, g.gradient(particle.z), m.cast<cplx>(), particle.delta);
    p.z = particle.z;
    return p;
}

cplx plasmonic_lambda(const PlasmonicInputs& in, cplx omega) {
    if (in.drude) return drude_lambda(omega, *in.drude);
    if (!in.lambda_fn) throw InvalidArgument("plasmonic shift: no dispersion model");
    return in.lambda_fn(omega);
}

double plasmonic_residual(const PlasmonicInputs& in, cplx omega) {
    const cplx lhs = (omega - in.omega0) * (plasmonic_lambda(in, omega) + in.lambda_j);
    return std::abs(lhs - in.c * in.coupling_sq);
}

namespace {

cplx lambda_deriv(const PlasmonicInputs& in, cplx omega) {
    if (in.drude) return drude_lambda_deriv(omega, *in.drude);
    const double h = 1e-6 * std::max(1.0, std::abs(omega));
    return (in.lambda_fn(omega + h) - in.lambda_fn(omega - h)) / (2 * h);
}

std::vector<cplx> newton_roots(const PlasmonicInputs& in, const std::vector<cplx>& seeds) {
    const cplx rhs = in.c * in.coupling_sq;
    std::vector<cplx> out;
    for (cplx w : seeds) {
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            const cplx lam = plasmonic_lambda(in, w);
            const cplx f = (w - in.omega0) * (lam + in.lambda_j) - rhs;
            const cplx df = (lam + in.lambda_j) + (w - in.omega0) * lambda_deriv(in, w);
            if (df == 0.0) break;
            const cplx step = f / df;
            w -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(w))) {
                ok = true;
                break;
            }
        }
        if (!ok) continue;
        bool dup = false;
        for (const cplx& r : out)
            if (std::abs(r - w) <= 1e-10 * std::max(1.0, std::abs(w))) dup = true;
        if (!dup) out.push_back(w);
    }
    return out;
}

}  // namespace

ShiftPrediction plasmonic_shift(const PlasmonicInputs& in) {
    ShiftPrediction p;
    p.kind = ShiftCase::plasmonic;
    p.omega0 = in.omega0;
    p.c = in.c;
    p.coupling_sq = in.coupling_sq;
    p.lambda_j = in.lambda_j;
    if (!(in.lambda_j > 0.0 && in.lambda_j < 1.0)) p.warnings.push_back("lambda_j outside (0, 1)");
    const cplx rhs = in.c * in.coupling_sq;
    const cplx detune = plasmonic_lambda(in, in.omega0) + in.lambda_j;
    const cplx dl = lambda_deriv(in, in.omega0);
    if (std::abs(detune) <= in.match_tol) {
        // matched plasmon: (omega - omega0)^2 lambda'(omega0) = c coupling^2
        const cplx s = std::sqrt(rhs / dl);
        p.degenerate = true;
        p.roots = {s, -s};
        sort_by_magnitude(p.roots);
        return p;
    }
    std::vector<cplx> omegas;
    if (in.drude) {
        // (omega - omega0)(omega^2 - wp^2 (1 - lambda_j)) - c coupling^2 wp^2 = 0
        const double wp2 = in.drude->omega_p * in.drude->omega_p;
        const cplx a = wp2 * (1.0 - in.lambda_j);
        omegas = polynomial_roots({1.0, -in.omega0, -a, in.omega0 * a - rhs * wp2});
    } else {
        std::vector<cplx> seeds{in.omega0 + rhs / detune};
        if (dl != 0.0) {
            const cplx s = std::sqrt(rhs / dl);
            seeds.push_back(in.omega0 + s);
            seeds.push_back(in.omega0 - s);
        }
        omegas = newton_roots(in, seeds);
    }
    for (const cplx& w : omegas)
        if (std::abs(w - in.omega0) <= in.neighborhood * std::abs(in.omega0)) p.roots.push_back(w - in.omega0);
    if (p.roots.empty()) throw ConvergenceError("plasmonic shift: no root in the neighborhood of omega0");
    sort_by_magnitude(p.roots);
    if (in.drude && in.lambda_j < 1.0 && p.roots.size() >= 2) {
        // plasmon frequency tuned to Re omega0: hybridized pair
        const double w_pl = in.drude->omega_p * std::sqrt(1.0 - in.lambda_j);
        if (std::abs(w_pl - in.omega0.real()) <= in.tune_tol * std::abs(in.omega0)) p.degenerate = true;
    }
    return p;
}

ShiftPrediction plasmonic_shift(const ResonanceRecord& rec, const ParticleConfig& particle, const WSpectrum& spec,
                                int j) {
    if (rec.exceptional) throw ExceptionalPointError("plasmonic shift: resonance is flagged exceptional");
    if (!particle.drude) throw InvalidArgument("plasmonic shift: particle has no Drude model");
    if (j < 0 || j >= spec.lambda.size()) throw InvalidArgument("plasmonic shift: NP index out of range");
    const std::vector<cplx> coup = coupling_coefficients(rec, particle, spec);
    PlasmonicInputs in;
    in.omega0 = rec.omega0;
    in.c = rec.c;
    in.lambda_j = spec.lambda[j];
    in.drude = particle.drude;
    in.coupling_sq = 0;
    std::vector<std::string> warnings;
    for (const auto& cl : w_clusters(spec)) {
        const bool mine = std::find(cl.begin(), cl.end(), j) != cl.end();
        if (mine) {
            for (int i : cl) in.coupling_sq += coup[i] * coup[i];
        } else if (std::abs(spec.lambda[cl.front()] - spec.lambda[j]) < 1e-3) {
            warnings.push_back("another NP cluster lies within 1e-3 of lambda_j");
        }
    }
    // particle size enters through the couplings
    ShiftPrediction p = plasmonic_shift(in);
    p.delta = particle.delta;
    p.z = particle.z;
    p.gradient = mode_value_and_gradient(rec, particle.z).gradient;
    p.warnings.insert(p.warnings.end(), warnings.begin(), warnings.end());
    return p;
}

cplx exceptional_determinant(const ExceptionalData& d, cplx x) {
    const cplx a = d.c1 / x, b = d.c2 / (x * x);
    return (1.0 - a * d.q11) * (1.0 - b * d.q22) - a * b * d.q12 * d.q12;
}

std::vector<cplx> exceptional_polynomial(const ExceptionalData& d) {
    // x^3 det = x^3 - c1 q11 x^2 - c2 q22 x + c1 c2 (q11 q22 - q12^2)
    std::vector<cplx> p{1.0, -d.c1 * d.q11, -d.c2 * d.q22, d.c1 * d.c2 * (d.q11 * d.q22 - d.q12 * d.q12)};
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    return p;
}

ShiftPrediction exceptional_shift(const ExceptionalData& d) {
    ShiftPrediction p;
    p.kind = ShiftCase::exceptional;
    p.omega0 = d.omega0;
    p.c = d.c1;
    const std::vector<cplx> poly = exceptional_polynomial(d);
    if (poly.size() == 1) throw ConvergenceError("exceptional shift: no perturbation, no root");
    for (const cplx& r : polynomial_roots(poly))
        if (std::abs(r) <= d.neighborhood) p.roots.push_back(r);
    if (p.roots.empty()) throw ConvergenceError("exceptional shift: all roots lie outside the neighborhood");
    sort_by_magnitude(p.roots);
    return p;
}

}  // namespace cavshift
