#pragma once

#include "cavshift/types.hpp"

namespace cavshift {

// Cylinder functions of integer order and complex argument (principal branch,
// cut along the negative real axis). Relative accuracy ~1e-13 for |z| <= 50, |Im z| <= 20.
cplx bessel_j(int n, cplx z);
cplx bessel_y(int n, cplx z);
cplx hankel1(int n, cplx z);

// Derivatives with respect to z, from the order recurrence.
cplx bessel_j_deriv(int n, cplx z);
cplx hankel1_deriv(int n, cplx z);

// H_0^(1)(z) and H_1^(1)(z) together; the hot path of kernel assembly.
struct Hankel01 {
    cplx h0;
    cplx h1;
};
Hankel01 hankel1_01(cplx z);

// J_0 and J_1 together.
struct Bessel01 {
    cplx j0;
    cplx j1;
};
Bessel01 bessel_j01(cplx z);

// Outgoing fundamental solution of (Delta + k^2) with k = omega*sqrt(eps*mu).
// 2D: -(i/4) H_0^(1)(k r).  3D: -exp(ikr)/(4 pi r).
cplx gamma_m(const Vec2& x, const Vec2& y, cplx omega, const Medium& medium);
cplx gamma_m3(const Eigen::Vector3d& x, const Eigen::Vector3d& y, cplx omega, const Medium& medium);

// Gradient with respect to x.
Vec2c grad_gamma_m(const Vec2& x, const Vec2& y, cplx omega, const Medium& medium);
Eigen::Vector3cd grad_gamma_m3(const Eigen::Vector3d& x, const Eigen::Vector3d& y, cplx omega,
                               const Medium& medium);

// Hessian with respect to x (2D), valid off the diagonal.
Mat2c hess_gamma_m(const Vec2& x, const Vec2& y, cplx omega, const Medium& medium);

}  // namespace cavshift
