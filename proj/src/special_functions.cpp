#include "cavshift/special_functions.hpp"

#include <cmath>
#include <vector>

#include "cavshift/errors.hpp"

namespace cavshift {

namespace {

constexpr double series_radius = 4.0;
constexpr double asym_radius = 25.0;
constexpr double max_imag = 700.0;
constexpr double eps = 1e-17;

void check_arg(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("cylinder function: non-finite argument");
    if (std::abs(z.imag()) > max_imag)
        throw OverflowError("cylinder function: |Im z| beyond supported strip");
}

// Ascending series for J_n, any n >= 0; used for |z| <= series_radius.
cplx series_jn(int n, cplx z) {
    const cplx h = 0.5 * z;
    const cplx q = -h * h;
    cplx term = 1.0;
    for (int k = 1; k <= n; ++k) term *= h / double(k);
    cplx sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= q / (double(k) * double(k + n));
        sum += term;
        if (std::abs(term) <= eps * std::abs(sum)) break;
    }
    return sum;
}

// Ascending log-series for Y_0, Y_1 given J_0, J_1.
void series_y01(cplx z, cplx j0, cplx j1, cplx& y0, cplx& y1) {
    const cplx h = 0.5 * z;
    const cplx q = -h * h;
    const cplx lg = std::log(h) + euler_gamma;

    // Y0 = (2/pi)[lg J0 + sum_{k>=1} (-1)^{k+1} H_k (z^2/4)^k/(k!)^2]
    cplx t = 1.0, s0 = 0.0;
    double hk = 0.0;
    for (int k = 1; k < 200; ++k) {
        t *= q / (double(k) * double(k));
        hk += 1.0 / k;
        const cplx add = -hk * t;
        s0 += add;
        if (std::abs(add) <= eps * std::abs(s0)) break;
    }
    y0 = (2.0 / pi) * (lg * j0 + s0);

    // Y1 = -2/(pi z) + (2/pi) ln(z/2) J1 - (1/pi) sum (psi(k+1)+psi(k+2)) (-q)^k h / (k!(k+1)!)
    t = h;
    hk = 0.0;
    cplx s1 = (1.0 - 2.0 * euler_gamma) * t;
    for (int k = 1; k < 200; ++k) {
        t *= q / (double(k) * double(k + 1));
        hk += 1.0 / k;
        const double psis = 2.0 * (hk - euler_gamma) + 1.0 / (k + 1);
        const cplx add = psis * t;
        s1 += add;
        if (std::abs(add) <= eps * std::abs(s1)) break;
    }
    y1 = -2.0 / (pi * z) + (2.0 / pi) * std::log(h) * j1 - s1 / pi;
}

// Miller backward recurrence: J_0..J_nmax, valid for any z != 0 of moderate size.
std::vector<cplx> miller_j(int nmax, cplx z) {
    const double az = std::abs(z);
    int top = std::max(nmax, int(1.5 * az)) + 40;
    top += top % 2;
    std::vector<cplx> f(top + 2, 0.0);
    f[top + 1] = 0.0;
    f[top] = 1e-30;
    const cplx two_over_z = 2.0 / z;
    for (int k = top; k >= 1; --k) {
        f[k - 1] = double(k) * two_over_z * f[k] - f[k + 1];
        if (std::abs(f[k - 1]) > 1e250) {
            for (int m = k - 1; m <= top + 1; ++m) f[m] *= 1e-250;
        }
    }
    // e^{iz} = J0 + 2 sum i^n J_n (Im z <= 0), e^{-iz} = J0 + 2 sum (-i)^n J_n otherwise.
    const bool lower = z.imag() <= 0.0;
    const cplx rot = lower ? I : -I;
    cplx pw = 1.0, sum = f[0];
    for (int k = 1; k <= top; ++k) {
        pw *= rot;
        sum += 2.0 * pw * f[k];
    }
    const cplx target = lower ? std::exp(I * z) : std::exp(-I * z);
    const cplx scale = target / sum;
    f.resize(std::max(nmax + 1, top + 1));
    for (auto& v : f) v *= scale;
    return f;
}

// Neumann-series Y_0, Y_1 from a Miller table of J_k.
void neumann_y01(cplx z, const std::vector<cplx>& j, cplx& y0, cplx& y1) {
    const cplx lg = std::log(0.5 * z) + euler_gamma;
    cplx s0 = 0.0, s1 = 0.0;
    const int kmax = int(j.size() - 2) / 2;
    for (int k = 1; k <= kmax; ++k) {
        const double sg = (k % 2 == 0) ? 1.0 : -1.0;
        s0 += sg * j[2 * k] / double(k);
        s1 += sg * (j[2 * k - 1] - j[2 * k + 1]) / double(k);
    }
    y0 = (2.0 / pi) * lg * j[0] - (4.0 / pi) * s0;
    y1 = -(2.0 / pi) * (j[0] / z - lg * j[1]) + (2.0 / pi) * s1;
}

// Hankel asymptotic expansion of H^(1)_nu for large |z|, |arg z| <= pi/2.
cplx asym_h1(int nu, cplx z) {
    const double mu = 4.0 * nu * nu;
    cplx term = 1.0, sum = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= I * (mu - odd * odd) / (8.0 * k * z);
        const double a = std::abs(term);
        if (a > prev) break;  // asymptotic series: stop at smallest term
        sum += term;
        prev = a;
        if (a <= eps * std::abs(sum)) break;
    }
    const cplx phase = z - (0.5 * nu + 0.25) * pi;
    return std::sqrt(2.0 / (pi * z)) * std::exp(I * phase) * sum;
}

// Steed-type continued fraction for H_0^(1)'/H_0^(1), Im z > 0, modified Lentz.
cplx cf2_log_deriv(cplx z) {
    const double tiny = 1e-300;
    cplx f = tiny, c = f, d = 0.0;
    const double kmin = std::abs(z) + 10.0;
    for (int k = 1; k < 5000; ++k) {
        const double a = (k - 0.5) * (k - 0.5);
        const cplx b = 2.0 * (z + double(k) * I);
        d = b + a * d;
        if (d == 0.0) d = tiny;
        c = b + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const cplx delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16 && k > kmin) return I - 0.5 / z + (I / z) * f;
    }
    throw ConvergenceError("hankel1: continued fraction did not converge");
}

Bessel01 j01_core(cplx z) {
    const double az = std::abs(z);
    if (az <= series_radius) return {series_jn(0, z), series_jn(1, z)};
    if (az <= asym_radius) {
        auto j = miller_j(1, z);
        return {j[0], j[1]};
    }
    // J = (H1 + H2)/2 with H2(z) = conj(H1(conj z)), evaluated in the right half plane.
    const cplx w = z.real() >= 0.0 ? z : -z;
    const cplx h10 = asym_h1(0, w), h11 = asym_h1(1, w);
    const cplx h20 = std::conj(asym_h1(0, std::conj(w))), h21 = std::conj(asym_h1(1, std::conj(w)));
    Bessel01 r{0.5 * (h10 + h20), 0.5 * (h11 + h21)};
    if (z.real() < 0.0) r.j1 = -r.j1;
    return r;
}

// H_0, H_1 for Re z >= 0.
Hankel01 h01_rhp(cplx z) {
    const double az = std::abs(z);
    if (az > asym_radius) return {asym_h1(0, z), asym_h1(1, z)};
    if (z.imag() > 0.0 && az >= 2.0) {
        const Bessel01 j = j01_core(z);
        const cplx p = cf2_log_deriv(z);
        const cplx h0 = (2.0 * I / (pi * z)) / (j.j0 * p + j.j1);
        return {h0, -p * h0};
    }
    cplx y0, y1;
    if (az <= series_radius) {
        const cplx j0 = series_jn(0, z), j1 = series_jn(1, z);
        series_y01(z, j0, j1, y0, y1);
        return {j0 + I * y0, j1 + I * y1};
    }
    auto j = miller_j(1, z);
    neumann_y01(z, j, y0, y1);
    return {j[0] + I * y0, j[1] + I * y1};
}

cplx forward_h(int n, cplx z, Hankel01 h) {
    if (n == 0) return h.h0;
    if (n == 1) return h.h1;
    cplx hm = h.h0, hk = h.h1;
    for (int k = 1; k < n; ++k) {
        const cplx hp = (2.0 * k / z) * hk - hm;
        hm = hk;
        hk = hp;
    }
    return hk;
}

}  // namespace

Bessel01 bessel_j01(cplx z) {
    check_arg(z);
    return j01_core(z);
}

Hankel01 hankel1_01(cplx z) {
    check_arg(z);
    if (z == 0.0) throw DomainError("hankel1: logarithmic singularity at z = 0");
    if (z.real() >= 0.0) return h01_rhp(z);
    if (z.imag() >= 0.0) {
        // H_n(z) = -(-1)^n conj(H_n(-conj z))
        const Hankel01 w = h01_rhp(-std::conj(z));
        return {-std::conj(w.h0), std::conj(w.h1)};
    }
    // third quadrant: H_n(z) = (-1)^n [2 J_n(-z) + H_n(-z)]
    const cplx w = -z;
    const Hankel01 hw = h01_rhp(w);
    const Bessel01 jw = j01_core(w);
    return {2.0 * jw.j0 + hw.h0, -(2.0 * jw.j1 + hw.h1)};
}

cplx bessel_j(int n, cplx z) {
    check_arg(z);
    if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(-n, z);
    const double az = std::abs(z);
    if (az == 0.0) return n == 0 ? 1.0 : 0.0;
    if (az <= series_radius) return series_jn(n, z);
    if (az <= asym_radius || n >= az) return miller_j(n, z)[n];
    // Re z >= 0 by symmetry J_n(-z) = (-1)^n J_n(z).
    const bool flip = z.real() < 0.0;
    const cplx w = flip ? -z : z;
    const Hankel01 h1{asym_h1(0, w), asym_h1(1, w)};
    const Hankel01 h2{std::conj(asym_h1(0, std::conj(w))), std::conj(asym_h1(1, std::conj(w)))};
    cplx j = 0.5 * (forward_h(n, w, h1) + forward_h(n, w, h2));
    if (flip && n % 2 == 1) j = -j;
    return j;
}

cplx hankel1(int n, cplx z) {
    if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * hankel1(-n, z);
    return forward_h(n, z, hankel1_01(z));
}

cplx bessel_y(int n, cplx z) {
    if (z == 0.0) throw DomainError("bessel_y: logarithmic singularity at z = 0");
    return (hankel1(n, z) - bessel_j(n, z)) / I;
}

cplx bessel_j_deriv(int n, cplx z) {
    if (n == 0) return -bessel_j(1, z);
    if (z == 0.0) return n == 1 ? 0.5 : 0.0;
    return bessel_j(n - 1, z) - double(n) / z * bessel_j(n, z);
}

cplx hankel1_deriv(int n, cplx z) {
    if (n == 0) return -hankel1(1, z);
    return hankel1(n - 1, z) - double(n) / z * hankel1(n, z);
}

cplx gamma_m(const Vec2& x, const Vec2& y, cplx omega, const Medium& medium) {
    const double r = (x - y).norm();
    if (r == 0.0) throw DomainError("gamma_m: x = y");
    return -0.25 * I * hankel1_01(wavenumber(omega, medium) * r).h0;
}

cplx gamma_m3(const Eigen::Vector3d& x, const Eigen::Vector3d& y, cplx omega, const Medium& medium) {
    const double r = (x - y).norm();
    if (r == 0.0) throw DomainError("gamma_m3: x = y");
    return -std::exp(I * wavenumber(omega, medium) * r) / (4.0 * pi * r);
}

Vec2c grad_gamma_m(const Vec2& x, const Vec2& y, cplx omega, const Medium& medium) {
    const Vec2 d = x - y;
    const double r = d.norm();
    if (r == 0.0) throw DomainError("grad_gamma_m: x = y");
    const cplx k = wavenumber(omega, medium);
    // d/dr [-(i/4) H0(kr)] = (i/4) k H1(kr)
    const cplx g = 0.25 * I * k * hankel1_01(k * r).h1 / r;
    return g * d.cast<cplx>();
}

Eigen::Vector3cd grad_gamma_m3(const Eigen::Vector3d& x, const Eigen::Vector3d& y, cplx omega,
                               const Medium& medium) {
    const Eigen::Vector3d d = x - y;
    const double r = d.norm();
    if (r == 0.0) throw DomainError("grad_gamma_m3: x = y");
    const cplx k = wavenumber(omega, medium);
    const cplx g = -std::exp(I * k * r) * (I * k * r - 1.0) / (4.0 * pi * r * r * r);
    return g * d.cast<cplx>();
}

Mat2c hess_gamma_m(const Vec2& x, const Vec2& y, cplx omega, const Medium& medium) {
    const Vec2 d = x - y;
    const double r = d.norm();
    if (r == 0.0) throw DomainError("hess_gamma_m: x = y");
    const cplx k = wavenumber(omega, medium);
    const Hankel01 h = hankel1_01(k * r);
    const Vec2 u = d / r;
    const Mat2 uu = u * u.transpose();
    // (i/4)[k^2 H0 uu^T + (k H1 / r)(I - 2 uu^T)]
    const Mat2c a = ((k * k) * h.h0) * uu.cast<cplx>();
    const Mat2c b = (k * h.h1 / r) * (Mat2::Identity() - 2.0 * uu).cast<cplx>();
    return 0.25 * I * (a + b);
}

}  // namespace cavshift
