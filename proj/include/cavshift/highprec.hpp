#pragma once

// Arbitrary-precision reference values of cylinder functions by ascending series.
// Test-only path; slow but self-validating.

#include <boost/multiprecision/cpp_complex.hpp>

#include "cavshift/types.hpp"

namespace cavshift {

using hp_complex = boost::multiprecision::cpp_complex<110>;
using hp_real = hp_complex::value_type;

enum class HpFunction { bessel_j, bessel_y, hankel1 };

namespace detail {

inline hp_complex hp_series_j(int n, const hp_complex& z, const hp_real& tol) {
    const hp_complex h = z / 2;
    const hp_complex q = -h * h;
    hp_complex term = 1;
    for (int k = 1; k <= n; ++k) term *= h / k;
    hp_complex sum = term;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (hp_real(k) * hp_real(k + n));
        sum += term;
        if (abs(term) <= tol * abs(sum) && k > abs(h).convert_to<double>()) break;
    }
    return sum;
}

inline hp_complex hp_series_y(int n, const hp_complex& z, const hp_real& tol) {
    const hp_real hp_pi = boost::math::constants::pi<hp_real>();
    const hp_real gamma_e = boost::math::constants::euler<hp_real>();
    const hp_complex h = z / 2;
    const hp_complex q = -h * h;

    // finite part: -(1/pi) sum_{k<n} (n-k-1)!/k! h^{2k-n}
    hp_complex finite = 0;
    if (n > 0) {
        hp_complex hk = pow(h, -n);
        hp_real fac_nk = 1;
        for (int m = 2; m <= n - 1; ++m) fac_nk *= m;  // (n-1)!
        hp_real fac_k = 1;
        for (int k = 0; k < n; ++k) {
            if (k > 0) {
                fac_k *= k;
                fac_nk /= (n - k);
                hk *= h * h;
            }
            finite += fac_nk / fac_k * hk;
        }
    }
    // psi(k+1) + psi(n+k+1) with psi(m+1) = H_m - gamma
    hp_complex term = pow(h, n);
    for (int m = 1; m <= n; ++m) term /= m;  // h^n / n!
    hp_real hk = 0, hnk = 0;
    for (int m = 1; m <= n; ++m) hnk += hp_real(1) / m;
    hp_complex sum = (hk + hnk - 2 * gamma_e) * term;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (hp_real(k) * hp_real(k + n));
        hk += hp_real(1) / k;
        hnk += hp_real(1) / (k + n);
        const hp_complex add = (hk + hnk - 2 * gamma_e) * term;
        sum += add;
        if (abs(add) <= tol * abs(sum) && k > abs(h).convert_to<double>()) break;
    }
    const hp_complex jn = hp_series_j(n, z, tol);
    return -finite / hp_pi + 2 * log(h) * jn / hp_pi - sum / hp_pi;
}

}  // namespace detail

// Value of J_n, Y_n or H_n^(1) at z to ~100 digits (principal branch).
inline hp_complex highprec_reference(HpFunction f, int n, cplx z) {
    const hp_complex zz(hp_real(z.real()), hp_real(z.imag()));
    const hp_real tol("1e-105");
    const int sign = (n < 0 && (n % 2 != 0)) ? -1 : 1;
    const int m = n < 0 ? -n : n;
    switch (f) {
        case HpFunction::bessel_j:
            return sign * detail::hp_series_j(m, zz, tol);
        case HpFunction::bessel_y:
            return sign * detail::hp_series_y(m, zz, tol);
        case HpFunction::hankel1:
            return sign * (detail::hp_series_j(m, zz, tol) +
                           hp_complex(0, 1) * detail::hp_series_y(m, zz, tol));
    }
    return 0;
}

inline cplx to_cplx(const hp_complex& v) {
    return {v.real().convert_to<double>(), v.imag().convert_to<double>()};
}

}  // namespace cavshift
