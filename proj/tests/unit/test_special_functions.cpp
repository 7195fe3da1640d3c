#include <doctest.h>

#include <random>

#include "cavshift/errors.hpp"
#include "cavshift/highprec.hpp"
#include "cavshift/special_functions.hpp"

using namespace cavshift;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

cplx ref(HpFunction f, int n, cplx z) { return to_cplx(highprec_reference(f, n, z)); }

}  // namespace

TEST_CASE("bessel values at the origin") {
    CHECK(bessel_j(0, 0.0) == cplx(1.0));
    CHECK(std::abs(bessel_j(1, 0.0)) == 0.0);
    CHECK_THROWS_AS(bessel_y(0, 0.0), DomainError);
    CHECK_THROWS_AS(hankel1(1, 0.0), DomainError);
}

TEST_CASE("bessel and hankel against the high-precision series") {
    CHECK(rel(bessel_j(0, {1.0, 0.5}), ref(HpFunction::bessel_j, 0, {1.0, 0.5})) <= 1e-12);
    CHECK(rel(hankel1(0, 1.0), ref(HpFunction::hankel1, 0, 1.0)) <= 1e-10);
    CHECK(rel(bessel_y(0, 1.0), ref(HpFunction::bessel_y, 0, 1.0)) <= 1e-10);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> re(0.05, 30.0), im(-5.0, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const cplx z{re(rng), im(rng)};
        for (int n = 0; n <= 3; ++n) {
            worst = std::max(worst, rel(bessel_j(n, z), ref(HpFunction::bessel_j, n, z)));
            worst = std::max(worst, rel(hankel1(n, z), ref(HpFunction::hankel1, n, z)));
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("negative orders follow the reflection rule") {
    const cplx z{2.3, -0.4};
    CHECK(rel(bessel_j(-3, z), -bessel_j(3, z)) <= 1e-14);
    CHECK(rel(hankel1(-2, z), hankel1(2, z)) <= 1e-14);
}

TEST_CASE("Wronskian of J and H") {
    const cplx z{2.0, 1.0};
    for (int n = 0; n <= 4; ++n) {
        const cplx w = bessel_j(n, z) * hankel1_deriv(n, z) - bessel_j_deriv(n, z) * hankel1(n, z);
        CHECK(rel(w, 2.0 * I / (pi * z)) <= 1e-10);
    }
}

TEST_CASE("outgoing branch decays in the upper half-plane") {
    for (double y : {10.0, 20.0, 40.0}) {
        const cplx h = hankel1(0, cplx(0.0, y));
        // H_0(iy) ~ sqrt(2/(pi y)) e^{-y} (-i)
        CHECK(std::abs(h) * std::sqrt(y) * std::exp(y) == doctest::Approx(std::sqrt(2.0 / pi)).epsilon(0.01));
    }
}

TEST_CASE("combined evaluators match the single-order ones") {
    const cplx z{0.7, -0.2};
    const Hankel01 h = hankel1_01(z);
    const Bessel01 j = bessel_j01(z);
    CHECK(rel(h.h0, hankel1(0, z)) <= 1e-15);
    CHECK(rel(h.h1, hankel1(1, z)) <= 1e-15);
    CHECK(rel(j.j0, bessel_j(0, z)) <= 1e-15);
    CHECK(rel(j.j1, bessel_j(1, z)) <= 1e-15);
}

TEST_CASE("fundamental solution") {
    const Medium m{1.0, 1.0};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const cplx w{0.8, -0.1};
    for (int i = 0; i < 10; ++i) {
        const Vec2 x(u(rng), u(rng)), y(u(rng), u(rng));
        CHECK(std::abs(gamma_m(x, y, w, m) - gamma_m(y, x, w, m)) <= 1e-15 * std::abs(gamma_m(x, y, w, m)));
        CHECK((grad_gamma_m(x, y, w, m) + grad_gamma_m(y, x, w, m)).norm() <= 1e-14 * grad_gamma_m(x, y, w, m).norm());
    }

    SUBCASE("2D value at unit distance") {
        const cplx g = gamma_m(Vec2(1, 0), Vec2(0, 0), 1.0, m);
        CHECK(rel(g, -I / 4.0 * ref(HpFunction::hankel1, 0, 1.0)) <= 1e-12);
    }
    SUBCASE("3D static limit") {
        const Eigen::Vector3d x(0.3, 0.1, -0.2), y(0.0, 0.5, 0.4);
        const double r = (x - y).norm();
        CHECK(rel(gamma_m3(x, y, 1e-9, m), cplx(-1.0 / (4 * pi * r))) <= 1e-8);
    }
    SUBCASE("gradient by central differences") {
        const Vec2 x(1.0, 0.0), y(0.0, 0.0);
        const double h = 1e-5;
        for (int d = 0; d < 2; ++d) {
            const Vec2 e = Vec2::Unit(d) * h;
            const cplx fd = (gamma_m(x + e, y, w, m) - gamma_m(x - e, y, w, m)) / (2 * h);
            CHECK(std::abs(fd - grad_gamma_m(x, y, w, m)(d)) <= 1e-6);
        }
        const Vec2 e = Vec2::Unit(0) * h;
        const Mat2c hess = hess_gamma_m(x, y, w, m);
        const Vec2c fd = (grad_gamma_m(x + e, y, w, m) - grad_gamma_m(x - e, y, w, m)) / (2 * h);
        CHECK((fd - hess.col(0)).norm() <= 1e-6);
    }
    SUBCASE("logarithmic near field") {
        for (double r : {1e-3, 1e-5}) {
            const double g = grad_gamma_m(Vec2(r, 0), Vec2(0, 0), w, m).norm();
            CHECK(g * 2 * pi * r == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("high-precision reference self-checks") {
    CHECK(to_cplx(highprec_reference(HpFunction::bessel_j, 0, 0.0)) == cplx(1.0));
    CHECK(highprec_reference(HpFunction::bessel_j, 0, 2.0).real().convert_to<double>() ==
          doctest::Approx(0.2238907791).epsilon(1e-10));
    // J_1 Y_0 - J_0 Y_1 = 2/(pi z) at high precision
    const hp_complex z(3);
    const hp_complex w = highprec_reference(HpFunction::bessel_j, 1, 3.0) * highprec_reference(HpFunction::bessel_y, 0, 3.0) -
                         highprec_reference(HpFunction::bessel_j, 0, 3.0) * highprec_reference(HpFunction::bessel_y, 1, 3.0);
    const hp_complex expected = hp_real(2) / (boost::math::constants::pi<hp_real>() * z);
    CHECK(abs(w - expected).convert_to<double>() <= 1e-25);
}
