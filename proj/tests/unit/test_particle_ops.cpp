#include <doctest.h>

#include "cavshift/errors.hpp"
#include "cavshift/oracle_suite.hpp"
#include "cavshift/particle_ops.hpp"

using namespace cavshift;

namespace {

Shape2D star() { return Shape2D::star(1.0, {0.0, 0.1, 0.05}, {0.0, 0.0, 0.03}); }

Mat2 rotation(double a) {
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

}  // namespace

TEST_CASE("NP operator spectrum") {
    SUBCASE("circle is rank one") {
        const VecX ev = np_eigenvalues(assemble_np(Shape2D::disk(1.0), 256));
        CHECK(ev[0] == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(ev.tail(ev.size() - 1).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("ellipse (2, 1)") {
        const VecX ev = np_eigenvalues(assemble_np(Shape2D::ellipse(2.0, 1.0), 256));
        CHECK(ev[1] == doctest::Approx(1.0 / 6).epsilon(1e-6));
        CHECK(ev[2] == doctest::Approx(1.0 / 18).epsilon(1e-6));
        CHECK(ev[3] == doctest::Approx(1.0 / 54).epsilon(1e-6));
        CHECK(ev[ev.size() - 1] == doctest::Approx(-1.0 / 6).epsilon(1e-6));
    }
    SUBCASE("general shape: constant density and spectral bound") {
        const NPOperator np = assemble_np(star(), 256);
        // adjoint of K* maps constants to constants: w^T K* = w^T / 2
        const VecX left = (np.bq.weights.transpose() * np.k).transpose() - 0.5 * np.bq.weights;
        CHECK(left.cwiseAbs().maxCoeff() <= 1e-10);
        const VecX ev = np_eigenvalues(np);
        CHECK(ev[0] == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(ev.tail(ev.size() - 1).maxCoeff() < 0.5 - 1e-8);
        CHECK(ev.minCoeff() > -0.5 + 1e-8);
    }
    SUBCASE("single-layer weighting symmetrizes K*") {
        const NPOperator np = assemble_np(star(), 256);
        const MatX ws = np.bq.weights.asDiagonal() * single_layer(star(), np.bq) * np.k;
        CHECK((ws - ws.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * ws.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("polarization tensor") {
    CHECK(polarization_tensor(star(), 128, 1.0).cwiseAbs().maxCoeff() == 0.0);
    for (double k : {2.0, 5.0, 0.3}) {
        const Mat2 md = polarization_tensor(Shape2D::disk(1.0), 256, k);
        CHECK((md - 2 * pi * (k - 1) / (k + 1) * Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
        // ellipse closed form
        const double a = 1.0, b = 0.5;
        const Mat2 me = polarization_tensor(Shape2D::ellipse(a, b), 256, k);
        CHECK(me(0, 0) == doctest::Approx((k - 1) * pi * a * b * (a + b) / (a + k * b)).epsilon(1e-10));
        CHECK(me(1, 1) == doctest::Approx((k - 1) * pi * a * b * (a + b) / (b + k * a)).epsilon(1e-10));
    }
    const Mat2 m = polarization_tensor(star(), 256, 3.0);
    CHECK(std::abs(m(0, 1) - m(1, 0)) <= 1e-10 * m.norm());
    const Mat2 mr = polarization_tensor(rotated(star(), 0.7), 256, 3.0);
    CHECK((rotation(0.7) * m * rotation(0.7).transpose() - mr).cwiseAbs().maxCoeff() <= 1e-8);
    const Mat2 ms = polarization_tensor(scaled_translated(star(), 0.01, Vec2(0.3, 0.2)), 256, 3.0);
    CHECK((ms - 1e-4 * m).norm() <= 1e-10 * 1e-4 * m.norm());

    SUBCASE("complex contrast reduces to the real one") {
        const NPOperator np = assemble_np(star(), 128);
        const Eigen::Matrix2cd mc = polarization_tensor<cplx>(np, cplx(3.0, 0.0));
        CHECK((mc.real() - polarization_tensor<double>(np, 3.0)).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK(mc.imag().cwiseAbs().maxCoeff() <= 1e-13);
    }
    SUBCASE("dipole moment of the static volume problem") {
        const Vec2c p = static_dipole_moment(Shape2D::ellipse(1.0, 0.6), 16, 2.0,
                                             [](const Vec2&) { return Vec2c(1.0, 0.0); });
        const Mat2 me = polarization_tensor(Shape2D::ellipse(1.0, 0.6), 256, 2.0);
        CHECK(std::abs(p(0) - me(0, 0)) <= 1e-6 * me(0, 0));
        CHECK(std::abs(p(1)) <= 1e-8);
    }
}

TEST_CASE("W spectrum") {
    SUBCASE("disk: every eigenvalue is 1/2") {
        const auto ws = w_spectrum(Shape2D::disk(1.0), build_boundary_quadrature(Shape2D::disk(1.0), 128), 6);
        for (Eigen::Index j = 0; j < ws.lambda.size(); ++j) CHECK(ws.lambda[j] == doctest::Approx(0.5).epsilon(1e-8));
    }
    SUBCASE("ellipse pattern") {
        const Shape2D e = Shape2D::ellipse(2.0, 1.0);
        const auto ws = w_spectrum(e, build_boundary_quadrature(e, 256), 4);
        std::vector<double> l(ws.lambda.data(), ws.lambda.data() + 4);
        std::sort(l.begin(), l.end());
        CHECK(l[0] == doctest::Approx(0.5 - 1.0 / 6).epsilon(1e-6));
        CHECK(l[1] == doctest::Approx(0.5 - 1.0 / 18).epsilon(1e-6));
        CHECK(l[2] == doctest::Approx(0.5 + 1.0 / 18).epsilon(1e-6));
        CHECK(l[3] == doctest::Approx(0.5 + 1.0 / 6).epsilon(1e-6));
        for (double v : l) CHECK((v > 0.0 && v < 1.0));
    }
    SUBCASE("clusters") {
        const auto ws = w_spectrum(star(), build_boundary_quadrature(star(), 128), 6);
        std::size_t total = 0;
        for (const auto& c : w_clusters(ws)) total += c.size();
        CHECK(total == 6);
    }
}

TEST_CASE("Drude permeability") {
    const DrudeParams d{1.3, 1.0};
    CHECK(std::abs(drude_mu(1.3, d)) <= 1e-15);
    CHECK(std::abs(drude_mu(1e8, d) - 1.0) <= 1e-12);
    CHECK(std::abs(drude_lambda(1.3 * std::sqrt(2.0), d) - 1.0) <= 1e-14);
    const cplx w{0.9, -0.1};
    const cplx fd = (drude_lambda(w + 1e-6, d) - drude_lambda(w - 1e-6, d)) / 2e-6;
    CHECK(std::abs(fd - drude_lambda_deriv(w, d)) <= 1e-8);
}

TEST_CASE("particle placement") {
    ParticleConfig p;
    p.delta = 0.05;
    p.z = Vec2(0.3, 0.1);
    CHECK_NOTHROW(validate_particle(p, Shape2D::disk(1.0)));
    p.z = Vec2(0.97, 0.0);
    CHECK_THROWS_AS(validate_particle(p, Shape2D::disk(1.0)), InvalidArgument);
    p.position = ParticlePosition::external;
    p.z = Vec2(0.5, 0.0);
    CHECK_THROWS_AS(validate_particle(p, Shape2D::disk(1.0)), InvalidArgument);
    p.z = Vec2(1.5, 0.0);
    CHECK_NOTHROW(validate_particle(p, Shape2D::disk(1.0)));
}

TEST_CASE("coupling coefficients") {
    const Shape2D b = star();
    const auto ws = w_spectrum(b, build_boundary_quadrature(b, 256), 4);
    ParticleConfig p;
    p.shape = b;
    p.delta = 0.05;
    p.z = Vec2(0.1, 0.2);

    SUBCASE("constant field does not couple") {
        const auto c = coupling_coefficients([](const Vec2&) { return cplx(2.0, 1.0); }, p, ws);
        for (const cplx& v : c) CHECK(std::abs(v) <= 1e-12);
    }
    SUBCASE("boundary reduction equals volume quadrature") {
        const cplx a{0.3, 0.1}, bb{0.0, 0.7};
        auto f = [&](const Vec2& x) { return std::exp(a * x[0] + bb * x[1]); };
        auto g = [&](const Vec2& x) { return Vec2c(a * f(x), bb * f(x)); };
        const auto c1 = coupling_coefficients(f, p, ws);
        const auto c2 = coupling_coefficients_volume(g, p, ws, 48);
        for (std::size_t j = 0; j < c1.size(); ++j) CHECK(std::abs(c1[j] - c2[j]) <= 1e-6 * std::abs(c1[j]));
    }
    SUBCASE("couplings scale like delta") {
        auto f = [](const Vec2& x) { return cplx(std::sin(x[0] + 0.3 * x[1])); };
        std::vector<double> ds{0.08, 0.04, 0.02, 0.01}, mags;
        for (double d : ds) {
            p.delta = d;
            mags.push_back(std::abs(coupling_coefficients(f, p, ws)[0]));
        }
        CHECK(loglog_fit(ds, mags).slope == doctest::Approx(1.0).epsilon(0.2));
    }
}
