#include <doctest.h>

#include "cavshift/errors.hpp"
#include "cavshift/shift_predictor.hpp"

using namespace cavshift;

namespace {

const cplx omega0{0.68849071357239306, -0.06615809613391376};
const cplx c0{0.06441765217108941, -0.00395075775168961};

ResonanceRecord disk_dipole() {
    auto model = std::make_shared<CavityModel>(CavityConfig{}, 16, 1);
    BranchSpec spec;
    spec.seed = {0.69, -0.07};
    spec.sector = Sector::even;
    spec.seed_function = [](const Vec2& x) { return x.x(); };
    return find_resonance(model, spec);
}

}  // namespace

TEST_CASE("dipole shift formula") {
    const Vec2c g(cplx(1.2, -0.1), cplx(0.3, 0.2));
    Mat2c m;
    m << 2.0, 0.1, 0.1, 1.5;
    const ShiftPrediction p = dipole_shift(ShiftCase::internal, omega0, c0, g, m, 0.01);
    const cplx expected = 1e-4 * c0 * (g(0) * g(0) * 2.0 + 2.0 * g(0) * g(1) * 0.1 + g(1) * g(1) * 1.5);
    CHECK(std::abs(p.shift() - expected) <= 1e-15 * std::abs(expected));
    CHECK(p.roots.size() == 1);

    const ShiftPrediction q = dipole_shift(ShiftCase::internal, omega0, c0, g, m, 0.02);
    CHECK(std::abs(q.shift() / p.shift() - 4.0) <= 1e-12);
    CHECK(dipole_shift(ShiftCase::internal, omega0, c0, Vec2c::Zero(), m, 0.01).shift() == cplx(0.0));
    CHECK(dipole_shift(ShiftCase::internal, omega0, c0, g, Mat2c::Zero(), 0.01).shift() == cplx(0.0));
}

TEST_CASE("internal shift from a resonance record") {
    const ResonanceRecord rec = disk_dipole();
    ParticleConfig p;
    p.delta = 0.02;
    p.z = Vec2(0.2, 0.1);

    SUBCASE("matched permeability gives no shift") {
        p.mu_c = 1.0;
        const Mat2 m = polarization_tensor(p.shape, 128, 1.0 / p.mu_c);
        CHECK(std::abs(internal_shift(rec, p, m).shift()) == 0.0);
    }
    SUBCASE("contrast gives a finite shift") {
        const Mat2 m = polarization_tensor(p.shape, 128, 1.0 / p.mu_c);
        const ShiftPrediction s = internal_shift(rec, p, m);
        CHECK(std::abs(s.shift()) > 0.0);
        CHECK((s.z - p.z).norm() == 0.0);
    }
    SUBCASE("mode gauge is unobservable") {
        const Mat2 m = polarization_tensor(p.shape, 128, 1.0 / p.mu_c);
        ResonanceRecord flipped = rec;
        flipped.mode = -rec.mode;
        flipped.mode_sym = -rec.mode_sym;
        CHECK(internal_shift(flipped, p, m).shift() == internal_shift(rec, p, m).shift());
        PlasmonicInputs in;
        in.omega0 = rec.omega0;
        in.c = rec.c;
        in.drude = DrudeParams{1.2, 1.0};
        in.coupling_sq = cplx(2e-5, 1e-6);
        const cplx a = plasmonic_shift(in).shift();
        in.coupling_sq = (-std::sqrt(in.coupling_sq)) * (-std::sqrt(in.coupling_sq));
        CHECK(std::abs(plasmonic_shift(in).shift() - a) <= 1e-15);
    }
    SUBCASE("shift is continuous across matched permeability") {
        std::vector<double> mags;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            p.mu_c = 1.0 - eps;
            const Mat2 lo = polarization_tensor(p.shape, 128, 1.0 / p.mu_c);
            p.mu_c = 1.0 + eps;
            const Mat2 hi = polarization_tensor(p.shape, 128, 1.0 / p.mu_c);
            const cplx s_lo = internal_shift(rec, p, lo).shift(), s_hi = internal_shift(rec, p, hi).shift();
            mags.push_back(std::max(std::abs(s_lo), std::abs(s_hi)));
            // opposite contrasts shift in opposite directions
            CHECK(std::abs(s_lo + s_hi) <= 2.5 * eps * std::abs(s_lo));
        }
        CHECK(mags[1] <= 0.11 * mags[0]);
        CHECK(mags[2] <= 0.11 * mags[1]);
    }
    SUBCASE("refusals") {
        const Mat2 m = Mat2::Identity();
        ParticleConfig ext = p;
        ext.position = ParticlePosition::external;
        ext.z = Vec2(1.5, 0.0);
        CHECK_THROWS_AS(internal_shift(rec, ext, m), InvalidArgument);
        ResonanceRecord ex = rec;
        ex.exceptional = true;
        CHECK_THROWS_AS(internal_shift(ex, p, m), ExceptionalPointError);
        ParticleConfig wall = p;
        wall.z = Vec2(0.99, 0.0);
        CHECK_THROWS_AS(internal_shift(rec, wall, m), InvalidArgument);
    }
}

TEST_CASE("plasmonic relation") {
    PlasmonicInputs in;
    in.omega0 = omega0;
    in.c = c0;
    in.lambda_j = 0.5;
    in.drude = DrudeParams{1.5, 1.0};
    in.coupling_sq = cplx(3e-5, 1e-6);

    SUBCASE("roots satisfy the relation") {
        const ShiftPrediction p = plasmonic_shift(in);
        REQUIRE_FALSE(p.roots.empty());
        for (const cplx& r : p.roots) CHECK(plasmonic_residual(in, in.omega0 + r) <= 1e-14);
        for (std::size_t i = 1; i < p.roots.size(); ++i) CHECK(std::abs(p.roots[i - 1]) <= std::abs(p.roots[i]));
        CHECK_FALSE(p.degenerate);
        // detuned: first-order shift c g^2 / (lambda(omega0) + lambda_j)
        const cplx first = in.c * in.coupling_sq / (drude_lambda(omega0, *in.drude) + in.lambda_j);
        CHECK(std::abs(p.shift() - first) <= 1e-2 * std::abs(first));
    }
    SUBCASE("generic dispersion by Newton") {
        PlasmonicInputs g = in;
        g.drude.reset();
        g.lambda_fn = [](cplx w) { return w * w / 2.25 - 1.0; };
        const ShiftPrediction a = plasmonic_shift(in), b = plasmonic_shift(g);
        CHECK(std::abs(a.shift() - b.shift()) <= 1e-14 * std::abs(omega0));
        g.lambda_fn = nullptr;
        CHECK_THROWS_AS(plasmonic_shift(g), InvalidArgument);
    }
    SUBCASE("matched plasmon yields a symmetric pair") {
        PlasmonicInputs m = in;
        m.omega0 = 0.6885;
        m.drude = DrudeParams{0.6885 * std::sqrt(2.0), 1.0};
        const ShiftPrediction p = plasmonic_shift(m);
        REQUIRE(p.roots.size() == 2);
        CHECK(p.degenerate);
        CHECK(std::abs(p.roots[0] + p.roots[1]) <= 1e-15);
        const cplx expected = std::sqrt(m.c * m.coupling_sq / drude_lambda_deriv(m.omega0, *m.drude));
        CHECK(std::abs(std::abs(p.roots[0]) - std::abs(expected)) <= 1e-14);
        m.coupling_sq = 0.0;
        const ShiftPrediction z = plasmonic_shift(m);
        CHECK(z.roots[0] == cplx(0.0));
        CHECK(z.roots[1] == cplx(0.0));
    }
    SUBCASE("tuned plasma frequency flags the hybridized pair") {
        PlasmonicInputs t = in;
        t.drude = DrudeParams{omega0.real() / std::sqrt(1.0 - t.lambda_j), 1.0};
        const ShiftPrediction p = plasmonic_shift(t);
        CHECK(p.roots.size() >= 2);
        CHECK(p.degenerate);
        t.drude->omega_p *= 1.05;
        CHECK_FALSE(plasmonic_shift(t).degenerate);
    }
    SUBCASE("lambda_j outside (0, 1) is reported") {
        PlasmonicInputs w = in;
        w.lambda_j = 1.2;
        w.drude->omega_p = 0.4;
        CHECK_FALSE(plasmonic_shift(w).warnings.empty());
    }
}

TEST_CASE("exceptional reduction") {
    ExceptionalData d;
    d.omega0 = omega0;
    d.c1 = cplx(0.05, -0.01);
    d.c2 = cplx(0.002, 0.001);
    d.q11 = cplx(0.4, 0.1);
    d.q22 = cplx(0.3, -0.2);

    SUBCASE("c2 = 0 reduces to the simple pole") {
        ExceptionalData s = d;
        s.c2 = 0.0;
        s.q12 = cplx(0.2, 0.0);
        CHECK(exceptional_polynomial(s).size() == 2);
        const ShiftPrediction p = exceptional_shift(s);
        REQUIRE(p.roots.size() == 1);
        CHECK(std::abs(p.shift() - s.c1 * s.q11) <= 1e-16);
    }
    SUBCASE("c1 = 0 gives a square-root pair") {
        ExceptionalData s = d;
        s.c1 = 0.0;
        const ShiftPrediction p = exceptional_shift(s);
        REQUIRE(p.roots.size() == 2);
        const cplx r = std::sqrt(s.c2 * s.q22);
        for (const cplx& x : p.roots) CHECK(std::min(std::abs(x - r), std::abs(x + r)) <= 1e-15);
    }
    SUBCASE("planted root") {
        const cplx x{0.031, -0.017};
        const cplx poly = x * x * x - d.c1 * d.q11 * x * x - d.c2 * d.q22 * x;
        d.q12 = std::sqrt(d.q11 * d.q22 + poly / (d.c1 * d.c2));
        CHECK(std::abs(exceptional_determinant(d, x)) <= 1e-12);
        const ShiftPrediction p = exceptional_shift(d);
        double best = 1.0;
        for (const cplx& r : p.roots) best = std::min(best, std::abs(r - x));
        CHECK(best <= 1e-15);
    }
    SUBCASE("no perturbation") {
        ExceptionalData s = d;
        s.c1 = s.c2 = 0.0;
        CHECK_THROWS_AS(exceptional_shift(s), ConvergenceError);
    }
}

TEST_CASE("polynomial roots") {
    // (x - 1)(x + 2)(x - i)
    const std::vector<cplx> p{1.0, cplx(1.0, -1.0), cplx(-2.0, -1.0), cplx(0.0, 2.0)};
    const auto r = polynomial_roots(p);
    REQUIRE(r.size() == 3);
    for (const cplx& t : {cplx(1.0), cplx(-2.0), cplx(0.0, 1.0)}) {
        double best = 1.0;
        for (const cplx& x : r) best = std::min(best, std::abs(x - t));
        CHECK(best <= 1e-14);
    }
    CHECK(polynomial_roots({0.0, 2.0, -4.0}).size() == 1);
    CHECK_THROWS_AS(polynomial_roots({0.0, 0.0}), InvalidArgument);
}
