#include <doctest.h>

#include "cavshift/oracle_suite.hpp"

using namespace cavshift;

namespace {

const cplx dipole_exact{0.68849071357239306, -0.06615809613391376};
const cplx monopole_exact{0.25068753951073984, -0.12175411032642564};

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("multilayer oracle for the disk cavity") {
    const CavityConfig cfg;
    SUBCASE("reference roots") {
        CHECK(rel(multilayer_root_near(cavity_stack(cfg, 1.0, 1), {0.69, -0.07}, 0.05), dipole_exact) <= 1e-12);
        CHECK(rel(multilayer_root_near(cavity_stack(cfg, 1.0, 0), {0.25, -0.12}, 0.05), monopole_exact) <= 1e-12);
    }
    SUBCASE("window search") {
        const RadialLayerStack s = cavity_stack(cfg, 1.0, 1);
        const SearchWindow w{{0.3, -0.3}, {1.2, 0.1}};
        const MultilayerRoots r = multilayer_disk_resonances(s, w);
        CHECK(r.winding == int(r.roots.size()));
        CHECK(multilayer_winding(s, w) == r.winding);
        REQUIRE_FALSE(r.roots.empty());
        for (double res : r.residuals) CHECK(res <= 1e-12);
        for (std::size_t i = 1; i < r.roots.size(); ++i) CHECK(r.roots[i - 1].real() <= r.roots[i].real());
        double best = 1.0;
        for (const cplx& x : r.roots) best = std::min(best, rel(x, dipole_exact));
        CHECK(best <= 1e-12);
    }
    SUBCASE("homogeneous space has no resonance") {
        RadialLayerStack s;
        s.radii = {1.0};
        s.layers = {RadialLayer{1.0, 1.0}};
        s.outer = Medium{1.0, 1.0};
        s.order = 1;
        const MultilayerRoots r = multilayer_disk_resonances(s, {{0.3, -0.3}, {1.2, 0.1}});
        CHECK(r.roots.empty());
        CHECK(r.winding == 0);
    }
    SUBCASE("layered stack validation") {
        RadialLayerStack s = cavity_stack(cfg, 1.0, 1);
        s.radii.push_back(0.5);
        s.layers.push_back(RadialLayer{});
        CHECK_THROWS_AS(validate_stack(s), InvalidArgument);
    }
    SUBCASE("a vanishing particle leaves the root in place") {
        const cplx w = multilayer_root_near(particle_stack(cfg, 1.0, 1e-6, 0.5, 1), dipole_exact, 0.02);
        CHECK(std::abs(w - dipole_exact) <= 1e-10);
    }
}

TEST_CASE("radial eigenvalue of the volume operator") {
    // kappa^2 - k^2 = 1/lambda; at the dipole resonance 1 - alpha lambda = 0
    const CavityConfig cfg;
    const cplx k = dipole_exact * std::sqrt(cfg.eps_m * cfg.mu_m);
    const cplx lambda = 1.0 / cfg.alpha(dipole_exact);
    const cplx l = radial_k_eigenvalue(1.0, k, 1, lambda * 1.01);
    CHECK(rel(l, lambda) <= 1e-10);
}

TEST_CASE("convergence studies") {
    const std::vector<double> ds{0.08, 0.04, 0.02, 0.01};
    SUBCASE("power law") {
        const auto st = convergence_study([](double d) { return cplx(d * d + 0.3 * d * d * d); },
                                          [](double d) { return cplx(d * d); }, ds);
        CHECK(st.slope == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(st.rows.size() == ds.size());
        CHECK_FALSE(st.degenerate);
        CHECK(st.csv().find("delta") != std::string::npos);
    }
    SUBCASE("exact predictions are degenerate") {
        const auto st = convergence_study([](double d) { return cplx(d); }, [](double d) { return cplx(d); }, ds, 2);
        CHECK(st.degenerate);
    }
    SUBCASE("failing oracle aborts with the partial table") {
        try {
            convergence_study([](double d) { return cplx(d); },
                              [](double d) -> cplx {
                                  if (d < 0.03) throw ConvergenceError("no root");
                                  return cplx(d * 1.1);
                              },
                              ds);
            FAIL("expected an abort");
        } catch (const ConvergenceAborted& e) {
            CHECK(e.partial().rows.size() == 2);
        }
    }
    SUBCASE("argument checks") {
        CHECK_THROWS_AS(convergence_study([](double) { return cplx(1.0); }, [](double) { return cplx(1.0); },
                                          {0.1, 0.05, 0.05, 0.01}),
                        InvalidArgument);
        CHECK_THROWS_AS(convergence_study([](double) { return cplx(1.0); }, [](double) { return cplx(1.0); },
                                          {0.1, 0.05}),
                        InvalidArgument);
    }
    SUBCASE("log-log fit") {
        const LogFit f = loglog_fit({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0});
        CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("static particle operator") {
    // gradient fields of H^1_0 potentials map to themselves, divergence-free fields to zero
    const Shape2D b = Shape2D::disk(1.0);
    std::vector<double> grad_err, curl_err, const_err;
    for (int res : {12, 24}) {
        const VolumeQuadrature dq = build_volume_quadrature(b, res);
        const MatX op = static_particle_operator(dq, b);
        const Eigen::Index n = dq.size();
        VecX grad(2 * n), curl(2 * n), ex = VecX::Zero(2 * n), w(2 * n);
        for (Eigen::Index p = 0; p < n; ++p) {
            // psi = (1 - r^2)^3 vanishes to second order on the boundary
            const Vec2 x = dq.node(p);
            const double s = 1.0 - x.squaredNorm();
            const Vec2 g = -6.0 * s * s * x;
            grad[p] = g[0];
            grad[n + p] = g[1];
            curl[p] = g[1];
            curl[n + p] = -g[0];
            ex[p] = 1.0;
            w[p] = w[n + p] = dq.weights[p];
        }
        auto norm = [&](const VecX& v) { return std::sqrt((w.array() * v.array().square()).sum()); };
        grad_err.push_back(norm(op * grad - grad) / norm(grad));
        curl_err.push_back(norm(op * curl) / norm(curl));
        // the disk depolarizes a uniform field by 1/2
        const_err.push_back(norm(op * ex - 0.5 * ex) / norm(ex));
    }
    CHECK(grad_err[1] <= 2e-2);
    CHECK(curl_err[1] <= 2e-2);
    CHECK(grad_err[1] <= grad_err[0] / 3.0);
    CHECK(curl_err[1] <= curl_err[0] / 3.0);
    CHECK(const_err[1] <= 1e-3);
}

TEST_CASE("static dipole moment matches the polarization tensor") {
    for (double k : {2.0, 5.0}) {
        const Shape2D e = Shape2D::ellipse(1.0, 0.6);
        const Mat2 m = polarization_tensor(e, 256, k);
        for (int q = 0; q < 2; ++q) {
            const Vec2c p = static_dipole_moment(e, 24, k, [q](const Vec2&) { return Vec2c(Vec2::Unit(q).cast<cplx>()); });
            CHECK((p - m.col(q).cast<cplx>()).norm() <= 1e-5 * m.norm());
        }
    }
    CHECK(static_dipole_moment(Shape2D::disk(1.0), 16, 1.0, [](const Vec2&) { return Vec2c(1.0, 0.0); }).norm() == 0.0);
}

TEST_CASE("coupled cavity and particle solver") {
    auto model = std::make_shared<CavityModel>(CavityConfig{}, 16, 1);
    BranchSpec spec;
    spec.seed = {0.69, -0.07};
    spec.sector = Sector::even;
    spec.seed_function = [](const Vec2& x) { return x.x(); };
    const ResonanceRecord rec = find_resonance(model, spec);

    ParticleConfig p;
    p.delta = 0.1;
    CoupledOptions opt;
    opt.particle_resolution = 12;

    SUBCASE("no contrast returns the unperturbed resonance") {
        p.mu_c = 1.0;
        const CoupledResult r = coupled_perturbed_resonance(rec, p, opt);
        CHECK(std::abs(r.omega - rec.omega0) <= 1e-9);
    }
    SUBCASE("concentric particle against the layered oracle") {
        p.mu_c = 0.5;
        const CoupledResult r = coupled_perturbed_resonance(rec, p, opt);
        const cplx exact = multilayer_root_near(particle_stack(CavityConfig{}, 1.0, 0.1, 0.5, 1), dipole_exact, 0.05);
        const cplx exact0 = dipole_exact;
        // compare shifts: the discretization error of omega0 largely cancels
        CHECK(std::abs((r.omega - rec.omega0) - (exact - exact0)) <= 5e-2 * std::abs(exact - exact0));
        CHECK(r.sigma_min <= 1e-8);
    }
}
