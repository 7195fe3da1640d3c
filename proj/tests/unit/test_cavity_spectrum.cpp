#include <doctest.h>

#include "cavshift/cavity_spectrum.hpp"
#include "cavshift/errors.hpp"
#include "cavshift/oracle_suite.hpp"

using namespace cavshift;

namespace {

const cplx dipole_exact{0.68849071357239306, -0.06615809613391376};
const cplx dipole_c{0.06441765217108941, -0.00395075775168961};
const cplx dipole_grad{1.7452917954968185, -0.1515695652245898};

std::shared_ptr<CavityModel> disk_model(int res) { return std::make_shared<CavityModel>(CavityConfig{}, res, 1); }

ResonanceRecord dipole(std::shared_ptr<CavityModel> m, Sector s = Sector::even) {
    BranchSpec spec;
    spec.seed = {0.69, -0.07};
    spec.sector = s;
    spec.seed_function = [s](const Vec2& x) { return s == Sector::odd ? x.y() : x.x(); };
    return find_resonance(m, spec);
}

}  // namespace

TEST_CASE("configuration checks") {
    CavityConfig c;
    c.tau = -1.0;
    CHECK_THROWS_AS(validate_cavity(c), InvalidArgument);
    CHECK_THROWS_AS(sector_from_string("diagonal"), InvalidArgument);
    CHECK(sector_from_string(to_string(Sector::odd)) == Sector::odd);
    CHECK(CavityConfig{}.alpha(2.0) == cplx(40.0));
}

TEST_CASE("discrete operator is complex symmetric") {
    auto m = disk_model(16);
    for (Sector s : {Sector::none, Sector::even, Sector::odd}) {
        const DiscreteOperator op = assemble_k(*m, {0.7, -0.05}, s, true);
        CHECK((op.a - op.a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * op.a.cwiseAbs().maxCoeff());
        CHECK((op.da - op.da.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * op.da.cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(assemble_k(*m, 0.0), DomainError);
}

TEST_CASE("eigenpairs at real frequency") {
    auto m = disk_model(16);
    const DiscreteOperator op = assemble_k(*m, 0.7, Sector::none);
    const auto pairs = eigenpairs(op, 6);
    REQUIRE(pairs.size() == 6);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        CHECK((op.a * p.v - p.lambda * p.v).norm() / p.v.norm() <= 1e-10);
        CHECK(std::abs(p.lambda.imag()) > 1e-8);
        if (i > 0) CHECK(std::abs(pairs[i].lambda) <= std::abs(pairs[i - 1].lambda) * (1 + 1e-12));
    }
    // non-degenerate pairs are bilinear-orthogonal
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t j = i + 1; j < pairs.size(); ++j)
            if (std::abs(pairs[i].lambda - pairs[j].lambda) > 1e-6 * std::abs(pairs[i].lambda))
                CHECK(std::abs(bilinear(pairs[i].v, pairs[j].v)) <= 1e-8);
}

TEST_CASE("leading eigenvalue against the radial reduction") {
    auto m = disk_model(32);
    const cplx k = 0.7;
    const auto pairs = eigenpairs(assemble_k(*m, k, Sector::even), 3);
    // the monopole family dominates, then the dipole family
    const cplx l0 = radial_k_eigenvalue(1.0, k, 0, pairs[0].lambda);
    CHECK(std::abs(pairs[0].lambda - l0) / std::abs(l0) <= 1e-3);
}

TEST_CASE("branch tracking") {
    auto m = disk_model(16);
    SUBCASE("constant path") {
        const EigenBranch b = track_branch(*m, Sector::even, 0, {0.7, 0.7, 0.7});
        CHECK(std::abs(b.samples.back().lambda - b.samples.front().lambda) <= 1e-12 * std::abs(b.samples.front().lambda));
    }
    SUBCASE("closed loop") {
        std::vector<cplx> path;
        for (int i = 0; i <= 12; ++i) path.push_back(cplx(0.7, -0.03) + 0.02 * std::exp(I * (2 * pi * i / 12)));
        const EigenBranch b = track_branch(*m, Sector::even, 0, path);
        CHECK(std::abs(b.samples.back().lambda - b.samples.front().lambda) <= 1e-9 * std::abs(b.samples.front().lambda));
        for (const auto& s : b.samples) CHECK(s.overlap >= 0.9);
    }
}

TEST_CASE("dipole resonance of the disk") {
    auto m = disk_model(32);
    const ResonanceRecord rec = dipole(m);
    CHECK(rec.omega0.imag() < 0.0);
    CHECK(std::abs(rec.omega0 - dipole_exact) / std::abs(dipole_exact) <= 1e-5);
    CHECK(std::abs(rec.c - dipole_c) / std::abs(dipole_c) <= 1e-5);
    CHECK(characteristic_residual(rec) <= 1e-9);
    const VecX w = m->quad().weights;
    CHECK(std::abs((w.cast<cplx>().array() * rec.mode.array().square()).sum() - 1.0) <= 1e-8);
    CHECK(std::abs(rec.r) >= 1e-6);
    CHECK_FALSE(rec.exceptional);

    SUBCASE("bit-reproducible") {
        const ResonanceRecord again = dipole(disk_model(32));
        CHECK(again.omega0 == rec.omega0);
        CHECK(again.c == rec.c);
    }
    SUBCASE("mode gradient at the center") {
        const ModeSample s = mode_value_and_gradient(rec, Vec2::Zero());
        // the gauge of e is fixed only up to sign
        CHECK(std::abs(s.gradient(0) * s.gradient(0) - dipole_grad * dipole_grad) / std::norm(dipole_grad) <= 1e-3);
        CHECK(std::abs(s.gradient(1)) <= 1e-8);
    }
    SUBCASE("representation reproduces node samples") {
        const Eigen::Index i = m->quad().size() / 3;
        const ModeSample s = mode_value_and_gradient(rec, m->quad().node(i) + Vec2(1e-7, 0.0));
        CHECK(std::abs(s.value - rec.mode[i]) <= 1e-5 * rec.mode.cwiseAbs().maxCoeff());
    }
    SUBCASE("exterior field solves the Helmholtz equation") {
        const ExteriorMode g(rec);
        const cplx k2 = rec.omega0 * rec.omega0;
        const double h = 1e-3;
        for (const Vec2& x : {Vec2(1.5, 0.0), Vec2(0.3, -2.0)}) {
            const cplx lap = (g.value(x + Vec2(h, 0)) + g.value(x - Vec2(h, 0)) + g.value(x + Vec2(0, h)) +
                              g.value(x - Vec2(0, h)) - 4.0 * g.value(x)) / (h * h);
            CHECK(std::abs(lap + k2 * g.value(x)) <= 1e-4 * std::abs(k2 * g.value(x)));
            for (int d = 0; d < 2; ++d) {
                const Vec2 e = Vec2::Unit(d) * 1e-5;
                const cplx fd = (g.value(x + e) - g.value(x - e)) / 2e-5;
                CHECK(std::abs(fd - g.gradient(x)(d)) <= 1e-6 * g.gradient(x).norm() + 1e-9);
            }
        }
        CHECK_THROWS_AS(g.value(Vec2(0.5, 0.0)), DomainError);
    }
}

TEST_CASE("monopole mode has no gradient at the center") {
    auto m = disk_model(24);
    BranchSpec spec;
    spec.seed = {0.25, -0.12};
    spec.sector = Sector::even;
    spec.seed_function = [](const Vec2&) { return 1.0; };
    const ResonanceRecord rec = find_resonance(m, spec);
    CHECK(std::abs(rec.omega0 - cplx(0.25068753951073984, -0.12175411032642564)) <= 1e-4);
    const ModeSample s = mode_value_and_gradient(rec, Vec2::Zero());
    CHECK(s.gradient.norm() <= 1e-6 * std::abs(s.value));
}

TEST_CASE("residue extraction at low resolution") {
    auto m = disk_model(16);
    const ResonanceRecord rec = dipole(m, Sector::odd);
    const ResidueResult r = extract_residue(rec, 0.5 * std::abs(rec.omega0.imag()), 16);
    CHECK(r.winding == 1);
    CHECK(r.asymmetry <= 1e-8);
    CHECK(r.sigma_ratio <= 1e-3);
    CHECK(std::abs(r.c - rec.c) / std::abs(rec.c) <= 1e-3);
    // c e(x) e(y) is invariant under e -> -e
    const MatXc pole = r.c * r.probe_block.col(0) * r.probe_block.col(0).transpose();
    const MatXc flipped = r.c * (-r.probe_block.col(0)) * (-r.probe_block.col(0)).transpose();
    CHECK((pole - flipped).norm() == 0.0);
}

TEST_CASE("dipole branch along the real axis follows the radial reduction") {
    auto m = disk_model(24);
    const ResonanceRecord rec = dipole(m);
    const std::vector<cplx> path{0.5, 0.6, 0.7, 0.8};
    const EigenBranch b = track_branch(*m, Sector::even, rec.branch, path);
    REQUIRE(b.samples.size() == path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        const cplx l = b.samples[i].lambda;
        CHECK(std::abs(l - radial_k_eigenvalue(1.0, path[i], 1, l)) / std::abs(l) <= 1e-4);
    }
}

TEST_CASE("resonance converges with resolution") {
    std::vector<double> h, err;
    for (int res : {32, 48, 64}) {
        h.push_back(1.0 / res);
        err.push_back(std::abs(dipole(disk_model(res)).omega0 - dipole_exact) / std::abs(dipole_exact));
    }
    CHECK(err[2] <= 1e-3);
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
    CHECK(loglog_fit(h, err).slope >= 2.0);
}
