#include <doctest.h>

#include "cavshift/errors.hpp"
#include "cavshift/geometry.hpp"

using namespace cavshift;

namespace {

Shape2D kite() { return Shape2D::star(1.0, {0.0, 0.15, 0.05}, {0.08, 0.0, 0.02}, Vec2(0.2, -0.1), 0.3); }

}  // namespace

TEST_CASE("volume quadrature integrates known areas and moments") {
    for (int res : {16, 24, 32}) {
        const auto q = build_volume_quadrature(Shape2D::disk(1.0), res);
        CHECK(q.size() == res * res);
        CHECK(q.weights.sum() == doctest::Approx(pi).epsilon(1e-8));
    }
    const auto q = build_volume_quadrature(Shape2D::disk(1.0), 32);
    CHECK(integrate(q, [](const Vec2& x) { return x.x() * x.x(); }) == doctest::Approx(pi / 4).epsilon(1e-6));

    const auto qe = build_volume_quadrature(Shape2D::ellipse(2.0, 1.0), 32);
    CHECK(qe.weights.sum() == doctest::Approx(2 * pi).epsilon(1e-8));

    const Shape2D k = kite();
    const auto qk = build_volume_quadrature(k, 32);
    CHECK(qk.weights.sum() == doctest::Approx(area(k)).epsilon(1e-8));
    for (Eigen::Index i = 0; i < qk.size(); ++i) CHECK(contains(k, qk.node(i)));
}

TEST_CASE("gaussian integrand converges under refinement") {
    const double exact = pi * (1.0 - std::exp(-1.0));
    double prev = 1.0;
    for (int res : {16, 32, 64}) {
        const auto q = build_volume_quadrature(Shape2D::disk(1.0), res);
        const double err = std::abs(integrate(q, [](const Vec2& x) { return std::exp(-x.squaredNorm()); }) - exact);
        CHECK(err <= std::max(prev, 1e-12));
        prev = err;
    }
    CHECK(prev <= 1e-12);
}

TEST_CASE("mirror map of symmetric shapes") {
    const auto q = build_volume_quadrature(Shape2D::ellipse(1.5, 1.0, Vec2(0.3, 0.2), 0.5), 16);
    REQUIRE(q.mirror.size() == std::size_t(q.size()));
    const Shape2D s = Shape2D::ellipse(1.5, 1.0, Vec2(0.3, 0.2), 0.5);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        CHECK((mirror_point(s, q.node(i)) - q.node(q.mirror[i])).norm() <= 1e-12);
        CHECK(q.weights[i] == doctest::Approx(q.weights[q.mirror[i]]).epsilon(1e-14));
    }
    CHECK(has_mirror_symmetry(Shape2D::disk(1.0)));
    CHECK_FALSE(has_mirror_symmetry(kite()));
}

TEST_CASE("boundary quadrature") {
    const auto bq = build_boundary_quadrature(Shape2D::disk(1.0), 64);
    CHECK(bq.weights.sum() == doctest::Approx(2 * pi).epsilon(1e-12));
    for (Eigen::Index i = 0; i < bq.size(); ++i) {
        CHECK((bq.normals.row(i) - bq.nodes.row(i)).norm() <= 1e-12);
        CHECK(bq.curvature[i] == doctest::Approx(1.0).epsilon(1e-12));
    }

    const auto bk = build_boundary_quadrature(kite(), 128);
    const Vec2 flux = (bk.normals.array().colwise() * bk.weights.array()).colwise().sum().transpose();
    CHECK(flux.norm() <= 1e-10);
    for (Eigen::Index i = 0; i < bk.size(); ++i) CHECK(bk.normals.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(build_boundary_quadrature(kite(), 15), InvalidArgument);
}

TEST_CASE("shape validation and utilities") {
    CHECK_THROWS_AS(validate_shape(Shape2D::disk(-1.0)), InvalidArgument);
    CHECK_THROWS_AS(validate_shape(Shape2D::star(1.0, {0.0, 1.2})), InvalidArgument);
    CHECK_NOTHROW(validate_shape(kite()));
    CHECK_THROWS_AS(shape_kind_from_string("square"), InvalidArgument);

    CHECK(area(Shape2D::ellipse(2.0, 0.5)) == doctest::Approx(pi).epsilon(1e-10));
    CHECK(diameter(Shape2D::ellipse(2.0, 0.5)) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(boundary_distance(Shape2D::disk(1.0), Vec2(0.25, 0.0)) == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(boundary_distance(Shape2D::disk(1.0), Vec2(2.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-8));

    const Shape2D small = scaled_translated(kite(), 0.1, Vec2(0.5, 0.5));
    CHECK(area(small) == doctest::Approx(0.01 * area(kite())).epsilon(1e-10));
}

TEST_CASE("shape hashes") {
    CHECK(shape_hash(kite(), 32) == shape_hash(kite(), 32));
    CHECK(shape_hash(Shape2D::disk(1.0), 32) != shape_hash(Shape2D::disk(1.001), 32));
    CHECK(shape_hash(Shape2D::disk(1.0), 32) != shape_hash(Shape2D::disk(1.0), 48));
}

TEST_CASE("angular rule integrates the area about interior points") {
    const Shape2D k = kite();
    for (const Vec2& x : {Vec2(0.2, -0.1), Vec2(0.6, 0.1), Vec2(-0.5, -0.4)}) {
        REQUIRE(contains(k, x));
        const AngularRule r = build_angular_rule(k, x);
        double total = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q)
            for (int s = r.offset[q]; s < r.offset[q + 1]; ++s)
                total += r.weight[q] * 0.5 * (r.t_out[s] * r.t_out[s] - r.t_in[s] * r.t_in[s]);
        CHECK(total == doctest::Approx(area(k)).epsilon(1e-10));
    }
}

TEST_CASE("gauss legendre") {
    VecX x, w;
    gauss_legendre(10, x, w);
    CHECK(w.sum() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK((w.array() * x.array().pow(18)).sum() == doctest::Approx(2.0 / 19.0).epsilon(1e-13));
}
