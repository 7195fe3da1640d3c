#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cavshift/types.hpp"

namespace cavshift {

enum class ShapeKind { disk, ellipse, star };

// Smooth closed shape, star-shaped about its center.
//   disk:    radius a
//   ellipse: semi-axes a (local x) and b (local y)
//   star:    r(phi) = r0 + sum_m (cos_coef[m-1] cos(m phi) + sin_coef[m-1] sin(m phi))
struct Shape2D {
    ShapeKind kind = ShapeKind::disk;
    double a = 1.0;
    double b = 1.0;
    double r0 = 1.0;
    std::vector<double> cos_coef;
    std::vector<double> sin_coef;
    Vec2 center = Vec2::Zero();
    double rotation = 0.0;

    static Shape2D disk(double radius, Vec2 c = Vec2::Zero());
    static Shape2D ellipse(double a, double b, Vec2 c = Vec2::Zero(), double rot = 0.0);
    static Shape2D star(double r0, std::vector<double> cos_coef, std::vector<double> sin_coef = {},
                        Vec2 c = Vec2::Zero(), double rot = 0.0);
};

// Throws InvalidArgument unless the shape is smooth, simple and non-degenerate.
void validate_shape(const Shape2D& s);

const char* to_string(ShapeKind k);
ShapeKind shape_kind_from_string(const std::string& s);

// Polar radius about the center, in the local (unrotated) frame, with derivatives.
double polar_radius(const Shape2D& s, double phi);
double polar_radius_deriv(const Shape2D& s, double phi);

// Boundary parametrization x(t), t in [0, 2 pi), and its first two derivatives.
Vec2 boundary_point(const Shape2D& s, double t);
Vec2 boundary_tangent(const Shape2D& s, double t);
Vec2 boundary_second(const Shape2D& s, double t);

bool contains(const Shape2D& s, const Vec2& x);
double area(const Shape2D& s);
double diameter(const Shape2D& s);
// Euclidean distance from x to the boundary (sampled and refined).
double boundary_distance(const Shape2D& s, const Vec2& x);

// Same shape scaled by delta about the origin of its reference frame and moved to z.
Shape2D scaled_translated(const Shape2D& reference, double delta, const Vec2& z);
// Rotated copy about the shape's own center.
Shape2D rotated(const Shape2D& s, double angle);

// Mirror symmetry about the local x-axis through the center.
bool has_mirror_symmetry(const Shape2D& s);
Vec2 mirror_point(const Shape2D& s, const Vec2& x);

struct VolumeQuadrature {
    Points nodes;
    VecX weights;
    int resolution = 0;
    int n_r = 0;
    int n_theta = 0;
    // Index of the mirror image of each node, or empty when the shape has no mirror symmetry.
    std::vector<int> mirror;
    // Mean node spacing sqrt(area / N), the length scale for refusal tests.
    double spacing = 0.0;

    Eigen::Index size() const { return nodes.rows(); }
    Vec2 node(Eigen::Index i) const { return nodes.row(i).transpose(); }
};

// Mapped polar grid: Gauss-Legendre in the scaled radius (n_r = resolution/2),
// offset trapezoid in angle (n_theta = 2*resolution). Node count resolution^2.
VolumeQuadrature build_volume_quadrature(const Shape2D& s, int resolution);
VolumeQuadrature build_volume_quadrature(const Shape2D& s, int n_r, int n_theta);

double integrate(const VolumeQuadrature& q, const std::function<double(const Vec2&)>& f);

struct BoundaryQuadrature {
    Points nodes;
    Points normals;
    VecX weights;
    VecX curvature;
    VecX param;
    Eigen::Index size() const { return nodes.rows(); }
};

// n equispaced parameter nodes with trapezoid arclength weights; n >= 16 and even.
BoundaryQuadrature build_boundary_quadrature(const Shape2D& s, int n);

// Stable textual identifier of a shape and its resolution.
std::string shape_hash(const Shape2D& s, int resolution);

// Inside intervals [t_in, t_out] of the ray x + t*dir (t >= 0) from an interior point x.
struct RaySegments {
    int count = 0;
    double t_in[4];
    double t_out[4];
};
RaySegments ray_segments(const Shape2D& s, const Vec2& x, const Vec2& dir);

// Angular quadrature about an interior point for polar integration over the shape:
// integral over Omega of f = sum_q weight[q] * sum_seg int_{t_in}^{t_out} f(x + t e_q) t dt.
struct AngularRule {
    std::vector<double> theta;
    std::vector<double> weight;
    std::vector<int> offset;  // segments of angle q: [offset[q], offset[q+1])
    std::vector<double> t_in;
    std::vector<double> t_out;
    std::size_t size() const { return theta.size(); }
};

// Adaptive Gauss-Legendre panels in angle, refined until the ray-length moments converge.
AngularRule build_angular_rule(const Shape2D& s, const Vec2& x, double tol = 1e-13);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, VecX& x, VecX& w);

}  // namespace cavshift
