#include "cavshift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <memory>

#include "cavshift/errors.hpp"

namespace cavshift {

namespace {

Mat2 rotation_matrix(double a) {
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

Vec2 to_local(const Shape2D& s, const Vec2& x) {
    return rotation_matrix(-s.rotation) * (x - s.center);
}

Vec2 to_global(const Shape2D& s, const Vec2& p) { return s.center + rotation_matrix(s.rotation) * p; }

double star_radius(const Shape2D& s, double phi, int deriv) {
    double r = deriv == 0 ? s.r0 : 0.0;
    for (std::size_t m = 1; m <= s.cos_coef.size(); ++m) {
        const double c = s.cos_coef[m - 1], md = double(m);
        if (deriv == 0) r += c * std::cos(md * phi);
        else if (deriv == 1) r -= c * md * std::sin(md * phi);
        else r -= c * md * md * std::cos(md * phi);
    }
    for (std::size_t m = 1; m <= s.sin_coef.size(); ++m) {
        const double c = s.sin_coef[m - 1], md = double(m);
        if (deriv == 0) r += c * std::sin(md * phi);
        else if (deriv == 1) r += c * md * std::cos(md * phi);
        else r -= c * md * md * std::sin(md * phi);
    }
    return r;
}

// Local boundary curve and derivatives.
Vec2 local_curve(const Shape2D& s, double t, int deriv) {
    const double c = std::cos(t), sn = std::sin(t);
    switch (s.kind) {
        case ShapeKind::disk:
        case ShapeKind::ellipse: {
            const double a = s.a, b = s.kind == ShapeKind::disk ? s.a : s.b;
            if (deriv == 0) return {a * c, b * sn};
            if (deriv == 1) return {-a * sn, b * c};
            return {-a * c, -b * sn};
        }
        case ShapeKind::star: {
            const double r = star_radius(s, t, 0), r1 = star_radius(s, t, 1);
            if (deriv == 0) return {r * c, r * sn};
            if (deriv == 1) return {r1 * c - r * sn, r1 * sn + r * c};
            const double r2 = star_radius(s, t, 2);
            return {r2 * c - 2 * r1 * sn - r * c, r2 * sn + 2 * r1 * c - r * sn};
        }
    }
    return Vec2::Zero();
}

int star_samples(const Shape2D& s) {
    const std::size_t m = std::max(s.cos_coef.size(), s.sin_coef.size());
    return std::max<int>(256, int(32 * m));
}

double max_polar_radius(const Shape2D& s) {
    switch (s.kind) {
        case ShapeKind::disk: return s.a;
        case ShapeKind::ellipse: return std::max(s.a, s.b);
        case ShapeKind::star: {
            double r = 0.0;
            const int n = star_samples(s) * 4;
            for (int i = 0; i < n; ++i) r = std::max(r, star_radius(s, 2 * pi * i / n, 0));
            return r;
        }
    }
    return 0.0;
}

// Intersections of lines with a star boundary via sign changes of cross(d, b(phi) - x).
class StarCaster {
public:
    explicit StarCaster(const Shape2D& s) : s_(s), n_(star_samples(s)) {
        pts_.resize(n_);
        for (int i = 0; i < n_; ++i) pts_[i] = boundary_point(s, 2 * pi * i / n_);
    }

    RaySegments cast(const Vec2& x, const Vec2& d) const {
        auto cross = [&](const Vec2& p) { return d.x() * (p.y() - x.y()) - d.y() * (p.x() - x.x()); };
        double ts[16];
        int nt = 0;
        double h0 = cross(pts_[0]);
        for (int i = 0; i < n_ && nt < 16; ++i) {
            const int j = (i + 1) % n_;
            const double h1 = cross(pts_[j]);
            if ((h0 < 0.0) != (h1 < 0.0) || h1 == 0.0) {
                double lo = 2 * pi * i / n_, hi = lo + 2 * pi / n_;
                double flo = h0;
                double phi = lo + (hi - lo) * h0 / (h0 - h1);
                for (int it = 0; it < 60; ++it) {
                    const Vec2 b = boundary_point(s_, phi);
                    const double f = cross(b);
                    if (std::abs(f) < 1e-15) break;
                    if ((f < 0.0) == (flo < 0.0)) { lo = phi; flo = f; } else { hi = phi; }
                    const Vec2 bt = boundary_tangent(s_, phi);
                    const double fp = d.x() * bt.y() - d.y() * bt.x();
                    double nphi = phi - f / fp;
                    if (!(nphi > lo && nphi < hi)) nphi = 0.5 * (lo + hi);
                    if (std::abs(nphi - phi) < 1e-15) { phi = nphi; break; }
                    phi = nphi;
                }
                const double t = d.dot(boundary_point(s_, phi) - x);
                if (t > 0.0) ts[nt++] = t;
            }
            h0 = h1;
        }
        std::sort(ts, ts + nt);
        RaySegments r;
        double start = 0.0;
        for (int i = 0; i < nt && r.count < 4; i += 2) {
            r.t_in[r.count] = start;
            r.t_out[r.count] = ts[i];
            ++r.count;
            if (i + 1 < nt) start = ts[i + 1];
        }
        return r;
    }

private:
    const Shape2D& s_;
    int n_;
    std::vector<Vec2> pts_;
};

RaySegments conic_segments(const Shape2D& s, const Vec2& x, const Vec2& dir) {
    const Vec2 p = to_local(s, x);
    const Vec2 d = rotation_matrix(-s.rotation) * dir;
    const double a = s.a, b = s.kind == ShapeKind::disk ? s.a : s.b;
    const double qa = d.x() * d.x() / (a * a) + d.y() * d.y() / (b * b);
    const double qb = 2 * (p.x() * d.x() / (a * a) + p.y() * d.y() / (b * b));
    const double qc = p.x() * p.x() / (a * a) + p.y() * p.y() / (b * b) - 1.0;
    const double disc = std::sqrt(std::max(0.0, qb * qb - 4 * qa * qc));
    // positive root, written to avoid cancellation (qc < 0 inside)
    const double t = qb >= 0.0 ? (-2 * qc) / (qb + disc) : (-qb + disc) / (2 * qa);
    RaySegments r;
    r.count = 1;
    r.t_in[0] = 0.0;
    r.t_out[0] = t;
    return r;
}

// Ray moments integrated over an angular panel.
struct Moments {
    double area = 0, length = 0, plog = 0;
};

Moments ray_moments(const RaySegments& r) {
    Moments m;
    for (int i = 0; i < r.count; ++i) {
        const double a = r.t_in[i], b = r.t_out[i];
        m.area += 0.5 * (b * b - a * a);
        m.length += b - a;
        m.plog += b * b * std::log(b) - (a > 0 ? a * a * std::log(a) : 0.0);
    }
    return m;
}

}  // namespace

Shape2D Shape2D::disk(double radius, Vec2 c) {
    Shape2D s;
    s.kind = ShapeKind::disk;
    s.a = s.b = s.r0 = radius;
    s.center = c;
    return s;
}

Shape2D Shape2D::ellipse(double a, double b, Vec2 c, double rot) {
    Shape2D s;
    s.kind = ShapeKind::ellipse;
    s.a = a;
    s.b = b;
    s.r0 = std::sqrt(a * b);
    s.center = c;
    s.rotation = rot;
    return s;
}

Shape2D Shape2D::star(double r0, std::vector<double> cc, std::vector<double> sc, Vec2 c, double rot) {
    Shape2D s;
    s.kind = ShapeKind::star;
    s.r0 = r0;
    s.a = s.b = r0;
    s.cos_coef = std::move(cc);
    s.sin_coef = std::move(sc);
    s.center = c;
    s.rotation = rot;
    return s;
}

const char* to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::disk: return "disk";
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::star: return "star";
    }
    return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
    if (s == "disk") return ShapeKind::disk;
    if (s == "ellipse") return ShapeKind::ellipse;
    if (s == "star") return ShapeKind::star;
    throw InvalidArgument("unknown shape kind '" + s + "'");
}

void validate_shape(const Shape2D& s) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(s.center.x()) || !finite(s.center.y()) || !finite(s.rotation))
        throw InvalidArgument("shape: non-finite center or rotation");
    switch (s.kind) {
        case ShapeKind::disk:
            if (!(s.a > 0.0) || !finite(s.a)) throw InvalidArgument("disk: radius must be positive");
            break;
        case ShapeKind::ellipse:
            if (!(s.a > 0.0) || !(s.b > 0.0) || !finite(s.a) || !finite(s.b))
                throw InvalidArgument("ellipse: semi-axes must be positive");
            break;
        case ShapeKind::star: {
            if (!(s.r0 > 0.0)) throw InvalidArgument("star: r0 must be positive");
            const int n = 4096;
            for (int i = 0; i < n; ++i) {
                const double r = star_radius(s, 2 * pi * i / n, 0);
                if (!finite(r) || r < 0.05 * s.r0)
                    throw InvalidArgument("star: radius function must stay above 0.05*r0");
            }
            break;
        }
    }
}

double polar_radius(const Shape2D& s, double phi) {
    switch (s.kind) {
        case ShapeKind::disk: return s.a;
        case ShapeKind::ellipse: {
            const double c = std::cos(phi), sn = std::sin(phi);
            return s.a * s.b / std::sqrt(s.b * s.b * c * c + s.a * s.a * sn * sn);
        }
        case ShapeKind::star: return star_radius(s, phi, 0);
    }
    return 0.0;
}

double polar_radius_deriv(const Shape2D& s, double phi) {
    switch (s.kind) {
        case ShapeKind::disk: return 0.0;
        case ShapeKind::ellipse: {
            const double c = std::cos(phi), sn = std::sin(phi);
            const double q = s.b * s.b * c * c + s.a * s.a * sn * sn;
            return -0.5 * s.a * s.b * (s.a * s.a - s.b * s.b) * 2 * sn * c / (q * std::sqrt(q));
        }
        case ShapeKind::star: return star_radius(s, phi, 1);
    }
    return 0.0;
}

Vec2 boundary_point(const Shape2D& s, double t) { return to_global(s, local_curve(s, t, 0)); }
Vec2 boundary_tangent(const Shape2D& s, double t) { return rotation_matrix(s.rotation) * local_curve(s, t, 1); }
Vec2 boundary_second(const Shape2D& s, double t) { return rotation_matrix(s.rotation) * local_curve(s, t, 2); }

bool contains(const Shape2D& s, const Vec2& x) {
    const Vec2 p = to_local(s, x);
    const double rho = p.norm();
    if (rho == 0.0) return true;
    return rho < polar_radius(s, std::atan2(p.y(), p.x()));
}

double area(const Shape2D& s) {
    switch (s.kind) {
        case ShapeKind::disk: return pi * s.a * s.a;
        case ShapeKind::ellipse: return pi * s.a * s.b;
        case ShapeKind::star: {
            const int n = 4 * star_samples(s);
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = star_radius(s, 2 * pi * i / n, 0);
                acc += 0.5 * r * r;
            }
            return acc * 2 * pi / n;
        }
    }
    return 0.0;
}

double diameter(const Shape2D& s) { return 2.0 * max_polar_radius(s); }

double boundary_distance(const Shape2D& s, const Vec2& x) {
    const int n = 512;
    int best = 0;
    double dbest = 1e300;
    for (int i = 0; i < n; ++i) {
        const double d = (boundary_point(s, 2 * pi * i / n) - x).norm();
        if (d < dbest) { dbest = d; best = i; }
    }
    // golden-section refinement on the bracketing parameter interval
    double lo = 2 * pi * (best - 1) / n, hi = 2 * pi * (best + 1) / n;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double t) { return (boundary_point(s, t) - x).norm(); };
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) { hi = d; d = c; fd = fc; c = hi - g * (hi - lo); fc = f(c); }
        else { lo = c; c = d; fc = fd; d = lo + g * (hi - lo); fd = f(d); }
    }
    return std::min({dbest, fc, fd});
}

Shape2D scaled_translated(const Shape2D& ref, double delta, const Vec2& z) {
    Shape2D s = ref;
    s.a *= delta;
    s.b *= delta;
    s.r0 *= delta;
    for (auto& c : s.cos_coef) c *= delta;
    for (auto& c : s.sin_coef) c *= delta;
    s.center = z + delta * ref.center;
    return s;
}

Shape2D rotated(const Shape2D& s, double angle) {
    Shape2D r = s;
    r.rotation += angle;
    return r;
}

bool has_mirror_symmetry(const Shape2D& s) {
    if (s.kind != ShapeKind::star) return true;
    for (double c : s.sin_coef)
        if (c != 0.0) return false;
    return true;
}

Vec2 mirror_point(const Shape2D& s, const Vec2& x) {
    Vec2 p = to_local(s, x);
    p.y() = -p.y();
    return to_global(s, p);
}

void gauss_legendre(int n, VecX& x, VecX& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

VolumeQuadrature build_volume_quadrature(const Shape2D& s, int resolution) {
    if (resolution < 4) throw InvalidArgument("volume quadrature: resolution must be >= 4");
    return build_volume_quadrature(s, std::max(2, resolution / 2), 2 * resolution);
}

VolumeQuadrature build_volume_quadrature(const Shape2D& s, int n_r, int n_theta) {
    validate_shape(s);
    if (n_r < 2 || n_theta < 4 || n_theta % 2 != 0)
        throw InvalidArgument("volume quadrature: need n_r >= 2 and even n_theta >= 4");
    VecX gx, gw;
    gauss_legendre(n_r, gx, gw);
    VolumeQuadrature q;
    q.n_r = n_r;
    q.n_theta = n_theta;
    q.resolution = n_theta / 2;
    q.nodes.resize(n_r * n_theta, 2);
    q.weights.resize(n_r * n_theta);
    const double dth = 2 * pi / n_theta;
    for (int j = 0; j < n_theta; ++j) {
        const double th = (j + 0.5) * dth;
        const double rb = polar_radius(s, th);
        const Vec2 e(std::cos(th), std::sin(th));
        for (int i = 0; i < n_r; ++i) {
            const double sr = 0.5 * (gx[i] + 1.0);
            const int idx = i * n_theta + j;
            q.nodes.row(idx) = to_global(s, sr * rb * e).transpose();
            q.weights[idx] = 0.5 * gw[i] * sr * rb * rb * dth;
        }
    }
    if (has_mirror_symmetry(s)) {
        q.mirror.resize(n_r * n_theta);
        for (int i = 0; i < n_r; ++i)
            for (int j = 0; j < n_theta; ++j) q.mirror[i * n_theta + j] = i * n_theta + (n_theta - 1 - j);
    }
    q.spacing = std::sqrt(area(s) / double(n_r * n_theta));
    return q;
}

double integrate(const VolumeQuadrature& q, const std::function<double(const Vec2&)>& f) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) acc += q.weights[i] * f(q.node(i));
    return acc;
}

BoundaryQuadrature build_boundary_quadrature(const Shape2D& s, int n) {
    validate_shape(s);
    if (n < 16 || n % 2 != 0) throw InvalidArgument("boundary quadrature: n must be even and >= 16");
    BoundaryQuadrature b;
    b.nodes.resize(n, 2);
    b.normals.resize(n, 2);
    b.weights.resize(n);
    b.curvature.resize(n);
    b.param.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = 2 * pi * i / n;
        const Vec2 x = boundary_point(s, t), d1 = boundary_tangent(s, t), d2 = boundary_second(s, t);
        const double sp = d1.norm();
        if (sp < 1e-12) throw InvalidArgument("boundary quadrature: degenerate parametrization");
        b.param[i] = t;
        b.nodes.row(i) = x.transpose();
        b.normals.row(i) = Vec2(d1.y() / sp, -d1.x() / sp).transpose();
        b.weights[i] = sp * 2 * pi / n;
        b.curvature[i] = (d1.x() * d2.y() - d1.y() * d2.x()) / (sp * sp * sp);
    }
    return b;
}

std::string shape_hash(const Shape2D& s, int resolution) {
    std::string canon = to_string(s.kind);
    char buf[64];
    auto add = [&](double v) {
        // round to 12 significant digits so that representation noise does not alter the key
        std::snprintf(buf, sizeof buf, ";%.12e", v == 0.0 ? 0.0 : v);
        canon += buf;
    };
    add(s.a);
    add(s.b);
    add(s.r0);
    canon += ";c";
    for (double c : s.cos_coef) add(c);
    canon += ";s";
    for (double c : s.sin_coef) add(c);
    add(s.center.x());
    add(s.center.y());
    add(s.rotation);
    canon += ";res=" + std::to_string(resolution);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::snprintf(buf, sizeof buf, "%s-r%d-%016llx", to_string(s.kind), resolution,
                  static_cast<unsigned long long>(h));
    return buf;
}

RaySegments ray_segments(const Shape2D& s, const Vec2& x, const Vec2& dir) {
    if (s.kind != ShapeKind::star) return conic_segments(s, x, dir);
    return StarCaster(s).cast(x, dir);
}

AngularRule build_angular_rule(const Shape2D& s, const Vec2& x, double tol) {
    constexpr int gl_n = 16;
    static const auto gl = [] {
        VecX gx, gw;
        gauss_legendre(gl_n, gx, gw);
        return std::make_pair(gx, gw);
    }();
    std::unique_ptr<StarCaster> caster;
    if (s.kind == ShapeKind::star) caster = std::make_unique<StarCaster>(s);
    auto cast = [&](double th) {
        const Vec2 d(std::cos(th), std::sin(th));
        return caster ? caster->cast(x, d) : conic_segments(s, x, d);
    };

    struct Panel {
        double lo, hi;
        Moments m;
        std::vector<RaySegments> rays;
    };
    auto eval_panel = [&](double lo, double hi) {
        Panel p{lo, hi, {}, {}};
        p.rays.reserve(gl_n);
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (int i = 0; i < gl_n; ++i) {
            p.rays.push_back(cast(mid + half * gl.first[i]));
            const Moments m = ray_moments(p.rays.back());
            const double w = half * gl.second[i];
            p.m.area += w * m.area;
            p.m.length += w * m.length;
            p.m.plog += w * m.plog;
        }
        return p;
    };

    const double scale_len = max_polar_radius(s);
    const double scale_area = scale_len * scale_len;
    AngularRule rule;
    rule.offset.push_back(0);
    auto emit = [&](const Panel& p) {
        const double half = 0.5 * (p.hi - p.lo), mid = 0.5 * (p.hi + p.lo);
        for (int i = 0; i < gl_n; ++i) {
            rule.theta.push_back(mid + half * gl.first[i]);
            rule.weight.push_back(half * gl.second[i]);
            const RaySegments& r = p.rays[i];
            for (int k = 0; k < r.count; ++k) {
                rule.t_in.push_back(r.t_in[k]);
                rule.t_out.push_back(r.t_out[k]);
            }
            rule.offset.push_back(int(rule.t_in.size()));
        }
    };

    // depth-first refinement keeps the emitted angles sorted
    std::vector<std::pair<Panel, int>> stack;
    const int n0 = 8;
    for (int i = n0 - 1; i >= 0; --i) stack.push_back({eval_panel(2 * pi * i / n0, 2 * pi * (i + 1) / n0), 0});
    while (!stack.empty()) {
        auto [p, depth] = std::move(stack.back());
        stack.pop_back();
        const double mid = 0.5 * (p.lo + p.hi);
        Panel left = eval_panel(p.lo, mid), right = eval_panel(mid, p.hi);
        const double ea = std::abs(left.m.area + right.m.area - p.m.area) / scale_area;
        const double el = std::abs(left.m.length + right.m.length - p.m.length) / scale_len;
        const double ep = std::abs(left.m.plog + right.m.plog - p.m.plog) / scale_area;
        if (std::max({ea, el, ep}) <= tol || depth >= 40) {
            emit(left);
            emit(right);
        } else {
            stack.push_back({std::move(right), depth + 1});
            stack.push_back({std::move(left), depth + 1});
        }
    }
    return rule;
}

}  // namespace cavshift
