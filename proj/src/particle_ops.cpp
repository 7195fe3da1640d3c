#include "cavshift/particle_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "cavshift/cavity_spectrum.hpp"
#include "cavshift/errors.hpp"

namespace cavshift {

void validate_particle(const ParticleConfig& p, const Shape2D& cavity) {
    validate_shape(p.shape);
    if (!(p.delta > 0.0) || !std::isfinite(p.delta)) throw InvalidArgument("particle: delta must be positive");
    if (!p.drude && !(p.mu_c > 0.0)) throw InvalidArgument("particle: mu_c must be positive");
    if (p.drude && !(p.drude->omega_p > 0.0)) throw InvalidArgument("particle: omega_p must be positive");
    const double size = p.delta * diameter(p.shape);
    const bool inside = contains(cavity, p.z);
    const double dist = boundary_distance(cavity, p.z);
    if (p.position == ParticlePosition::internal) {
        if (!inside || dist < size)
            throw InvalidArgument("particle: internal particle must sit inside the cavity at distance >= its diameter");
    } else {
        if (inside || dist < size)
            throw InvalidArgument("particle: external particle must sit outside the cavity at distance >= its diameter");
    }
}

NPOperator assemble_np(const Shape2D& b, const BoundaryQuadrature& bq) {
    validate_shape(b);
    const Eigen::Index n = bq.size();
    NPOperator np{MatX(n, n), bq};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec2 x = bq.nodes.row(i).transpose();
        const Vec2 nu = bq.normals.row(i).transpose();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) {
                np.k(i, j) = bq.curvature[i] / (4 * pi) * bq.weights[j];
                continue;
            }
            const Vec2 d = x - bq.nodes.row(j).transpose();
            np.k(i, j) = d.dot(nu) / (2 * pi * d.squaredNorm()) * bq.weights[j];
        }
    }
    return np;
}

NPOperator assemble_np(const Shape2D& b, int n) { return assemble_np(b, build_boundary_quadrature(b, n)); }

MatX single_layer(const Shape2D& b, const BoundaryQuadrature& bq) {
    const Eigen::Index n = bq.size();
    const Eigen::Index half = n / 2;
    VecX speed(n);
    for (Eigen::Index j = 0; j < n; ++j) speed[j] = boundary_tangent(b, bq.param[j]).norm();
    // log-kernel weights R_j(t_i) depend on i - j only
    VecX r(n);
    for (Eigen::Index d = 0; d < n; ++d) {
        const double s = 2 * pi * d / n;
        double acc = 0.0;
        for (Eigen::Index m = 1; m < half; ++m) acc += std::cos(m * s) / m;
        r[d] = -(2 * pi / half) * acc - pi / (double(half) * half) * std::cos(half * s);
    }
    MatX s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec2 x = bq.nodes.row(i).transpose();
        for (Eigen::Index j = 0; j < n; ++j) {
            double l2;
            if (i == j) {
                l2 = std::log(speed[i]);
            } else {
                const double dt = bq.param[i] - bq.param[j];
                const double dist = (x - bq.nodes.row(j).transpose()).norm();
                l2 = std::log(dist) - 0.5 * std::log(4 * std::pow(std::sin(dt / 2), 2));
            }
            const double rij = r[(i - j + n) % n];
            s(i, j) = (0.5 * rij + (pi / half) * l2) * speed[j] / (2 * pi);
        }
    }
    return s;
}

VecX np_eigenvalues(const NPOperator& np) {
    Eigen::EigenSolver<MatX> es(np.k, false);
    VecX ev = es.eigenvalues().real();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    return ev;
}

template <class Scalar>
Eigen::Matrix<Scalar, 2, 2> polarization_tensor(const NPOperator& np, Scalar k) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::Matrix<Scalar, 2, 2> m = Eigen::Matrix<Scalar, 2, 2>::Zero();
    if (k == Scalar(1)) return m;
    if (!std::isfinite(std::abs(k)) || k == Scalar(0)) throw InvalidArgument("polarization tensor: contrast must be finite and nonzero");
    const Scalar lambda = np_lambda(k);
    const Eigen::Index n = np.bq.size();
    Mat a = -np.k.template cast<Scalar>();
    a.diagonal().array() += lambda;
    Eigen::PartialPivLU<Mat> lu(a);
    if (lu.rcond() < 1e-13) throw DomainError("polarization tensor: contrast is at an NP eigenvalue");
    Mat rhs = np.bq.normals.template cast<Scalar>();
    const Mat x = lu.solve(rhs);
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            Scalar acc = 0;
            for (Eigen::Index i = 0; i < n; ++i) acc += np.bq.weights[i] * np.bq.nodes(i, p) * x(i, q);
            m(p, q) = acc;
        }
    return m;
}

template Eigen::Matrix<double, 2, 2> polarization_tensor<double>(const NPOperator&, double);
template Eigen::Matrix<cplx, 2, 2> polarization_tensor<cplx>(const NPOperator&, cplx);

Mat2 polarization_tensor(const Shape2D& b, int n, double k) { return polarization_tensor(assemble_np(b, n), k); }

VecX WSpectrum::normal_trace(int j) const { return (np[j] - 0.5) * psi.col(j); }

WSpectrum w_spectrum(const Shape2D& b, const BoundaryQuadrature& bq, int count) {
    const Eigen::Index n = bq.size();
    if (count < 1 || count > n - 1) throw InvalidArgument("w_spectrum: count out of range");
    const NPOperator np = assemble_np(b, bq);
    const MatX s = single_layer(b, bq);
    // orthonormal basis of mean-zero densities
    Eigen::HouseholderQR<MatX> qr(bq.weights);
    const MatX q = MatX(qr.householderQ()).rightCols(n - 1);
    const MatX ws = bq.weights.asDiagonal() * s;
    MatX gram = -q.transpose() * ws * q;
    MatX op = -q.transpose() * ws * np.k * q;
    gram = 0.5 * (gram + gram.transpose()).eval();
    op = 0.5 * (op + op.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(op, gram);
    if (es.info() != Eigen::Success) throw ConvergenceError("w_spectrum: eigensolver failed");
    const VecX ev = es.eigenvalues();
    std::vector<Eigen::Index> order(ev.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        const double ai = std::abs(ev[i]), aj = std::abs(ev[j]);
        if (std::abs(ai - aj) > 1e-12) return ai > aj;
        return ev[i] > ev[j];
    });
    WSpectrum w;
    w.bq = bq;
    w.shape = b;
    w.lambda.resize(count);
    w.np.resize(count);
    w.raw_norm2.resize(count);
    w.psi.resize(n, count);
    for (int c = 0; c < count; ++c) {
        const Eigen::Index i = order[c];
        VecX psi = q * es.eigenvectors().col(i);  // -int S[psi] psi = 1
        const Eigen::Index imax = [&] {
            Eigen::Index k;
            psi.cwiseAbs().maxCoeff(&k);
            return k;
        }();
        if (psi[imax] < 0) psi = -psi;
        w.np[c] = ev[i];
        w.lambda[c] = 0.5 + ev[i];
        w.raw_norm2[c] = 0.5 - ev[i];
        w.psi.col(c) = psi / std::sqrt(w.raw_norm2[c]);
    }
    return w;
}

std::vector<std::vector<int>> w_clusters(const WSpectrum& s, double tol) {
    std::vector<std::vector<int>> out;
    for (int j = 0; j < s.lambda.size(); ++j) {
        bool placed = false;
        for (auto& c : out)
            if (std::abs(s.lambda[c.front()] - s.lambda[j]) <= tol) {
                c.push_back(j);
                placed = true;
                break;
            }
        if (!placed) out.push_back({j});
    }
    return out;
}

cplx drude_mu(cplx omega, const DrudeParams& p) {
    if (omega == 0.0) throw DomainError("drude: omega = 0");
    return p.mu_m * (1.0 - p.omega_p * p.omega_p / (omega * omega));
}

cplx drude_lambda(cplx omega, const DrudeParams& p) { return omega * omega / (p.omega_p * p.omega_p) - 1.0; }

cplx drude_lambda_deriv(cplx omega, const DrudeParams& p) { return 2.0 * omega / (p.omega_p * p.omega_p); }

std::vector<cplx> coupling_coefficients(const std::function<cplx(const Vec2&)>& field, const ParticleConfig& particle,
                                        const WSpectrum& spec) {
    const Eigen::Index n = spec.bq.size();
    VecXc ev(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec2 xi = spec.bq.nodes.row(i).transpose();
        ev[i] = field(particle.z + particle.delta * xi);
    }
    std::vector<cplx> out(spec.lambda.size());
    for (int j = 0; j < spec.lambda.size(); ++j) {
        const VecX tr = spec.normal_trace(j);
        out[j] = (ev.array() * (spec.bq.weights.array() * tr.array()).cast<cplx>()).sum();
    }
    return out;
}

std::vector<cplx> coupling_coefficients(const ResonanceRecord& rec, const ParticleConfig& particle,
                                        const WSpectrum& spec) {
    if (particle.position != ParticlePosition::internal)
        throw InvalidArgument("coupling coefficients: the mode is only defined for internal particles");
    validate_particle(particle, rec.model->config().shape);
    return coupling_coefficients([&](const Vec2& x) { return mode_value_and_gradient(rec, x).value; }, particle, spec);
}

namespace {

// Trigonometric resampling of periodic nodal values onto m equispaced nodes.
VecX trig_resample(const VecX& f, Eigen::Index m) {
    const Eigen::Index n = f.size();
    const Eigen::Index half = n / 2;
    VecX a(half + 1), b(half + 1);
    for (Eigen::Index k = 0; k <= half; ++k) {
        double ca = 0, sb = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double t = 2 * pi * j / n;
            ca += f[j] * std::cos(k * t);
            sb += f[j] * std::sin(k * t);
        }
        a[k] = 2 * ca / n;
        b[k] = 2 * sb / n;
    }
    VecX g(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double t = 2 * pi * i / m;
        double v = a[0] / 2 + a[half] / 2 * std::cos(half * t);
        for (Eigen::Index k = 1; k < half; ++k) v += a[k] * std::cos(k * t) + b[k] * std::sin(k * t);
        g[i] = v;
    }
    return g;
}

}  // namespace

Vec2 single_layer_gradient(const BoundaryQuadrature& bq, const VecX& psi, const Vec2& x) {
    Vec2 g = Vec2::Zero();
    for (Eigen::Index j = 0; j < bq.size(); ++j) {
        const Vec2 d = x - bq.nodes.row(j).transpose();
        g += bq.weights[j] * psi[j] / (2 * pi * d.squaredNorm()) * d;
    }
    return g;
}

std::vector<cplx> coupling_coefficients_volume(const std::function<Vec2c(const Vec2&)>& grad_field,
                                               const ParticleConfig& particle, const WSpectrum& spec,
                                               int resolution) {
    const VolumeQuadrature vq = build_volume_quadrature(spec.shape, resolution);
    double dmin = 1e300;
    for (Eigen::Index i = 0; i < vq.size(); ++i) dmin = std::min(dmin, boundary_distance(spec.shape, vq.node(i)));
    double perim = spec.bq.weights.sum();
    Eigen::Index m = static_cast<Eigen::Index>(std::ceil(6.0 * perim / dmin));
    m = std::max<Eigen::Index>(spec.bq.size(), m + (m % 2));
    const BoundaryQuadrature fine = build_boundary_quadrature(spec.shape, static_cast<int>(m));
    std::vector<cplx> out(spec.lambda.size());
    for (int j = 0; j < spec.lambda.size(); ++j) {
        const VecX psi = trig_resample(spec.psi.col(j), m);
        cplx acc = 0;
        for (Eigen::Index i = 0; i < vq.size(); ++i) {
            const Vec2 xi = vq.node(i);
            const Vec2 phi = single_layer_gradient(fine, psi, xi);
            const Vec2c ge = grad_field(particle.z + particle.delta * xi);
            acc += vq.weights[i] * (ge[0] * phi[0] + ge[1] * phi[1]);
        }
        out[j] = particle.delta * acc;
    }
    return out;
}

}  // namespace cavshift
