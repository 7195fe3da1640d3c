#include "cavshift/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "cavshift/parallel.hpp"
#include "cavshift/special_functions.hpp"

namespace cavshift {

// ================================================================ concentric layers

void validate_stack(const RadialLayerStack& s) {
    if (s.radii.empty()) throw InvalidArgument("layer stack: no interfaces");
    if (s.layers.size() != s.radii.size()) throw InvalidArgument("layer stack: one layer per radius required");
    if (s.order < 0) throw InvalidArgument("layer stack: negative angular order");
    for (std::size_t i = 0; i < s.radii.size(); ++i) {
        if (!(s.radii[i] > 0.0)) throw InvalidArgument("layer stack: radii must be positive");
        if (i > 0 && !(s.radii[i] > s.radii[i - 1])) throw InvalidArgument("layer stack: radii must increase");
        if (!(s.layers[i].eps > 0.0) || !(s.layers[i].mu > 0.0))
            throw InvalidArgument("layer stack: material constants must be positive");
    }
    if (!(s.outer.eps > 0.0) || !(s.outer.mu > 0.0)) throw InvalidArgument("layer stack: outer medium must be positive");
}

RadialLayerStack cavity_stack(const CavityConfig& cfg, double radius, int order) {
    RadialLayerStack s;
    s.radii = {radius};
    s.layers = {{cfg.tau * cfg.eps_c + cfg.eps_m, cfg.mu_m}};
    s.outer = cfg.background();
    s.order = order;
    return s;
}

RadialLayerStack particle_stack(const CavityConfig& cfg, double radius, double delta_r, double mu_c, int order) {
    RadialLayerStack s;
    const double eps_in = cfg.tau * cfg.eps_c + cfg.eps_m;
    s.radii = {delta_r, radius};
    s.layers = {{eps_in, mu_c}, {eps_in, cfg.mu_m}};
    s.outer = cfg.background();
    s.order = order;
    return s;
}

namespace {

struct LayerMatrices {
    MatXc m, dm;  // matching matrix and its omega derivative
};

// J_n'' and H_n'' from Bessel's equation.
cplx second_deriv(int n, cplx z, cplx f, cplx fp) { return -fp / z - (1.0 - double(n * n) / (z * z)) * f; }

LayerMatrices layer_matrices(const RadialLayerStack& s, cplx omega, bool with_derivative) {
    const int nl = static_cast<int>(s.radii.size());
    const int n = s.order;
    const int dim = 2 * nl;
    LayerMatrices out{MatXc::Zero(dim, dim), with_derivative ? MatXc::Zero(dim, dim) : MatXc()};
    auto medium = [&](int layer) -> std::pair<double, double> {
        if (layer == nl) return {s.outer.eps, s.outer.mu};
        return {s.layers[layer].eps, s.layers[layer].mu};
    };
    auto col_j = [&](int layer) { return layer == 0 ? 0 : 2 * layer - 1; };
    auto col_h = [&](int layer) { return layer == nl ? 2 * nl - 1 : 2 * layer; };
    for (int i = 0; i < nl; ++i) {
        const double r = s.radii[i];
        for (int side = 0; side < 2; ++side) {
            const int layer = i + side;
            const double sign = side == 0 ? 1.0 : -1.0;
            const auto [eps, mu] = medium(layer);
            const double speed = std::sqrt(eps * mu);
            const cplx k = omega * speed;
            const cplx z = k * r;
            auto fill = [&](int col, cplx f, cplx fp) {
                out.m(2 * i, col) = sign * f;
                out.m(2 * i + 1, col) = sign * k / mu * fp;
                if (with_derivative) {
                    const cplx fpp = second_deriv(n, z, f, fp);
                    out.dm(2 * i, col) = sign * speed * r * fp;
                    out.dm(2 * i + 1, col) = sign * speed / mu * (fp + z * fpp);
                }
            };
            if (layer < nl) fill(col_j(layer), bessel_j(n, z), bessel_j_deriv(n, z));
            if (layer > 0) fill(col_h(layer), hankel1(n, z), hankel1_deriv(n, z));
        }
    }
    return out;
}

// Analytic scaled determinant with constant column factors.
struct ScaledDet {
    const RadialLayerStack& s;
    VecX scale;

    ScaledDet(const RadialLayerStack& st, cplx ref) : s(st) {
        const MatXc m = layer_matrices(s, ref, false).m;
        scale.resize(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double c = m.col(j).cwiseAbs().maxCoeff();
            scale[j] = c > 0.0 ? 1.0 / c : 1.0;
        }
    }

    cplx operator()(cplx omega) const {
        const MatXc m = layer_matrices(s, omega, false).m * scale.asDiagonal();
        return Eigen::PartialPivLU<MatXc>(m).determinant();
    }

    // Newton step det/det' via det'/det = tr(M^{-1} M').
    cplx newton_step(cplx omega) const {
        const LayerMatrices lm = layer_matrices(s, omega, true);
        Eigen::PartialPivLU<MatXc> lu(lm.m);
        const cplx tr = lu.solve(lm.dm).trace();
        return 1.0 / tr;
    }
};

double arg_step(cplx fb, cplx fa) { return std::arg(fb / fa); }

double arg_change(const ScaledDet& f, cplx a, cplx b, cplx fa, cplx fb, int depth) {
    if (fa == 0.0 || fb == 0.0) throw ConvergenceError("argument principle: zero on the contour");
    const cplx m = 0.5 * (a + b);
    const cplx fm = f(m);
    if (fm == 0.0) throw ConvergenceError("argument principle: zero on the contour");
    const double d1 = arg_step(fm, fa), d2 = arg_step(fb, fm), d = arg_step(fb, fa);
    if (std::abs(d1) < pi / 6 && std::abs(d2) < pi / 6 && std::abs(d1 + d2 - d) < 1e-6) return d1 + d2;
    if (depth > 48) throw ConvergenceError("argument principle: contour passes too close to a zero");
    return arg_change(f, a, m, fa, fm, depth + 1) + arg_change(f, m, b, fm, fb, depth + 1);
}

int winding(const ScaledDet& f, cplx lo, cplx hi) {
    const cplx corners[4] = {lo, cplx(hi.real(), lo.imag()), hi, cplx(lo.real(), hi.imag())};
    double total = 0.0;
    const int pieces = 16;
    for (int side = 0; side < 4; ++side) {
        const cplx a = corners[side], b = corners[(side + 1) % 4];
        cplx prev = a, fprev = f(a);
        for (int p = 1; p <= pieces; ++p) {
            const cplx next = a + (b - a) * (double(p) / pieces);
            const cplx fnext = f(next);
            total += arg_change(f, prev, next, fprev, fnext, 0);
            prev = next;
            fprev = fnext;
        }
    }
    const double w = total / (2 * pi);
    const long r = std::lround(w);
    if (std::abs(w - r) > 1e-3) throw ConvergenceError("argument principle: non-integer winding");
    return static_cast<int>(r);
}

bool newton_polish(const ScaledDet& f, cplx& omega) {
    for (int it = 0; it < 60; ++it) {
        const cplx step = f.newton_step(omega);
        if (!std::isfinite(std::abs(step))) return false;
        omega -= step;
        if (std::abs(step) <= 4e-16 * std::abs(omega)) return true;
    }
    return false;
}

bool inside(cplx w, cplx lo, cplx hi, double slack) {
    return w.real() >= lo.real() - slack && w.real() <= hi.real() + slack && w.imag() >= lo.imag() - slack &&
           w.imag() <= hi.imag() + slack;
}

void solve_box(const ScaledDet& f, cplx lo, cplx hi, int count, std::vector<cplx>& out, int depth) {
    if (count == 0) return;
    const double width = hi.real() - lo.real(), height = hi.imag() - lo.imag();
    if (count == 1) {
        cplx w = 0.5 * (lo + hi);
        if (newton_polish(f, w) && inside(w, lo, hi, 1e-12 * std::abs(w))) {
            out.push_back(w);
            return;
        }
    }
    if (depth > 60) throw ConvergenceError("multilayer: root isolation failed (clustered roots)");
    // slightly off-center cuts keep roots away from the split line in symmetric configurations
    for (double frac : {0.5123, 0.4711, 0.5379}) {
        cplx lo1 = lo, hi1 = hi, lo2 = lo, hi2 = hi;
        if (width >= height) {
            const double cut = lo.real() + frac * width;
            hi1 = cplx(cut, hi.imag());
            lo2 = cplx(cut, lo.imag());
        } else {
            const double cut = lo.imag() + frac * height;
            hi1 = cplx(hi.real(), cut);
            lo2 = cplx(lo.real(), cut);
        }
        int c1, c2;
        try {
            c1 = winding(f, lo1, hi1);
            c2 = winding(f, lo2, hi2);
        } catch (const ConvergenceError&) {
            continue;
        }
        if (c1 + c2 != count) continue;
        solve_box(f, lo1, hi1, c1, out, depth + 1);
        solve_box(f, lo2, hi2, c2, out, depth + 1);
        return;
    }
    throw ConvergenceError("multilayer: could not split the search window");
}

void check_window(const SearchWindow& w) {
    if (!(w.hi.real() > w.lo.real()) || !(w.hi.imag() > w.lo.imag()))
        throw InvalidArgument("search window: empty rectangle");
    if (!(w.lo.real() > 0.0)) throw InvalidArgument("search window: must lie in Re omega > 0");
}

}  // namespace

MatXc multilayer_matrix(const RadialLayerStack& s, cplx omega) {
    validate_stack(s);
    return layer_matrices(s, omega, false).m;
}

cplx multilayer_determinant(const RadialLayerStack& s, cplx omega) {
    return Eigen::PartialPivLU<MatXc>(multilayer_matrix(s, omega)).determinant();
}

double multilayer_residual(const RadialLayerStack& s, cplx omega) {
    MatXc m = multilayer_matrix(s, omega);
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) /= m.col(j).norm();
    Eigen::JacobiSVD<MatXc> svd(m);
    const VecX sv = svd.singularValues();
    return sv[sv.size() - 1] / sv[0];
}

int multilayer_winding(const RadialLayerStack& s, const SearchWindow& w) {
    validate_stack(s);
    check_window(w);
    const ScaledDet f(s, 0.5 * (w.lo + w.hi));
    return winding(f, w.lo, w.hi);
}

MultilayerRoots multilayer_disk_resonances(const RadialLayerStack& s, const SearchWindow& w) {
    validate_stack(s);
    check_window(w);
    const ScaledDet f(s, 0.5 * (w.lo + w.hi));
    MultilayerRoots out;
    out.winding = winding(f, w.lo, w.hi);
    solve_box(f, w.lo, w.hi, out.winding, out.roots, 0);
    std::sort(out.roots.begin(), out.roots.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    if (static_cast<int>(out.roots.size()) != out.winding)
        throw ConvergenceError("multilayer: root count differs from the winding number");
    for (const cplx& r : out.roots) out.residuals.push_back(multilayer_residual(s, r));
    return out;
}

cplx multilayer_root_near(const RadialLayerStack& s, cplx guess, double half_width) {
    const SearchWindow w{guess - cplx(half_width, half_width), guess + cplx(half_width, half_width)};
    const MultilayerRoots r = multilayer_disk_resonances(s, w);
    if (r.roots.empty()) throw ConvergenceError("multilayer: no root near the guess");
    return *std::min_element(r.roots.begin(), r.roots.end(),
                             [&](cplx a, cplx b) { return std::abs(a - guess) < std::abs(b - guess); });
}

cplx radial_k_eigenvalue(double radius, cplx k, int order, cplx lambda_guess) {
    if (lambda_guess == 0.0) throw InvalidArgument("radial eigenvalue: zero guess");
    const int n = order;
    const cplx hk = hankel1(n, k * radius), hkp = hankel1_deriv(n, k * radius);
    auto f = [&](cplx kap, cplx* df) {
        const cplx z = kap * radius;
        const cplx j = bessel_j(n, z), jp = bessel_j_deriv(n, z);
        const cplx jpp = second_deriv(n, z, j, jp);
        *df = jp * hk + kap * radius * jpp * hk - k * radius * jp * hkp;
        return kap * jp * hk - k * j * hkp;
    };
    cplx kap = std::sqrt(k * k + 1.0 / lambda_guess);
    for (int it = 0; it < 60; ++it) {
        cplx df;
        const cplx v = f(kap, &df);
        const cplx step = v / df;
        kap -= step;
        if (std::abs(step) <= 1e-15 * std::abs(kap)) return 1.0 / (kap * kap - k * k);
    }
    throw ConvergenceError("radial eigenvalue: Newton did not converge");
}

// ================================================================ coupled solver

namespace {

const Mat2 reflect = (Mat2() << 1.0, 0.0, 0.0, -1.0).finished();

// Static PV self term (1/2pi) int (I - 2 dd^T) log P(theta) dtheta from an angular rule.
Mat2 static_pv(const AngularRule& rule) {
    Mat2 acc = Mat2::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec2 d(std::cos(rule.theta[q]), std::sin(rule.theta[q]));
        double l = 0.0;
        for (int s = rule.offset[q]; s < rule.offset[q + 1]; ++s) {
            l += std::log(rule.t_out[s]);
            if (rule.t_in[s] > 0.0) l -= std::log(rule.t_in[s]);
        }
        acc += rule.weight[q] * l * (Mat2::Identity() - 2.0 * d * d.transpose());
    }
    return acc / (2 * pi);
}

Mat2 static_hessian(const Vec2& x, const Vec2& y) {
    const Vec2 r = x - y;
    const double rr = r.squaredNorm();
    const Vec2 d = r / std::sqrt(rr);
    return (Mat2::Identity() - 2.0 * d * d.transpose()) / (2 * pi * rr);
}

}  // namespace

CoupledSystem::CoupledSystem(std::shared_ptr<const CavityModel> model, ParticleConfig particle, Sector sector,
                             int particle_resolution)
    : model_(std::move(model)), particle_(std::move(particle)), sector_(sector) {
    const Shape2D& cavity = model_->config().shape;
    validate_particle(particle_, cavity);
    if (particle_resolution < 8) throw InvalidArgument("coupled solver: particle resolution must be >= 8");
    internal_ = particle_.position == ParticlePosition::internal;
    const Shape2D dshape = particle_.actual_shape();
    dq_ = build_volume_quadrature(dshape, particle_resolution);
    const Eigen::Index nd = dq_.size();

    if (sector_ != Sector::none) {
        const bool axis_ok = std::fmod(std::abs(cavity.rotation), pi) == 0.0 && dshape.rotation == 0.0 &&
                             dshape.center.y() == cavity.center.y() && !dq_.mirror.empty() &&
                             has_mirror_symmetry(cavity);
        if (!axis_ok) throw InvalidArgument("coupled solver: symmetry sectors need the particle on the mirror axis");
        for (Eigen::Index i = 0; i < nd; ++i)
            if (dq_.nodes(i, 1) > dshape.center.y()) {
                d_active_.push_back(static_cast<int>(i));
                d_mirror_.push_back(dq_.mirror[i]);
            }
    } else {
        for (Eigen::Index i = 0; i < nd; ++i) {
            d_active_.push_back(static_cast<int>(i));
            d_mirror_.push_back(-1);
        }
    }
    omega_active_ = model_->active(sector_);
    model_->prepare(sector_);

    d_rules_.reserve(d_active_.size());
    for (int p : d_active_) d_rules_.push_back(build_angular_rule(dshape, dq_.node(p)));
    if (internal_) {
        for (int p : d_active_) cavity_rules_.push_back(build_angular_rule(cavity, dq_.node(p)));
        cavity_rule_z_ = build_angular_rule(cavity, particle_.z);
        taylor_unknowns_ = sector_ == Sector::none ? 3 : (sector_ == Sector::even ? 2 : 1);
        const auto& q = model_->quad();
        for (Eigen::Index l = 0; l < q.size(); ++l)
            if ((q.node(l) - particle_.z).norm() < 1e-10)
                throw InvalidArgument("coupled solver: particle center coincides with a cavity node");
    }
}

Eigen::Index CoupledSystem::size() const { return cavity_size() + particle_size() + taylor_unknowns_; }

cplx CoupledSystem::beta(cplx omega) const {
    const double mu_m = model_->config().mu_m;
    const cplx mu_c = particle_.drude ? drude_mu(omega, *particle_.drude) : cplx(particle_.mu_c);
    return mu_m / mu_c - 1.0;
}

VecXc CoupledSystem::restrict_cavity(const VecXc& full) const {
    VecXc r(cavity_size());
    for (std::size_t a = 0; a < omega_active_.size(); ++a) r[a] = full[omega_active_[a]];
    return r;
}

MatXc CoupledSystem::assemble(cplx omega) const {
    const CavityConfig& cfg = model_->config();
    const auto& q = model_->quad();
    const Medium med = cfg.background();
    const cplx k = wavenumber(omega, med);
    const cplx alpha = cfg.alpha(omega);
    const cplx b = beta(omega);
    const double s = sector_ == Sector::odd ? -1.0 : 1.0;
    const Eigen::Index na = cavity_size(), nv = particle_size(), n = size();
    const Eigen::Index nd_full = dq_.size();

    // full-grid index -> (reduced index, mirrored)
    std::vector<std::pair<int, bool>> omap(q.size(), {-1, false}), dmap(nd_full, {-1, false});
    for (std::size_t a = 0; a < omega_active_.size(); ++a) {
        omap[omega_active_[a]] = {static_cast<int>(a), false};
        if (sector_ != Sector::none) omap[q.mirror[omega_active_[a]]] = {static_cast<int>(a), true};
    }
    for (std::size_t a = 0; a < d_active_.size(); ++a) {
        dmap[d_active_[a]] = {static_cast<int>(a), false};
        if (sector_ != Sector::none) dmap[d_mirror_[a]] = {static_cast<int>(a), true};
    }
    // Taylor unknowns: full (a, gx, gy) = sel * reduced
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(3, taylor_unknowns_);
    if (internal_) {
        if (sector_ == Sector::none) sel = Eigen::MatrixXd::Identity(3, 3);
        if (sector_ == Sector::even) sel(0, 0) = sel(1, 1) = 1.0;
        if (sector_ == Sector::odd) sel(2, 0) = 1.0;
    }
    const Eigen::Index t0 = na + nv;

    MatXc m = MatXc::Zero(n, n);
    {
        const DiscreteOperator op = assemble_k(*model_, omega, sector_);
        const VecX sw = model_->reduced_weights(sector_).cwiseSqrt();
        m.topLeftCorner(na, na) = -alpha * (sw.cwiseInverse().asDiagonal() * op.a * sw.asDiagonal());
        m.topLeftCorner(na, na).diagonal().array() += 1.0;
    }

    // cavity rows, particle columns: -beta sum_q w_q v_q . grad_y Gamma(x_m - y_q)
    parallel_for(na, model_->workers(), [&](long a) {
        const Vec2 x = q.node(omega_active_[a]);
        for (Eigen::Index qd = 0; qd < nd_full; ++qd) {
            const auto [bq, mir] = dmap[qd];
            if (bq < 0) continue;
            Vec2c gy = -grad_gamma_m(x, dq_.node(qd), omega, med);
            if (mir) gy = s * (reflect * gy);
            m.block(a, na + 2 * bq, 1, 2) += (-b * dq_.weights[qd]) * gy.transpose();
        }
    });

    // particle rows
    parallel_for(static_cast<long>(d_active_.size()), model_->workers(), [&](long bp) {
        const int p = d_active_[bp];
        const Vec2 x = dq_.node(p);
        const Eigen::Index row = na + 2 * bp;
        // cavity field gradient alpha grad K[u]
        Vec2c sum_g = Vec2c::Zero();
        Mat2c sum_gy = Mat2c::Zero();
        for (Eigen::Index l = 0; l < q.size(); ++l) {
            const auto [a, mir] = omap[l];
            const Vec2c g = q.weights[l] * grad_gamma_m(x, q.node(l), omega, med);
            if (a >= 0) m.block(row, a, 2, 1) += alpha * (mir ? s : 1.0) * g;
            if (internal_) {
                sum_g += g;
                sum_gy += g * (q.node(l) - particle_.z).cast<cplx>().transpose();
            }
        }
        if (internal_) {
            const PointPotentials pp = point_potentials(cavity_rules_[bp], k);
            Eigen::Matrix<cplx, 2, 3> t;
            t.col(0) = alpha * (pp.grad - sum_g);
            t.rightCols(2) = alpha * (pp.t + pp.grad * (x - particle_.z).cast<cplx>().transpose() - sum_gy);
            m.block(row, t0, 2, taylor_unknowns_) += t * sel.cast<cplx>();
        }
        // particle self block: v + beta N[v]
        Mat2c diag = Mat2c::Identity() + b * (hessian_potential_pv(d_rules_[bp], k) + 0.5 * Mat2c::Identity());
        for (Eigen::Index qd = 0; qd < nd_full; ++qd) {
            if (qd == p) continue;
            const Mat2c h = dq_.weights[qd] * hess_gamma_m(x, dq_.node(qd), omega, med);
            diag -= b * h;
            const auto [bq, mir] = dmap[qd];
            if (bq < 0) continue;
            m.block(row, na + 2 * bq, 2, 2) += mir ? Mat2c(b * s * h * reflect.cast<cplx>()) : Mat2c(b * h);
        }
        m.block(row, na + 2 * bp, 2, 2) += diag;
    });

    if (internal_) {
        // Taylor rows: a = alpha K[u](z), g = alpha grad K[u](z)
        const Vec2 z = particle_.z;
        const PointPotentials pz = point_potentials(cavity_rule_z_, k);
        Eigen::Matrix<cplx, 3, Eigen::Dynamic> ucoef = Eigen::Matrix<cplx, 3, Eigen::Dynamic>::Zero(3, na);
        cplx sum_w = 0.0;
        Vec2c sum_g = Vec2c::Zero();
        Mat2c bmat = Mat2c::Zero();
        for (Eigen::Index l = 0; l < q.size(); ++l) {
            const Vec2 dy = q.node(l) - z;
            const double rho = dy.norm();
            const Hankel01 h = hankel1_01(k * rho);
            const cplx gam = -0.25 * I * h.h0;
            const Vec2c grad = ((0.25 * I * k * h.h1 / rho) * (-dy)).cast<cplx>();
            const auto [a, mir] = omap[l];
            const double sg = mir ? s : 1.0;
            if (a >= 0) {
                ucoef(0, a) += alpha * sg * q.weights[l] * gam;
                ucoef.block(1, a, 2, 1) += alpha * sg * q.weights[l] * grad;
            }
            sum_w += q.weights[l] * gam;
            sum_g += q.weights[l] * grad;
            bmat += q.weights[l] * grad * dy.cast<cplx>().transpose();
        }
        Eigen::Matrix<cplx, 3, 3> tcoef = Eigen::Matrix<cplx, 3, 3>::Zero();
        tcoef(0, 0) = 1.0 - alpha * sum_w + alpha * pz.s;
        tcoef.block(1, 0, 2, 1) = alpha * (pz.grad - sum_g);
        tcoef.block(1, 1, 2, 2) = Mat2c::Identity() + alpha * (pz.t - bmat);
        const MatXc selc = sel.cast<cplx>();
        m.block(t0, 0, taylor_unknowns_, na) = selc.transpose() * ucoef;
        m.block(t0, t0, taylor_unknowns_, taylor_unknowns_) = selc.transpose() * tcoef * selc;
    }
    return m;
}

namespace {

double sigma_min_relative(const Eigen::PartialPivLU<MatXc>& lu, const MatXc& m) {
    VecXc x = VecXc::Ones(m.rows()) / std::sqrt(double(m.rows()));
    double est = 0.0;
    for (int it = 0; it < 6; ++it) {
        VecXc y = lu.solve(lu.adjoint().solve(x));
        const double ny = y.norm();
        if (ny == 0.0) break;
        est = 1.0 / std::sqrt(ny);
        x = y / ny;
    }
    return est / m.norm() * std::sqrt(double(m.rows()));
}

}  // namespace

CoupledResult coupled_perturbed_resonance(const ResonanceRecord& seed, const ParticleConfig& particle,
                                          const CoupledOptions& opt) {
    const CoupledSystem sys(seed.model, particle, seed.sector, opt.particle_resolution);
    CoupledResult res;
    res.sector = seed.sector;
    const double dmin = std::sqrt(area(particle.actual_shape()) / sys.particle_quad().size());
    if (dmin > 0.25 * particle.delta * diameter(particle.shape))
        res.warnings.push_back("particle is resolved by fewer than 8 nodes across");

    VecXc probe = VecXc::Zero(sys.size());
    probe.head(sys.cavity_size()) = sys.restrict_cavity(seed.mode);
    auto functional = [&](cplx w, Eigen::PartialPivLU<MatXc>* keep, MatXc* mat) {
        MatXc mm = sys.assemble(w);
        Eigen::PartialPivLU<MatXc> lu(mm);
        const cplx v = probe.transpose() * lu.solve(probe);
        if (keep) *keep = lu;
        if (mat) *mat = std::move(mm);
        return 1.0 / v;
    };

    // secant iteration on 1/(p^T M^{-1} p), which vanishes linearly at the perturbed resonance
    cplx w0 = seed.omega0, w1 = seed.omega0 * (1.0 + 1e-4);
    cplx f0 = functional(w0, nullptr, nullptr), f1 = functional(w1, nullptr, nullptr);
    bool converged = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it + 1;
        if (f1 == f0) break;
        const cplx w2 = w1 - f1 * (w1 - w0) / (f1 - f0);
        w0 = w1;
        f0 = f1;
        w1 = w2;
        if (std::abs(w1 - w0) <= opt.tol * std::abs(w1)) {
            converged = true;
            break;
        }
        f1 = functional(w1, nullptr, nullptr);
    }
    if (!converged) throw ConvergenceError("coupled solver: secant iteration did not converge");

    auto sigma_at = [&](cplx w) {
        Eigen::PartialPivLU<MatXc> lu;
        MatXc mm;
        functional(w, &lu, &mm);
        return sigma_min_relative(lu, mm);
    };
    if (opt.golden_polish) {
        // golden-section on sigma_min along the real and imaginary directions
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
            double lo = -1e-7 * std::abs(w1), hi = 1e-7 * std::abs(w1);
            double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
            double fc = sigma_at(w1 + c * dir), fd = sigma_at(w1 + d * dir);
            while (hi - lo > 1e-9 * std::abs(w1) * 1e-3) {
                if (fc < fd) {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = sigma_at(w1 + c * dir);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = sigma_at(w1 + d * dir);
                }
            }
            w1 += 0.5 * (lo + hi) * dir;
        }
    }
    res.omega = w1;
    res.sigma_min = sigma_at(w1);
    return res;
}

MatX static_particle_operator(const VolumeQuadrature& dq, const Shape2D& shape) {
    const Eigen::Index n = dq.size();
    MatX op = MatX::Zero(2 * n, 2 * n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const Vec2 x = dq.node(p);
        Mat2 diag = static_pv(build_angular_rule(shape, x)) + 0.5 * Mat2::Identity();
        for (Eigen::Index qd = 0; qd < n; ++qd) {
            if (qd == p) continue;
            const Mat2 h = dq.weights[qd] * static_hessian(x, dq.node(qd));
            diag -= h;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) op(i * n + p, j * n + qd) += h(i, j);
        }
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) op(i * n + p, j * n + p) += diag(i, j);
    }
    return op;
}

Vec2c static_dipole_moment(const Shape2D& particle_shape, int resolution, double contrast,
                           const std::function<Vec2c(const Vec2&)>& field) {
    if (contrast == 1.0) return Vec2c::Zero();
    const VolumeQuadrature dq = build_volume_quadrature(particle_shape, resolution);
    const Eigen::Index n = dq.size();
    MatXc op = static_particle_operator(dq, particle_shape).cast<cplx>();
    op.diagonal().array() += 1.0 / (contrast - 1.0);
    VecXc rhs(2 * n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const Vec2c f = field(dq.node(p));
        rhs[p] = f[0];
        rhs[n + p] = f[1];
    }
    const VecXc v = op.partialPivLu().solve(rhs);
    Vec2c moment = Vec2c::Zero();
    for (Eigen::Index p = 0; p < n; ++p) moment += dq.weights[p] * Vec2c(v[p], v[n + p]);
    return moment;
}

// ================================================================ convergence studies

LogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("log-log fit: need matching data of size >= 2");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("log-log fit: data must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LogFit f;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw DomainError("log-log fit: degenerate abscissae");
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::log(y[i]) - (f.intercept + f.slope * std::log(x[i]));
        rr += e * e;
    }
    f.residual = std::sqrt(rr / n);
    return f;
}

std::string ConvergenceStudy::csv() const {
    std::ostringstream os;
    os << "delta,re_shift,im_shift,oracle_re_shift,oracle_im_shift,relative_error\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.delta, r.prediction.real(),
                      r.prediction.imag(), r.oracle.real(), r.oracle.imag(), r.rel_error);
        os << buf;
    }
    return os.str();
}

ConvergenceStudy convergence_study(const std::function<cplx(double)>& prediction,
                                   const std::function<cplx(double)>& oracle, const std::vector<double>& deltas,
                                   int workers) {
    if (deltas.size() < 4) throw InvalidArgument("convergence study: need at least 4 delta values");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0)) throw InvalidArgument("convergence study: delta must be positive");
        if (i > 0 && !(deltas[i] < deltas[i - 1])) throw InvalidArgument("convergence study: deltas must decrease");
    }
    const std::size_t n = deltas.size();
    std::vector<ConvergenceRow> rows(n);
    std::vector<std::string> failures(n);
    parallel_for(static_cast<long>(n), workers, [&](long i) {
        try {
            rows[i].delta = deltas[i];
            rows[i].prediction = prediction(deltas[i]);
            rows[i].oracle = oracle(deltas[i]);
        } catch (const std::exception& e) {
            failures[i] = e.what();
            if (failures[i].empty()) failures[i] = "unknown failure";
        }
    });
    ConvergenceStudy st;
    for (std::size_t i = 0; i < n; ++i) {
        if (!failures[i].empty()) {
            throw ConvergenceAborted("convergence study: oracle failed at delta = " + std::to_string(deltas[i]) +
                                         ": " + failures[i],
                                     st);
        }
        ConvergenceRow r = rows[i];
        r.abs_error = std::abs(r.prediction - r.oracle);
        r.rel_error = r.oracle == 0.0 ? (r.abs_error == 0.0 ? 0.0 : INFINITY) : r.abs_error / std::abs(r.oracle);
        st.rows.push_back(r);
    }
    double scale = 0.0;
    for (const auto& r : st.rows) scale = std::max(scale, std::abs(r.oracle));
    std::vector<double> x, y;
    bool all_small = true;
    for (const auto& r : st.rows) {
        if (r.abs_error > 1e-12 * std::max(scale, 1e-300)) all_small = false;
        x.push_back(r.delta);
        y.push_back(r.abs_error);
    }
    if (all_small) {
        st.degenerate = true;
        return st;
    }
    const LogFit f = loglog_fit(x, y);
    st.slope = f.slope;
    st.intercept = f.intercept;
    st.fit_residual = f.residual;
    return st;
}

}  // namespace cavshift
