#include "cavshift/cavity_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "cavshift/errors.hpp"
#include "cavshift/parallel.hpp"
#include "cavshift/special_functions.hpp"

namespace cavshift {

namespace {

// F(t) = t H1(kt)/k with F(0) = -2i/(pi k^2), so int_a^b t H0(kt) dt = F(b) - F(a).
cplx primitive_h0(double t, cplx k) {
    if (t == 0.0) return -2.0 * I / (pi * k * k);
    return t * hankel1_01(k * t).h1 / k;
}

// dF/dk
cplx primitive_h0_dk(double t, cplx k) {
    if (t == 0.0) return 4.0 * I / (pi * k * k * k);
    const Hankel01 h = hankel1_01(k * t);
    return t * t * h.h0 / k - 2.0 * t * h.h1 / (k * k);
}

// G(t) = t^2 H2(kt)/k with G(0) = -4i/(pi k^3): int_a^b t^2 H1(kt) dt = G(b) - G(a).
cplx primitive_t2h1(double t, cplx k) {
    if (t == 0.0) return -4.0 * I / (pi * k * k * k);
    const cplx z = k * t;
    const Hankel01 h = hankel1_01(z);
    const cplx h2 = 2.0 / z * h.h1 - h.h0;
    return t * t * h2 / k;
}

// int_a^b t H1(kt) dt by Gauss-Legendre; t = a + (b-a) u^2 clusters at a when a = 0.
cplx integral_th1(double a, double b, cplx k) {
    static const auto gl = [] {
        VecX x, w;
        gauss_legendre(24, x, w);
        return std::make_pair(x, w);
    }();
    cplx acc = 0.0;
    for (int i = 0; i < 24; ++i) {
        const double u = 0.5 * (gl.first[i] + 1.0);
        const double wu = 0.5 * gl.second[i];
        double t, jac;
        if (a == 0.0) {
            t = b * u * u;
            jac = 2.0 * b * u;
        } else {
            t = a + (b - a) * u;
            jac = b - a;
        }
        acc += wu * jac * t * hankel1_01(k * t).h1;
    }
    return acc;
}

double sector_sign(Sector s) { return s == Sector::odd ? -1.0 : 1.0; }

// Sign gauge: largest-magnitude component has positive real part.
void fix_gauge(VecXc& v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax].real() < 0.0) v = -v;
}

std::string fmt_cplx(cplx z) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", z.real(), z.imag());
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------- configuration

void validate_cavity(const CavityConfig& c) {
    validate_shape(c.shape);
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive");
    };
    pos(c.eps_c, "eps_c");
    pos(c.eps_m, "eps_m");
    pos(c.mu_m, "mu_m");
    pos(c.tau, "tau");
}

const char* to_string(Sector s) {
    switch (s) {
        case Sector::none: return "none";
        case Sector::even: return "even";
        case Sector::odd: return "odd";
    }
    return "?";
}

Sector sector_from_string(const std::string& s) {
    if (s == "none") return Sector::none;
    if (s == "even") return Sector::even;
    if (s == "odd") return Sector::odd;
    throw InvalidArgument("unknown sector '" + s + "'");
}

// ---------------------------------------------------------------- model

CavityModel::CavityModel(CavityConfig cfg, int resolution, int workers)
    : CavityModel(cfg, build_volume_quadrature(cfg.shape, resolution), workers) {}

CavityModel::CavityModel(CavityConfig cfg, VolumeQuadrature quad, int workers)
    : cfg_(std::move(cfg)), quad_(std::move(quad)), workers_(std::max(1, workers)) {
    validate_cavity(cfg_);
    const int n = int(quad_.size());
    active_all_.resize(n);
    std::iota(active_all_.begin(), active_all_.end(), 0);
    if (!quad_.mirror.empty())
        for (int i = 0; i < n; ++i)
            if (i < quad_.mirror[i]) active_half_.push_back(i);
    rules_.resize(n);
}

const std::vector<int>& CavityModel::active(Sector s) const {
    if (s == Sector::none) return active_all_;
    if (active_half_.empty()) throw InvalidArgument("symmetry sector requested for a shape without mirror symmetry");
    return active_half_;
}

VecX CavityModel::reduced_weights(Sector s) const {
    const auto& act = active(s);
    VecX w(act.size());
    const double f = s == Sector::none ? 1.0 : 2.0;
    for (std::size_t a = 0; a < act.size(); ++a) w[a] = f * quad_.weights[act[a]];
    return w;
}

const AngularRule& CavityModel::angular_rule(int i) const {
    if (!rules_[i]) rules_[i] = std::make_unique<AngularRule>(build_angular_rule(cfg_.shape, quad_.node(i)));
    return *rules_[i];
}

void CavityModel::prepare(Sector s) const {
    const auto& act = active(s);
    parallel_for(long(act.size()), workers_, [&](long a) { angular_rule(act[a]); });
}

cplx CavityModel::volume_potential(int node, cplx k) const {
    const AngularRule& r = angular_rule(node);
    cplx acc = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
        cplx seg = 0.0;
        for (int s = r.offset[q]; s < r.offset[q + 1]; ++s)
            seg += primitive_h0(r.t_out[s], k) - primitive_h0(r.t_in[s], k);
        acc += r.weight[q] * seg;
    }
    return -0.25 * I * acc;
}

cplx CavityModel::volume_potential_dk(int node, cplx k) const {
    const AngularRule& r = angular_rule(node);
    cplx acc = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
        cplx seg = 0.0;
        for (int s = r.offset[q]; s < r.offset[q + 1]; ++s)
            seg += primitive_h0_dk(r.t_out[s], k) - primitive_h0_dk(r.t_in[s], k);
        acc += r.weight[q] * seg;
    }
    return -0.25 * I * acc;
}

std::string CavityModel::hash() const {
    char mat[160];
    std::snprintf(mat, sizeof mat, ";%.12e;%.12e;%.12e;%.12e;nr=%d;nt=%d", cfg_.eps_c, cfg_.eps_m, cfg_.mu_m,
                  cfg_.tau, quad_.n_r, quad_.n_theta);
    const std::string base = shape_hash(cfg_.shape, quad_.resolution);
    char buf[40];
    std::snprintf(buf, sizeof buf, "-%016llx", static_cast<unsigned long long>(fnv1a(base + mat)));
    return base + buf;
}

std::string operator_key(const CavityModel& model, cplx omega, Sector sector, bool with_derivative) {
    const std::string s = model.hash() + "|" + fmt_cplx(omega) + "|" + to_string(sector) + (with_derivative ? "|d" : "");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return model.hash() + "-" + buf;
}

// ---------------------------------------------------------------- assembly

DiscreteOperator assemble_k(const CavityModel& model, cplx omega, Sector sector, bool with_derivative) {
    if (omega == 0.0) throw DomainError("assemble_k: omega = 0");
    DiscreteOperator op;
    std::string key;
    if (model.cache) {
        key = operator_key(model, omega, sector, with_derivative);
        if (model.cache->load(key, op)) return op;
    }

    const auto& q = model.quad();
    const auto& act = model.active(sector);
    const long na = long(act.size());
    const double sgn = sector_sign(sector);
    const bool folded = sector != Sector::none;
    const Medium med = model.config().background();
    const double s = std::sqrt(med.eps * med.mu);
    const cplx k = s * omega;

    op.omega = omega;
    op.sector = sector;
    op.a.resize(na, na);
    if (with_derivative) op.da.resize(na, na);
    model.prepare(sector);

    parallel_for(na, model.workers(), [&](long a) {
        const int m = act[a];
        const Vec2 xm = q.node(m);
        const double wm = q.weights[m];
        cplx rowsum = 0.0, drowsum = 0.0;
        for (long b = 0; b < na; ++b) {
            const int l = act[b];
            const double wl = q.weights[l];
            const double sw = std::sqrt(wm * wl);
            cplx g1 = 0.0, dg1 = 0.0, g2 = 0.0, dg2 = 0.0;
            if (l != m) {
                const double r = (xm - q.node(l)).norm();
                if (r == 0.0) throw InvalidArgument("assemble_k: coincident nodes");
                const Hankel01 h = hankel1_01(k * r);
                g1 = -0.25 * I * h.h0;
                dg1 = 0.25 * I * s * r * h.h1;
            }
            if (folded) {
                const int lp = q.mirror[l];
                const double r = (xm - q.node(lp)).norm();
                if (r == 0.0) throw InvalidArgument("assemble_k: coincident nodes");
                const Hankel01 h = hankel1_01(k * r);
                g2 = -0.25 * I * h.h0;
                dg2 = 0.25 * I * s * r * h.h1;
            }
            rowsum += wl * (g1 + g2);
            drowsum += wl * (dg1 + dg2);
            op.a(a, b) = -sw * (g1 + sgn * g2);
            if (with_derivative) op.da(a, b) = -sw * (dg1 + sgn * dg2);
        }
        // singularity subtraction: int Gamma(x_m - y) u(y) dy ~ sum_{l != m} w_l Gamma_ml (u_l - u_m) + u_m S(x_m)
        op.a(a, a) += -(model.volume_potential(m, k) - rowsum);
        if (with_derivative) op.da(a, a) += -(s * model.volume_potential_dk(m, k) - drowsum);
    });

    // exact complex symmetry
    MatXc t = op.a.transpose();
    op.a = 0.5 * (op.a + t);
    if (with_derivative) {
        t = op.da.transpose();
        op.da = 0.5 * (op.da + t);
    }
    if (model.cache) model.cache->store(key, op);
    return op;
}

// ---------------------------------------------------------------- eigenpairs

namespace {

// Bilinear normalization and gauge of a cluster of eigenvectors with (nearly) equal eigenvalues.
void normalize_cluster(std::vector<EigenPair>& pairs, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n == 1) {
        EigenPair& p = pairs[lo];
        const double nrm = p.v.norm();
        p.v /= nrm;
        const cplx vv = bilinear(p.v, p.v);
        p.near_defective = std::abs(vv) < 1e-6;
        if (!p.near_defective) p.v /= std::sqrt(vv);
        fix_gauge(p.v);
        return;
    }
    MatXc v(pairs[lo].v.size(), n);
    for (std::size_t i = 0; i < n; ++i) v.col(i) = pairs[lo + i].v / pairs[lo + i].v.norm();
    // complex-symmetric Cholesky of the bilinear Gram matrix: G = L L^T, V <- V L^{-T}
    MatXc g = v.transpose() * v;
    MatXc l = MatXc::Zero(n, n);
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) {
        cplx d = g(j, j);
        for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
        if (std::abs(d) < 1e-10) { ok = false; break; }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = g(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
            l(i, j) = s / l(j, j);
        }
    }
    if (ok) {
        MatXc lt = l.transpose();
        MatXc vn = lt.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(v);
        for (std::size_t i = 0; i < n; ++i) {
            pairs[lo + i].v = vn.col(i);
            pairs[lo + i].near_defective = false;
            fix_gauge(pairs[lo + i].v);
        }
    } else {
        for (std::size_t i = lo; i < hi; ++i) normalize_cluster(pairs, i, i + 1);
    }
}

void finalize_pairs(std::vector<EigenPair>& pairs) {
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i + 1;
        while (j < pairs.size() && std::abs(pairs[j].lambda - pairs[i].lambda) <= 1e-8 * std::abs(pairs[i].lambda))
            ++j;
        normalize_cluster(pairs, i, j);
        i = j;
    }
}

std::vector<EigenPair> dense_pairs(const MatXc& a, int count) {
    Eigen::ComplexEigenSolver<MatXc> es(a, true);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigenpairs: dense solver failed");
    std::vector<int> idx(a.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
        return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]);
    });
    std::vector<EigenPair> out;
    for (int i = 0; i < count; ++i) {
        EigenPair p;
        p.lambda = es.eigenvalues()[idx[i]];
        p.v = es.eigenvectors().col(idx[i]);
        p.residual = (a * p.v - p.lambda * p.v).norm() / p.v.norm();
        out.push_back(std::move(p));
    }
    return out;
}

// Thick-restart Krylov subspace with Rayleigh-Ritz extraction.
std::vector<EigenPair> krylov_pairs(const MatXc& a, int count, const EigenOptions& opt) {
    const Eigen::Index n = a.rows();
    const int m = int(std::min<Eigen::Index>(n, std::max(3 * count, count + 30)));
    const int keep = std::min(m - 8, count + 6);
    MatXc v(n, m), av(n, m);
    VecXc start(n);
    for (Eigen::Index i = 0; i < n; ++i) start[i] = cplx(1.0 + 0.1 * std::sin(0.37 * i), 0.05 * std::cos(0.11 * i));
    if (opt.start && opt.start->size() == n) start = *opt.start / opt.start->norm() + 1e-3 * start / start.norm();
    v.col(0) = start / start.norm();
    av.col(0) = a * v.col(0);
    int k = 1;
    const double anorm = a.cwiseAbs().rowwise().sum().maxCoeff();

    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        // extend basis by Arnoldi with two-pass classical Gram-Schmidt
        while (k < m) {
            VecXc w = av.col(k - 1);
            for (int pass = 0; pass < 2; ++pass) {
                const VecXc h = v.leftCols(k).adjoint() * w;
                w -= v.leftCols(k) * h;
            }
            double nw = w.norm();
            if (nw < 1e-14 * anorm) {
                // invariant subspace: continue with a deterministic fresh direction
                w = VecXc::Zero(n);
                w[(k * 7919) % n] = 1.0;
                for (int pass = 0; pass < 2; ++pass) w -= v.leftCols(k) * (v.leftCols(k).adjoint() * w);
                nw = w.norm();
            }
            v.col(k) = w / nw;
            av.col(k) = a * v.col(k);
            ++k;
        }
        const MatXc h = v.adjoint() * av;
        Eigen::ComplexEigenSolver<MatXc> es(h, true);
        std::vector<int> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
            return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]);
        });
        std::vector<EigenPair> out;
        bool done = true;
        for (int i = 0; i < count; ++i) {
            const VecXc y = es.eigenvectors().col(idx[i]);
            EigenPair p;
            p.lambda = es.eigenvalues()[idx[i]];
            p.v = v * y;
            const double nv = p.v.norm();
            p.residual = (av * y - p.lambda * p.v).norm() / nv;
            if (p.residual > opt.tol * anorm) done = false;
            out.push_back(std::move(p));
        }
        if (done || restart == opt.max_restarts) {
            if (!done) throw ConvergenceError("eigenpairs: Krylov iteration did not converge");
            return out;
        }
        // thick restart: keep an orthonormal basis of the wanted Ritz vectors
        MatXc y(m, keep);
        for (int i = 0; i < keep; ++i) y.col(i) = es.eigenvectors().col(idx[i]);
        Eigen::HouseholderQR<MatXc> qr(y);
        const MatXc qm = qr.householderQ() * MatXc::Identity(m, keep);
        MatXc vk = v * qm, avk = av * qm;
        // last Krylov direction continues the expansion
        VecXc w = av.col(m - 1);
        v.leftCols(keep) = vk;
        av.leftCols(keep) = avk;
        for (int pass = 0; pass < 2; ++pass) w -= v.leftCols(keep) * (v.leftCols(keep).adjoint() * w);
        v.col(keep) = w / w.norm();
        av.col(keep) = a * v.col(keep);
        k = keep + 1;
    }
    throw ConvergenceError("eigenpairs: Krylov iteration did not converge");
}

}  // namespace

std::vector<EigenPair> eigenpairs(const MatXc& a, int count, const EigenOptions& opt) {
    if (count < 1 || count > a.rows()) throw InvalidArgument("eigenpairs: count must be in [1, N]");
    std::vector<EigenPair> out = a.rows() <= opt.dense_threshold ? dense_pairs(a, count) : krylov_pairs(a, count, opt);
    finalize_pairs(out);
    return out;
}

std::vector<EigenPair> eigenpairs(const DiscreteOperator& op, int count, const EigenOptions& opt) {
    return eigenpairs(op.a, count, opt);
}

// ---------------------------------------------------------------- branches and resonances

namespace {

// Full-grid values u from reduced symmetrized coordinates.
VecXc unfold(const CavityModel& model, Sector sector, const VecXc& vr) {
    const auto& act = model.active(sector);
    const VecX w = model.reduced_weights(sector);
    const auto& q = model.quad();
    VecXc u = VecXc::Zero(q.size());
    const double sgn = sector_sign(sector);
    for (std::size_t a = 0; a < act.size(); ++a) {
        const cplx val = vr[a] / std::sqrt(w[a]);
        u[act[a]] = val;
        if (sector != Sector::none) u[q.mirror[act[a]]] = sgn * val;
    }
    return u;
}

int select_by_overlap(const std::vector<EigenPair>& pairs, const VecXc& prev, double* best_overlap) {
    int best = 0;
    double bo = -1.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double o = std::abs(bilinear(pairs[i].v, prev));
        if (o > bo) { bo = o; best = int(i); }
    }
    if (best_overlap) *best_overlap = bo;
    return best;
}

}  // namespace

EigenBranch track_branch(const CavityModel& model, Sector sector, int j0, const std::vector<cplx>& path, int nev) {
    if (path.empty()) throw InvalidArgument("track_branch: empty path");
    EigenBranch br;
    br.index = j0;
    br.sector = sector;
    VecXc prev;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const DiscreteOperator op = assemble_k(model, path[i], sector);
        EigenOptions opt;
        if (prev.size()) opt.start = &prev;
        const auto pairs = eigenpairs(op, std::max(nev, j0 + 1), opt);
        int pick = j0;
        double ov = 1.0;
        if (i > 0) {
            pick = select_by_overlap(pairs, prev, &ov);
            if (ov < 0.9)
                throw BranchError("track_branch: overlap " + std::to_string(ov) + " below 0.9 at path point " +
                                  std::to_string(i));
        }
        VecXc v = pairs[pick].v;
        if (i > 0 && bilinear(v, prev).real() < 0.0) v = -v;
        br.samples.push_back({path[i], pairs[pick].lambda, v, ov});
        prev = v;
    }
    return br;
}

ResonanceRecord find_resonance(std::shared_ptr<const CavityModel> model, const BranchSpec& spec,
                               const NewtonOptions& opt) {
    const CavityConfig& cfg = model->config();
    const Sector sector = spec.sector;
    const auto& act = model->active(sector);
    const VecX wr = model->reduced_weights(sector);

    // seed function in reduced symmetrized coordinates
    VecXc seedv;
    if (spec.seed_function) {
        seedv.resize(act.size());
        for (std::size_t a = 0; a < act.size(); ++a)
            seedv[a] = std::sqrt(wr[a]) * spec.seed_function(model->quad().node(act[a]));
        const cplx nn = bilinear(seedv, seedv);
        seedv /= std::sqrt(nn);
    }

    cplx omega = spec.seed;
    VecXc prev;
    ResonanceRecord rec;
    rec.model = model;
    rec.sector = sector;
    double last_step = 1e300;
    for (int it = 0; it < opt.max_iter; ++it) {
        const DiscreteOperator op = assemble_k(*model, omega, sector, true);
        EigenOptions eo;
        if (prev.size()) eo.start = &prev;
        const auto pairs = eigenpairs(op, spec.nev, eo);
        const cplx alpha = cfg.alpha(omega);
        int pick = 0;
        if (prev.size()) {
            pick = select_by_overlap(pairs, prev, nullptr);
        } else {
            double best = 1e300;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                if (seedv.size()) {
                    const double o = std::abs(bilinear(pairs[i].v, seedv));
                    if (o < 0.3) continue;
                }
                const double d = std::abs(1.0 - alpha * pairs[i].lambda);
                if (d < best) { best = d; pick = int(i); }
            }
            if (best == 1e300) throw BranchError("find_resonance: no eigenpair overlaps the seed function");
        }
        const EigenPair& p = pairs[pick];
        if (p.near_defective) {
            rec.exceptional = true;
            throw ExceptionalPointError("find_resonance: eigenvector is nearly self-orthogonal (exceptional point)");
        }
        VecXc v = p.v;
        if (prev.size() && bilinear(v, prev).real() < 0.0) v = -v;
        const cplx dl = bilinear(v, op.da * v) / bilinear(v, v);
        const cplx f = 1.0 - alpha * p.lambda;
        const cplx fp = -cfg.alpha_deriv(omega) * p.lambda - alpha * dl;
        rec.omega0 = omega;
        rec.lambda0 = p.lambda;
        rec.r = fp;
        rec.mode_sym = v;
        rec.residual = std::abs(f);
        rec.iterations = it + 1;
        rec.branch = pick;
        prev = v;
        if (std::abs(f) <= 1e-13 || (std::abs(f) <= opt.tol && last_step <= 1e-10 * std::abs(omega))) break;
        if (it + 1 == opt.max_iter) throw ConvergenceError("find_resonance: Newton did not converge");
        cplx step = -f / fp;
        const double cap = 0.2 * std::abs(omega);
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        omega += step;
        last_step = std::abs(step);
    }
    if (rec.residual > opt.tol) throw ConvergenceError("find_resonance: residual above tolerance");
    if (std::abs(rec.r) < 1e-6 * std::abs(rec.lambda0 * cfg.alpha_deriv(rec.omega0))) {
        rec.exceptional = true;
        throw ExceptionalPointError("find_resonance: R(omega0) vanishes (exceptional resonance)");
    }
    rec.c = -rec.lambda0 / rec.r;
    rec.mode = unfold(*model, sector, rec.mode_sym);
    rec.norm_certificate = (model->quad().weights.cast<cplx>().array() * rec.mode.array().square()).sum();
    return rec;
}

double characteristic_residual(const ResonanceRecord& rec) {
    const DiscreteOperator op = assemble_k(*rec.model, rec.omega0, rec.sector);
    EigenOptions eo;
    eo.start = &rec.mode_sym;
    const auto pairs = eigenpairs(op, 8, eo);
    const int pick = select_by_overlap(pairs, rec.mode_sym, nullptr);
    return std::abs(1.0 - rec.model->config().alpha(rec.omega0) * pairs[pick].lambda);
}

// ---------------------------------------------------------------- residues

std::vector<int> default_probes(const CavityModel& model, Sector sector, int count, double radius_fraction) {
    const auto& q = model.quad();
    // ring whose scaled radius is nearest to radius_fraction
    const Shape2D& sh = model.config().shape;
    int ir = 0;
    double best = 1e300;
    for (int i = 0; i < q.n_r; ++i) {
        const int idx = i * q.n_theta;
        const Vec2 d = q.node(idx) - sh.center;
        const double frac = d.norm() / polar_radius(sh, std::atan2(d.y(), d.x()) - sh.rotation);
        if (std::abs(frac - radius_fraction) < best) { best = std::abs(frac - radius_fraction); ir = i; }
    }
    const int jspan = sector == Sector::none ? q.n_theta : q.n_theta / 2;
    std::vector<int> out;
    for (int p = 0; p < count; ++p) {
        const int j = int((p + 0.5) * jspan / count);
        out.push_back(ir * q.n_theta + j);
    }
    return out;
}

namespace {

struct GreenEval {
    MatXc columns;  // reduced rows x probes, u-units
    cplx logdet;
};

GreenEval green_eval(const CavityModel& model, Sector sector, cplx omega, const std::vector<int>& pa) {
    const DiscreteOperator op = assemble_k(model, omega, sector);
    const VecX wr = model.reduced_weights(sector);
    const cplx alpha = model.config().alpha(omega);
    const Eigen::Index n = op.a.rows();
    MatXc b(n, pa.size());
    for (std::size_t j = 0; j < pa.size(); ++j) b.col(j) = op.a.col(pa[j]);
    const MatXc y = op.a * b;
    MatXc m = -alpha * op.a;
    m.diagonal().array() += 1.0;
    Eigen::PartialPivLU<MatXc> lu(m);
    MatXc x = lu.solve(y);
    GreenEval g;
    g.logdet = 0.0;
    const MatXc& lum = lu.matrixLU();
    for (Eigen::Index i = 0; i < n; ++i) g.logdet += std::log(lum(i, i));
    if (lu.permutationP().determinant() < 0) g.logdet += I * pi;
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) /= std::sqrt(wr[i]);
    for (std::size_t j = 0; j < pa.size(); ++j) x.col(j) /= std::sqrt(wr[pa[j]]);
    g.columns = -alpha * x;
    return g;
}

std::vector<int> reduced_indices(const CavityModel& model, Sector sector, const std::vector<int>& nodes) {
    const auto& act = model.active(sector);
    std::vector<int> out;
    for (int nd : nodes) {
        auto it = std::find(act.begin(), act.end(), nd);
        if (it == act.end()) throw InvalidArgument("probe node outside the active sector");
        out.push_back(int(it - act.begin()));
    }
    return out;
}

}  // namespace

MatXc green_difference(const CavityModel& model, Sector sector, cplx omega, const std::vector<int>& probes,
                       MatXc* full_columns) {
    const auto pa = reduced_indices(model, sector, probes);
    GreenEval g = green_eval(model, sector, omega, pa);
    MatXc block(pa.size(), pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) block.row(i) = g.columns.row(pa[i]);
    if (full_columns) *full_columns = std::move(g.columns);
    return block;
}

ResidueResult extract_residue(const ResonanceRecord& rec, double rho, int points, std::vector<int> probes) {
    const CavityModel& model = *rec.model;
    if (probes.empty()) probes = default_probes(model, rec.sector);
    const auto pa = reduced_indices(model, rec.sector, probes);
    const VecX wr = model.reduced_weights(rec.sector);

    // contour samples are independent work units
    // contour samples run in sequence; assembly inside each sample uses the worker pool
    std::vector<GreenEval> evals(points);
    for (int k = 0; k < points; ++k)
        evals[k] = green_eval(model, rec.sector, rec.omega0 + rho * std::exp(I * (2 * pi * k / points)), pa);

    MatXc c = MatXc::Zero(evals[0].columns.rows(), pa.size());
    for (int k = 0; k < points; ++k) c += evals[k].columns * std::exp(I * (2 * pi * k / points));
    c *= rho / points;

    double darg = 0.0;
    for (int k = 0; k < points; ++k) {
        const cplx a0 = evals[k].logdet, a1 = evals[(k + 1) % points].logdet;
        double d = a1.imag() - a0.imag();
        d = std::remainder(d, 2 * pi);
        darg += d;
    }

    ResidueResult res;
    res.rho = rho;
    res.points = points;
    res.probes = probes;
    res.winding = int(std::lround(darg / (2 * pi)));
    res.probe_block.resize(pa.size(), pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) res.probe_block.row(i) = c.row(pa[i]);

    // mode from the dominant column, normalized sum w e^2 = 1
    Eigen::Index jmax = 0;
    res.probe_block.colwise().norm().maxCoeff(&jmax);
    VecXc er = c.col(jmax);
    const cplx nn = (wr.cast<cplx>().array() * er.array().square()).sum();
    er /= std::sqrt(nn);
    VecXc ersym = er.array() * wr.cast<cplx>().array().sqrt();
    if (bilinear(ersym, rec.mode_sym).real() < 0.0) {
        er = -er;
        ersym = -ersym;
    }
    res.mode = unfold(model, rec.sector, ersym);

    VecXc ep(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) ep[i] = er[pa[i]];
    const MatXc outer = ep * ep.transpose();
    res.c = (outer.conjugate().array() * res.probe_block.array()).sum() / outer.squaredNorm();

    Eigen::JacobiSVD<MatXc> svd(res.probe_block);
    const auto& sv = svd.singularValues();
    res.sigma_ratio = sv.size() > 1 ? sv[1] / sv[0] : 0.0;
    res.asymmetry = (res.probe_block - res.probe_block.transpose()).cwiseAbs().maxCoeff() /
                    res.probe_block.cwiseAbs().maxCoeff();
    return res;
}

// ---------------------------------------------------------------- mode evaluation

ModeSample mode_value_and_gradient(const ResonanceRecord& rec, const Vec2& z) {
    const CavityModel& model = *rec.model;
    const auto& q = model.quad();
    const Shape2D& shape = model.config().shape;
    if (!contains(shape, z) || boundary_distance(shape, z) < 2.0 * q.spacing)
        throw DomainError("mode_value_and_gradient: point too close to the boundary or outside");

    const Medium med = model.config().background();
    const cplx k = wavenumber(rec.omega0, med);
    const cplx alpha = model.config().alpha(rec.omega0);

    cplx sum_wg = 0.0, sum_wge = 0.0;
    Mat2c bmat = Mat2c::Zero();
    std::vector<Vec2c> grads(q.size());
    for (Eigen::Index l = 0; l < q.size(); ++l) {
        const Vec2 dy = q.node(l) - z;
        const double rho = dy.norm();
        if (rho < 1e-14) throw DomainError("mode_value_and_gradient: evaluation point coincides with a node");
        const Hankel01 h = hankel1_01(k * rho);
        const cplx g = -0.25 * I * h.h0;
        const Vec2 d = dy / rho;
        grads[l] = (-0.25 * I * k * h.h1) * d.cast<cplx>();
        sum_wg += q.weights[l] * g;
        sum_wge += q.weights[l] * rec.mode[l] * g;
        bmat += q.weights[l] * grads[l] * dy.cast<cplx>().transpose();
    }

    const PointPotentials pp = point_potentials(build_angular_rule(shape, z), k);
    const cplx spot = pp.s;
    const Vec2c& grad_s = pp.grad;
    const Mat2c& tmat = pp.t;

    ModeSample out;
    out.value = -alpha * sum_wge / (1.0 - alpha * sum_wg + alpha * spot);
    Vec2c rhs = out.value * grad_s;
    for (Eigen::Index l = 0; l < q.size(); ++l) rhs += q.weights[l] * (rec.mode[l] - out.value) * grads[l];
    rhs *= -alpha;
    Mat2c lhs = Mat2c::Identity() - alpha * bmat + alpha * tmat;
    out.gradient = lhs.partialPivLu().solve(rhs);
    return out;
}

PointPotentials point_potentials(const AngularRule& rule, cplx k) {
    PointPotentials p{0.0, Vec2c::Zero(), Mat2c::Zero()};
    for (std::size_t qq = 0; qq < rule.size(); ++qq) {
        const Vec2 d(std::cos(rule.theta[qq]), std::sin(rule.theta[qq]));
        cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (int s = rule.offset[qq]; s < rule.offset[qq + 1]; ++s) {
            s0 += primitive_h0(rule.t_out[s], k) - primitive_h0(rule.t_in[s], k);
            s1 += integral_th1(rule.t_in[s], rule.t_out[s], k);
            s2 += primitive_t2h1(rule.t_out[s], k) - primitive_t2h1(rule.t_in[s], k);
        }
        p.s += rule.weight[qq] * s0;
        p.grad += (rule.weight[qq] * s1) * d.cast<cplx>();
        p.t += (rule.weight[qq] * s2) * (d * d.transpose()).cast<cplx>();
    }
    p.s *= -0.25 * I;
    p.grad *= -0.25 * I * k;
    p.t *= -0.25 * I * k;
    return p;
}

Mat2c hessian_potential_pv(const AngularRule& rule, cplx k) {
    // radial integrals of (i/4)[k^2 t H0 dd^T + k H1 (I - 2 dd^T)]; the divergent H0(0) part of the
    // second term is angle independent and integrates to zero against I - 2 dd^T
    Mat2c acc = Mat2c::Zero();
    for (std::size_t qq = 0; qq < rule.size(); ++qq) {
        const Vec2 d(std::cos(rule.theta[qq]), std::sin(rule.theta[qq]));
        const Mat2 dd = d * d.transpose();
        cplx a = 0.0, b = 0.0;
        for (int s = rule.offset[qq]; s < rule.offset[qq + 1]; ++s) {
            a += k * k * (primitive_h0(rule.t_out[s], k) - primitive_h0(rule.t_in[s], k));
            b -= hankel1_01(k * rule.t_out[s]).h0;
            if (rule.t_in[s] > 0.0) b += hankel1_01(k * rule.t_in[s]).h0;
        }
        acc += rule.weight[qq] * (a * dd.cast<cplx>() + b * (Mat2::Identity() - 2.0 * dd).cast<cplx>());
    }
    return 0.25 * I * acc;
}

// ---------------------------------------------------------------- exterior mode

ExteriorMode::ExteriorMode(const ResonanceRecord& rec)
    : model_(rec.model), omega_(rec.omega0), alpha_(rec.model->config().alpha(rec.omega0)) {
    we_ = rec.model->quad().weights.cast<cplx>().array() * rec.mode.array();
}

void ExteriorMode::check(const Vec2& x) const {
    const Shape2D& s = model_->config().shape;
    if (contains(s, x) || boundary_distance(s, x) < 2.0 * model_->quad().spacing)
        throw DomainError("exterior_mode: point inside or too close to the cavity");
}

cplx ExteriorMode::value(const Vec2& x) const {
    check(x);
    const auto& q = model_->quad();
    const cplx k = wavenumber(omega_, model_->config().background());
    cplx acc = 0.0;
    for (Eigen::Index l = 0; l < q.size(); ++l) acc += we_[l] * (-0.25 * I) * hankel1_01(k * (x - q.node(l)).norm()).h0;
    return alpha_ * acc;
}

Vec2c ExteriorMode::gradient(const Vec2& x) const {
    check(x);
    const auto& q = model_->quad();
    const cplx k = wavenumber(omega_, model_->config().background());
    Vec2c acc = Vec2c::Zero();
    for (Eigen::Index l = 0; l < q.size(); ++l) {
        const Vec2 d = x - q.node(l);
        const double r = d.norm();
        acc += (we_[l] * 0.25 * I * k * hankel1_01(k * r).h1 / r) * d.cast<cplx>();
    }
    return alpha_ * acc;
}

ExteriorMode exterior_mode(const ResonanceRecord& rec) { return ExteriorMode(rec); }

}  // namespace cavshift
