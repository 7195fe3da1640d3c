#include "cavshift/serialization.hpp"

#include <cstdio>

#include "cavshift/errors.hpp"

#ifndef CAVSHIFT_VERSION
#define CAVSHIFT_VERSION "unknown"
#endif

namespace cavshift {

const char* artifact_version() { return CAVSHIFT_VERSION; }

Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("json: complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

namespace {

Json vec2(const Vec2& v) { return Json::array({v.x(), v.y()}); }
Vec2 vec2_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
Json vec2c(const Vec2c& v) { return Json::array({to_json(v(0)), to_json(v(1))}); }
Vec2c vec2c_from(const Json& j) { return {cplx_from_json(j.at(0)), cplx_from_json(j.at(1))}; }

Json mat2c(const Mat2c& m) {
    return Json::array({Json::array({to_json(m(0, 0)), to_json(m(0, 1))}),
                        Json::array({to_json(m(1, 0)), to_json(m(1, 1))})});
}

Mat2c mat2c_from(const Json& j) {
    Mat2c m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = cplx_from_json(j.at(r).at(c));
    return m;
}

ShiftCase shift_case_from(const std::string& s) {
    for (ShiftCase c : {ShiftCase::internal, ShiftCase::external, ShiftCase::plasmonic, ShiftCase::exceptional})
        if (s == to_string(c)) return c;
    throw InvalidArgument("json: unknown shift kind '" + s + "'");
}

}  // namespace

Json shape_to_json(const Shape2D& s) {
    Json j;
    j["kind"] = to_string(s.kind);
    switch (s.kind) {
        case ShapeKind::disk: j["radius"] = s.a; break;
        case ShapeKind::ellipse:
            j["a"] = s.a;
            j["b"] = s.b;
            break;
        case ShapeKind::star:
            j["r0"] = s.r0;
            j["cos"] = s.cos_coef;
            j["sin"] = s.sin_coef;
            break;
    }
    j["center"] = vec2(s.center);
    j["rotation"] = s.rotation;
    return j;
}

Shape2D shape_from_json(const Json& j) {
    const ShapeKind k = shape_kind_from_string(j.at("kind").get<std::string>());
    const Vec2 c = vec2_from(j.at("center"));
    const double rot = j.at("rotation").get<double>();
    Shape2D s;
    switch (k) {
        case ShapeKind::disk:
            s = Shape2D::disk(j.at("radius").get<double>(), c);
            s.rotation = rot;
            break;
        case ShapeKind::ellipse: s = Shape2D::ellipse(j.at("a").get<double>(), j.at("b").get<double>(), c, rot); break;
        case ShapeKind::star:
            s = Shape2D::star(j.at("r0").get<double>(), j.at("cos").get<std::vector<double>>(),
                              j.at("sin").get<std::vector<double>>(), c, rot);
            break;
    }
    return s;
}

Json config_to_json(const RunConfig& rc) {
    Json j;
    Json cav;
    cav["shape"] = shape_to_json(rc.cavity.shape);
    cav["eps_c"] = rc.cavity.eps_c;
    cav["eps_m"] = rc.cavity.eps_m;
    cav["mu_m"] = rc.cavity.mu_m;
    cav["tau"] = rc.cavity.tau;
    cav["resolution"] = rc.resolution;
    j["cavity"] = cav;
    if (rc.particle) {
        const auto& ps = *rc.particle;
        Json p;
        p["shape"] = shape_to_json(ps.particle.shape);
        p["delta"] = ps.particle.delta;
        if (!ps.delta_list.empty()) p["delta_list"] = ps.delta_list;
        p["z"] = vec2(ps.particle.z);
        if (ps.particle.drude && ps.tune_omega_p) p["drude_omega_p"] = "tuned";
        else if (ps.particle.drude) p["drude_omega_p"] = ps.particle.drude->omega_p;
        else p["mu_c"] = ps.particle.mu_c;
        p["position"] = ps.particle.position == ParticlePosition::internal ? "internal" : "external";
        p["boundary_nodes"] = ps.boundary_nodes;
        p["w_count"] = ps.w_count;
        p["w_index"] = ps.w_index;
        p["resolution"] = ps.particle_resolution;
        j["particle"] = p;
    }
    Json s;
    Json seeds = Json::array();
    for (const auto& sp : rc.solver.seeds)
        seeds.push_back(Json{{"omega", to_json(sp.omega)}, {"sector", to_string(sp.sector)}, {"function", sp.function}});
    s["seeds"] = seeds;
    s["tol"] = rc.solver.tol;
    s["max_iter"] = rc.solver.max_iter;
    s["residue"] = rc.solver.residue;
    s["contour_rho"] = rc.solver.contour_rho;
    s["contour_points"] = rc.solver.contour_points;
    s["probes"] = rc.solver.probes;
    s["probe_radius"] = rc.solver.probe_radius;
    if (rc.solver.window)
        s["window"] = Json::array({to_json(rc.solver.window->lo), to_json(rc.solver.window->hi)});
    s["orders"] = rc.solver.orders;
    j["solver"] = s;
    if (rc.sweep) j["sweep"] = Json{{"parameter", rc.sweep->parameter}, {"values", rc.sweep->values}};
    return j;
}

Json resonance_to_json(const ResonanceRecord& r) {
    Json j;
    j["omega0"] = to_json(r.omega0);
    j["branch"] = r.branch;
    j["sector"] = to_string(r.sector);
    j["lambda0"] = to_json(r.lambda0);
    j["r"] = to_json(r.r);
    j["c"] = to_json(r.c);
    j["norm_certificate"] = to_json(r.norm_certificate);
    j["residual"] = r.residual;
    j["iterations"] = r.iterations;
    j["exceptional"] = r.exceptional;
    return j;
}

ResonanceRecord resonance_from_json(const Json& j) {
    ResonanceRecord r;
    r.omega0 = cplx_from_json(j.at("omega0"));
    r.branch = j.at("branch").get<int>();
    r.sector = sector_from_string(j.at("sector").get<std::string>());
    r.lambda0 = cplx_from_json(j.at("lambda0"));
    r.r = cplx_from_json(j.at("r"));
    r.c = cplx_from_json(j.at("c"));
    r.norm_certificate = cplx_from_json(j.at("norm_certificate"));
    r.residual = j.at("residual").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.exceptional = j.at("exceptional").get<bool>();
    return r;
}

Json prediction_to_json(const ShiftPrediction& p) {
    Json j;
    j["kind"] = to_string(p.kind);
    j["omega0"] = to_json(p.omega0);
    Json roots = Json::array();
    for (const cplx& r : p.roots) roots.push_back(to_json(r));
    j["roots"] = roots;
    j["c"] = to_json(p.c);
    j["gradient"] = vec2c(p.gradient);
    j["m"] = mat2c(p.m);
    j["delta"] = p.delta;
    j["z"] = vec2(p.z);
    j["coupling_sq"] = to_json(p.coupling_sq);
    j["lambda_j"] = p.lambda_j;
    j["degenerate"] = p.degenerate;
    if (p.degenerate) j["flag"] = "degenerate-enhanced";
    j["warnings"] = p.warnings;
    return j;
}

ShiftPrediction prediction_from_json(const Json& j) {
    ShiftPrediction p;
    p.kind = shift_case_from(j.at("kind").get<std::string>());
    p.omega0 = cplx_from_json(j.at("omega0"));
    for (const auto& r : j.at("roots")) p.roots.push_back(cplx_from_json(r));
    p.c = cplx_from_json(j.at("c"));
    p.gradient = vec2c_from(j.at("gradient"));
    p.m = mat2c_from(j.at("m"));
    p.delta = j.at("delta").get<double>();
    p.z = vec2_from(j.at("z"));
    p.coupling_sq = cplx_from_json(j.at("coupling_sq"));
    p.lambda_j = j.at("lambda_j").get<double>();
    p.degenerate = j.at("degenerate").get<bool>();
    p.warnings = j.at("warnings").get<std::vector<std::string>>();
    return p;
}

Json convergence_to_json(const ConvergenceStudy& s) {
    Json rows = Json::array();
    for (const auto& r : s.rows)
        rows.push_back(Json{{"delta", r.delta},
                            {"prediction", to_json(r.prediction)},
                            {"oracle", to_json(r.oracle)},
                            {"abs_error", r.abs_error},
                            {"rel_error", r.rel_error}});
    return Json{{"rows", rows},
                {"slope", s.slope},
                {"intercept", s.intercept},
                {"fit_residual", s.fit_residual},
                {"degenerate", s.degenerate}};
}

Json make_record(const std::string& kind, const Json& input, const Json& result) {
    Json j;
    j["schema"] = "cavshift.result";
    j["schema_version"] = schema_version;
    j["kind"] = kind;
    j["artifact_version"] = artifact_version();
    j["input"] = input;
    j["result"] = result;
    return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace cavshift
