#include "cavshift/cli_app.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "cavshift/acceptance.hpp"
#include "cavshift/errors.hpp"
#include "cavshift/operator_cache.hpp"
#include "cavshift/oracle_suite.hpp"
#include "cavshift/parallel.hpp"
#include "cavshift/shift_predictor.hpp"

namespace fs = std::filesystem;

namespace cavshift {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    f << text;
    if (!f) throw Error("write failed for '" + p.string() + "'");
}

// Configuration, output directory, model and cache of one command invocation.
struct Session {
    RunConfig rc;
    fs::path out;
    std::shared_ptr<CavityModel> model;
    std::shared_ptr<FileOperatorCache> cache;
    clock_type::time_point t0 = clock_type::now();

    Session(const CliOptions& opt, bool need_model = true) {
        if (opt.config.empty()) throw ConfigError("--config is required for this command");
        rc = load_run_config(opt.config);
        out = opt.out.empty() ? fs::path(rc.output.directory) : fs::path(opt.out);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw Error("cannot create output directory '" + out.string() + "': " + ec.message());
        if (!need_model) return;
        model = std::make_shared<CavityModel>(rc.cavity, rc.resolution, std::max(1, opt.workers));
        const std::string dir = resolve_cache_dir(opt.cache);
        if (!dir.empty()) {
            cache = std::make_shared<FileOperatorCache>(fs::path(dir) / "operators");
            model->cache = cache;
        }
    }

    void write_record(const std::string& name, const std::string& kind, const Json& result) const {
        if (!rc.output.json) return;
        write_text(out / (name + ".json"), dump(make_record(kind, config_to_json(rc), result)));
    }

    void write_timing(const std::string& name, Json extra = Json::object()) const {
        Json t;
        t["total_seconds"] = seconds_since(t0);
        if (cache) {
            const auto s = cache->stats();
            t["assembly_phase_seconds"] = s.assembly_seconds + s.load_seconds;
            t["cache"] = Json{{"directory", cache->directory().string()},
                              {"hits", s.hits},
                              {"misses", s.misses},
                              {"corrupt", s.corrupt},
                              {"writes", s.writes},
                              {"assembly_seconds", s.assembly_seconds},
                              {"load_seconds", s.load_seconds}};
        }
        for (auto& [k, v] : extra.items()) t[k] = v;
        write_text(out / (name + ".timing.json"), dump(t));
    }

    void write_csv(const std::string& file, const std::string& text) const {
        if (rc.output.csv) write_text(out / file, text);
    }

    ResonanceRecord resonance(const SeedSpec& s) const {
        BranchSpec spec;
        spec.seed = s.omega;
        spec.sector = s.sector;
        spec.seed_function = seed_function(s.function);
        NewtonOptions no;
        no.tol = rc.solver.tol;
        no.max_iter = rc.solver.max_iter;
        return find_resonance(model, spec, no);
    }

    const ParticleSection& particle() const {
        if (!rc.particle) throw ConfigError("this command needs a [particle] section");
        return *rc.particle;
    }
};

bool is_disk(const Shape2D& s) { return s.kind == ShapeKind::disk; }

SearchWindow default_window(const RunConfig& rc) {
    if (rc.solver.window) return *rc.solver.window;
    const double r = rc.cavity.shape.a;
    return SearchWindow{{0.05 / r, -0.5 / r}, {2.0 / r, 0.1 / r}};
}

Json residue_json(const ResidueResult& r) {
    return Json{{"c_contour", to_json(r.c)},   {"sigma_ratio", r.sigma_ratio}, {"asymmetry", r.asymmetry},
                {"winding", r.winding},        {"rho", r.rho},                 {"points", r.points},
                {"probes", r.probes}};
}

// Shift prediction for any particle size/position of a fixed particle section.
class ShiftEngine {
public:
    ShiftEngine(const ResonanceRecord& rec, const ParticleSection& ps, const CavityConfig& cav) : rec_(rec), ps_(ps) {
        auto& p = ps_.particle;
        if (p.drude) {
            if (p.position != ParticlePosition::internal)
                throw InvalidArgument("plasmonic shifts are supported for internal particles only");
            spec_ = w_spectrum(p.shape, build_boundary_quadrature(p.shape, ps.boundary_nodes), ps.w_count);
            if (ps.tune_omega_p) p.drude->omega_p = rec.omega0.real() / std::sqrt(1.0 - spec_->lambda[ps.w_index]);
        } else {
            m_ = polarization_tensor(p.shape, ps.boundary_nodes, cav.mu_m / p.mu_c);
        }
        if (p.position == ParticlePosition::external) g_.emplace(rec);
    }

    ShiftPrediction operator()(const ParticleConfig& p) const {
        if (p.drude) return plasmonic_shift(rec_, p, *spec_, ps_.w_index);
        if (p.position == ParticlePosition::external) return external_shift(rec_, *g_, p, *m_);
        return internal_shift(rec_, p, *m_);
    }

    // Particle of the section, with a tuned omega_p filled in.
    const ParticleConfig& particle() const { return ps_.particle; }

private:
    const ResonanceRecord& rec_;
    ParticleSection ps_;
    std::optional<Mat2> m_;
    std::optional<WSpectrum> spec_;
    std::optional<ExteriorMode> g_;
};

bool concentric_disks(const RunConfig& rc) {
    if (!rc.particle) return false;
    const auto& p = rc.particle->particle;
    return is_disk(rc.cavity.shape) && is_disk(p.shape) && p.shape.center.norm() == 0.0 &&
           (p.z - rc.cavity.shape.center).norm() < 1e-14;
}

}  // namespace

int seed_order(const std::string& function) {
    if (function == "x" || function == "y") return 1;
    if (function == "one" || function == "r2") return 0;
    if (function == "xy" || function == "x2-y2") return 2;
    throw InvalidArgument("unknown seed function '" + function + "'");
}

// ---------------------------------------------------------------- resonances

int cmd_resonances(const CliOptions& opt, std::ostream& log) {
    Session s(opt);
    Json list = Json::array();
    std::ostringstream plane;
    plane << "source,label,sector,re_omega,im_omega\n";
    for (std::size_t i = 0; i < s.rc.solver.seeds.size(); ++i) {
        const SeedSpec& seed = s.rc.solver.seeds[i];
        const ResonanceRecord rec = s.resonance(seed);
        Json j = resonance_to_json(rec);
        j["seed_function"] = seed.function;
        j["characteristic_residual"] = characteristic_residual(rec);
        if (s.rc.solver.residue) {
            const auto probes = default_probes(*s.model, rec.sector, s.rc.solver.probes, s.rc.solver.probe_radius);
            const ResidueResult rr = extract_residue(rec, s.rc.solver.contour_rho * std::abs(rec.omega0.imag()),
                                                     s.rc.solver.contour_points, probes);
            j["residue"] = residue_json(rr);
        }
        list.push_back(j);
        plane << "nystrom," << seed.function << "," << to_string(rec.sector) << "," << fmt17(rec.omega0.real()) << ","
              << fmt17(rec.omega0.imag()) << "\n";
        log << "resonance " << i << ": omega0 = " << fmt17(rec.omega0.real()) << " " << fmt17(rec.omega0.imag())
            << "i (" << to_string(rec.sector) << ", " << rec.iterations << " iterations)\n";
    }

    Json result;
    result["resonances"] = list;
    if (is_disk(s.rc.cavity.shape)) {
        const SearchWindow w = default_window(s.rc);
        Json ml = Json::array();
        for (int n : s.rc.solver.orders) {
            const MultilayerRoots roots =
                multilayer_disk_resonances(cavity_stack(s.rc.cavity, s.rc.cavity.shape.a, n), w);
            Json rj = Json::array();
            for (std::size_t k = 0; k < roots.roots.size(); ++k) {
                rj.push_back(Json{{"omega", to_json(roots.roots[k])}, {"residual", roots.residuals[k]}});
                plane << "multilayer,n=" << n << ",none," << fmt17(roots.roots[k].real()) << ","
                      << fmt17(roots.roots[k].imag()) << "\n";
            }
            ml.push_back(Json{{"order", n}, {"winding", roots.winding}, {"roots", rj}});
            log << "multilayer order " << n << ": " << roots.roots.size() << " root(s) in window\n";
        }
        result["multilayer"] = Json{{"window", Json::array({to_json(w.lo), to_json(w.hi)})}, {"orders", ml}};
    } else {
        result["multilayer"] = nullptr;
    }
    s.write_record("resonances", "resonance", result);
    s.write_csv("resonances_omega_plane.csv", plane.str());
    s.write_timing("resonances");
    return 0;
}

// ---------------------------------------------------------------- modes

int cmd_modes(const CliOptions& opt, std::ostream& log) {
    Session s(opt);
    Json list = Json::array();
    const auto& q = s.model->quad();
    for (std::size_t i = 0; i < s.rc.solver.seeds.size(); ++i) {
        const ResonanceRecord rec = s.resonance(s.rc.solver.seeds[i]);
        const std::string file = "mode_" + std::to_string(i) + ".csv";
        std::ostringstream os;
        os << "x,y,weight,re_e,im_e\n";
        for (Eigen::Index m = 0; m < q.size(); ++m)
            os << fmt17(q.nodes(m, 0)) << "," << fmt17(q.nodes(m, 1)) << "," << fmt17(q.weights[m]) << ","
               << fmt17(rec.mode[m].real()) << "," << fmt17(rec.mode[m].imag()) << "\n";
        s.write_csv(file, os.str());
        Json j = resonance_to_json(rec);
        j["mode_file"] = file;
        j["nodes"] = q.size();
        list.push_back(j);
        log << "mode " << i << " written to " << (s.out / file).string() << "\n";
    }
    s.write_record("modes", "mode", Json{{"modes", list}});
    s.write_timing("modes");
    return 0;
}

// ---------------------------------------------------------------- polarization

int cmd_polarization(const CliOptions& opt, std::ostream& log) {
    Session s(opt, false);
    const ParticleSection& ps = s.particle();
    const auto& p = ps.particle;
    const BoundaryQuadrature bq = build_boundary_quadrature(p.shape, ps.boundary_nodes);
    const NPOperator np = assemble_np(p.shape, bq);
    const VecX ev = np_eigenvalues(np);
    const WSpectrum ws = w_spectrum(p.shape, bq, ps.w_count);

    Json result;
    if (p.drude) {
        const cplx w = s.rc.solver.seeds.front().omega;
        const cplx k = cplx(s.rc.cavity.mu_m) / drude_mu(w, *p.drude);
        const Eigen::Matrix2cd m = polarization_tensor<cplx>(np, k);
        result["frequency"] = to_json(w);
        result["contrast"] = to_json(k);
        result["m"] = Json::array({Json::array({to_json(m(0, 0)), to_json(m(0, 1))}),
                                   Json::array({to_json(m(1, 0)), to_json(m(1, 1))})});
    } else {
        const double k = s.rc.cavity.mu_m / p.mu_c;
        const Mat2 m = polarization_tensor<double>(np, k);
        result["contrast"] = k;
        result["m"] = Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
        log << "M = [[" << fmt17(m(0, 0)) << ", " << fmt17(m(0, 1)) << "], [" << fmt17(m(1, 0)) << ", "
            << fmt17(m(1, 1)) << "]]\n";
    }
    result["boundary_nodes"] = ps.boundary_nodes;
    std::vector<double> top(ev.data(), ev.data() + std::min<Eigen::Index>(ev.size(), 2 * ps.w_count + 1));
    result["np_eigenvalues_leading"] = top;
    result["w_eigenvalues"] = std::vector<double>(ws.lambda.data(), ws.lambda.data() + ws.lambda.size());
    Json clusters = Json::array();
    for (const auto& c : w_clusters(ws)) clusters.push_back(c);
    result["w_clusters"] = clusters;

    std::ostringstream os;
    os << "index,np_eigenvalue\n";
    for (Eigen::Index i = 0; i < ev.size(); ++i) os << i << "," << fmt17(ev[i]) << "\n";
    s.write_csv("np_spectrum.csv", os.str());
    s.write_record("polarization", "polarization", result);
    s.write_timing("polarization");
    return 0;
}

// ---------------------------------------------------------------- shift

int cmd_shift(const CliOptions& opt, std::ostream& log) {
    Session s(opt);
    const ParticleSection& ps = s.particle();
    const SeedSpec& seed = s.rc.solver.seeds.front();
    const ResonanceRecord rec = s.resonance(seed);
    if (rec.exceptional) throw ExceptionalPointError("resonance is flagged exceptional; shift formulas do not apply");
    log << "resonance omega0 = " << fmt17(rec.omega0.real()) << " " << fmt17(rec.omega0.imag()) << "i\n";

    const ShiftEngine engine(rec, ps, s.rc.cavity);
    Json result;
    result["resonance"] = resonance_to_json(rec);
    const ShiftPrediction pred = engine(engine.particle());
    if (engine.particle().drude) result["omega_p"] = engine.particle().drude->omega_p;
    result["prediction"] = prediction_to_json(pred);
    log << to_string(pred.kind) << " shift = " << fmt17(pred.shift().real()) << " " << fmt17(pred.shift().imag())
        << "i" << (pred.degenerate ? " (degenerate-enhanced pair)" : "") << "\n";

    if (!ps.delta_list.empty()) {
        if (ps.particle.drude) throw ConfigError("delta_list convergence studies need a constant mu_c particle");
        if (ps.delta_list.size() < 4) throw ConfigError("delta_list needs at least 4 values for a convergence study");
        auto prediction = [&](double d) {
            ParticleConfig p = engine.particle();
            p.delta = d;
            return engine(p).shift();
        };
        std::function<cplx(double)> oracle;
        std::string oracle_name;
        cplx w_ml = rec.omega0;
        const int order = seed_order(seed.function);
        if (concentric_disks(s.rc)) {
            oracle_name = "multilayer";
            const double r = s.rc.cavity.shape.a;
            w_ml = multilayer_root_near(cavity_stack(s.rc.cavity, r, order), rec.omega0, 0.05 * std::abs(rec.omega0));
            oracle = [&, r, order](double d) {
                const double half = std::max(0.01, 4.0 * std::abs(prediction(d)));
                return multilayer_root_near(particle_stack(s.rc.cavity, r, d * ps.particle.shape.a, ps.particle.mu_c, order),
                                            w_ml, half) -
                       w_ml;
            };
        } else {
            oracle_name = "coupled";
            rec.model->prepare(rec.sector);
            oracle = [&](double d) {
                ParticleConfig p = ps.particle;
                p.delta = d;
                CoupledOptions co;
                co.particle_resolution = ps.particle_resolution;
                return coupled_perturbed_resonance(rec, p, co).omega - rec.omega0;
            };
        }
        ConvergenceStudy study;
        Json status = "complete";
        try {
            study = convergence_study(prediction, oracle, ps.delta_list, std::max(1, opt.workers));
        } catch (const ConvergenceAborted& e) {
            study = e.partial();
            status = std::string("aborted: ") + e.what();
        }
        Json conv = convergence_to_json(study);
        conv["oracle"] = oracle_name;
        conv["status"] = status;
        result["convergence"] = conv;
        s.write_csv("convergence.csv", study.csv());
        log << "convergence vs " << oracle_name << ": slope " << fmt17(study.slope) << "\n";
    }
    s.write_record("shift", "shift", result);
    s.write_timing("shift");
    return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const CliOptions& opt, std::ostream& log) {
    Session s(opt);
    if (!s.rc.sweep) throw ConfigError("sweep needs a [sweep] section");
    const SweepSection& sw = *s.rc.sweep;
    const ParticleSection& ps = s.particle();
    if (sw.parameter == "omega_p" && !ps.particle.drude)
        throw ConfigError("sweep over omega_p needs particle.drude_omega_p");
    const ResonanceRecord rec = s.resonance(s.rc.solver.seeds.front());
    const ShiftEngine engine(rec, ps, s.rc.cavity);
    rec.model->prepare(rec.sector);

    const long n = long(sw.values.size());
    std::vector<Json> rows(n);
    std::vector<std::vector<cplx>> roots(n);
    parallel_for(n, std::max(1, opt.workers), [&](long i) {
        ParticleConfig p = engine.particle();
        const double v = sw.values[i];
        if (sw.parameter == "omega_p") p.drude->omega_p = v;
        else if (sw.parameter == "delta") p.delta = v;
        else p.z.x() = v;
        try {
            const ShiftPrediction pr = engine(p);
            roots[i] = pr.roots;
            rows[i] = Json{{"value", v}, {"prediction", prediction_to_json(pr)}};
        } catch (const Error& e) {
            rows[i] = Json{{"value", v}, {"error", e.what()}};
        }
    });

    Json list = Json::array();
    std::ostringstream os;
    os << sw.parameter << ",root,re_shift,im_shift\n";
    for (long i = 0; i < n; ++i) {
        list.push_back(rows[i]);
        for (std::size_t k = 0; k < roots[i].size(); ++k)
            os << fmt17(sw.values[i]) << "," << k << "," << fmt17(roots[i][k].real()) << ","
               << fmt17(roots[i][k].imag()) << "\n";
    }
    s.write_record("sweep", "sweep", Json{{"parameter", sw.parameter}, {"resonance", resonance_to_json(rec)}, {"rows", list}});
    s.write_csv("sweep.csv", os.str());
    s.write_timing("sweep");
    log << "sweep over " << sw.parameter << ": " << n << " value(s)\n";
    return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const CliOptions& opt, std::ostream& log) {
    fs::path out = opt.out.empty() ? fs::path("out") : fs::path(opt.out);
    if (!opt.config.empty() && opt.out.empty()) out = load_run_config(opt.config).output.directory;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error("cannot create output directory '" + out.string() + "': " + ec.message());

    AcceptanceOptions a;
    a.quick = opt.quick;
    a.tolerance_factor = opt.tolerance_factor;
    a.workers = std::max(1, opt.workers);
    const auto t0 = clock_type::now();
    const AcceptanceReport rep = run_acceptance(a, [&](const CriterionResult& r) {
        AcceptanceReport one;
        one.criteria = {r};
        log << one.table() << std::flush;
    });
    write_text(out / "validation.json", dump(rep.to_json()));
    Json timing = rep.timing_json();
    timing["total_seconds"] = seconds_since(t0);
    write_text(out / "validation.timing.json", dump(timing));
    int failed = 0;
    for (const auto& c : rep.criteria) failed += c.pass ? 0 : 1;
    log << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion(s) failed") << "\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace cavshift
