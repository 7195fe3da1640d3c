#include "cavshift/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "cavshift/errors.hpp"

namespace cavshift {

// ---------------------------------------------------------------- INI document

IniDocument IniDocument::parse(const std::string& text) {
    IniDocument doc;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        for (const char* mark : {" ;", " #", "\t;", "\t#"}) {
            const auto pos = s.find(mark);
            if (pos != std::string::npos) s.erase(pos);
        }
        boost::algorithm::trim(s);
        if (s.empty() || s[0] == ';' || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("malformed section header", line);
            section = boost::algorithm::trim_copy(s.substr(1, s.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line);
            if (doc.sections_.count(section)) throw ConfigError("duplicate section [" + section + "]", line);
            doc.sections_[section];
            doc.section_lines_[section] = line;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        if (section.empty()) throw ConfigError("key outside of any section", line);
        const std::string key = boost::algorithm::trim_copy(s.substr(0, eq));
        const std::string value = boost::algorithm::trim_copy(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line);
        auto& sec = doc.sections_[section];
        if (sec.count(key)) throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
        sec[key] = Entry{value, line, false};
    }
    return doc;
}

IniDocument IniDocument::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'", 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

int IniDocument::section_line(const std::string& s) const {
    const auto it = section_lines_.find(s);
    return it == section_lines_.end() ? 0 : it->second;
}

const IniDocument::Entry* IniDocument::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
}

std::vector<std::string> IniDocument::sections() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : sections_) out.push_back(name);
    return out;
}

void IniDocument::reject_unused() const {
    for (const auto& [name, sec] : sections_)
        for (const auto& [key, e] : sec)
            if (!e.used) throw ConfigError("unknown key '" + key + "' in [" + name + "]", e.line);
}

// ---------------------------------------------------------------- typed readers

namespace {

std::vector<std::string> split_list(const std::string& v, const char* seps = ",") {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, v, boost::algorithm::is_any_of(seps));
    for (auto& p : parts) boost::algorithm::trim(p);
    if (parts.size() == 1 && parts[0].empty()) parts.clear();
    return parts;
}

double to_double(const std::string& s, const std::string& field, int line) {
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(field + ": expected a number, got '" + s + "'", line);
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError(field + ": expected a number, got '" + s + "'", line);
    return v;
}

int to_int(const std::string& s, const std::string& field, int line) {
    const double v = to_double(s, field, line);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(field + ": expected an integer", line);
    return static_cast<int>(v);
}

class Reader {
public:
    Reader(const IniDocument& d, std::string section) : doc_(d), sec_(std::move(section)) {}

    const IniDocument::Entry* entry(const std::string& key) const { return doc_.find(sec_, key); }
    std::string name(const std::string& key) const { return sec_ + "." + key; }
    int line_of(const std::string& key) const {
        const auto* e = entry(key);
        return e ? e->line : doc_.section_line(sec_);
    }

    double num(const std::string& key, double def) const {
        const auto* e = entry(key);
        return e ? to_double(e->value, name(key), e->line) : def;
    }
    int integer(const std::string& key, int def) const {
        const auto* e = entry(key);
        return e ? to_int(e->value, name(key), e->line) : def;
    }
    std::string str(const std::string& key, const std::string& def) const {
        const auto* e = entry(key);
        return e ? e->value : def;
    }
    bool flag(const std::string& key, bool def) const {
        const auto* e = entry(key);
        if (!e) return def;
        const std::string v = boost::algorithm::to_lower_copy(e->value);
        if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
        if (v == "false" || v == "no" || v == "off" || v == "0") return false;
        throw ConfigError(name(key) + ": expected true or false", e->line);
    }
    std::vector<double> nums(const std::string& key) const {
        std::vector<double> out;
        const auto* e = entry(key);
        if (!e) return out;
        for (const auto& p : split_list(e->value)) out.push_back(to_double(p, name(key), e->line));
        return out;
    }
    Vec2 point(const std::string& key, Vec2 def) const {
        const auto* e = entry(key);
        if (!e) return def;
        const auto v = nums(key);
        if (v.size() != 2) throw ConfigError(name(key) + ": expected 'x, y'", e->line);
        return {v[0], v[1]};
    }
    cplx complex(const std::string& key, cplx def) const {
        const auto* e = entry(key);
        if (!e) return def;
        const auto v = nums(key);
        if (v.size() != 2) throw ConfigError(name(key) + ": expected 're, im'", e->line);
        return {v[0], v[1]};
    }
    void positive(const std::string& key, double v) const {
        if (!(v > 0.0)) throw ConfigError(name(key) + " must be positive", line_of(key));
    }

private:
    const IniDocument& doc_;
    std::string sec_;
};

Shape2D read_shape(const Reader& r, const std::string& default_kind) {
    const std::string kind = r.str("shape", default_kind);
    const Vec2 center = r.point("center", Vec2::Zero());
    const double rot = r.num("rotation", 0.0);
    Shape2D s;
    try {
        switch (shape_kind_from_string(kind)) {
            case ShapeKind::disk: {
                const double rad = r.num("radius", 1.0);
                r.positive("radius", rad);
                s = Shape2D::disk(rad, center);
                s.rotation = rot;
                break;
            }
            case ShapeKind::ellipse: {
                const double a = r.num("a", 1.0), b = r.num("b", 0.5);
                r.positive("a", a);
                r.positive("b", b);
                s = Shape2D::ellipse(a, b, center, rot);
                break;
            }
            case ShapeKind::star: {
                const double r0 = r.num("r0", 1.0);
                r.positive("r0", r0);
                s = Shape2D::star(r0, r.nums("cos"), r.nums("sin"), center, rot);
                break;
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(r.name("shape") + ": " + e.what(), r.line_of("shape"));
    }
    try {
        validate_shape(s);
    } catch (const Error& e) {
        throw ConfigError(r.name("shape") + ": " + e.what(), r.line_of("shape"));
    }
    return s;
}

Sector read_sector(const Reader& r, const std::string& key, const std::string& def) {
    try {
        return sector_from_string(r.str(key, def));
    } catch (const Error& e) {
        throw ConfigError(r.name(key) + ": " + e.what(), r.line_of(key));
    }
}

}  // namespace

std::function<double(const Vec2&)> seed_function(const std::string& name) {
    if (name == "one") return [](const Vec2&) { return 1.0; };
    if (name == "x") return [](const Vec2& x) { return x.x(); };
    if (name == "y") return [](const Vec2& x) { return x.y(); };
    if (name == "xy") return [](const Vec2& x) { return x.x() * x.y(); };
    if (name == "r2") return [](const Vec2& x) { return x.squaredNorm(); };
    if (name == "x2-y2") return [](const Vec2& x) { return x.x() * x.x() - x.y() * x.y(); };
    throw InvalidArgument("unknown seed function '" + name + "'");
}

RunConfig parse_run_config(const IniDocument& doc) {
    RunConfig rc;
    if (!doc.has_section("cavity")) throw ConfigError("missing [cavity] section", 0);

    {
        const Reader r(doc, "cavity");
        rc.cavity.shape = read_shape(r, "disk");
        rc.cavity.eps_c = r.num("eps_c", 1.0);
        rc.cavity.eps_m = r.num("eps_m", 1.0);
        rc.cavity.mu_m = r.num("mu_m", 1.0);
        rc.cavity.tau = r.num("tau", 10.0);
        for (const char* k : {"eps_c", "eps_m", "mu_m", "tau"})
            r.positive(k, k == std::string("eps_c")   ? rc.cavity.eps_c
                          : k == std::string("eps_m") ? rc.cavity.eps_m
                          : k == std::string("mu_m")  ? rc.cavity.mu_m
                                                      : rc.cavity.tau);
        rc.resolution = r.integer("resolution", 32);
        if (rc.resolution < 8 || rc.resolution % 2 != 0)
            throw ConfigError("cavity.resolution must be an even integer >= 8", r.line_of("resolution"));
    }

    if (doc.has_section("particle")) {
        const Reader r(doc, "particle");
        ParticleSection ps;
        ParticleConfig& p = ps.particle;
        p.shape = read_shape(r, "disk");
        p.z = r.point("z", Vec2::Zero());
        const std::string pos = r.str("position", "internal");
        if (pos == "internal") p.position = ParticlePosition::internal;
        else if (pos == "external") p.position = ParticlePosition::external;
        else throw ConfigError("particle.position must be internal or external", r.line_of("position"));
        ps.delta_list = r.nums("delta_list");
        p.delta = r.num("delta", ps.delta_list.empty() ? 0.02 : ps.delta_list.front());
        r.positive("delta", p.delta);
        for (std::size_t i = 0; i < ps.delta_list.size(); ++i) {
            r.positive("delta_list", ps.delta_list[i]);
            if (i > 0 && !(ps.delta_list[i] < ps.delta_list[i - 1]))
                throw ConfigError("particle.delta_list must be strictly decreasing", r.line_of("delta_list"));
        }
        const auto* wp = r.entry("drude_omega_p");
        if (wp) {
            double v = 1.0;
            if (wp->value == "tuned") {
                ps.tune_omega_p = true;
            } else {
                v = r.num("drude_omega_p", 1.0);
                r.positive("drude_omega_p", v);
            }
            p.drude = DrudeParams{v, rc.cavity.mu_m};
            if (r.entry("mu_c")) throw ConfigError("particle: give either mu_c or drude_omega_p", r.line_of("mu_c"));
        } else {
            p.mu_c = r.num("mu_c", 0.5 * rc.cavity.mu_m);
            r.positive("mu_c", p.mu_c);
        }
        ps.boundary_nodes = r.integer("boundary_nodes", 256);
        if (ps.boundary_nodes < 16 || ps.boundary_nodes % 2 != 0)
            throw ConfigError("particle.boundary_nodes must be an even integer >= 16", r.line_of("boundary_nodes"));
        ps.w_count = r.integer("w_count", 8);
        if (ps.w_count < 1 || ps.w_count > ps.boundary_nodes / 2)
            throw ConfigError("particle.w_count out of range", r.line_of("w_count"));
        ps.w_index = r.integer("w_index", 0);
        if (ps.w_index < 0 || ps.w_index >= ps.w_count)
            throw ConfigError("particle.w_index must be below w_count", r.line_of("w_index"));
        ps.particle_resolution = r.integer("resolution", 16);
        if (ps.particle_resolution < 8 || ps.particle_resolution % 2 != 0)
            throw ConfigError("particle.resolution must be an even integer >= 8", r.line_of("resolution"));
        rc.particle = ps;
    }

    if (doc.has_section("solver")) {
        const Reader r(doc, "solver");
        SolverSettings& s = rc.solver;
        if (const auto* e = r.entry("seeds")) {
            s.seeds.clear();
            for (const auto& group : split_list(e->value, ";")) {
                std::vector<std::string> f;
                boost::algorithm::split(f, group, boost::algorithm::is_space(), boost::algorithm::token_compress_on);
                if (f.size() != 4) throw ConfigError("solver.seeds: expected 're im sector function' groups", e->line);
                SeedSpec sp;
                sp.omega = {to_double(f[0], "solver.seeds", e->line), to_double(f[1], "solver.seeds", e->line)};
                try {
                    sp.sector = sector_from_string(f[2]);
                    seed_function(f[3]);
                } catch (const Error& err) {
                    throw ConfigError(std::string("solver.seeds: ") + err.what(), e->line);
                }
                sp.function = f[3];
                s.seeds.push_back(sp);
            }
            if (s.seeds.empty()) throw ConfigError("solver.seeds: empty list", e->line);
        } else {
            SeedSpec sp;
            sp.omega = r.complex("seed", sp.omega);
            sp.sector = read_sector(r, "sector", "even");
            sp.function = r.str("seed_function", "x");
            try {
                seed_function(sp.function);
            } catch (const Error& err) {
                throw ConfigError(std::string("solver.seed_function: ") + err.what(), r.line_of("seed_function"));
            }
            s.seeds = {sp};
        }
        for (const auto& sp : s.seeds)
            if (!(sp.omega.real() > 0.0)) throw ConfigError("solver: seed must have positive real part", r.line_of("seed"));
        s.tol = r.num("tol", s.tol);
        r.positive("tol", s.tol);
        s.max_iter = r.integer("max_iter", s.max_iter);
        if (s.max_iter < 1) throw ConfigError("solver.max_iter must be >= 1", r.line_of("max_iter"));
        s.residue = r.flag("residue", s.residue);
        s.contour_rho = r.num("contour_rho", s.contour_rho);
        r.positive("contour_rho", s.contour_rho);
        s.contour_points = r.integer("contour_points", s.contour_points);
        if (s.contour_points < 8) throw ConfigError("solver.contour_points must be >= 8", r.line_of("contour_points"));
        s.probes = r.integer("probes", s.probes);
        if (s.probes < 2) throw ConfigError("solver.probes must be >= 2", r.line_of("probes"));
        s.probe_radius = r.num("probe_radius", s.probe_radius);
        if (!(s.probe_radius > 0.0 && s.probe_radius < 1.0))
            throw ConfigError("solver.probe_radius must lie in (0, 1)", r.line_of("probe_radius"));
        if (const auto* e = r.entry("window")) {
            const auto v = r.nums("window");
            if (v.size() != 4 || !(v[2] > v[0]) || !(v[3] > v[1]) || !(v[0] > 0.0))
                throw ConfigError("solver.window: expected 're_lo, im_lo, re_hi, im_hi' with re_lo > 0", e->line);
            s.window = SearchWindow{cplx(v[0], v[1]), cplx(v[2], v[3])};
        }
        if (const auto* e = r.entry("orders")) {
            s.orders.clear();
            for (double v : r.nums("orders")) {
                if (v < 0 || v != std::floor(v)) throw ConfigError("solver.orders: non-negative integers", e->line);
                s.orders.push_back(static_cast<int>(v));
            }
        }
    }

    if (doc.has_section("sweep")) {
        const Reader r(doc, "sweep");
        SweepSection sw;
        sw.parameter = r.str("parameter", sw.parameter);
        if (sw.parameter != "omega_p" && sw.parameter != "delta" && sw.parameter != "z_x")
            throw ConfigError("sweep.parameter must be omega_p, delta or z_x", r.line_of("parameter"));
        sw.values = r.nums("values");
        if (sw.values.empty()) throw ConfigError("sweep.values: at least one value required", r.line_of("values"));
        rc.sweep = sw;
    }

    if (doc.has_section("output")) {
        const Reader r(doc, "output");
        rc.output.directory = r.str("directory", rc.output.directory);
        rc.output.json = false;
        rc.output.csv = false;
        for (const auto& f : split_list(r.str("formats", "json, csv"))) {
            if (f == "json") rc.output.json = true;
            else if (f == "csv") rc.output.csv = true;
            else throw ConfigError("output.formats: unknown format '" + f + "'", r.line_of("formats"));
        }
    }

    for (const auto& s : doc.sections())
        if (s != "cavity" && s != "particle" && s != "solver" && s != "sweep" && s != "output")
            throw ConfigError("unknown section [" + s + "]", doc.section_line(s));
    doc.reject_unused();
    return rc;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(IniDocument::load(path)); }

RunConfig parse_run_config_text(const std::string& text) { return parse_run_config(IniDocument::parse(text)); }

}  // namespace cavshift
