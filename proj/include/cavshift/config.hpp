#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavshift/cavity_spectrum.hpp"
#include "cavshift/oracle_suite.hpp"
#include "cavshift/particle_ops.hpp"

namespace cavshift {

// Minimal INI document: [section] headers, `key = value` lines, `;` or `#` comments.
// Every entry remembers its line for error messages.
class IniDocument {
public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static IniDocument parse(const std::string& text);
    static IniDocument load(const std::string& path);

    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
    int section_line(const std::string& s) const;
    const Entry* find(const std::string& section, const std::string& key) const;
    std::vector<std::string> sections() const;
    // Throws ConfigError for the first key never looked up.
    void reject_unused() const;

private:
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
};

struct SeedSpec {
    cplx omega = {0.69, -0.07};
    Sector sector = Sector::even;
    std::string function = "x";  // one | x | y | xy | r2 | x2-y2
};

std::function<double(const Vec2&)> seed_function(const std::string& name);

struct SolverSettings {
    std::vector<SeedSpec> seeds{SeedSpec{}};
    double tol = 1e-9;
    int max_iter = 30;
    bool residue = false;
    double contour_rho = 0.1;  // contour radius as a fraction of |Im omega0|
    int contour_points = 32;
    int probes = 8;
    double probe_radius = 0.12;
    std::optional<SearchWindow> window;
    std::vector<int> orders{0, 1, 2};
};

struct ParticleSection {
    ParticleConfig particle;
    std::vector<double> delta_list;  // strictly decreasing when present
    int boundary_nodes = 256;
    int w_count = 8;
    int w_index = 0;
    int particle_resolution = 16;
    // drude_omega_p = tuned: omega_p = Re(omega0) / sqrt(1 - lambda_j) of the selected W eigenvalue
    bool tune_omega_p = false;
};

struct SweepSection {
    std::string parameter = "omega_p";  // omega_p | delta | z_x
    std::vector<double> values;
};

struct OutputSection {
    std::string directory = "out";
    bool json = true;
    bool csv = true;
};

struct RunConfig {
    CavityConfig cavity;
    int resolution = 32;
    std::optional<ParticleSection> particle;
    SolverSettings solver;
    std::optional<SweepSection> sweep;
    OutputSection output;
};

RunConfig parse_run_config(const IniDocument& doc);
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);

}  // namespace cavshift
