#pragma once

#include <iosfwd>
#include <string>

#include "cavshift/config.hpp"
#include "cavshift/serialization.hpp"

namespace cavshift {

struct CliOptions {
    std::string config;  // path to the INI run configuration
    std::string out;     // overrides [output] directory when set
    std::string cache;   // operator cache directory (falls back to CAVSHIFT_CACHE_DIR)
    int workers = 1;
    bool quick = false;
    double tolerance_factor = 1.0;  // validate only
};

// Each command writes <name>.json, <name>.timing.json and its CSV tables into the output
// directory and returns a process exit status. Errors propagate as exceptions.
int cmd_resonances(const CliOptions& opt, std::ostream& log);
int cmd_modes(const CliOptions& opt, std::ostream& log);
int cmd_polarization(const CliOptions& opt, std::ostream& log);
int cmd_shift(const CliOptions& opt, std::ostream& log);
int cmd_sweep(const CliOptions& opt, std::ostream& log);
int cmd_validate(const CliOptions& opt, std::ostream& log);

// Angular order of a seed function on a centered disk (x, y: 1; one, r2: 0; xy, x2-y2: 2).
int seed_order(const std::string& function);

}  // namespace cavshift
