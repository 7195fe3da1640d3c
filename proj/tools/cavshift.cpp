#include <iostream>

#include <CLI11.hpp>

#include "cavshift/cli_app.hpp"
#include "cavshift/errors.hpp"

int main(int argc, char** argv) {
    using namespace cavshift;
    CLI::App app{"Resonance shifts of dielectric cavities perturbed by small particles"};
    app.set_version_flag("--version", std::string(artifact_version()));
    app.require_subcommand(1);

    CliOptions opt;
    auto add_common = [&](CLI::App* c, bool config_required) {
        auto* o = c->add_option("--config", opt.config, "run configuration (INI)");
        if (config_required) o->required()->check(CLI::ExistingFile);
        c->add_option("--out", opt.out, "output directory (overrides [output] directory)");
        c->add_option("--cache", opt.cache, "operator cache directory (default: $CAVSHIFT_CACHE_DIR)");
        c->add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
        c->add_flag("--quick", opt.quick, "reduced-resolution subset (validate)");
    };

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const CliOptions&, std::ostream&);
    };
    const Command commands[] = {
        {"resonances", "find resonances and cross-list multilayer roots", cmd_resonances},
        {"modes", "write resonance modes on the quadrature grid", cmd_modes},
        {"polarization", "polarization tensor and NP spectrum of the particle", cmd_polarization},
        {"shift", "predict the resonance shift (and convergence table for delta_list)", cmd_shift},
        {"sweep", "sweep omega_p, delta or z_x", cmd_sweep},
        {"validate", "run the acceptance suite", cmd_validate},
    };
    int (*selected)(const CliOptions&, std::ostream&) = nullptr;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        const bool is_validate = std::string(c.name) == "validate";
        add_common(sub, !is_validate);
        if (is_validate)
            sub->add_option("--tolerance-factor", opt.tolerance_factor, "scale every error tolerance")
                ->check(CLI::PositiveNumber);
        sub->callback([&selected, run = c.run] { selected = run; });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        return selected(opt, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
