// Runs every acceptance criterion and prints one PASS/FAIL line each.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cavshift/acceptance.hpp"

int main(int argc, char** argv) {
    using namespace cavshift;
    CLI::App app{"cavshift acceptance suite"};
    AcceptanceOptions opt;
    std::string report;
    app.add_flag("--quick", opt.quick, "reduced-resolution subset");
    app.add_option("--tolerance-factor", opt.tolerance_factor, "scale every error tolerance")->check(CLI::PositiveNumber);
    app.add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--only", opt.only, "criterion ids to run")->check(CLI::Range(1, acceptance_criterion_count));
    app.add_option("--report", report, "write the JSON report here");
    CLI11_PARSE(app, argc, argv);

    const AcceptanceReport rep = run_acceptance(opt, [](const CriterionResult& r) {
        AcceptanceReport one;
        one.criteria = {r};
        std::cout << one.table() << std::flush;
    });
    if (!report.empty()) std::ofstream(report) << dump(rep.to_json());
    std::cout << (rep.all_pass() ? "ALL PASS" : "SOME CRITERIA FAILED") << "\n";
    return rep.all_pass() ? 0 : 1;
}
