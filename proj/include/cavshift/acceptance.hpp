#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cavshift/serialization.hpp"

namespace cavshift {

struct AcceptanceOptions {
    bool quick = false;            // reduced resolutions
    double tolerance_factor = 1.0; // multiplies every error tolerance
    int workers = 1;
    std::vector<int> only;         // empty: all criteria
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    Json metrics = Json::object();
    Json thresholds = Json::object();
    std::string detail;
    double seconds = 0.0;  // reported in the timing sidecar only
};

struct AcceptanceReport {
    bool quick = false;
    double tolerance_factor = 1.0;
    std::vector<CriterionResult> criteria;

    bool all_pass() const;
    // Deterministic report: no timings, no worker count.
    Json to_json() const;
    Json timing_json() const;
    // One "PASS|FAIL  id  name  detail" line per criterion.
    std::string table() const;
};

AcceptanceReport run_acceptance(const AcceptanceOptions& opt,
                                const std::function<void(const CriterionResult&)>& on_result = {});

inline constexpr int acceptance_criterion_count = 11;
const char* criterion_name(int id);

}  // namespace cavshift
