#pragma once

#include "statcom/scenario.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace statcom::scenario {

/// One acceptance bound on a named metric of a golden scenario. The basis
/// string records where the bound comes from (measured hardware behaviour,
/// an analytic prediction, or a design budget).
struct Expectation {
    std::string metric;
    double lo = 0.0;
    double hi = 0.0;
    std::string basis;
};

/// A named, fully pinned scenario plus the bounds its run must satisfy.
struct GoldenScenario {
    std::string name;
    std::string summary;
    ScenarioConfig config;
    std::vector<Expectation> expectations;
};

/// The built-in golden library (stable order, stable names).
const std::vector<GoldenScenario>& golden_scenarios();

/// nullptr when no golden carries the name.
const GoldenScenario* find_golden(std::string_view name);

/// Every metric the named golden's expectations refer to, computed from a
/// finished run. Generic plant-invariant metrics (energy residual, diode
/// violations) are always present.
std::map<std::string, double> golden_metrics(const GoldenScenario& golden,
                                             const RunOutput& out);

struct ExpectationResult {
    std::string metric;
    double measured = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
};

struct GoldenReport {
    std::string name;
    std::vector<ExpectationResult> results;
    std::string error;  ///< non-empty when the run itself failed
    bool pass = false;
};

/// Run the given goldens (fanned out over up to n_threads workers; each run
/// stays single-threaded) and evaluate their expectations.
std::vector<GoldenReport> validate(const std::vector<GoldenScenario>& goldens,
                                   unsigned n_threads = 0);

/// Fixed-width pass/fail table with measured vs bounds, one line per metric.
std::string format_report(const std::vector<GoldenReport>& reports);

}  // namespace statcom::scenario
