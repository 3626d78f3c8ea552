#pragma once

#include "rst/config.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace rst {

const char* engine_version();

namespace exit_code {
constexpr int ok = 0;
constexpr int failure = 1;
constexpr int invalid_input = 2;
constexpr int infeasible = 3;
constexpr int non_convergence = 4;
} // namespace exit_code

struct Outcome {
    nlohmann::ordered_json report;
    int exit_code = exit_code::ok;
};

/// Metadata block shared by every report: engine version, command, seed,
/// config hash, the defaults in force and the effective configuration.
nlohmann::ordered_json report_header(const RunConfig& config, const std::string& command);

nlohmann::ordered_json scenario_json(const ReferenceModel& model, const ScenarioVector& s);
nlohmann::ordered_json design_point_json(const ReferenceModel& model, const DesignPointResult& result);
/// Per-sector stressed PD / LGD at s next to their baseline values.
nlohmann::ordered_json sector_table(const LoadedProblem& problem, const ScenarioVector& s);
nlohmann::ordered_json scenario_list_json(const ReferenceModel& model, const Membership& member,
                                          const CandidatePool& pool, const ScenarioList& list);

Outcome run_design_point(const RunConfig& config);
Outcome run_scenario_list(const RunConfig& config);
/// Writes the contour grid as CSV to `csv`; the outcome summarises the grid.
Outcome run_contour(const RunConfig& config, std::ostream& csv);
Outcome run_validate(const RunConfig& config);
Outcome run_mc_check(const RunConfig& config);

/// Row-major grid over a 2-D slice with columns g, x, m2, ratio, breach,
/// in_S_eta, in_N_eps. Membership columns are 0 when s_star is null.
void emit_contours(const ReferenceModel& model, const CapitalModel& capital, const ScenarioVector* s_star,
                   const RunConfig& config, std::ostream& csv);

} // namespace rst
