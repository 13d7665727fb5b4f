#pragma once

#include <string>

#include <json.hpp>

#include "secest/estimation.hpp"
#include "secest/security.hpp"
#include "secest/sim.hpp"

namespace secest {

/// Loads a scenario document. Either a full system description
/// ("A","B","N","adjacency","C") or a {"platoon": {"N","T"}} preset, plus
/// costs, noise, estimator settings, attacks, desired states and overrides.
ScenarioConfig load_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario_file(const std::string& path);

nlohmann::json plan_to_json(const SecurityPlan& plan, const EigenmodeBasis& basis);

struct DesignReport {
    double omega = 0.0;
    ConsensusRounds rounds;
    EstimatorParams params;
    std::optional<double> est_bound;
    std::optional<double> ctrl_bound;
    GainCheck gain;
    double theta_norm_product = 0.0; // theta0 * ||A||
    double sharp_norm = 0.0;
    double perp_norm = 0.0;
    bool projected_stable = false;
};

/// Computes the full parameter-design report for a fixed measure.
DesignReport design_report(const ScenarioConfig& config, const SecurityMeasure& measure);
nlohmann::json design_report_to_json(const DesignReport& report);

nlohmann::json summary_to_json(const RunSummary& summary, const EigenmodeBasis& basis);

nlohmann::json attack_synthesis_to_json(const AttackSynthesis& synth,
                                        const MultiAgentSystem& system,
                                        const SecurityMeasure& measure, int horizon);

/// Reads a synthesized-attack document back into per-agent custom specs.
std::vector<AttackSpec> attack_specs_from_json(const nlohmann::json& doc,
                                               const MultiAgentSystem& system);

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const std::string& what);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);

} // namespace secest
