#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "secest/estimation.hpp"
#include "secest/model.hpp"
#include "secest/security.hpp"

namespace secest {

/// Sensor attack against one agent over a step window (inclusive bounds).
struct AttackSpec {
    enum class Kind { zeroing, bias, custom };

    int target = 0; // 0-based agent index
    Kind kind = Kind::zeroing;
    int k_start = 0;
    int k_end = std::numeric_limits<int>::max();
    Eigen::VectorXd bias;                   // bias kind
    std::vector<Eigen::VectorXd> sequence;  // custom kind, indexed by k - k_start

    bool active(int k) const { return k >= k_start && k <= k_end; }
};

/// Attack value a_i(k) for the spec's target agent; zero outside the window.
Eigen::VectorXd inject_attack(const AttackSpec& spec, const Eigen::VectorXd& x,
                              const MultiAgentSystem& system, int k);

struct DesiredStateSpec {
    enum class Mode { autonomous, platoon };
    Mode mode = Mode::autonomous;
    /// Autonomous mode: initial targets per agent (n x N), evolved by
    /// x*(k+1) = A x*(k).
    Eigen::MatrixXd x_star0;
    // Platoon mode: leader ramp plus follower gaps fed by neighbor estimates.
    double leader_position = 200.0;
    double leader_speed = 15.0;
    double gap = 20.0;
};

struct ScenarioConfig {
    MultiAgentSystem system;
    CostModel costs;
    std::optional<SecurityMeasure> phi; // explicit measure; planned otherwise
    PlanAlgorithm algorithm = PlanAlgorithm::efficient;

    std::optional<double> omega; // empty = designed value
    std::optional<int> L;        // empty = certified minimum
    Eigen::MatrixXd Kp;

    int horizon = 1000;
    std::uint64_t seed = 0;
    double delta_w = 0.0;
    double delta_v = 0.0;
    double sample_time = 0.0; // platoon leader ramp step

    std::vector<AttackSpec> attacks;
    DesiredStateSpec desired;
    Eigen::MatrixXd x0;      // n x N
    Eigen::MatrixXd xi_hat0; // nN x N

    BasisKind basis = BasisKind::jordan;
    ModeFilter filter = ModeFilter::all;

    bool record_outputs = false;

    void validate() const;
};

/// Vehicle-platoon scenario: double-integrator vehicles sampled at T, the
/// lead vehicle measuring its own state and every follower adding the
/// relative state to the vehicle ahead, communication with up to two nearest
/// neighbors on each side.
ScenarioConfig build_platoon(int N, double T, double delta_w, double delta_v, CostModel costs);

enum class NoiseStream : std::uint64_t { process = 1, measurement = 2 };

/// Deterministic per-(seed, stream, agent, k) bounded noise: uniform random
/// direction scaled by a radius uniform on [0, bound].
Eigen::VectorXd gen_noise(std::uint64_t seed, NoiseStream stream, int agent, int k, double bound,
                          int dim);

struct TraceRecord {
    int k = 0;
    int agent = 0; // 0-based
    Eigen::VectorXd x, x_hat, x_star, u;
    double err_est = 0.0;
    double err_ctrl = 0.0;
    bool attack_active = false;
    double metric = 0.0; // running per-step performance value
};

struct BlockedAttackLog {
    int agent = 0;
    int steps = 0;
};

struct RunSummary {
    double eq7_tail_mean = 0.0;
    double eq7_tail_max = 0.0;
    double max_est_err_tail = 0.0;
    double max_ctrl_err_tail = 0.0;
    int tail_start = 0;

    std::optional<double> est_bound;
    std::optional<double> ctrl_bound;
    bool est_bound_violated = false;
    bool ctrl_bound_violated = false;

    bool theta_hypothesis = false;  // theta0*||A|| < 1
    bool rounds_hypothesis = false; // L above the certified minimum
    bool gain_hypothesis = false;   // ||A - B Kp|| < 1
    double sharp_norm = 0.0;
    double perp_norm = 0.0;
    bool projected_stable = false;

    std::vector<BlockedAttackLog> blocked_attacks;
    SecurityPlan plan;
    EstimatorParams params;
};

struct RunResult {
    std::vector<TraceRecord> trace;
    RunSummary summary;
    /// Stacked outputs y(k) for k = 1..horizon when record_outputs is set.
    std::vector<Eigen::VectorXd> outputs;
};

/// Plans (or adopts) the security measure, designs the estimator, then runs
/// the closed loop for the configured horizon.
RunResult run_scenario(const ScenarioConfig& config);

/// Tail statistics over the final fifth of the horizon (at least
/// min(200, steps) records) plus bound-violation flags when bounds are given.
struct TailMetrics {
    double eq7_mean = 0.0;
    double eq7_max = 0.0;
    double max_est_err = 0.0;
    double max_ctrl_err = 0.0;
    int tail_start = 0;
};
TailMetrics compute_metrics(const std::vector<TraceRecord>& trace, int agent_count);

/// Planner front-end shared by the CLI and the simulator: runs the requested
/// algorithm, falling back to brute force when the relaxation vertex is
/// fractional.
SecurityPlan plan_security(const MultiAgentSystem& system, const CostModel& costs,
                           const EigenmodeBasis& basis, ModeFilter filter,
                           PlanAlgorithm algorithm);

void write_trace_csv(const std::string& path, const RunResult& result,
                     const ScenarioConfig& config);

} // namespace secest
