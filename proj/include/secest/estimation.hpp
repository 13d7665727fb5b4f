#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "secest/model.hpp"
#include "secest/security.hpp"

namespace secest {

/// Tuning of the distributed estimator/controller plus the operator norms
/// entering the error bounds.
struct EstimatorParams {
    double omega = 0.0;      // consensus gain
    int L = 1;               // consensus rounds per sampling step
    Eigen::MatrixXd Kp;      // feedback gain, m x n
    double theta0 = 0.0;     // max over secure agents of ||I - C_i' C_i||
    double nu0 = 0.0;        // max over secure agents of ||C_i||
    double gamma_perp = 0.0; // (lambda_max - lambda_2)/(lambda_max + lambda_2)
};

/// omega = 2 / (lambda_2 + lambda_max).
double design_omega(const CommGraph& graph);

/// max over the secure set of ||I_{nN} - C_i' C_i||.
double secure_update_norm(const MultiAgentSystem& system, const std::vector<int>& secure_set);
/// max over the secure set of ||C_i||.
double secure_output_norm(const MultiAgentSystem& system, const std::vector<int>& secure_set);

struct ConsensusRounds {
    enum class Kind { any_l, finite, infeasible };
    Kind kind = Kind::infeasible;
    int L = 0;           // finite case
    double bound = 0.0;  // the strict lower bound L must exceed
};

/// Smallest certified consensus-round count. `any_l` when the disagreement
/// contraction is zero, `infeasible` when theta0*||A|| >= 1.
ConsensusRounds min_consensus_rounds(const MultiAgentSystem& system,
                                     const std::vector<int>& secure_set);

struct GainCheck {
    double norm = 0.0; // ||A - B Kp||
    bool contractive = false;
};
GainCheck check_gain(const LtiModel& model, const Eigen::MatrixXd& Kp);

/// Fills omega/L automatically when not supplied; throws HypothesisViolated
/// when no L can be certified and none was given.
EstimatorParams design_params(const MultiAgentSystem& system, const std::vector<int>& secure_set,
                              Eigen::MatrixXd Kp, std::optional<double> omega = std::nullopt,
                              std::optional<int> L = std::nullopt);

/// One agent's estimate of the full lifted state.
struct AgentEstimatorState {
    Eigen::VectorXd xi_hat; // length nN
};

std::vector<AgentEstimatorState> initial_states(const MultiAgentSystem& system,
                                                const Eigen::MatrixXd& xi_hat0);

/// Agent i's estimate of its own state: the i-th n-block of xi_hat.
Eigen::VectorXd own_estimate(const AgentEstimatorState& state, int agent, int n);

/// One synchronous step: time update with the fused global input, secure
/// observation update, then L consensus rounds over graph neighbors.
std::vector<AgentEstimatorState> step_estimator(const std::vector<AgentEstimatorState>& states,
                                                const MultiAgentSystem& system,
                                                const SecurityMeasure& measure,
                                                const EstimatorParams& params,
                                                const Eigen::VectorXd& fused_input,
                                                const std::vector<Eigen::VectorXd>& y);

/// u_i = Kp (x*_i - xhat_i).
Eigen::VectorXd control_input(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_star,
                              const Eigen::MatrixXd& Kp);

/// Number of flooding rounds needed for every agent to hold every input.
int input_fusion_rounds(const CommGraph& graph);

/// Synchronous flooding of the per-agent inputs for diameter(G) rounds;
/// returns the exact stacked input vector.
Eigen::VectorXd input_fusion(const std::vector<Eigen::VectorXd>& local_inputs,
                             const CommGraph& graph);

/// Asymptotic estimation-error bound. Throws HypothesisViolated when
/// theta0*||A|| >= 1 or L fails the round-count inequality.
double estimation_error_bound(const MultiAgentSystem& system, const std::vector<int>& secure_set,
                              const EstimatorParams& params, double delta_w, double delta_v);

/// Asymptotic control-error bound (||B Kp|| * est_bound + delta_w) /
/// (1 - ||A - B Kp||). Throws GainHypothesisViolated when the closed-loop
/// norm is not below one.
double control_error_bound(const LtiModel& model, const Eigen::MatrixXd& Kp, double est_bound,
                           double delta_w);

/// Closed-form recursion of the stacked estimation error
/// E(k) = M E(k-1) + Dw (1 (x) w(k-1)) + Dv v(k), with operator norms of M
/// projected onto the consensus subspace and its complement.
struct ExtendedErrorSystem {
    Eigen::MatrixXd M;
    Eigen::MatrixXd Dw;
    Eigen::MatrixXd Dv;
    double sharp_norm = 0.0; // ||P_sharp M||
    double perp_norm = 0.0;  // ||P_perp M||
    bool stable = false;     // both norms below one
};

ExtendedErrorSystem build_extended_error_system(const MultiAgentSystem& system,
                                                const SecurityMeasure& measure,
                                                const EstimatorParams& params);

} // namespace secest
