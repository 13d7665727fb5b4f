#include "secest/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace secest {

namespace {

/// Worst contraction of the consensus operator on the disagreement
/// directions for an arbitrary gain: max_{i>=2} |1 - omega*lambda_i|.
double disagreement_contraction(const CommGraph& graph, double omega) {
    double worst = 0.0;
    for (int i = 1; i < graph.N(); ++i) {
        worst = std::max(worst, std::abs(1.0 - omega * graph.eigenvalues()[i]));
    }
    return worst;
}

} // namespace

double design_omega(const CommGraph& graph) {
    if (graph.N() < 2) throw DisconnectedGraph("consensus gain needs at least two agents");
    return 2.0 / (graph.lambda2() + graph.lambda_max());
}

double secure_update_norm(const MultiAgentSystem& system, const std::vector<int>& secure_set) {
    const int d = system.n() * system.N();
    double worst = 0.0;
    for (int i : secure_set) {
        const Eigen::MatrixXd M =
            Eigen::MatrixXd::Identity(d, d) - system.C(i).transpose() * system.C(i);
        worst = std::max(worst, operator_norm(M));
    }
    return worst;
}

double secure_output_norm(const MultiAgentSystem& system, const std::vector<int>& secure_set) {
    double worst = 0.0;
    for (int i : secure_set) worst = std::max(worst, operator_norm(system.C(i)));
    return worst;
}

ConsensusRounds min_consensus_rounds(const MultiAgentSystem& system,
                                     const std::vector<int>& secure_set) {
    if (secure_set.empty()) throw EmptySecureSet("round design needs a nonempty secure set");
    const double theta0 = secure_update_norm(system, secure_set);
    const double normA = operator_norm(system.model().A);
    const double x = theta0 * normA;
    const double gp = (system.graph().lambda_max() - system.graph().lambda2()) /
                      (system.graph().lambda_max() + system.graph().lambda2());

    ConsensusRounds out;
    if (x >= 1.0) {
        out.kind = ConsensusRounds::Kind::infeasible;
        return out;
    }
    if (gp <= 1e-12) {
        out.kind = ConsensusRounds::Kind::any_l;
        out.L = 1;
        return out;
    }
    if (x <= 0.0) {
        // Perfect secure observation: the round-count inequality has no
        // finite solution even though one round already suffices.
        out.kind = ConsensusRounds::Kind::infeasible;
        out.bound = std::numeric_limits<double>::infinity();
        return out;
    }
    const double bound = std::log(x) / std::log(gp); // ln((theta0||A||)^-1)/ln(1/gp)
    out.kind = ConsensusRounds::Kind::finite;
    out.bound = bound;
    const double rounded = std::round(bound);
    if (std::abs(bound - rounded) <= 1e-9) {
        out.L = static_cast<int>(rounded) + 1;
    } else {
        out.L = static_cast<int>(std::floor(bound)) + 1;
    }
    out.L = std::max(out.L, 1);
    return out;
}

GainCheck check_gain(const LtiModel& model, const Eigen::MatrixXd& Kp) {
    if (Kp.rows() != model.m() || Kp.cols() != model.n()) {
        throw DimensionMismatch("feedback gain must be m x n");
    }
    GainCheck out;
    out.norm = operator_norm(model.A - model.B * Kp);
    out.contractive = out.norm < 1.0;
    return out;
}

EstimatorParams design_params(const MultiAgentSystem& system, const std::vector<int>& secure_set,
                              Eigen::MatrixXd Kp, std::optional<double> omega,
                              std::optional<int> L) {
    EstimatorParams params;
    params.omega = omega ? *omega : design_omega(system.graph());
    params.Kp = std::move(Kp);
    if (params.Kp.rows() != system.m() || params.Kp.cols() != system.n()) {
        throw DimensionMismatch("feedback gain must be m x n");
    }
    params.gamma_perp = (system.graph().lambda_max() - system.graph().lambda2()) /
                        (system.graph().lambda_max() + system.graph().lambda2());
    if (secure_set.empty()) {
        params.theta0 = 1.0;
        params.nu0 = 0.0;
    } else {
        params.theta0 = secure_update_norm(system, secure_set);
        params.nu0 = secure_output_norm(system, secure_set);
    }
    if (L) {
        if (*L < 1) throw ValidationError("consensus round count must be at least 1");
        params.L = *L;
    } else {
        const ConsensusRounds rounds = min_consensus_rounds(system, secure_set);
        if (rounds.kind == ConsensusRounds::Kind::infeasible) {
            throw HypothesisViolated(
                "theta0*||A|| >= 1: no certified round count; set L explicitly");
        }
        params.L = rounds.L;
    }
    return params;
}

std::vector<AgentEstimatorState> initial_states(const MultiAgentSystem& system,
                                                const Eigen::MatrixXd& xi_hat0) {
    const int d = system.n() * system.N();
    if (xi_hat0.rows() != d || xi_hat0.cols() != system.N()) {
        throw DimensionMismatch("initial estimates must be nN x N");
    }
    std::vector<AgentEstimatorState> states(system.N());
    for (int i = 0; i < system.N(); ++i) states[i].xi_hat = xi_hat0.col(i);
    return states;
}

Eigen::VectorXd own_estimate(const AgentEstimatorState& state, int agent, int n) {
    return state.xi_hat.segment(agent * n, n);
}

std::vector<AgentEstimatorState> step_estimator(const std::vector<AgentEstimatorState>& states,
                                                const MultiAgentSystem& system,
                                                const SecurityMeasure& measure,
                                                const EstimatorParams& params,
                                                const Eigen::VectorXd& fused_input,
                                                const std::vector<Eigen::VectorXd>& y) {
    const int N = system.N();
    const int d = system.n() * N;
    if (static_cast<int>(states.size()) != N || static_cast<int>(y.size()) != N) {
        throw DimensionMismatch("one state and one output per agent are required");
    }
    if (fused_input.size() != static_cast<Eigen::Index>(system.m()) * N) {
        throw DimensionMismatch("fused input must be the stacked mN vector");
    }
    if (measure.N() != N) throw DimensionMismatch("measure length must equal agent count");

    const Eigen::VectorXd drive = system.lifted_input_matrix() * fused_input;
    std::vector<Eigen::VectorXd> current(N);
    for (int i = 0; i < N; ++i) {
        if (states[i].xi_hat.size() != d) {
            throw DimensionMismatch("estimator state must have length nN");
        }
        Eigen::VectorXd predicted = system.lifted_state_matrix() * states[i].xi_hat + drive;
        if (measure.is_secure(i)) {
            if (y[i].size() != system.p(i)) {
                throw DimensionMismatch("output dimension mismatch for a secure agent");
            }
            predicted += system.C(i).transpose() * (y[i] - system.C(i) * predicted);
        }
        current[i] = std::move(predicted);
    }

    for (int round = 0; round < params.L; ++round) {
        std::vector<Eigen::VectorXd> next(N);
        for (int i = 0; i < N; ++i) {
            Eigen::VectorXd acc = current[i];
            for (int j : system.graph().neighbors(i)) {
                acc -= params.omega * (current[i] - current[j]);
            }
            next[i] = std::move(acc);
        }
        current = std::move(next);
    }

    std::vector<AgentEstimatorState> out(N);
    for (int i = 0; i < N; ++i) out[i].xi_hat = std::move(current[i]);
    return out;
}

Eigen::VectorXd control_input(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_star,
                              const Eigen::MatrixXd& Kp) {
    if (x_hat.size() != Kp.cols() || x_star.size() != Kp.cols()) {
        throw DimensionMismatch("estimate and target must match the gain width");
    }
    return Kp * (x_star - x_hat);
}

int input_fusion_rounds(const CommGraph& graph) { return graph.diameter(); }

Eigen::VectorXd input_fusion(const std::vector<Eigen::VectorXd>& local_inputs,
                             const CommGraph& graph) {
    const int N = graph.N();
    if (static_cast<int>(local_inputs.size()) != N) {
        throw DimensionMismatch("one local input per agent is required");
    }
    const int m = static_cast<int>(local_inputs[0].size());

    // known[i][j] marks that agent i holds agent j's input.
    std::vector<std::vector<bool>> known(N, std::vector<bool>(N, false));
    for (int i = 0; i < N; ++i) known[i][i] = true;
    for (int round = 0; round < graph.diameter(); ++round) {
        auto snapshot = known;
        for (int i = 0; i < N; ++i) {
            for (int j : graph.neighbors(i)) {
                for (int a = 0; a < N; ++a) {
                    if (snapshot[j][a]) known[i][a] = true;
                }
            }
        }
    }
    for (int i = 0; i < N; ++i) {
        for (int a = 0; a < N; ++a) {
            if (!known[i][a]) throw NumericalError("flooding failed to reach every agent");
        }
    }

    Eigen::VectorXd stacked(static_cast<Eigen::Index>(m) * N);
    for (int i = 0; i < N; ++i) {
        if (local_inputs[i].size() != m) throw DimensionMismatch("input dimensions differ");
        stacked.segment(static_cast<Eigen::Index>(i) * m, m) = local_inputs[i];
    }
    return stacked;
}

double estimation_error_bound(const MultiAgentSystem& system, const std::vector<int>& secure_set,
                              const EstimatorParams& params, double delta_w, double delta_v) {
    if (secure_set.empty()) throw EmptySecureSet("error bound needs a nonempty secure set");
    const double theta0 = secure_update_norm(system, secure_set);
    const double nu0 = secure_output_norm(system, secure_set);
    const double normA = operator_norm(system.model().A);
    const double x = theta0 * normA;
    if (x >= 1.0) throw HypothesisViolated("theta0*||A|| >= 1; the bound is void");

    const double g = disagreement_contraction(system.graph(), params.omega);
    if (g >= 1.0) {
        throw HypothesisViolated("consensus gain does not contract the disagreement subspace");
    }
    if (g > 0.0 && x > 0.0) {
        // L must strictly exceed the bound; near-integer bounds are treated
        // conservatively, matching the round-count design rule.
        const double bound = std::log(x) / std::log(g);
        if (static_cast<double>(params.L) < bound + 1e-9) {
            throw HypothesisViolated("consensus round count below the certified minimum");
        }
    }

    const double N = static_cast<double>(system.N());
    const double numerator = theta0 * std::sqrt(N) * N * delta_w + nu0 * N * delta_v;
    const double gl = std::pow(g, params.L);
    return numerator / (1.0 - x) + gl * numerator / (1.0 - gl * x);
}

double control_error_bound(const LtiModel& model, const Eigen::MatrixXd& Kp, double est_bound,
                           double delta_w) {
    const GainCheck gc = check_gain(model, Kp);
    if (!gc.contractive) {
        throw GainHypothesisViolated("||A - B Kp|| >= 1; the control bound is void");
    }
    const double bk = operator_norm(model.B * Kp);
    return (bk * est_bound + delta_w) / (1.0 - gc.norm);
}

ExtendedErrorSystem build_extended_error_system(const MultiAgentSystem& system,
                                                const SecurityMeasure& measure,
                                                const EstimatorParams& params) {
    const int N = system.N();
    const int d = system.n() * N;
    const int D = d * N;
    const int p = system.p_total();

    Eigen::MatrixXd Ct = Eigen::MatrixXd::Zero(p, D);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < N; ++i) {
        const int off = system.p_offset(i);
        Ct.block(off, i * d, system.p(i), d) = system.C(i);
        if (measure.is_secure(i)) {
            S.block(off, off, system.p(i), system.p(i)).setIdentity();
        }
    }

    const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(D, D) -
                                 params.omega * kron_with_identity(system.graph().laplacian(), d);
    Eigen::MatrixXd consensus = Eigen::MatrixXd::Identity(D, D);
    for (int l = 0; l < params.L; ++l) consensus = consensus * step;

    const Eigen::MatrixXd update = Eigen::MatrixXd::Identity(D, D) - Ct.transpose() * S * Ct;

    ExtendedErrorSystem out;
    out.M = consensus * update * block_diagonal_repeat(system.lifted_state_matrix(), N);
    out.Dw = consensus * (Ct.transpose() * S * Ct - Eigen::MatrixXd::Identity(D, D));
    out.Dv = consensus * Ct.transpose() * S;

    Eigen::MatrixXd sharp = Eigen::MatrixXd::Zero(D, D);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            sharp.block(i * d, j * d, d, d) =
                Eigen::MatrixXd::Identity(d, d) / static_cast<double>(N);
        }
    }
    out.sharp_norm = operator_norm(sharp * out.M);
    out.perp_norm = operator_norm((Eigen::MatrixXd::Identity(D, D) - sharp) * out.M);
    out.stable = out.sharp_norm < 1.0 && out.perp_norm < 1.0;
    return out;
}

} // namespace secest
